//! Quantum instruments, measurement records and the Alice/Bob split of the
//! environment.

mod lindblad;
mod records;

pub use lindblad::{demo_driven_damped_qubit, discretize, Detection, JumpChannel, LindbladSpec};
pub use records::{
    enumerate_joint_records, enumerate_records, filter, filter_ops, retrofilter, retrofilter_ops, sample_joint_record,
    sample_record, JointRecord, MeasurementRecord, Record, RecordLine, DEFAULT_ENUMERATION_CAP,
};

use crate::classical::ClassicalModel;
use crate::error::{Error, Result};
use crate::linalg::{apply_kraus, apply_kraus_adjoint, herm_eig, kraus_gram, DensityOperator, Matrix};
use crate::scalar::{cre, Real};

/// Instrument completeness tolerance, `‖Σ_y Φ_y†(𝕀) − 𝕀‖_max`.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// A completely positive, trace-nonincreasing map `Σ_k M_k • M_k†`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalOp<T: Real> {
    kraus: Vec<Matrix<T>>,
}

impl<T: Real> ConditionalOp<T> {
    pub fn new(kraus: Vec<Matrix<T>>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidMatrix("empty Kraus list".into()))?;
        let d = first.rows();
        for k in &kraus {
            if k.rows() != d || k.cols() != d {
                return Err(Error::InvalidMatrix("Kraus operators must share one square shape".into()));
            }
            k.check_finite()?;
        }
        let top = herm_eig(&kraus_gram(&kraus))?.max_value();
        if top > T::one() + T::tol(1e-10) {
            return Err(Error::InvalidMatrix(format!("Σ M†M has eigenvalue {top} > 1")));
        }
        Ok(Self { kraus })
    }

    pub fn kraus(&self) -> &[Matrix<T>] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].rows()
    }

    /// `Σ_k M ρ M†` and its trace.
    pub fn apply(&self, rho: &Matrix<T>) -> (Matrix<T>, T) {
        let out = apply_kraus(&self.kraus, rho);
        let w = out.trace_re();
        (out, w)
    }

    /// `Σ_k M† E M`.
    pub fn apply_adjoint(&self, effect: &Matrix<T>) -> Matrix<T> {
        apply_kraus_adjoint(&self.kraus, effect)
    }

    /// `(Φ ⊗ id_A)(X)` for `X` on `Q⊗A`.
    pub fn apply_extended(&self, x: &Matrix<T>, d_a: usize) -> Matrix<T> {
        let id = Matrix::identity(d_a);
        let lifted: Vec<Matrix<T>> = self.kraus.iter().map(|k| k.kron(&id)).collect();
        apply_kraus(&lifted, x)
    }

    /// `Φ†(𝕀) = Σ M†M`.
    pub fn gram(&self) -> Matrix<T> {
        kraus_gram(&self.kraus)
    }
}

/// Returns the Kraus operators of `op` as an unnormalized weight and state pair.
pub fn apply_conditional<T: Real>(op: &ConditionalOp<T>, rho: &DensityOperator<T>) -> (Matrix<T>, T) {
    op.apply(rho.matrix())
}

/// Largest entry of `Σ_y Φ_y†(𝕀) − 𝕀`.
pub fn completeness_defect<'a, T: Real>(ops: impl IntoIterator<Item = &'a ConditionalOp<T>>) -> T {
    let mut ops = ops.into_iter().peekable();
    let Some(first) = ops.peek() else {
        return T::infinity();
    };
    let d = first.dim();
    let total = ops.fold(Matrix::zeros(d, d), |acc, op| acc + op.gram());
    total.max_abs_diff(&Matrix::identity(d))
}

/// Outcome-indexed family of conditional operations summing to a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument<T: Real> {
    outcomes: Vec<String>,
    ops: Vec<ConditionalOp<T>>,
}

impl<T: Real> Instrument<T> {
    pub fn new(outcomes: Vec<String>, ops: Vec<ConditionalOp<T>>) -> Result<Self> {
        let inst = Self::new_unchecked(outcomes, ops)?;
        let defect = completeness_defect(&inst.ops);
        if defect > T::tol(COMPLETENESS_TOL) {
            return Err(Error::IncompleteInstrument { defect: defect.as_f64() });
        }
        Ok(inst)
    }

    /// Checks shapes and labels but not completeness.
    pub fn new_unchecked(outcomes: Vec<String>, ops: Vec<ConditionalOp<T>>) -> Result<Self> {
        if outcomes.is_empty() || outcomes.len() != ops.len() {
            return Err(Error::InvalidMatrix("one conditional operation per outcome label".into()));
        }
        let d = ops[0].dim();
        if ops.iter().any(|op| op.dim() != d) {
            return Err(Error::InvalidMatrix("conditional operations act on different dimensions".into()));
        }
        let mut seen = outcomes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != outcomes.len() {
            return Err(Error::InvalidMatrix("duplicate outcome label".into()));
        }
        Ok(Self { outcomes, ops })
    }

    /// Projective measurement in the computational basis, outcomes "0".."d−1".
    pub fn computational_basis(dim: usize) -> Self {
        let ops = (0..dim)
            .map(|i| ConditionalOp { kraus: vec![crate::linalg::basis_projector(dim, i)] })
            .collect();
        Self { outcomes: (0..dim).map(|i| i.to_string()).collect(), ops }
    }

    /// Embeds a classical hidden-Markov model with Kraus operators
    /// `√(D(x|x′) p(y|x′)) |x⟩⟨x′|`.
    pub fn from_classical_model(model: &ClassicalModel<T>) -> Result<Self> {
        let n = model.n_states();
        let mut ops = Vec::new();
        for y in 0..model.outcomes().len() {
            let phi = model.conditional_map(y)?;
            let mut kraus = Vec::new();
            for (x, row) in phi.iter().enumerate() {
                for (xp, &w) in row.iter().enumerate() {
                    if w > T::zero() {
                        let mut k = Matrix::zeros(n, n);
                        k[(x, xp)] = cre(w.sqrt());
                        kraus.push(k);
                    }
                }
            }
            if kraus.is_empty() {
                kraus.push(Matrix::zeros(n, n));
            }
            ops.push(ConditionalOp::new(kraus)?);
        }
        Self::new(model.outcomes().to_vec(), ops)
    }

    /// Recovers the hidden-Markov model of an instrument that maps basis
    /// states to basis states with factorized conditional maps.
    pub fn classical_model(&self) -> Result<ClassicalModel<T>> {
        let n = self.dim();
        let tol = T::tol(1e-9);
        let mut phis = Vec::with_capacity(self.ops.len());
        for (label, op) in self.outcomes.iter().zip(&self.ops) {
            let mut phi = vec![vec![T::zero(); n]; n];
            for k in op.kraus() {
                for col in 0..n {
                    let nonzero: Vec<usize> = (0..n).filter(|&r| k[(r, col)].norm() > tol).collect();
                    if nonzero.len() > 1 {
                        return Err(Error::NotClassicalLimit(format!(
                            "outcome {label:?}: Kraus operator creates coherence from basis state {col}"
                        )));
                    }
                    for r in nonzero {
                        phi[r][col] = phi[r][col] + k[(r, col)].norm_sqr();
                    }
                }
            }
            phis.push(phi);
        }
        let transition: Vec<Vec<T>> =
            (0..n).map(|x| (0..n).map(|xp| phis.iter().map(|p| p[x][xp]).sum()).collect()).collect();
        let likelihood: Vec<Vec<T>> =
            phis.iter().map(|p| (0..n).map(|xp| (0..n).map(|x| p[x][xp]).sum()).collect()).collect();
        for (y, phi) in phis.iter().enumerate() {
            for x in 0..n {
                for xp in 0..n {
                    if (phi[x][xp] - transition[x][xp] * likelihood[y][xp]).abs() > tol {
                        return Err(Error::NotClassicalLimit(format!(
                            "outcome {:?}: conditional map does not factor as D(x|x')p(y|x')",
                            self.outcomes[y]
                        )));
                    }
                }
            }
        }
        ClassicalModel::new(transition, likelihood, self.outcomes.clone())
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn ops(&self) -> &[ConditionalOp<T>] {
        &self.ops
    }

    pub fn op(&self, y: usize) -> Result<&ConditionalOp<T>> {
        self.ops.get(y).ok_or_else(|| Error::UnknownOutcome(y.to_string()))
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    pub fn outcome_index(&self, label: &str) -> Result<usize> {
        self.outcomes.iter().position(|o| o == label).ok_or_else(|| Error::UnknownOutcome(label.into()))
    }

    pub fn encode(&self, labels: &[impl AsRef<str>]) -> Result<Record> {
        labels.iter().map(|l| self.outcome_index(l.as_ref())).collect()
    }

    pub fn completeness_defect(&self) -> T {
        completeness_defect(&self.ops)
    }
}

/// One rank-one operation of a joint Alice/Bob instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOp<T: Real> {
    pub alice: usize,
    pub bob: usize,
    pub op: ConditionalOp<T>,
}

/// Instrument whose outcomes are pairs (Alice outcome, Bob outcome), each with
/// exactly one Kraus operator.
#[derive(Debug, Clone, PartialEq)]
pub struct JointInstrument<T: Real> {
    alice_outcomes: Vec<String>,
    bob_outcomes: Vec<String>,
    ops: Vec<JointOp<T>>,
}

impl<T: Real> JointInstrument<T> {
    /// `ops` holds `(alice label, bob label, Kraus operator)` triples.
    pub fn new(
        alice_outcomes: Vec<String>,
        bob_outcomes: Vec<String>,
        ops: Vec<(String, String, Matrix<T>)>,
    ) -> Result<Self> {
        let inst = Self::new_unchecked(alice_outcomes, bob_outcomes, ops)?;
        let defect = inst.completeness_defect();
        if defect > T::tol(COMPLETENESS_TOL) {
            return Err(Error::IncompleteInstrument { defect: defect.as_f64() });
        }
        Ok(inst)
    }

    pub fn new_unchecked(
        alice_outcomes: Vec<String>,
        bob_outcomes: Vec<String>,
        ops: Vec<(String, String, Matrix<T>)>,
    ) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidMatrix("joint instrument has no operations".into()));
        }
        let find = |labels: &[String], l: &str| {
            labels.iter().position(|x| x == l).ok_or_else(|| Error::UnknownOutcome(l.into()))
        };
        let mut joint = Vec::with_capacity(ops.len());
        for (a, b, k) in ops {
            let alice = find(&alice_outcomes, &a)?;
            let bob = find(&bob_outcomes, &b)?;
            if joint.iter().any(|j: &JointOp<T>| j.alice == alice && j.bob == bob) {
                return Err(Error::InvalidMatrix(format!("duplicate joint outcome ({a:?}, {b:?})")));
            }
            joint.push(JointOp { alice, bob, op: ConditionalOp::new(vec![k])? });
        }
        let d = joint[0].op.dim();
        if joint.iter().any(|j| j.op.dim() != d) {
            return Err(Error::InvalidMatrix("joint operations act on different dimensions".into()));
        }
        // Bob outcomes in lexicographic label order within each Alice outcome.
        joint.sort_by(|x, y| x.alice.cmp(&y.alice).then_with(|| bob_outcomes[x.bob].cmp(&bob_outcomes[y.bob])));
        Ok(Self { alice_outcomes, bob_outcomes, ops: joint })
    }

    /// Wraps an instrument whose operations all have Kraus rank one with a
    /// trivial (singleton) Bob alphabet.
    pub fn from_rank_one_instrument(inst: &Instrument<T>) -> Result<Self> {
        let mut ops = Vec::new();
        for (label, op) in inst.outcomes().iter().zip(inst.ops()) {
            if op.kraus().len() != 1 {
                return Err(Error::InvalidMatrix(format!("outcome {label:?} has Kraus rank > 1")));
            }
            ops.push((label.clone(), "0".to_string(), op.kraus()[0].clone()));
        }
        Self::new(inst.outcomes().to_vec(), vec!["0".into()], ops)
    }

    /// Treats the `k`-th Kraus operator of every outcome as the unobserved Bob outcome `"k"`.
    pub fn from_instrument(inst: &Instrument<T>) -> Result<Self> {
        let width = inst.ops().iter().map(|op| op.kraus().len()).max().unwrap_or(1);
        let bob: Vec<String> = (0..width).map(|k| k.to_string()).collect();
        let mut ops = Vec::new();
        for (label, op) in inst.outcomes().iter().zip(inst.ops()) {
            for (k, m) in op.kraus().iter().enumerate() {
                ops.push((label.clone(), bob[k].clone(), m.clone()));
            }
        }
        Self::new(inst.outcomes().to_vec(), bob, ops)
    }

    pub fn alice_outcomes(&self) -> &[String] {
        &self.alice_outcomes
    }

    pub fn bob_outcomes(&self) -> &[String] {
        &self.bob_outcomes
    }

    pub fn ops(&self) -> &[JointOp<T>] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops[0].op.dim()
    }

    /// Indices into [`Self::ops`] compatible with Alice outcome `y`, in Bob-label order.
    pub fn branches_for(&self, y: usize) -> Vec<usize> {
        (0..self.ops.len()).filter(|&i| self.ops[i].alice == y).collect()
    }

    pub fn completeness_defect(&self) -> T {
        completeness_defect(self.ops.iter().map(|j| &j.op))
    }

    /// Alice's instrument: `Φ_y = Σ_u Φ_{y,u}`.
    pub fn alice_marginal(&self) -> Instrument<T> {
        let ops = (0..self.alice_outcomes.len())
            .map(|y| {
                let kraus: Vec<Matrix<T>> =
                    self.branches_for(y).into_iter().map(|i| self.ops[i].op.kraus()[0].clone()).collect();
                let kraus = if kraus.is_empty() { vec![Matrix::zeros(self.dim(), self.dim())] } else { kraus };
                ConditionalOp { kraus }
            })
            .collect();
        Instrument { outcomes: self.alice_outcomes.clone(), ops }
    }
}

/// Alice's instrument obtained by summing the joint instrument over Bob.
pub fn alice_marginal<T: Real>(joint: &JointInstrument<T>) -> Instrument<T> {
    joint.alice_marginal()
}
