use serde::{Deserialize, Serialize};

use super::JointInstrument;
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, psd_sqrt, support_inv_sqrt, Matrix};
use crate::scalar::{Real, C};

/// First-order defect above which the Kraus expansion is no longer trusted.
const RAW_DEFECT_LIMIT: f64 = 1e-2;
/// Completeness defect allowed after the repair.
const REPAIRED_DEFECT_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Detection {
    #[default]
    Jump,
    Homodyne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpChannel<T: Real> {
    pub op: Matrix<T>,
    /// Fraction of jumps Alice detects.
    pub efficiency: T,
    pub detection: Detection,
}

/// Lindblad generator with per-channel detection efficiencies (`ħ = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladSpec<T: Real> {
    pub hamiltonian: Matrix<T>,
    pub jump_ops: Vec<JumpChannel<T>>,
    pub dt: T,
}

impl<T: Real> LindbladSpec<T> {
    pub fn dim(&self) -> usize {
        self.hamiltonian.rows()
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if !self.hamiltonian.is_square() || d == 0 {
            return Err(Error::InvalidMatrix("Hamiltonian must be square".into()));
        }
        if self.hamiltonian.hermiticity_defect() > T::tol(1e-12) * self.hamiltonian.max_abs().max(T::one()) {
            return Err(Error::InvalidMatrix("Hamiltonian is not Hermitian".into()));
        }
        if !(self.dt > T::zero()) {
            return Err(Error::StepTooCoarse(format!("dt must be positive, got {}", self.dt)));
        }
        for (c, ch) in self.jump_ops.iter().enumerate() {
            if ch.op.rows() != d || ch.op.cols() != d {
                return Err(Error::InvalidMatrix(format!("jump operator {c} has the wrong shape")));
            }
            ch.op.check_finite()?;
            if !(ch.efficiency >= T::zero() && ch.efficiency <= T::one()) {
                return Err(Error::InvalidMatrix(format!("efficiency of channel {c} outside [0, 1]")));
            }
            if ch.detection == Detection::Homodyne {
                return Err(Error::InvalidMatrix(format!("channel {c}: diffusive detection is not supported")));
            }
        }
        Ok(())
    }
}

/// First-order Kraus discretization of one time step.
///
/// Alice outcome `"0"` with Bob outcome `"0"` is the no-jump operator. Channel
/// `c` (1-based label) contributes an Alice outcome `"c"` with Kraus operator
/// `√(η dt) L_c` paired with Bob `"0"`, and a Bob outcome `"c"` with
/// `√((1−η) dt) L_c` paired with Alice `"0"`. The no-jump operator is replaced
/// by `U √(𝕀 − dt Σ L†L)`, where `U` is the unitary polar factor of
/// `𝕀 − (iH + ½ Σ L†L) dt`, which makes the instrument exactly complete.
pub fn discretize<T: Real>(spec: &LindbladSpec<T>) -> Result<JointInstrument<T>> {
    spec.validate()?;
    let d = spec.dim();
    let dt = spec.dt;
    let id = Matrix::<T>::identity(d);

    let gram = spec.jump_ops.iter().fold(Matrix::zeros(d, d), |acc, ch| acc + &ch.op.adjoint() * &ch.op);
    let drift = &spec.hamiltonian.scale_c(C::new(T::zero(), T::one())) + &gram.scale(T::of(0.5));
    let m0 = &id - &drift.scale(dt);

    let raw_total = &(&m0.adjoint() * &m0) + &gram.scale(dt);
    let raw_defect = raw_total.max_abs_diff(&id);
    if raw_defect > T::tol(RAW_DEFECT_LIMIT) {
        return Err(Error::StepTooCoarse(format!("first-order completeness defect {raw_defect:e}")));
    }

    let target = &id - &gram.scale(dt);
    let target_eig = herm_eig(&target)?;
    if target_eig.min_value() <= T::zero() {
        return Err(Error::StepTooCoarse("dt·ΣL†L has an eigenvalue ≥ 1".into()));
    }
    let polar = &m0 * &support_inv_sqrt(&(&m0.adjoint() * &m0))?;
    let m0 = &polar * &psd_sqrt(&target)?;

    let mut alice = vec!["0".to_string()];
    let mut bob = vec!["0".to_string()];
    let mut ops = vec![("0".to_string(), "0".to_string(), m0)];
    for (c, ch) in spec.jump_ops.iter().enumerate() {
        let label = (c + 1).to_string();
        let eta = ch.efficiency;
        if eta > T::zero() {
            alice.push(label.clone());
            ops.push((label.clone(), "0".into(), ch.op.scale((eta * dt).sqrt())));
        }
        if eta < T::one() {
            bob.push(label.clone());
            ops.push(("0".into(), label, ch.op.scale(((T::one() - eta) * dt).sqrt())));
        }
    }
    let joint = JointInstrument::new_unchecked(alice, bob, ops)?;
    let defect = joint.completeness_defect();
    if defect > T::tol(REPAIRED_DEFECT_LIMIT) {
        return Err(Error::StepTooCoarse(format!("completeness defect {defect:e} after repair")));
    }
    Ok(joint)
}

/// Driven, damped qubit: `H = Ω σ_x / 2`, `L = √κ σ₋` with efficiency `η`.
///
/// Basis order is `(|0⟩, |1⟩)` with `|0⟩` the ground state, so `σ₋ = |0⟩⟨1|`.
pub fn demo_driven_damped_qubit<T: Real>(omega: T, kappa: T, eta: T, dt: T) -> LindbladSpec<T> {
    let half = omega * T::of(0.5);
    let hamiltonian = Matrix::from_fn(2, 2, |i, j| if i != j { C::new(half, T::zero()) } else { C::new(T::zero(), T::zero()) });
    let mut lower = Matrix::zeros(2, 2);
    lower[(0, 1)] = C::new(kappa.sqrt(), T::zero());
    LindbladSpec {
        hamiltonian,
        jump_ops: vec![JumpChannel { op: lower, efficiency: eta, detection: Detection::Jump }],
        dt,
    }
}
