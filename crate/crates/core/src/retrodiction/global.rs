use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, partial_trace, DensityOperator, Keep, Matrix, PSD_REJECT};
use crate::scalar::Real;

/// Total trace allowed to deviate from one in a normalized block state.
const BLOCK_TRACE_TOL: f64 = 1e-9;

/// Which prior the filtered global state encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    /// Plain filtered state, trivial auxiliary system.
    Pf,
    /// Bob-conditioned purified branches with a classical Bob register.
    Gw,
    /// Bob-conditioned mixed branches with a classical Bob register.
    GwVariant,
    /// Filtered purification of the initial state.
    PfVariant,
    /// Purification of the filtered state.
    Clhs,
    /// User-supplied extension.
    Custom,
}

impl PriorKind {
    pub const ALL: [PriorKind; 6] =
        [PriorKind::Pf, PriorKind::Gw, PriorKind::GwVariant, PriorKind::PfVariant, PriorKind::Clhs, PriorKind::Custom];

    pub fn as_str(self) -> &'static str {
        match self {
            PriorKind::Pf => "pf",
            PriorKind::Gw => "gw",
            PriorKind::GwVariant => "gw-variant",
            PriorKind::PfVariant => "pf-variant",
            PriorKind::Clhs => "clhs",
            PriorKind::Custom => "custom",
        }
    }

    /// Whether the auxiliary system carries a classical register of unobserved outcomes.
    pub fn has_register(self) -> bool {
        matches!(self, PriorKind::Gw | PriorKind::GwVariant)
    }
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PriorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidExtension(format!("unknown prior kind {s:?}")))
    }
}

/// Operator on `Q⊗A₁⊗A₂` that is block diagonal in a classical register `A₂`.
///
/// Each block acts on `Q⊗A₁`; block `u` is the component with register value `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockState<T: Real> {
    d_q: usize,
    d_anc: usize,
    blocks: Vec<Matrix<T>>,
    labels: Vec<String>,
}

impl<T: Real> BlockState<T> {
    /// Validates shapes, positivity of each block and unit total trace.
    pub fn new(d_q: usize, d_anc: usize, blocks: Vec<Matrix<T>>, labels: Vec<String>) -> Result<Self> {
        let state = Self::from_parts(d_q, d_anc, blocks, labels)?;
        let scale = state.total_trace().abs().max(T::one());
        for (u, b) in state.blocks.iter().enumerate() {
            b.check_finite()?;
            if b.hermiticity_defect() > T::tol(1e-10) * scale {
                return Err(Error::InvalidExtension(format!("block {u} is not Hermitian")));
            }
            let min = herm_eig(b)?.min_value();
            if min < -T::tol(PSD_REJECT) {
                return Err(Error::NotPsd { min_eigenvalue: min.as_f64() });
            }
        }
        let total = state.total_trace();
        if (total - T::one()).abs() > T::tol(BLOCK_TRACE_TOL) {
            return Err(Error::NotDensityOperator(format!("block traces sum to {total}")));
        }
        Ok(state)
    }

    fn from_parts(d_q: usize, d_anc: usize, blocks: Vec<Matrix<T>>, labels: Vec<String>) -> Result<Self> {
        if blocks.is_empty() || d_q == 0 || d_anc == 0 {
            return Err(Error::InvalidExtension("empty block state".into()));
        }
        if labels.len() != blocks.len() {
            return Err(Error::InvalidExtension("one label per block is required".into()));
        }
        let n = d_q * d_anc;
        if let Some(b) = blocks.iter().find(|b| b.rows() != n || b.cols() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: b.rows() });
        }
        Ok(Self { d_q, d_anc, blocks, labels })
    }

    /// A state without a classical register.
    pub fn single(m: Matrix<T>, d_q: usize, d_a: usize) -> Result<Self> {
        if d_q == 0 || d_a == 0 || m.rows() != d_q * d_a || !m.is_square() {
            return Err(Error::InvalidFactorization { dim: m.rows(), d_q, d_a });
        }
        Self::new(d_q, d_a, vec![m], vec![String::new()])
    }

    pub(crate) fn with_blocks(&self, blocks: Vec<Matrix<T>>) -> Self {
        Self { d_q: self.d_q, d_anc: self.d_anc, blocks, labels: self.labels.clone() }
    }

    pub fn d_q(&self) -> usize {
        self.d_q
    }

    /// Dimension of the quantum part `A₁` of the auxiliary system.
    pub fn d_anc(&self) -> usize {
        self.d_anc
    }

    /// Number of register values (one when there is no register).
    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Total auxiliary dimension `d_{A₁} · d_{A₂}`.
    pub fn d_a(&self) -> usize {
        self.d_anc * self.blocks.len()
    }

    pub fn blocks(&self) -> &[Matrix<T>] {
        &self.blocks
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn total_trace(&self) -> T {
        self.blocks.iter().map(|b| b.trace_re()).sum()
    }

    /// Trace of each block, in register order.
    pub fn register_probs(&self) -> Vec<T> {
        self.blocks.iter().map(|b| b.trace_re().max(T::zero())).collect()
    }

    /// `Tr_A` of the whole state.
    pub fn marginal(&self) -> Result<Matrix<T>> {
        let mut out = Matrix::zeros(self.d_q, self.d_q);
        for b in &self.blocks {
            out += &partial_trace(b, self.d_q, self.d_anc, Keep::Q)?;
        }
        Ok(out.symmetrized())
    }

    /// Dense operator on `Q⊗A₁⊗A₂`, index `(q·d_{A₁} + a₁)·d_{A₂} + u`.
    pub fn to_dense(&self) -> Matrix<T> {
        let nb = self.blocks.len();
        let n = self.d_q * self.d_anc;
        let mut out = Matrix::zeros(n * nb, n * nb);
        for (u, b) in self.blocks.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    out[(i * nb + u, j * nb + u)] = b[(i, j)];
                }
            }
        }
        out
    }
}

/// A prior on `Q⊗A` together with its kind and any branch mass dropped while building it.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredGlobalState<T: Real> {
    kind: PriorKind,
    state: BlockState<T>,
    dropped_mass: T,
}

impl<T: Real> FilteredGlobalState<T> {
    pub fn new(kind: PriorKind, state: BlockState<T>) -> Self {
        Self { kind, state, dropped_mass: T::zero() }
    }

    pub fn with_dropped_mass(mut self, mass: T) -> Self {
        self.dropped_mass = mass;
        self
    }

    /// A user-supplied extension given as a dense density operator on `Q⊗A`.
    pub fn custom(m: Matrix<T>, d_q: usize, d_a: usize) -> Result<Self> {
        let rho = DensityOperator::new(m)?;
        Ok(Self::new(PriorKind::Custom, BlockState::single(rho.into_matrix(), d_q, d_a)?))
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    pub fn state(&self) -> &BlockState<T> {
        &self.state
    }

    /// Relative probability mass discarded by branch pruning.
    pub fn dropped_mass(&self) -> T {
        self.dropped_mass
    }

    /// `Tr_A ϱ_F`.
    pub fn filtered_state(&self) -> Result<DensityOperator<T>> {
        DensityOperator::normalized(&self.state.marginal()?)
    }

    /// Checks that the extension reproduces `ρ_F` on `Q` within `tol` (max-abs).
    pub fn check_marginal(&self, rho_f: &DensityOperator<T>, tol: T) -> Result<()> {
        let m = self.state.marginal()?;
        if m.rows() != rho_f.dim() {
            return Err(Error::DimensionMismatch { expected: rho_f.dim(), got: m.rows() });
        }
        let diff = m.max_abs_diff(rho_f.matrix());
        if diff > tol {
            return Err(Error::InvalidExtension(format!("marginal differs from the filtered state by {diff:e}")));
        }
        Ok(())
    }
}
