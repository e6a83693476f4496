//! Petz recovery, its prior-extended form, and the smoothed states built on it.
//!
//! A filtered global state lives on `Q⊗A` with `A = A₁⊗A₂`, where `A₂` is an
//! optional classical register. It is stored as one block per register value,
//! each block an operator on `Q⊗A₁`. Square roots then factor blockwise, which
//! keeps the cost linear in the number of register values.

mod channel;
mod global;

pub use channel::{choi_of, ChannelRep};
pub use global::{BlockState, FilteredGlobalState, PriorKind};

use crate::error::{Error, Result};
use crate::linalg::{
    partial_trace, psd_sqrt, support_inv_sqrt, support_projector, DensityOperator, Effect, Keep, Matrix,
};
use crate::scalar::Real;

/// Normalizers at or below this mark an impossible record rather than round-off.
pub const NORMALIZER_TOL: f64 = 1e-14;
/// Evidence weight allowed outside the support of the predicted state.
pub const SUPPORT_LEAKAGE_TOL: f64 = 1e-8;

/// `Σ_blocks S_b (X⊗𝕀_{A₁}) S_b` with `S_b = √block`, one output per block.
fn retrodict_blocks<T: Real>(state: &BlockState<T>, x: &Matrix<T>) -> Result<Vec<Matrix<T>>> {
    let lifted = x.kron(&Matrix::identity(state.d_anc()));
    state
        .blocks()
        .iter()
        .map(|b| {
            let s = psd_sqrt(b)?;
            Ok(s.sandwich(&lifted).symmetrized())
        })
        .collect()
}

fn reduce_blocks<T: Real>(blocks: &[Matrix<T>], d_q: usize, d_anc: usize) -> Result<Matrix<T>> {
    let mut out = Matrix::zeros(d_q, d_q);
    for b in blocks {
        out += &partial_trace(b, d_q, d_anc, Keep::Q)?;
    }
    Ok(out)
}

/// Evaluates `ℰ†(ℰ(γ)^{−1/2} σ ℰ(γ)^{−1/2})`, checking that `σ` lies in the support of `ℰ(γ)`.
fn pulled_back_evidence<T: Real>(
    channel: &ChannelRep<T>,
    gamma: &Matrix<T>,
    sigma: &DensityOperator<T>,
) -> Result<(Matrix<T>, T)> {
    if sigma.dim() != channel.output_dim() {
        return Err(Error::DimensionMismatch { expected: channel.output_dim(), got: sigma.dim() });
    }
    let predicted = channel.apply(gamma);
    let proj = support_projector(&predicted)?;
    let inside = proj.trace_product(sigma.matrix()).re;
    let leakage = T::one() - inside;
    if leakage > T::tol(SUPPORT_LEAKAGE_TOL) {
        return Err(Error::EvidenceOutsideSupport { leakage: leakage.as_f64() });
    }
    let inv = support_inv_sqrt(&predicted)?;
    let x = channel.apply_adjoint(&inv.sandwich(sigma.matrix()));
    Ok((x, inside))
}

/// Petz recovery `√γ ℰ†(ℰ(γ)^{−1/2} σ ℰ(γ)^{−1/2}) √γ`.
///
/// The result is renormalized by `Tr[Π σ]`, with `Π` the support projector of
/// `ℰ(γ)`; that factor differs from one by at most the permitted leakage.
pub fn petz_map<T: Real>(
    channel: &ChannelRep<T>,
    prior: &DensityOperator<T>,
    evidence: &DensityOperator<T>,
) -> Result<DensityOperator<T>> {
    if prior.dim() != channel.input_dim() {
        return Err(Error::DimensionMismatch { expected: channel.input_dim(), got: prior.dim() });
    }
    let (x, _) = pulled_back_evidence(channel, prior.matrix(), evidence)?;
    let root = psd_sqrt(prior.matrix())?;
    DensityOperator::normalized(&root.sandwich(&x))
}

/// Prior-extended retrodiction `Tr_A[√Γ (ℰ†(ℰ(γ)^{−1/2} σ ℰ(γ)^{−1/2}) ⊗ 𝕀_A) √Γ]`, `γ = Tr_A Γ`.
pub fn extended_petz<T: Real>(
    channel: &ChannelRep<T>,
    prior: &FilteredGlobalState<T>,
    evidence: &DensityOperator<T>,
) -> Result<DensityOperator<T>> {
    let state = prior.state();
    if state.d_q() != channel.input_dim() {
        return Err(Error::InvalidFactorization {
            dim: state.d_q() * state.d_a(),
            d_q: channel.input_dim(),
            d_a: state.d_a(),
        });
    }
    let gamma = state.marginal()?;
    let (x, _) = pulled_back_evidence(channel, &gamma, evidence)?;
    let blocks = retrodict_blocks(state, &x)?;
    DensityOperator::normalized(&reduce_blocks(&blocks, state.d_q(), state.d_anc())?)
}

fn smoothing_normalizer<T: Real>(prior: &FilteredGlobalState<T>, effect: &Effect<T>) -> Result<T> {
    let state = prior.state();
    if effect.dim() != state.d_q() {
        return Err(Error::DimensionMismatch { expected: state.d_q(), got: effect.dim() });
    }
    let rho_f = state.marginal()?;
    let norm = rho_f.trace_product(effect.matrix()).re;
    if !(norm > T::tol(NORMALIZER_TOL)) {
        return Err(Error::ZeroProbabilityRecord);
    }
    Ok(norm)
}

/// `Tr_A[√ϱ_F (Ê_R⊗𝕀_A) √ϱ_F] / Tr[ρ_F Ê_R]` before validation as a state.
pub fn generalized_smooth_raw<T: Real>(prior: &FilteredGlobalState<T>, effect: &Effect<T>) -> Result<Matrix<T>> {
    let norm = smoothing_normalizer(prior, effect)?;
    let state = prior.state();
    let blocks = retrodict_blocks(state, effect.matrix())?;
    Ok(reduce_blocks(&blocks, state.d_q(), state.d_anc())?.scale(T::one() / norm))
}

/// The generalized smoothed state for a filtered global state and a retrofiltered effect.
pub fn generalized_smooth<T: Real>(prior: &FilteredGlobalState<T>, effect: &Effect<T>) -> Result<DensityOperator<T>> {
    DensityOperator::new(generalized_smooth_raw(prior, effect)?)
}

/// `√ϱ_F (Ê_R⊗𝕀_A) √ϱ_F / Tr[ρ_F Ê_R]`, keeping the auxiliary system.
pub fn smoothed_global<T: Real>(prior: &FilteredGlobalState<T>, effect: &Effect<T>) -> Result<BlockState<T>> {
    let norm = smoothing_normalizer(prior, effect)?;
    let state = prior.state();
    let blocks = retrodict_blocks(state, effect.matrix())?
        .into_iter()
        .map(|b| b.scale(T::one() / norm))
        .collect();
    Ok(state.with_blocks(blocks))
}

/// Posterior over the classical register: `p(↞U_t | ⇅O)`, in register order.
pub fn bob_posterior<T: Real>(prior: &FilteredGlobalState<T>, effect: &Effect<T>) -> Result<Vec<T>> {
    if !prior.kind().has_register() {
        return Err(Error::MissingClassicalRegister);
    }
    Ok(smoothed_global(prior, effect)?.register_probs())
}

/// Born probabilities `Tr[ρ_S E_i]` of an unperformed measurement.
pub fn counterfactual_prob<T: Real>(smoothed: &DensityOperator<T>, povm: &[Effect<T>]) -> Result<Vec<T>> {
    validate_povm(povm, smoothed.dim())?;
    Ok(povm.iter().map(|e| smoothed.trace_product(e.matrix()).re.max(T::zero())).collect())
}

/// Checks `Σ E_i = 𝕀` within `1e-9`.
pub fn validate_povm<T: Real>(povm: &[Effect<T>], dim: usize) -> Result<()> {
    if povm.is_empty() {
        return Err(Error::InvalidPovm("no effects".into()));
    }
    if povm.iter().any(|e| e.dim() != dim) {
        return Err(Error::InvalidPovm(format!("effects must act on dimension {dim}")));
    }
    let total = povm.iter().fold(Matrix::zeros(dim, dim), |acc, e| acc + e.matrix().clone());
    let defect = total.max_abs_diff(&Matrix::identity(dim));
    if defect > T::tol(1e-9) {
        return Err(Error::InvalidPovm(format!("effects sum to identity only within {defect:e}")));
    }
    Ok(())
}
