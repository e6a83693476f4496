//! Builders for the filtered global states of the five prior constructions.

use std::collections::BTreeMap;

use rand::Rng;

use crate::classical::sample_index;
use crate::error::{Error, Result};
use crate::linalg::{purify, DensityOperator, Effect, Matrix, Purification};
use crate::retrodiction::{generalized_smooth, BlockState, FilteredGlobalState};
use crate::scalar::{Real, C};
use crate::trajectory::{filter, retrofilter, Instrument, JointInstrument, DEFAULT_ENUMERATION_CAP};

pub use crate::retrodiction::PriorKind;

/// Branch weights at or below this fraction of the total count as impossible.
const ZERO_TOTAL: f64 = 1e-14;

/// Controls Bob-branch enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchOptions {
    /// Maximum number of Bob records to enumerate.
    pub cap: usize,
    /// Drop branches whose weight is below this fraction of the total, then renormalize.
    pub prune_below: Option<f64>,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_ENUMERATION_CAP, prune_below: None }
    }
}

/// One unobserved-record branch `Φ_{O,U}` of the past, stored as its composite Kraus operator.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueStateBranch<T: Real> {
    /// Bob outcome index per step.
    pub bob_record: Vec<usize>,
    /// `K = K_{t−1} ⋯ K_0` for this branch.
    pub kraus: Matrix<T>,
    /// `Tr[K ρ₀ K†]`.
    pub weight: T,
}

impl<T: Real> TrueStateBranch<T> {
    /// Unnormalized true state `K ρ₀ K†`.
    pub fn state(&self, rho0: &DensityOperator<T>) -> Matrix<T> {
        self.kraus.sandwich(rho0.matrix()).symmetrized()
    }

    /// Unnormalized `(K⊗𝕀)|Ψ⟩⟨Ψ|(K⊗𝕀)†` on `Q⊗A₁`.
    pub fn purified_state(&self, psi: &Purification<T>) -> Matrix<T> {
        let v = apply_on_q(&self.kraus, psi);
        Matrix::outer(&v, &v)
    }

    /// Bob labels joined with commas, the register label of this branch.
    pub fn label(&self, joint: &JointInstrument<T>) -> String {
        self.bob_record.iter().map(|&u| joint.bob_outcomes()[u].as_str()).collect::<Vec<_>>().join(",")
    }
}

fn apply_on_q<T: Real>(k: &Matrix<T>, psi: &Purification<T>) -> Vec<C<T>> {
    let (dq, da) = (psi.d_q, psi.d_a);
    let mut out = vec![C::new(T::zero(), T::zero()); dq * da];
    for i in 0..dq {
        for j in 0..dq {
            let kij = k[(i, j)];
            if kij.re == T::zero() && kij.im == T::zero() {
                continue;
            }
            for a in 0..da {
                out[i * da + a] = out[i * da + a] + kij * psi.vector[j * da + a];
            }
        }
    }
    out
}

/// Every Bob record compatible with Alice's past record, in lexicographic order
/// of Bob labels (earliest step most significant).
pub fn enumerate_bob_branches<T: Real>(
    joint: &JointInstrument<T>,
    rho0: &DensityOperator<T>,
    past: &[usize],
    cap: usize,
) -> Result<Vec<TrueStateBranch<T>>> {
    if rho0.dim() != joint.dim() {
        return Err(Error::DimensionMismatch { expected: joint.dim(), got: rho0.dim() });
    }
    let mut options = Vec::with_capacity(past.len());
    let mut count: u128 = 1;
    for &y in past {
        if y >= joint.alice_outcomes().len() {
            return Err(Error::UnknownOutcome(format!("alice index {y}")));
        }
        let b = joint.branches_for(y);
        count = count.saturating_mul(b.len() as u128);
        options.push(b);
    }
    if count > cap as u128 {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut prefix = Vec::with_capacity(past.len());
    walk(joint, rho0, &options, Matrix::identity(joint.dim()), &mut prefix, &mut out);
    Ok(out)
}

fn walk<T: Real>(
    joint: &JointInstrument<T>,
    rho0: &DensityOperator<T>,
    options: &[Vec<usize>],
    k: Matrix<T>,
    prefix: &mut Vec<usize>,
    out: &mut Vec<TrueStateBranch<T>>,
) {
    let step = prefix.len();
    if step == options.len() {
        let weight = k.sandwich(rho0.matrix()).trace_re().max(T::zero());
        out.push(TrueStateBranch { bob_record: prefix.clone(), kraus: k, weight });
        return;
    }
    for &i in &options[step] {
        let jo = &joint.ops()[i];
        let next = &jo.op.kraus()[0] * &k;
        prefix.push(jo.bob);
        walk(joint, rho0, options, next, prefix, out);
        prefix.pop();
    }
}

/// Applies optional pruning; returns the kept branches, their total weight and the dropped fraction.
fn prune<T: Real>(branches: Vec<TrueStateBranch<T>>, opts: &BranchOptions) -> Result<(Vec<TrueStateBranch<T>>, T, T)> {
    let total: T = branches.iter().map(|b| b.weight).sum();
    if !(total > T::tol(ZERO_TOTAL)) {
        return Err(Error::ZeroProbabilityRecord);
    }
    let Some(thr) = opts.prune_below else {
        return Ok((branches, total, T::zero()));
    };
    let cut = T::of(thr) * total;
    let kept: Vec<_> = branches.into_iter().filter(|b| b.weight >= cut).collect();
    let kept_total: T = kept.iter().map(|b| b.weight).sum();
    Ok((kept, kept_total, (total - kept_total) / total))
}

/// Petz–Fuchs prior: the filtered state itself, trivial auxiliary system.
pub fn build_pf<T: Real>(rho_f: &DensityOperator<T>) -> FilteredGlobalState<T> {
    let state = BlockState::single(rho_f.matrix().clone(), rho_f.dim(), 1).expect("valid density operator");
    FilteredGlobalState::new(PriorKind::Pf, state)
}

/// Purification of the filtered state.
pub fn build_clhs<T: Real>(rho_f: &DensityOperator<T>) -> FilteredGlobalState<T> {
    let psi = purify(rho_f);
    let state = BlockState::single(psi.projector(), psi.d_q, psi.d_a).expect("purification is a valid state");
    FilteredGlobalState::new(PriorKind::Clhs, state)
}

/// Bob-conditioned branches of the purified initial state, one register value per Bob record.
pub fn build_gw<T: Real>(
    joint: &JointInstrument<T>,
    rho0: &DensityOperator<T>,
    past: &[usize],
    opts: &BranchOptions,
) -> Result<FilteredGlobalState<T>> {
    let branches = enumerate_bob_branches(joint, rho0, past, opts.cap)?;
    let (branches, total, dropped) = prune(branches, opts)?;
    let psi = purify(rho0);
    let inv = T::one() / total;
    let blocks = branches.iter().map(|b| b.purified_state(&psi).scale(inv)).collect();
    let labels = branches.iter().map(|b| b.label(joint)).collect();
    let state = BlockState::new(psi.d_q, psi.d_a, blocks, labels)?;
    Ok(FilteredGlobalState::new(PriorKind::Gw, state).with_dropped_mass(dropped))
}

/// A GW prior estimated from sampled Bob records instead of full enumeration.
#[derive(Debug, Clone)]
pub struct SampledPrior<T: Real> {
    /// Approximate prior; its marginal matches the filtered state only up to sampling error.
    pub prior: FilteredGlobalState<T>,
    pub samples: usize,
    /// Number of distinct Bob records drawn, one register value each.
    pub distinct: usize,
}

/// Draws `n` Bob records from `p(U | O)` for Alice's past record, step by step,
/// weighting each step by the retrofiltered effect of the rest of Alice's record.
/// Returns each distinct branch with its draw count, in lexicographic order of Bob labels.
pub fn sample_bob_branches<T: Real, R: Rng + ?Sized>(
    joint: &JointInstrument<T>,
    rho0: &DensityOperator<T>,
    past: &[usize],
    n: usize,
    rng: &mut R,
) -> Result<Vec<(TrueStateBranch<T>, usize)>> {
    if rho0.dim() != joint.dim() {
        return Err(Error::DimensionMismatch { expected: joint.dim(), got: rho0.dim() });
    }
    let mut options = Vec::with_capacity(past.len());
    for &y in past {
        if y >= joint.alice_outcomes().len() {
            return Err(Error::UnknownOutcome(format!("alice index {y}")));
        }
        options.push(joint.branches_for(y));
    }
    let alice = joint.alice_marginal();
    let remaining: Vec<Effect<T>> = (1..=past.len()).map(|s| retrofilter(&alice, &past[s..])).collect::<Result<_>>()?;
    let mut drawn: BTreeMap<Vec<usize>, (TrueStateBranch<T>, usize)> = BTreeMap::new();
    for _ in 0..n {
        let mut k = Matrix::identity(joint.dim());
        let mut positions = Vec::with_capacity(past.len());
        let mut bob_record = Vec::with_capacity(past.len());
        for (opts, effect) in options.iter().zip(&remaining) {
            let candidates: Vec<Matrix<T>> = opts.iter().map(|&i| &joint.ops()[i].op.kraus()[0] * &k).collect();
            let weights: Vec<T> = candidates
                .iter()
                .map(|c| c.sandwich(rho0.matrix()).trace_product(effect.matrix()).re.max(T::zero()))
                .collect();
            let total: T = weights.iter().copied().sum();
            if !(total > T::tol(ZERO_TOTAL)) {
                return Err(Error::ZeroProbabilityRecord);
            }
            let pick = sample_index(rng, weights.iter().map(|&w| w / total));
            positions.push(pick);
            bob_record.push(joint.ops()[opts[pick]].bob);
            k = candidates.into_iter().nth(pick).expect("index in range");
        }
        let entry = drawn.entry(positions).or_insert_with(|| {
            let weight = k.sandwich(rho0.matrix()).trace_re().max(T::zero());
            (TrueStateBranch { bob_record, kraus: k, weight }, 0)
        });
        entry.1 += 1;
    }
    Ok(drawn.into_values().collect())
}

/// GW prior from `n` sampled Bob records, each distinct record weighted by its draw frequency.
pub fn build_gw_sampled<T: Real, R: Rng + ?Sized>(
    joint: &JointInstrument<T>,
    rho0: &DensityOperator<T>,
    past: &[usize],
    n: usize,
    rng: &mut R,
) -> Result<SampledPrior<T>> {
    if n == 0 {
        return Err(Error::InvalidExtension("at least one sample is required".into()));
    }
    let branches = sample_bob_branches(joint, rho0, past, n, rng)?;
    let psi = purify(rho0);
    let blocks = branches
        .iter()
        .map(|(b, count)| b.purified_state(&psi).scale(T::of(*count as f64 / n as f64) / b.weight))
        .collect();
    let labels = branches.iter().map(|(b, _)| b.label(joint)).collect();
    let state = BlockState::new(psi.d_q, psi.d_a, blocks, labels)?;
    Ok(SampledPrior { prior: FilteredGlobalState::new(PriorKind::Gw, state), samples: n, distinct: branches.len() })
}

/// Bob-conditioned branches of the (unpurified) initial state.
pub fn build_gw_variant<T: Real>(
    joint: &JointInstrument<T>,
    rho0: &DensityOperator<T>,
    past: &[usize],
    opts: &BranchOptions,
) -> Result<FilteredGlobalState<T>> {
    let branches = enumerate_bob_branches(joint, rho0, past, opts.cap)?;
    let (branches, total, dropped) = prune(branches, opts)?;
    let inv = T::one() / total;
    let blocks = branches.iter().map(|b| b.state(rho0).scale(inv)).collect();
    let labels = branches.iter().map(|b| b.label(joint)).collect();
    let state = BlockState::new(rho0.dim(), 1, blocks, labels)?;
    Ok(FilteredGlobalState::new(PriorKind::GwVariant, state).with_dropped_mass(dropped))
}

/// `(Φ_O⊗id)(|Ψ⟩⟨Ψ|)` normalized, with `|Ψ⟩` the canonical purification of `ρ₀`.
pub fn build_pf_variant<T: Real>(
    instrument: &Instrument<T>,
    rho0: &DensityOperator<T>,
    past: &[usize],
) -> Result<FilteredGlobalState<T>> {
    if rho0.dim() != instrument.dim() {
        return Err(Error::DimensionMismatch { expected: instrument.dim(), got: rho0.dim() });
    }
    let psi = purify(rho0);
    let mut x = psi.projector();
    for &y in past {
        let next = instrument.op(y)?.apply_extended(&x, psi.d_a);
        let w = next.trace_re();
        if !(w > T::tol(ZERO_TOTAL)) {
            return Err(Error::ZeroProbabilityRecord);
        }
        x = next.scale(T::one() / w).symmetrized();
    }
    let state = BlockState::single(x, psi.d_q, psi.d_a)?;
    Ok(FilteredGlobalState::new(PriorKind::PfVariant, state))
}

/// A user-supplied extension, checked against the filtered state it must reproduce.
pub fn build_custom<T: Real>(
    m: Matrix<T>,
    d_q: usize,
    d_a: usize,
    rho_f: &DensityOperator<T>,
) -> Result<FilteredGlobalState<T>> {
    let prior = FilteredGlobalState::custom(m, d_q, d_a)?;
    prior.check_marginal(rho_f, T::tol(1e-9))?;
    Ok(prior)
}

/// Builds any non-custom prior for Alice's past record.
pub fn build_prior<T: Real>(
    kind: PriorKind,
    joint: &JointInstrument<T>,
    rho0: &DensityOperator<T>,
    past: &[usize],
    opts: &BranchOptions,
) -> Result<FilteredGlobalState<T>> {
    match kind {
        PriorKind::Pf | PriorKind::Clhs => {
            let (rho_f, _) = filter(&joint.alice_marginal(), rho0, past)?;
            Ok(if kind == PriorKind::Pf { build_pf(&rho_f) } else { build_clhs(&rho_f) })
        }
        PriorKind::Gw => build_gw(joint, rho0, past, opts),
        PriorKind::GwVariant => build_gw_variant(joint, rho0, past, opts),
        PriorKind::PfVariant => build_pf_variant(&joint.alice_marginal(), rho0, past),
        PriorKind::Custom => Err(Error::InvalidExtension("custom priors need an explicit matrix".into())),
    }
}

/// Everything computed when smoothing one record at one time index.
#[derive(Debug, Clone)]
pub struct SmoothingOutcome<T: Real> {
    pub filtered: DensityOperator<T>,
    pub effect: Effect<T>,
    pub prior: FilteredGlobalState<T>,
    pub smoothed: DensityOperator<T>,
}

/// Smooths Alice's record at index `t` with the chosen prior.
pub fn smooth_record<T: Real>(
    kind: PriorKind,
    joint: &JointInstrument<T>,
    rho0: &DensityOperator<T>,
    record: &[usize],
    t: usize,
    opts: &BranchOptions,
) -> Result<SmoothingOutcome<T>> {
    if t > record.len() {
        return Err(Error::InvalidRecord(format!("smoothing index {t} beyond record length {}", record.len())));
    }
    let (past, future) = record.split_at(t);
    let alice = joint.alice_marginal();
    let (filtered, _) = filter(&alice, rho0, past)?;
    let effect = retrofilter(&alice, future)?;
    let prior = build_prior(kind, joint, rho0, past, opts)?;
    let smoothed = generalized_smooth(&prior, &effect)?;
    Ok(SmoothingOutcome { filtered, effect, prior, smoothed })
}
