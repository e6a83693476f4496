//! Average entropy of outcome-conditioned smoothed states, its bounds, and the
//! map relating smoothed states under different extensions of one marginal.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    entropy_of_psd, entropy_shannon, entropy_vn, herm_eig, ket, psd_sqrt, support_inv_sqrt, support_projector,
    DensityOperator, Effect, Matrix,
};
use crate::random::{random_density, random_extension, random_povm};
use crate::retrodiction::{
    choi_of, generalized_smooth, validate_povm, BlockState, ChannelRep, FilteredGlobalState, PriorKind,
};
use crate::scalar::Real;
use crate::trajectory::{retrofilter, Instrument};

/// Outcome probabilities at or below this are skipped when forming conditional states.
pub const SKIP_PROB: f64 = 1e-14;
/// Slack used when checking entropy inequalities.
pub const BOUND_SLACK: f64 = 1e-9;

/// A POVM on `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm<T: Real> {
    effects: Vec<Effect<T>>,
}

impl<T: Real> Povm<T> {
    pub fn new(effects: Vec<Effect<T>>) -> Result<Self> {
        let dim = effects.first().map_or(0, |e| e.dim());
        validate_povm(&effects, dim)?;
        Ok(Self { effects })
    }

    pub fn from_matrices(effects: Vec<Matrix<T>>) -> Result<Self> {
        Self::new(effects.into_iter().map(Effect::new).collect::<Result<_>>()?)
    }

    /// Projective measurement in the computational basis.
    pub fn computational(dim: usize) -> Self {
        let effects = (0..dim).map(|i| Effect::new(crate::linalg::basis_projector(dim, i)).expect("projector")).collect();
        Self { effects }
    }

    /// Qubit measurement in the `|±⟩` basis, `|+⟩` first.
    pub fn qubit_x() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ket::<T>(&[s, s]);
        let minus = ket::<T>(&[s, -s]);
        Self {
            effects: vec![
                Effect::new(Matrix::outer(&plus, &plus)).expect("projector"),
                Effect::new(Matrix::outer(&minus, &minus)).expect("projector"),
            ],
        }
    }

    /// Retrofiltered effects of every future record of length `steps`, in lexicographic order.
    pub fn future_records(instrument: &Instrument<T>, steps: usize, cap: usize) -> Result<(Self, Vec<Vec<usize>>)> {
        let n = instrument.outcomes().len();
        let count = (n as u128).checked_pow(steps as u32).unwrap_or(u128::MAX);
        if count > cap as u128 {
            return Err(Error::EnumerationTooLarge { count, cap });
        }
        let mut records = Vec::with_capacity(count as usize);
        let mut effects = Vec::with_capacity(count as usize);
        let mut rec = vec![0usize; steps];
        for _ in 0..count {
            effects.push(retrofilter(instrument, &rec)?);
            records.push(rec.clone());
            for pos in (0..steps).rev() {
                rec[pos] += 1;
                if rec[pos] < n {
                    break;
                }
                rec[pos] = 0;
            }
        }
        Ok((Self::new(effects)?, records))
    }

    pub fn effects(&self) -> &[Effect<T>] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }
}

/// A marginal `γ`, an extension `Γ` of it, and a POVM on `Q`.
#[derive(Debug, Clone)]
pub struct ExtensionScenario<T: Real> {
    gamma: DensityOperator<T>,
    extension: FilteredGlobalState<T>,
    povm: Povm<T>,
}

impl<T: Real> ExtensionScenario<T> {
    /// Requires `Tr_A Γ = γ` within `1e-9` and matching dimensions.
    pub fn new(gamma: DensityOperator<T>, extension: FilteredGlobalState<T>, povm: Povm<T>) -> Result<Self> {
        if povm.dim() != gamma.dim() {
            return Err(Error::DimensionMismatch { expected: gamma.dim(), got: povm.dim() });
        }
        extension.check_marginal(&gamma, T::tol(1e-9))?;
        Ok(Self { gamma, extension, povm })
    }

    /// Uses `Tr_A Γ` as the marginal.
    pub fn from_extension(extension: FilteredGlobalState<T>, povm: Povm<T>) -> Result<Self> {
        let gamma = extension.filtered_state()?;
        Self::new(gamma, extension, povm)
    }

    /// The same marginal and POVM with the trivial extension `Γ = γ`.
    pub fn trivial(&self) -> Self {
        Self { gamma: self.gamma.clone(), extension: trivial_extension(&self.gamma), povm: self.povm.clone() }
    }

    pub fn gamma(&self) -> &DensityOperator<T> {
        &self.gamma
    }

    pub fn extension(&self) -> &FilteredGlobalState<T> {
        &self.extension
    }

    pub fn povm(&self) -> &Povm<T> {
        &self.povm
    }
}

fn trivial_extension<T: Real>(gamma: &DensityOperator<T>) -> FilteredGlobalState<T> {
    let state = BlockState::single(gamma.matrix().clone(), gamma.dim(), 1).expect("valid state");
    FilteredGlobalState::new(PriorKind::Pf, state)
}

/// `p_i = Tr[E_i γ]`.
pub fn outcome_probs<T: Real>(scenario: &ExtensionScenario<T>) -> Vec<T> {
    scenario.povm.effects.iter().map(|e| scenario.gamma.trace_product(e.matrix()).re.max(T::zero())).collect()
}

/// Outcome-conditioned smoothed states; `None` marks a skipped zero-probability outcome.
#[derive(Debug, Clone)]
pub struct OutcomeStates<T: Real> {
    pub probs: Vec<T>,
    pub states: Vec<Option<DensityOperator<T>>>,
}

impl<T: Real> OutcomeStates<T> {
    pub fn skipped(&self) -> Vec<usize> {
        self.states.iter().enumerate().filter(|(_, s)| s.is_none()).map(|(i, _)| i).collect()
    }

    /// `Σ_i p_i ρ_i`.
    pub fn mixture(&self) -> Matrix<T> {
        let dim = self.states.iter().flatten().next().map_or(0, |s| s.dim());
        self.states
            .iter()
            .zip(&self.probs)
            .filter_map(|(s, &p)| s.as_ref().map(|s| s.scale(p)))
            .fold(Matrix::zeros(dim, dim), |acc, m| acc + m)
    }
}

/// `ρ_i^Γ = Tr_A[√Γ (E_i⊗𝕀) √Γ] / p_i` for every outcome with `p_i > 1e-14`.
pub fn smoothed_outcome_states<T: Real>(scenario: &ExtensionScenario<T>) -> Result<OutcomeStates<T>> {
    let probs = outcome_probs(scenario);
    let mut states = Vec::with_capacity(probs.len());
    for (e, &p) in scenario.povm.effects.iter().zip(&probs) {
        if p <= T::tol(SKIP_PROB) {
            states.push(None);
        } else {
            states.push(Some(generalized_smooth(&scenario.extension, e)?));
        }
    }
    Ok(OutcomeStates { probs, states })
}

/// `Σ_i p_i S(ρ_i^Γ)` in nats.
pub fn avg_entropy<T: Real>(scenario: &ExtensionScenario<T>) -> Result<T> {
    let out = smoothed_outcome_states(scenario)?;
    Ok(out
        .states
        .iter()
        .zip(&out.probs)
        .filter_map(|(s, &p)| s.as_ref().map(|s| p * entropy_vn(s)))
        .sum())
}

/// `S(Q|C)` of `Σ_i p_i |i⟩⟨i| ⊗ ρ_i`, from the spectrum of the joint state.
pub fn conditional_entropy<T: Real>(outcomes: &OutcomeStates<T>) -> Result<T> {
    let kept: Vec<(T, &DensityOperator<T>)> =
        outcomes.states.iter().zip(&outcomes.probs).filter_map(|(s, &p)| s.as_ref().map(|s| (p, s))).collect();
    let Some((_, first)) = kept.first() else {
        return Ok(T::zero());
    };
    let d = first.dim();
    let n = kept.len();
    let mut cq = Matrix::zeros(n * d, n * d);
    for (c, (p, s)) in kept.iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                cq[(c * d + i, c * d + j)] = s[(i, j)] * *p;
            }
        }
    }
    let probs: Vec<T> = kept.iter().map(|(p, _)| *p).collect();
    let total: T = probs.iter().copied().sum();
    let probs: Vec<T> = probs.iter().map(|&p| p / total).collect();
    Ok(entropy_of_psd(&cq.scale(T::one() / total))? - entropy_shannon(&probs)?)
}

/// Bounds `S(ρ_F) − H(future) ≤ S̄ ≤ S(ρ_F)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichBound<T: Real> {
    pub lower: T,
    pub upper: T,
    pub holds: bool,
}

pub fn sandwich_bound<T: Real>(rho_f: &DensityOperator<T>, future_probs: &[T], avg_s: T) -> Result<SandwichBound<T>> {
    let upper = entropy_vn(rho_f);
    let lower = upper - entropy_shannon(future_probs)?;
    let slack = T::tol(BOUND_SLACK);
    Ok(SandwichBound { lower, upper, holds: avg_s >= lower - slack && avg_s <= upper + slack })
}

/// `Λ(Y) = Tr_A[√Γ (γ^{−1/2} Y γ^{−1/2} ⊗ 𝕀) √Γ]` in Kraus form `B_{ab} γ^{−1/2}`,
/// `B_{ab} = (𝕀⊗⟨a|) √Γ (𝕀⊗|b⟩)`. Trace preserving on `supp(γ)` only.
pub fn lambda_map<T: Real>(extension: &FilteredGlobalState<T>, gamma: &DensityOperator<T>) -> Result<ChannelRep<T>> {
    extension.check_marginal(gamma, T::tol(1e-9))?;
    let state = extension.state();
    let (dq, da) = (state.d_q(), state.d_anc());
    let inv = support_inv_sqrt(gamma.matrix())?;
    let mut kraus = Vec::new();
    for block in state.blocks() {
        let root = psd_sqrt(block)?;
        for a in 0..da {
            for b in 0..da {
                let bab = Matrix::from_fn(dq, dq, |i, j| root[(i * da + a, j * da + b)]);
                if bab.max_abs() > T::zero() {
                    kraus.push(&bab * &inv);
                }
            }
        }
    }
    if kraus.is_empty() {
        kraus.push(Matrix::zeros(dq, dq));
    }
    ChannelRep::from_kraus(kraus)
}

/// Complete-positivity and trace-preservation diagnostics of a map restricted to `supp(γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaDiagnostics<T: Real> {
    /// Smallest eigenvalue of the Choi operator of `Y ↦ Λ(Π Y Π)`; `None` above `d_Q = 4`.
    pub choi_min_eigenvalue: Option<T>,
    /// `max |Π Λ†(𝕀) Π − Π|`.
    pub tp_defect_on_support: T,
}

pub fn lambda_diagnostics<T: Real>(lambda: &ChannelRep<T>, gamma: &DensityOperator<T>) -> Result<LambdaDiagnostics<T>> {
    let proj = support_projector(gamma.matrix())?;
    let d = gamma.dim();
    let tp_defect_on_support = proj.sandwich(&lambda.gram()).max_abs_diff(&proj);
    let choi_min_eigenvalue = if d <= 4 {
        let choi = choi_of(d, lambda.output_dim(), |y| lambda.apply(&proj.sandwich(y)));
        Some(herm_eig(&choi.symmetrized())?.min_value())
    } else {
        None
    };
    Ok(LambdaDiagnostics { choi_min_eigenvalue, tp_defect_on_support })
}

/// Largest `max|Λ(ρ_i^γ) − ρ_i^Γ|` over non-skipped outcomes.
pub fn intertwining_gap<T: Real>(scenario: &ExtensionScenario<T>, lambda: &ChannelRep<T>) -> Result<T> {
    let with_gamma = smoothed_outcome_states(&scenario.trivial())?;
    let with_ext = smoothed_outcome_states(scenario)?;
    let mut gap = T::zero();
    for (a, b) in with_gamma.states.iter().zip(&with_ext.states) {
        if let (Some(a), Some(b)) = (a, b) {
            gap = gap.max(lambda.apply(a).max_abs_diff(b));
        }
    }
    Ok(gap)
}

/// The entropy chain `S̄(γ) ≤ S̄(Γ) ≤ S(γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem1Report<T: Real> {
    pub s_trivial: T,
    pub s_extension: T,
    pub s_marginal: T,
    /// `S̄(Γ) − S̄(γ)`; nonnegative when the lower inequality holds.
    pub lower_margin: T,
    /// `S(γ) − S̄(Γ)`; nonnegative when the upper inequality holds.
    pub upper_margin: T,
    pub ordering_holds: bool,
}

pub fn theorem1_check<T: Real>(scenario: &ExtensionScenario<T>) -> Result<Theorem1Report<T>> {
    let s_trivial = avg_entropy(&scenario.trivial())?;
    let s_extension = avg_entropy(scenario)?;
    let s_marginal = entropy_vn(&scenario.gamma);
    let lower_margin = s_extension - s_trivial;
    let upper_margin = s_marginal - s_extension;
    let slack = T::tol(BOUND_SLACK);
    Ok(Theorem1Report {
        s_trivial,
        s_extension,
        s_marginal,
        lower_margin,
        upper_margin,
        ordering_holds: lower_margin >= -slack && upper_margin >= -slack,
    })
}

/// Random scenario: marginal of random rank, extension on `d_a`, POVM with `n_effects` effects.
pub fn random_scenario<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    d_q: usize,
    d_a: usize,
    n_effects: usize,
) -> Result<ExtensionScenario<T>> {
    let rank = rng.random_range(1..=d_q);
    let gamma = random_density::<T, R>(rng, d_q, rank);
    let env = rng.random_range(1..=d_q * d_a);
    let ext = random_extension(rng, &gamma, d_a, env);
    let extension = FilteredGlobalState::new(PriorKind::Custom, BlockState::single(ext, d_q, d_a)?);
    let povm = Povm::from_matrices(random_povm(rng, d_q, n_effects))?;
    ExtensionScenario::new(gamma, extension, povm)
}

/// One cell of the two-extension example.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvbValue {
    pub extension: String,
    pub povm: String,
    pub avg_entropy: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvbReport {
    pub values: Vec<SvbValue>,
    pub max_error: f64,
    /// `Γ₁ < Γ₂` under Z and `Γ₁ > Γ₂` under X.
    pub reversal_holds: bool,
}

/// `Γ₁ = ½(|00⟩⟨00| + |11⟩⟨11|)` on `Q⊗A`.
pub fn svb_gamma1<T: Real>() -> FilteredGlobalState<T> {
    let a = ket::<T>(&[1.0, 0.0, 0.0, 0.0]);
    let b = ket::<T>(&[0.0, 0.0, 0.0, 1.0]);
    let m = (&Matrix::outer(&a, &a) + &Matrix::outer(&b, &b)).scale(T::of(0.5));
    FilteredGlobalState::custom(m, 2, 2).expect("valid state")
}

/// `Γ₂ = ½(|+0⟩⟨+0| + |−1⟩⟨−1|)` on `Q⊗A`.
pub fn svb_gamma2<T: Real>() -> FilteredGlobalState<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let a = ket::<T>(&[s, 0.0, s, 0.0]);
    let b = ket::<T>(&[0.0, s, 0.0, -s]);
    let m = (&Matrix::outer(&a, &a) + &Matrix::outer(&b, &b)).scale(T::of(0.5));
    FilteredGlobalState::custom(m, 2, 2).expect("valid state")
}

/// Two extensions of `𝕀/2` whose average-entropy order flips between Z and X measurements.
pub fn no_universal_quantifier_demo() -> Result<SvbReport> {
    let ln2 = std::f64::consts::LN_2;
    let cases = [
        ("gamma1", svb_gamma1::<f64>(), "Z", Povm::computational(2), 0.0),
        ("gamma1", svb_gamma1(), "X", Povm::qubit_x(), ln2),
        ("gamma2", svb_gamma2(), "Z", Povm::computational(2), ln2),
        ("gamma2", svb_gamma2(), "X", Povm::qubit_x(), 0.0),
    ];
    let mut values = Vec::with_capacity(4);
    for (ext_name, ext, povm_name, povm, expected) in cases {
        let scenario = ExtensionScenario::from_extension(ext, povm)?;
        values.push(SvbValue {
            extension: ext_name.into(),
            povm: povm_name.into(),
            avg_entropy: avg_entropy(&scenario)?,
            expected,
        });
    }
    let max_error = values.iter().map(|v| (v.avg_entropy - v.expected).abs()).fold(0.0, f64::max);
    let reversal_holds = values[0].avg_entropy < values[2].avg_entropy && values[1].avg_entropy > values[3].avg_entropy;
    Ok(SvbReport { values, max_error, reversal_holds })
}
