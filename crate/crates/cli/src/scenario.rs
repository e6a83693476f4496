//! Scenario documents: parsing, validation and conversion into core types.

use std::path::Path;

use retrosmooth::classical::ClassicalModel;
use retrosmooth::linalg::{DensityOperator, Matrix};
use retrosmooth::smoothers::PriorKind;
use retrosmooth::trajectory::{
    demo_driven_damped_qubit, discretize, ConditionalOp, Detection, Instrument, JointInstrument, JumpChannel,
    LindbladSpec, COMPLETENESS_TOL, DEFAULT_ENUMERATION_CAP,
};
use retrosmooth::C;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable overriding the enumeration cap of every scenario.
pub const CAP_ENV: &str = "RETROSMOOTH_CAP";

/// Dense complex matrix as nested row arrays; `imag` defaults to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub real: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn to_matrix(&self, field: &str) -> Result<Matrix<f64>, CliError> {
        Matrix::from_parts(&self.real, self.imag.as_deref()).map_err(|e| CliError::config(field, e))
    }

    pub fn from_matrix(m: &Matrix<f64>) -> Self {
        Self { real: m.real_parts(), imag: Some(m.imag_parts()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    pub op: MatrixSpec,
    #[serde(default = "one")]
    pub efficiency: f64,
    #[serde(default)]
    pub detection: Detection,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindbladConfig {
    pub hamiltonian: MatrixSpec,
    #[serde(default)]
    pub jump_ops: Vec<JumpSpec>,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivenDampedQubit {
    pub omega: f64,
    pub kappa: f64,
    pub eta: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentConfig {
    pub outcomes: Vec<String>,
    /// Kraus operators of each outcome, in outcome order.
    pub kraus: Vec<Vec<MatrixSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointOpConfig {
    pub alice: String,
    pub bob: String,
    pub kraus: MatrixSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointInstrumentConfig {
    pub alice_outcomes: Vec<String>,
    pub bob_outcomes: Vec<String>,
    pub ops: Vec<JointOpConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalConfig {
    /// `transition[x][x']`, columns sum to one.
    pub transition: Vec<Vec<f64>>,
    /// `likelihood[y][x]`, columns sum to one.
    pub likelihood: Vec<Vec<f64>>,
    pub outcomes: Vec<String>,
}

/// Exactly one system description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Lindblad(LindbladConfig),
    DrivenDampedQubit(DrivenDampedQubit),
    Instrument(InstrumentConfig),
    JointInstrument(JointInstrumentConfig),
    Classical(ClassicalConfig),
}

/// Initial state: a named state or an explicit matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateConfig {
    Named(String),
    Matrix(MatrixSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub system: SystemConfig,
    pub rho0: StateConfig,
    pub steps: usize,
    pub smoothing_index: usize,
    #[serde(default = "default_priors")]
    pub prior_kinds: Vec<PriorKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
    /// Ancilla dimension of random extensions used for the custom prior.
    #[serde(default = "default_custom_dim")]
    pub custom_ancilla_dim: usize,
    /// Bob records to sample for the gw prior when full enumeration exceeds the cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gw_samples: Option<usize>,
    /// Marks a scenario whose operators are all diagonal in the computational basis.
    #[serde(default)]
    pub diagonal: bool,
    /// Default output directory when `--out` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

fn default_priors() -> Vec<PriorKind> {
    vec![PriorKind::Pf, PriorKind::Gw, PriorKind::GwVariant, PriorKind::PfVariant, PriorKind::Clhs]
}

fn default_cap() -> usize {
    DEFAULT_ENUMERATION_CAP
}

fn default_custom_dim() -> usize {
    2
}

/// The driven, damped qubit used by `verify` and the documentation.
pub fn demo_scenario() -> Scenario {
    Scenario {
        name: "driven-damped-qubit".into(),
        system: SystemConfig::DrivenDampedQubit(DrivenDampedQubit { omega: 1.0, kappa: 1.0, eta: 0.5, dt: 0.02 }),
        rho0: StateConfig::Named("maximally_mixed".into()),
        steps: 4,
        smoothing_index: 2,
        prior_kinds: default_priors(),
        seed: 7,
        enumeration_cap: DEFAULT_ENUMERATION_CAP,
        custom_ancilla_dim: 2,
        gw_samples: None,
        diagonal: false,
        out_dir: None,
    }
}

/// A scenario resolved into instruments and states.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    /// Joint instrument; for single-party systems Bob sees the Kraus index.
    pub joint: JointInstrument<f64>,
    pub alice: Instrument<f64>,
    /// Whether the system defines physical Bob outcomes.
    pub has_bob: bool,
    pub classical: Option<ClassicalModel<f64>>,
    pub rho0: DensityOperator<f64>,
    pub cap: usize,
    /// Largest deviation of `Σ K†K` from the identity.
    pub completeness_defect: f64,
}

pub fn read_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenario(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        CliError::Config(format!(
            "line {} column {}, field `{}`: {}",
            inner.line(),
            inner.column(),
            e.path(),
            inner
        ))
    })
}

fn named_state(name: &str, dim: usize) -> Result<DensityOperator<f64>, CliError> {
    match name {
        "maximally_mixed" => Ok(DensityOperator::maximally_mixed(dim)),
        "ground" => Ok(DensityOperator::basis(dim, 0)),
        "excited" if dim >= 2 => Ok(DensityOperator::basis(dim, 1)),
        "plus" => {
            let amp = C::new(1.0 / (dim as f64).sqrt(), 0.0);
            DensityOperator::pure(&vec![amp; dim]).map_err(|e| CliError::config("rho0", e))
        }
        other => Err(CliError::Config(format!(
            "field `rho0`: unknown state {other:?} (expected maximally_mixed, ground, excited, plus or a matrix)"
        ))),
    }
}

/// Resolves a scenario. With `strict`, an incomplete instrument is a configuration error;
/// otherwise its defect is recorded in [`Loaded::completeness_defect`].
pub fn load(scenario: Scenario, strict: bool) -> Result<Loaded, CliError> {
    let mut classical = None;
    let (joint, has_bob) = match &scenario.system {
        SystemConfig::Lindblad(cfg) => {
            let spec = LindbladSpec {
                hamiltonian: cfg.hamiltonian.to_matrix("system.lindblad.hamiltonian")?,
                jump_ops: cfg
                    .jump_ops
                    .iter()
                    .enumerate()
                    .map(|(i, j)| {
                        Ok(JumpChannel {
                            op: j.op.to_matrix(&format!("system.lindblad.jump_ops[{i}].op"))?,
                            efficiency: j.efficiency,
                            detection: j.detection,
                        })
                    })
                    .collect::<Result<_, CliError>>()?,
                dt: cfg.dt,
            };
            (discretize(&spec).map_err(|e| CliError::config("system.lindblad", e))?, true)
        }
        SystemConfig::DrivenDampedQubit(d) => {
            let spec = demo_driven_damped_qubit(d.omega, d.kappa, d.eta, d.dt);
            (discretize(&spec).map_err(|e| CliError::config("system.driven_damped_qubit", e))?, true)
        }
        SystemConfig::Instrument(cfg) => {
            if cfg.kraus.len() != cfg.outcomes.len() {
                return Err(CliError::Config("field `system.instrument.kraus`: one list per outcome is required".into()));
            }
            let ops = cfg
                .kraus
                .iter()
                .enumerate()
                .map(|(y, ks)| {
                    let field = format!("system.instrument.kraus[{y}]");
                    let mats = ks.iter().map(|k| k.to_matrix(&field)).collect::<Result<Vec<_>, _>>()?;
                    ConditionalOp::new(mats).map_err(|e| CliError::config(&field, e))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let inst = Instrument::new_unchecked(cfg.outcomes.clone(), ops)
                .map_err(|e| CliError::config("system.instrument", e))?;
            (unravel(&inst)?, false)
        }
        SystemConfig::JointInstrument(cfg) => {
            let ops = cfg
                .ops
                .iter()
                .enumerate()
                .map(|(i, o)| Ok((o.alice.clone(), o.bob.clone(), o.kraus.to_matrix(&format!("system.joint_instrument.ops[{i}].kraus"))?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let joint = JointInstrument::new_unchecked(cfg.alice_outcomes.clone(), cfg.bob_outcomes.clone(), ops)
                .map_err(|e| CliError::config("system.joint_instrument", e))?;
            (joint, true)
        }
        SystemConfig::Classical(cfg) => {
            let model = ClassicalModel::new(cfg.transition.clone(), cfg.likelihood.clone(), cfg.outcomes.clone())
                .map_err(|e| CliError::config("system.classical", e))?;
            let inst = Instrument::from_classical_model(&model).map_err(|e| CliError::config("system.classical", e))?;
            classical = Some(model);
            (unravel(&inst)?, false)
        }
    };
    let completeness_defect = joint.completeness_defect();
    if strict && completeness_defect > COMPLETENESS_TOL {
        return Err(CliError::Config(format!(
            "scenario {:?}: instrument is incomplete (defect {completeness_defect:.3e})",
            scenario.name
        )));
    }
    let dim = joint.dim();
    let rho0 = match &scenario.rho0 {
        StateConfig::Named(n) => named_state(n, dim)?,
        StateConfig::Matrix(m) => DensityOperator::new(m.to_matrix("rho0")?).map_err(|e| CliError::config("rho0", e))?,
    };
    if rho0.dim() != dim {
        return Err(CliError::Config(format!("field `rho0`: dimension {} but the system has {dim}", rho0.dim())));
    }
    if scenario.smoothing_index > scenario.steps {
        return Err(CliError::Config(format!(
            "field `smoothing_index`: {} exceeds steps {}",
            scenario.smoothing_index, scenario.steps
        )));
    }
    if scenario.custom_ancilla_dim == 0 {
        return Err(CliError::Config("field `custom_ancilla_dim`: must be positive".into()));
    }
    let cap = cap_override()?.unwrap_or(scenario.enumeration_cap);
    let alice = joint.alice_marginal();
    Ok(Loaded { scenario, joint, alice, has_bob, classical, rho0, cap, completeness_defect })
}

fn unravel(inst: &Instrument<f64>) -> Result<JointInstrument<f64>, CliError> {
    let width = inst.ops().iter().map(|op| op.kraus().len()).max().unwrap_or(1);
    let bob: Vec<String> = (0..width).map(|k| k.to_string()).collect();
    let mut ops = Vec::new();
    for (label, op) in inst.outcomes().iter().zip(inst.ops()) {
        for (k, m) in op.kraus().iter().enumerate() {
            ops.push((label.clone(), bob[k].clone(), m.clone()));
        }
    }
    JointInstrument::new_unchecked(inst.outcomes().to_vec(), bob, ops).map_err(|e| CliError::config("system", e))
}

fn cap_override() -> Result<Option<usize>, CliError> {
    match std::env::var(CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("environment variable {CAP_ENV}: {v:?} is not a count"))),
        Err(_) => Ok(None),
    }
}
