//! `verify`: the built-in property suite plus instrument checks on user scenarios.

use retrosmooth::linalg::{herm_eig, DensityOperator};
use retrosmooth::retrodiction::generalized_smooth_raw;
use retrosmooth::smoothers::{build_prior, BranchOptions, PriorKind};
use retrosmooth::trajectory::{filter, retrofilter, COMPLETENESS_TOL};
use serde::Serialize;

use super::{all_records, classical_limit, entropy_scan, smooth};
use crate::error::CliError;
use crate::output::{ensure_dir, write_json, MatrixJson};
use crate::scenario::{demo_scenario, load, read_scenario, ClassicalConfig, Loaded, MatrixSpec, Scenario, StateConfig, SystemConfig};
use crate::{with_pool, VerifyArgs};

/// Priors built from the measurement model alone.
const FIVE: [PriorKind; 5] = [PriorKind::Pf, PriorKind::Gw, PriorKind::GwVariant, PriorKind::PfVariant, PriorKind::Clhs];
const AVERAGING_TOL: f64 = 1e-8;
const CLHS_TOL: f64 = 1e-10;
const EIG_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-10;
const AGREEMENT_TOL: f64 = 1e-10;
const SWEEP_SIZE: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, result: Result<(bool, String), CliError>) -> Check {
    match result {
        Ok((passed, detail)) => Check { name: name.into(), passed, detail },
        Err(e) => Check { name: name.into(), passed: false, detail: e.to_string() },
    }
}

fn with_index(loaded: &Loaded, t: usize) -> Loaded {
    let mut l = loaded.clone();
    l.scenario.smoothing_index = t;
    l
}

fn completeness(loaded: &Loaded) -> Result<(bool, String), CliError> {
    let d = loaded.completeness_defect;
    Ok((d <= COMPLETENESS_TOL, format!("scenario {:?}: defect {d:.3e}", loaded.scenario.name)))
}

fn states_valid(loaded: &Loaded) -> Result<(bool, String), CliError> {
    let opts = BranchOptions { cap: loaded.cap, ..BranchOptions::default() };
    let n = loaded.alice.outcomes().len();
    let steps = loaded.scenario.steps;
    let (mut min_eig, mut trace_err, mut count) = (f64::INFINITY, 0.0f64, 0usize);
    for t in 0..=steps {
        for past in all_records(n, t) {
            if filter(&loaded.alice, &loaded.rho0, &past).is_err() {
                continue;
            }
            for kind in FIVE {
                let prior = build_prior(kind, &loaded.joint, &loaded.rho0, &past, &opts)?;
                for future in all_records(n, steps - t) {
                    let effect = retrofilter(&loaded.alice, &future)?;
                    let Ok(raw) = generalized_smooth_raw(&prior, &effect) else { continue };
                    min_eig = min_eig.min(herm_eig(&raw)?.min_value());
                    trace_err = trace_err.max((raw.trace_re() - 1.0).abs());
                    count += 1;
                }
            }
        }
    }
    Ok((
        min_eig >= -EIG_TOL && trace_err <= TRACE_TOL,
        format!("{count} states: min eigenvalue {min_eig:.2e}, max |trace - 1| {trace_err:.2e}"),
    ))
}

/// Smooth reports at every time index, with all five priors.
fn reports(loaded: &Loaded) -> Result<Vec<smooth::SmoothReport>, CliError> {
    (0..=loaded.scenario.steps)
        .map(|t| {
            let l = with_index(loaded, t);
            let items = smooth::enumerated_items(&l)?;
            smooth::compute(&l, &items, &FIVE, l.scenario.seed, true)
        })
        .collect()
}

fn averaging(reports: &[smooth::SmoothReport], kind: PriorKind) -> Result<(bool, String), CliError> {
    let mut worst = 0.0f64;
    let mut total_err = 0.0f64;
    for r in reports {
        let s = r.summary.iter().find(|s| s.prior == kind).expect("kind present");
        if s.failed > 0 {
            return Ok((false, format!("t = {}: {} records failed", r.smoothing_index, s.failed)));
        }
        worst = worst.max(s.averaging_residual.unwrap_or(f64::INFINITY));
        total_err = total_err.max((s.total_probability - 1.0).abs());
    }
    Ok((
        worst <= AVERAGING_TOL && total_err <= AVERAGING_TOL,
        format!("max residual {worst:.2e}, max |total probability - 1| {total_err:.2e}"),
    ))
}

fn clhs_is_filtered(reports: &[smooth::SmoothReport]) -> Result<(bool, String), CliError> {
    let worst = reports
        .iter()
        .flat_map(|r| &r.rows)
        .filter(|r| r.prior == PriorKind::Clhs && r.status != smooth::ZERO_PROBABILITY)
        .map(|r| r.trace_distance_to_filtered.unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    Ok((worst <= CLHS_TOL, format!("max trace distance to filtered {worst:.2e}")))
}

fn round_trip(reports: &[smooth::SmoothReport]) -> Result<(bool, String), CliError> {
    let mut count = 0;
    for r in reports {
        let text = serde_json::to_string(r).map_err(|e| CliError::Verification(e.to_string()))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Verification(e.to_string()))?;
        for row in value["rows"].as_array().into_iter().flatten() {
            for key in ["filtered", "smoothed"] {
                if row[key].is_null() {
                    continue;
                }
                let m: MatrixJson =
                    serde_json::from_value(row[key].clone()).map_err(|e| CliError::Verification(e.to_string()))?;
                m.to_density()?;
                count += 1;
            }
        }
    }
    Ok((count > 0, format!("{count} matrices re-validated")))
}

fn gw_agreement(demo: &Loaded) -> Result<(bool, String), CliError> {
    let mut pure = demo.clone();
    pure.rho0 = DensityOperator::basis(2, 0);
    let (mut worst, mut compared) = (0.0f64, 0usize);
    for t in 0..=pure.scenario.steps {
        let l = with_index(&pure, t);
        let items = smooth::enumerated_items(&l)?;
        let r = smooth::compute(&l, &items, &[PriorKind::Gw, PriorKind::GwVariant], 0, false)?;
        for pair in r.rows.chunks(2) {
            match (&pair[0].smoothed, &pair[1].smoothed) {
                (Some(a), Some(b)) => {
                    let (a, b) = (a.to_density()?, b.to_density()?);
                    worst = worst.max((a.matrix() - b.matrix()).max_abs());
                    compared += 1;
                }
                (None, None) => {}
                _ => return Ok((false, format!("record {:?}: only one prior succeeded", pair[0].record))),
            }
        }
    }
    Ok((compared > 0 && worst <= AGREEMENT_TOL, format!("{compared} records, max entry difference {worst:.2e}")))
}

/// A two-state hidden-Markov chain read out through a noisy detector.
pub fn builtin_classical() -> Scenario {
    Scenario {
        name: "two-state-chain".into(),
        system: SystemConfig::Classical(ClassicalConfig {
            transition: vec![vec![0.9, 0.2], vec![0.1, 0.8]],
            likelihood: vec![vec![0.8, 0.3], vec![0.2, 0.7]],
            outcomes: vec!["a".into(), "b".into()],
        }),
        rho0: StateConfig::Matrix(MatrixSpec { real: vec![vec![0.6, 0.0], vec![0.0, 0.4]], imag: None }),
        steps: 4,
        smoothing_index: 2,
        prior_kinds: vec![PriorKind::Pf, PriorKind::GwVariant],
        seed: 0,
        enumeration_cap: 1_000_000,
        custom_ancilla_dim: 2,
        gw_samples: None,
        diagonal: true,
        out_dir: None,
    }
}

fn classical(scenario: Scenario) -> Result<(bool, String), CliError> {
    let r = classical_limit::compute(&load(scenario, true)?)?;
    Ok((r.passed, format!("{} comparisons, max residual {:.2e}", r.compared, r.max_residual)))
}

fn entropy_bounds(loaded: &Loaded) -> Result<(bool, String), CliError> {
    let mut failed = 0;
    let mut rows = 0;
    for t in 0..=loaded.scenario.steps {
        let mut l = with_index(loaded, t);
        l.scenario.prior_kinds = FIVE.to_vec();
        let r = entropy_scan::scan_scenario(&l, 0)?;
        rows += r.len();
        failed += r.iter().filter(|x| !x.holds).count();
    }
    Ok((failed == 0, format!("{rows} rows, {failed} outside bounds")))
}

fn sweep() -> Result<(bool, String), CliError> {
    let rows = entropy_scan::theorem1_sweep(SWEEP_SIZE, 0)?;
    let ok = rows.iter().filter(|r| r.holds).count();
    let worst = rows.iter().map(|r| r.lower_margin.min(r.upper_margin)).fold(f64::INFINITY, f64::min);
    Ok((ok == rows.len(), format!("{ok}/{} ordered, smallest margin {worst:.2e}", rows.len())))
}

fn svb() -> Result<(bool, String), CliError> {
    let r = retrosmooth::entropy::no_universal_quantifier_demo()?;
    Ok((
        r.max_error <= entropy_scan::SVB_TOL && r.reversal_holds,
        format!("max error {:.2e}, order reversed {}", r.max_error, r.reversal_holds),
    ))
}

/// Checks for a user scenario; smoothing checks run only when the instrument is complete.
fn scenario_checks(path: &std::path::Path) -> Vec<Check> {
    let loaded = match read_scenario(path).and_then(|s| load(s, false)) {
        Ok(l) => l,
        Err(e) => return vec![check(format!("load {}", path.display()), Err(e))],
    };
    let name = loaded.scenario.name.clone();
    let mut out = vec![check(format!("instrument completeness [{name}]"), completeness(&loaded))];
    if out[0].passed {
        out.push(check(format!("smoothed states are density operators [{name}]"), states_valid(&loaded)));
        match reports(&loaded) {
            Ok(reps) => {
                for kind in FIVE {
                    out.push(check(format!("averaging recovers filtered state, {kind} [{name}]"), averaging(&reps, kind)));
                }
            }
            Err(e) => out.push(check(format!("averaging recovers filtered state [{name}]"), Err(e))),
        }
    }
    out
}

pub fn run_suite(extra: &[std::path::PathBuf]) -> Vec<Check> {
    let mut checks = Vec::new();
    let demo = load(demo_scenario(), false);
    match demo {
        Ok(demo) => {
            let name = demo.scenario.name.clone();
            checks.push(check(format!("instrument completeness [{name}]"), completeness(&demo)));
            checks.push(check(format!("smoothed states are density operators [{name}]"), states_valid(&demo)));
            match reports(&demo) {
                Ok(reps) => {
                    for kind in FIVE {
                        checks.push(check(
                            format!("averaging recovers filtered state, {kind} [{name}]"),
                            averaging(&reps, kind),
                        ));
                    }
                    checks.push(check(format!("clhs smoothed state equals filtered state [{name}]"), clhs_is_filtered(&reps)));
                    checks.push(check(format!("emitted matrices round-trip [{name}]"), round_trip(&reps)));
                }
                Err(e) => checks.push(check(format!("smoothing reports [{name}]"), Err(e))),
            }
            checks.push(check(format!("gw and gw-variant agree for a pure initial state [{name}]"), gw_agreement(&demo)));
            checks.push(check(format!("entropy bounds [{name}]"), entropy_bounds(&demo)));
        }
        Err(e) => checks.push(check("load built-in demo", Err(e))),
    }
    let classical_scenario = builtin_classical();
    let cname = classical_scenario.name.clone();
    checks.push(check(format!("classical limit [{cname}]"), classical(classical_scenario)));
    checks.push(check("entropy ordering on random extensions", sweep()));
    checks.push(check("two-extension example", svb()));
    for path in extra {
        checks.extend(scenario_checks(path));
    }
    checks
}

#[derive(Debug, Serialize)]
struct VerifyReport<'a> {
    passed: usize,
    failed: usize,
    checks: &'a [Check],
}

pub fn run(args: &VerifyArgs) -> Result<(), CliError> {
    let checks = with_pool(args.common.jobs, || run_suite(&args.scenario))?;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} passed, {failed} failed", checks.len() - failed);
    if let Some(out) = &args.common.out {
        ensure_dir(out)?;
        write_json(out, "verify.json", &VerifyReport { passed: checks.len() - failed, failed, checks: &checks })?;
    }
    if failed == 0 {
        Ok(())
    } else {
        let names: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::Verification(names.join("; ")))
    }
}
