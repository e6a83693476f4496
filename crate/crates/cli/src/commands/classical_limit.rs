//! `classical-limit`: diagonal scenarios against the classical forward-backward smoother.

use rayon::prelude::*;
use retrosmooth::classical::{classical_smooth, ClassicalModel, ClassicalState};
use retrosmooth::retrodiction::generalized_smooth;
use retrosmooth::smoothers::{build_prior, BranchOptions, PriorKind};
use retrosmooth::trajectory::retrofilter;
use retrosmooth::Error;
use serde::Serialize;

use super::{all_records, labels_of, record_label};
use crate::error::CliError;
use crate::output::{ensure_dir, fmt_float, write_csv, write_json};
use crate::scenario::{load, read_scenario, Loaded};
use crate::{resolve_out, with_pool, ClassicalLimitArgs};

/// Largest allowed `|diag(ρ_S) − ℘_S|`.
pub const CLASSICAL_TOL: f64 = 1e-9;

/// Prior kinds compared against the classical smoother.
pub const COMPARED: [PriorKind; 2] = [PriorKind::Pf, PriorKind::GwVariant];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRow {
    pub record: String,
    pub t: usize,
    pub prior: PriorKind,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub scenario: String,
    pub compared: usize,
    pub skipped_zero_probability: usize,
    pub max_residual: f64,
    pub passed: bool,
    pub rows: Vec<LimitRow>,
}

/// The hidden-Markov model and prior distribution behind a diagonal scenario.
pub fn classical_counterpart(loaded: &Loaded) -> Result<(ClassicalModel<f64>, ClassicalState<f64>), CliError> {
    let model = match &loaded.classical {
        Some(m) => m.clone(),
        None => loaded.alice.classical_model()?,
    };
    let rho = loaded.rho0.matrix();
    let n = rho.rows();
    for i in 0..n {
        for j in 0..n {
            if i != j && rho[(i, j)].norm() > CLASSICAL_TOL {
                return Err(Error::NotClassicalLimit("initial state has off-diagonal elements".into()).into());
            }
        }
    }
    let prior = ClassicalState::new((0..n).map(|i| rho[(i, i)].re).collect())?;
    Ok((model, prior))
}

pub fn compute(loaded: &Loaded) -> Result<LimitReport, CliError> {
    if !loaded.scenario.diagonal {
        return Err(CliError::Config(format!(
            "scenario {:?} is not marked `diagonal`",
            loaded.scenario.name
        )));
    }
    let (model, prior) = classical_counterpart(loaded)?;
    let opts = BranchOptions { cap: loaded.cap, ..BranchOptions::default() };
    let steps = loaded.scenario.steps;
    let n_out = loaded.alice.outcomes().len();
    let count = (n_out as u128).checked_pow(steps as u32).unwrap_or(u128::MAX);
    if count > loaded.cap as u128 {
        return Err(Error::EnumerationTooLarge { count, cap: loaded.cap }.into());
    }
    let records = all_records(n_out, steps);
    let per_record: Vec<(Vec<LimitRow>, usize)> = records
        .par_iter()
        .map(|record| {
            let mut rows = Vec::new();
            let mut skipped = 0;
            for t in 0..=steps {
                let (past, future) = record.split_at(t);
                let expected = match classical_smooth(&model, &prior, past, future) {
                    Ok(s) => s,
                    Err(Error::ZeroProbabilityRecord) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let effect = retrofilter(&loaded.alice, future)?;
                for kind in COMPARED {
                    let built = build_prior(kind, &loaded.joint, &loaded.rho0, past, &opts)?;
                    let smoothed = generalized_smooth(&built, &effect)?;
                    let diff = expected
                        .probs()
                        .iter()
                        .enumerate()
                        .map(|(x, &p)| (smoothed[(x, x)].re - p).abs())
                        .fold(0.0, f64::max);
                    rows.push(LimitRow {
                        record: record_label(&labels_of(&loaded.alice, record)),
                        t,
                        prior: kind,
                        max_abs_diff: diff,
                    });
                }
            }
            Ok((rows, skipped))
        })
        .collect::<Result<_, Error>>()?;
    let skipped_zero_probability = per_record.iter().map(|(_, s)| s).sum();
    let rows: Vec<LimitRow> = per_record.into_iter().flat_map(|(r, _)| r).collect();
    let max_residual = rows.iter().map(|r| r.max_abs_diff).fold(0.0, f64::max);
    Ok(LimitReport {
        scenario: loaded.scenario.name.clone(),
        compared: rows.len(),
        skipped_zero_probability,
        max_residual,
        passed: max_residual <= CLASSICAL_TOL,
        rows,
    })
}

pub fn run(args: &ClassicalLimitArgs) -> Result<(), CliError> {
    let loaded = load(read_scenario(&args.scenario)?, true)?;
    let report = with_pool(args.common.jobs, || compute(&loaded))??;
    let out = resolve_out(&args.common, loaded.scenario.out_dir.as_deref());
    ensure_dir(&out)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![r.record.clone(), r.t.to_string(), r.prior.to_string(), fmt_float(r.max_abs_diff)])
        .collect();
    write_csv(&out, "classical_limit.csv", &["record", "t", "prior", "max_abs_diff"], &rows)?;
    write_json(&out, "classical_limit.json", &report)?;
    println!(
        "{}: {} comparisons, max |diag(rho_S) - classical| = {:.3e}",
        report.scenario, report.compared, report.max_residual
    );
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "classical residual {:.3e} exceeds {CLASSICAL_TOL:.0e}",
            report.max_residual
        )))
    }
}
