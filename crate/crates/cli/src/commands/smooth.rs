//! `smooth`: generalized smoothed states for each record and prior kind.

use std::collections::BTreeMap;

use rayon::prelude::*;
use retrosmooth::linalg::{entropy_vn, fidelity, purity, trace_distance, trace_norm, Matrix};
use retrosmooth::random::{random_extension, stream_rng};
use retrosmooth::retrodiction::generalized_smooth;
use retrosmooth::smoothers::{build_custom, build_gw_sampled, smooth_record, BranchOptions, PriorKind, SmoothingOutcome};
use retrosmooth::trajectory::{enumerate_records, filter, retrofilter};
use retrosmooth::Error;
use serde::Serialize;

use super::{labels_of, record_label};
use crate::error::CliError;
use crate::output::{ensure_dir, fmt_float, fmt_opt, write_csv, write_json, MatrixJson};
use crate::scenario::{load, read_scenario, Loaded};
use crate::{resolve_out, with_pool, SmoothArgs};

/// Probability-weighted totals must reach one within this tolerance.
pub const TOTAL_PROBABILITY_TOL: f64 = 1e-8;

pub const OK: &str = "ok";
pub const ZERO_PROBABILITY: &str = "zero-probability";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothRow {
    pub record: String,
    pub probability: f64,
    pub prior: PriorKind,
    pub t: usize,
    pub status: String,
    pub fidelity_to_filtered: Option<f64>,
    pub trace_distance_to_filtered: Option<f64>,
    pub purity: Option<f64>,
    pub entropy: Option<f64>,
    pub dropped_mass: Option<f64>,
    /// Set when the prior was estimated from sampled Bob records.
    pub approximate: bool,
    pub filtered: Option<MatrixJson>,
    pub smoothed: Option<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorSummary {
    pub prior: PriorKind,
    pub records: usize,
    pub zero_probability: usize,
    /// Records that failed for a reason other than zero probability.
    pub failed: usize,
    pub total_probability: f64,
    /// Largest trace norm of `Σ p ρ_S − ρ_F` over past records, after conditioning on the past.
    pub averaging_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothReport {
    pub scenario: String,
    pub mode: String,
    pub smoothing_index: usize,
    pub priors: Vec<PriorKind>,
    pub summary: Vec<PriorSummary>,
    pub rows: Vec<SmoothRow>,
}

/// A record to smooth, with its probability under the scenario.
#[derive(Debug, Clone)]
pub struct Item {
    pub index: usize,
    pub record: Vec<usize>,
    pub probability: f64,
}

/// Smooths one record; the flag marks a gw prior estimated by sampling.
fn smooth_one(
    loaded: &Loaded,
    item: &Item,
    kind: PriorKind,
    seed: u64,
    opts: &BranchOptions,
) -> Result<(SmoothingOutcome<f64>, bool), Error> {
    let t = loaded.scenario.smoothing_index;
    if kind != PriorKind::Custom {
        match smooth_record(kind, &loaded.joint, &loaded.rho0, &item.record, t, opts) {
            Err(Error::EnumerationTooLarge { .. }) if kind == PriorKind::Gw && loaded.scenario.gw_samples.is_some() => {}
            other => return other.map(|o| (o, false)),
        }
    }
    if t > item.record.len() {
        return Err(Error::InvalidRecord(format!("smoothing index {t} beyond record length {}", item.record.len())));
    }
    let (past, future) = item.record.split_at(t);
    let (filtered, _) = filter(&loaded.alice, &loaded.rho0, past)?;
    let effect = retrofilter(&loaded.alice, future)?;
    let mut rng = stream_rng(seed, item.index as u64);
    let (prior, approximate) = if kind == PriorKind::Gw {
        let n = loaded.scenario.gw_samples.unwrap_or_default();
        (build_gw_sampled(&loaded.joint, &loaded.rho0, past, n, &mut rng)?.prior, true)
    } else {
        let d_a = loaded.scenario.custom_ancilla_dim;
        let m = random_extension(&mut rng, &filtered, d_a, filtered.dim() * d_a);
        (build_custom(m, filtered.dim(), d_a, &filtered)?, false)
    };
    let smoothed = generalized_smooth(&prior, &effect)?;
    Ok((SmoothingOutcome { filtered, effect, prior, smoothed }, approximate))
}

fn row(loaded: &Loaded, item: &Item, kind: PriorKind, seed: u64, opts: &BranchOptions) -> SmoothRow {
    let mut r = SmoothRow {
        record: record_label(&labels_of(&loaded.alice, &item.record)),
        probability: item.probability,
        prior: kind,
        t: loaded.scenario.smoothing_index,
        status: OK.into(),
        fidelity_to_filtered: None,
        trace_distance_to_filtered: None,
        purity: None,
        entropy: None,
        dropped_mass: None,
        approximate: false,
        filtered: None,
        smoothed: None,
    };
    match smooth_one(loaded, item, kind, seed, opts) {
        Ok((o, approximate)) => {
            r.approximate = approximate;
            r.fidelity_to_filtered = Some(fidelity(&o.smoothed, &o.filtered));
            r.trace_distance_to_filtered = Some(trace_distance(o.smoothed.matrix(), o.filtered.matrix()));
            r.purity = Some(purity(&o.smoothed));
            r.entropy = Some(entropy_vn(&o.smoothed));
            r.dropped_mass = Some(o.prior.dropped_mass());
            r.filtered = Some(MatrixJson::from_matrix(o.filtered.matrix()));
            r.smoothed = Some(MatrixJson::from_matrix(o.smoothed.matrix()));
        }
        Err(Error::ZeroProbabilityRecord) => r.status = ZERO_PROBABILITY.into(),
        Err(e) => r.status = format!("error: {e}"),
    }
    r
}

fn summarize(loaded: &Loaded, kinds: &[PriorKind], rows: &[SmoothRow], enumerate: bool) -> Result<Vec<PriorSummary>, CliError> {
    let t = loaded.scenario.smoothing_index;
    let mut out = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let mine: Vec<&SmoothRow> = rows.iter().filter(|r| r.prior == kind).collect();
        let zero_probability = mine.iter().filter(|r| r.status == ZERO_PROBABILITY).count();
        let failed = mine.iter().filter(|r| r.status != OK && r.status != ZERO_PROBABILITY).count();
        let total_probability = mine.iter().map(|r| r.probability).sum();
        let averaging_residual = if enumerate {
            let mut groups: BTreeMap<Vec<String>, (f64, Matrix<f64>)> = BTreeMap::new();
            for r in &mine {
                let Some(s) = &r.smoothed else { continue };
                let past: Vec<String> = r.record.split(' ').filter(|s| !s.is_empty()).take(t).map(String::from).collect();
                let m = Matrix::from_parts(&s.real, Some(&s.imag))?;
                let entry = groups.entry(past).or_insert_with(|| (0.0, Matrix::zeros(m.rows(), m.cols())));
                entry.0 += r.probability;
                entry.1 += &m.scale(r.probability);
            }
            let mut worst = 0.0f64;
            for (past, (p, sum)) in groups {
                if p <= 0.0 {
                    continue;
                }
                let idx: Vec<usize> =
                    past.iter().map(|l| loaded.alice.outcome_index(l)).collect::<Result<_, _>>()?;
                let (rho_f, _) = filter(&loaded.alice, &loaded.rho0, &idx)?;
                worst = worst.max(trace_norm(&(&sum.scale(1.0 / p) - rho_f.matrix())));
            }
            Some(worst)
        } else {
            None
        };
        out.push(PriorSummary { prior: kind, records: mine.len(), zero_probability, failed, total_probability, averaging_residual });
    }
    Ok(out)
}

/// Smooths every item under every prior kind, in record-major order.
pub fn compute(
    loaded: &Loaded,
    items: &[Item],
    kinds: &[PriorKind],
    seed: u64,
    enumerate: bool,
) -> Result<SmoothReport, CliError> {
    let opts = BranchOptions { cap: loaded.cap, ..BranchOptions::default() };
    let work: Vec<(&Item, PriorKind)> = items.iter().flat_map(|it| kinds.iter().map(move |&k| (it, k))).collect();
    let rows: Vec<SmoothRow> = work.par_iter().map(|&(it, k)| row(loaded, it, k, seed, &opts)).collect();
    let summary = summarize(loaded, kinds, &rows, enumerate)?;
    Ok(SmoothReport {
        scenario: loaded.scenario.name.clone(),
        mode: if enumerate { "enumerate" } else { "records" }.into(),
        smoothing_index: loaded.scenario.smoothing_index,
        priors: kinds.to_vec(),
        summary,
        rows,
    })
}

/// Every Alice record of the scenario's length with its probability.
pub fn enumerated_items(loaded: &Loaded) -> Result<Vec<Item>, CliError> {
    let recs = enumerate_records(&loaded.alice, &loaded.rho0, loaded.scenario.steps, loaded.cap)?;
    Ok(recs
        .into_iter()
        .enumerate()
        .map(|(index, (record, probability))| Item { index, record, probability })
        .collect())
}

fn file_items(loaded: &Loaded, path: &std::path::Path) -> Result<Vec<Item>, CliError> {
    let (_, records) = super::simulate::read_records(path)?;
    records
        .into_iter()
        .enumerate()
        .map(|(index, (traj, rec))| {
            let record = loaded
                .alice
                .encode(&rec.alice)
                .map_err(|e| CliError::Config(format!("{}: trajectory {traj}: {e}", path.display())))?;
            let probability = match filter(&loaded.alice, &loaded.rho0, &record) {
                Ok((_, log_p)) => log_p.exp(),
                Err(Error::ZeroProbabilityRecord) => 0.0,
                Err(e) => return Err(e.into()),
            };
            Ok(Item { index, record, probability })
        })
        .collect()
}

pub fn write_outputs(report: &SmoothReport, dir: &std::path::Path) -> Result<(), CliError> {
    ensure_dir(dir)?;
    let header = [
        "record",
        "probability",
        "prior",
        "t",
        "status",
        "fidelity_to_filtered",
        "trace_distance_to_filtered",
        "purity",
        "entropy",
        "dropped_mass",
        "approximate",
    ];
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.record.clone(),
                fmt_float(r.probability),
                r.prior.to_string(),
                r.t.to_string(),
                r.status.clone(),
                fmt_opt(r.fidelity_to_filtered),
                fmt_opt(r.trace_distance_to_filtered),
                fmt_opt(r.purity),
                fmt_opt(r.entropy),
                fmt_opt(r.dropped_mass),
                r.approximate.to_string(),
            ]
        })
        .collect();
    write_csv(dir, "smoothed.csv", &header, &rows)?;
    let summary: Vec<Vec<String>> = report
        .summary
        .iter()
        .map(|s| {
            vec![
                s.prior.to_string(),
                s.records.to_string(),
                s.zero_probability.to_string(),
                s.failed.to_string(),
                fmt_float(s.total_probability),
                fmt_opt(s.averaging_residual),
            ]
        })
        .collect();
    write_csv(dir, "smoothed_summary.csv", &["prior", "records", "zero_probability", "failed", "total_probability", "averaging_residual"], &summary)?;
    write_json(dir, "smoothed.json", report)?;
    Ok(())
}

pub fn run(args: &SmoothArgs) -> Result<(), CliError> {
    let loaded = load(read_scenario(&args.scenario)?, true)?;
    let kinds = args.prior.clone().unwrap_or_else(|| loaded.scenario.prior_kinds.clone());
    if kinds.is_empty() {
        return Err(CliError::Config("no prior kinds selected".into()));
    }
    let seed = args.common.seed.unwrap_or(loaded.scenario.seed);
    let items = match &args.records {
        Some(path) => file_items(&loaded, path)?,
        None => enumerated_items(&loaded)?,
    };
    let report = with_pool(args.common.jobs, || compute(&loaded, &items, &kinds, seed, args.enumerate))??;
    let out = resolve_out(&args.common, loaded.scenario.out_dir.as_deref());
    write_outputs(&report, &out)?;
    for s in &report.summary {
        println!(
            "{:<10} records {:>6}  zero-probability {:>4}  failed {:>4}  total probability {}  averaging residual {}",
            s.prior.as_str(),
            s.records,
            s.zero_probability,
            s.failed,
            fmt_float(s.total_probability),
            s.averaging_residual.map_or("n/a".into(), |r| format!("{r:.3e}")),
        );
    }
    if args.enumerate {
        for s in &report.summary {
            if (s.total_probability - 1.0).abs() > TOTAL_PROBABILITY_TOL {
                return Err(CliError::Verification(format!(
                    "enumerated probabilities for {} sum to {}",
                    s.prior, s.total_probability
                )));
            }
        }
    }
    println!("wrote smoothed.csv, smoothed_summary.csv and smoothed.json to {}", out.display());
    Ok(())
}

