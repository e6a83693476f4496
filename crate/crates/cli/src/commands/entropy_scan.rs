//! `entropy-scan`: average smoothed entropies, their bounds and random extension sweeps.

use rand::Rng;
use rayon::prelude::*;
use retrosmooth::entropy::{
    no_universal_quantifier_demo, outcome_probs, random_scenario, sandwich_bound, theorem1_check, ExtensionScenario,
    Povm, SvbReport,
};
use retrosmooth::random::{random_extension, stream_rng};
use retrosmooth::smoothers::{build_custom, build_prior, BranchOptions, PriorKind};
use retrosmooth::trajectory::filter;
use serde::Serialize;

use super::{all_records, labels_of, record_label};
use crate::error::CliError;
use crate::output::{ensure_dir, fmt_float, write_csv, write_json};
use crate::scenario::{load, read_scenario, Loaded};
use crate::{resolve_out, with_pool, EntropyScanArgs};

/// Tolerance on the two-extension example values.
pub const SVB_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub past: String,
    pub past_probability: f64,
    pub prior: PriorKind,
    pub avg_entropy: f64,
    /// `S̄` of the filtered state without extension.
    pub avg_entropy_trivial: f64,
    pub filtered_entropy: f64,
    /// `S(ρ_F) − H(future)`.
    pub lower_bound: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub id: usize,
    pub d_q: usize,
    pub d_a: usize,
    pub effects: usize,
    pub s_trivial: f64,
    pub s_extension: f64,
    pub s_marginal: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ScanReport {
    pub scenario: Option<String>,
    pub rows: Vec<ScanRow>,
    pub theorem1: Vec<SweepRow>,
    pub svb: Option<SvbReport>,
}

impl ScanReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in self.rows.iter().filter(|r| !r.holds) {
            out.push(format!("past {:?} prior {}: entropy bounds violated", r.past, r.prior));
        }
        for r in self.theorem1.iter().filter(|r| !r.holds) {
            out.push(format!("random extension {}: entropy ordering violated", r.id));
        }
        if let Some(svb) = &self.svb {
            if svb.max_error > SVB_TOL || !svb.reversal_holds {
                out.push(format!(
                    "two-extension example: max error {:.3e}, reversal {}",
                    svb.max_error, svb.reversal_holds
                ));
            }
        }
        out
    }
}

fn scan_past(loaded: &Loaded, index: usize, past: &[usize], kinds: &[PriorKind], seed: u64) -> Result<Vec<ScanRow>, CliError> {
    let t = loaded.scenario.smoothing_index;
    let (rho_f, log_p) = filter(&loaded.alice, &loaded.rho0, past)?;
    let (povm, _) = Povm::future_records(&loaded.alice, loaded.scenario.steps - t, loaded.cap)?;
    let opts = BranchOptions { cap: loaded.cap, ..BranchOptions::default() };
    let mut rows = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let prior = if kind == PriorKind::Custom {
            let d_a = loaded.scenario.custom_ancilla_dim;
            let mut rng = stream_rng(seed, index as u64);
            let m = random_extension(&mut rng, &rho_f, d_a, rho_f.dim() * d_a);
            build_custom(m, rho_f.dim(), d_a, &rho_f)?
        } else {
            build_prior(kind, &loaded.joint, &loaded.rho0, past, &opts)?
        };
        let scenario = ExtensionScenario::new(rho_f.clone(), prior, povm.clone())?;
        let chain = theorem1_check(&scenario)?;
        let bound = sandwich_bound(&rho_f, &outcome_probs(&scenario), chain.s_extension)?;
        rows.push(ScanRow {
            past: record_label(&labels_of(&loaded.alice, past)),
            past_probability: log_p.exp(),
            prior: kind,
            avg_entropy: chain.s_extension,
            avg_entropy_trivial: chain.s_trivial,
            filtered_entropy: chain.s_marginal,
            lower_bound: bound.lower,
            lower_margin: chain.lower_margin,
            upper_margin: chain.upper_margin,
            holds: bound.holds && chain.ordering_holds,
        });
    }
    Ok(rows)
}

/// One row per reachable past record and prior kind.
pub fn scan_scenario(loaded: &Loaded, seed: u64) -> Result<Vec<ScanRow>, CliError> {
    let t = loaded.scenario.smoothing_index;
    let pasts: Vec<Vec<usize>> = all_records(loaded.alice.outcomes().len(), t)
        .into_iter()
        .filter(|p| filter(&loaded.alice, &loaded.rho0, p).is_ok())
        .collect();
    let count = pasts.len() as u128;
    if count > loaded.cap as u128 {
        return Err(retrosmooth::Error::EnumerationTooLarge { count, cap: loaded.cap }.into());
    }
    let kinds = &loaded.scenario.prior_kinds;
    let per_past: Vec<Vec<ScanRow>> = pasts
        .par_iter()
        .enumerate()
        .map(|(i, p)| scan_past(loaded, i, p, kinds, seed))
        .collect::<Result<_, _>>()?;
    Ok(per_past.into_iter().flatten().collect())
}

/// Random marginals, extensions and measurements; sample `i` uses random stream `i`.
pub fn theorem1_sweep(n: usize, seed: u64) -> Result<Vec<SweepRow>, CliError> {
    (0..n)
        .into_par_iter()
        .map(|id| {
            let mut rng = stream_rng(seed, id as u64);
            let d_q = rng.random_range(2..=3);
            let d_a = rng.random_range(1..=3);
            let effects = rng.random_range(2..=4);
            let scenario = random_scenario::<f64, _>(&mut rng, d_q, d_a, effects)?;
            let c = theorem1_check(&scenario)?;
            Ok(SweepRow {
                id,
                d_q,
                d_a,
                effects,
                s_trivial: c.s_trivial,
                s_extension: c.s_extension,
                s_marginal: c.s_marginal,
                lower_margin: c.lower_margin,
                upper_margin: c.upper_margin,
                holds: c.ordering_holds,
            })
        })
        .collect()
}

pub fn compute(args: &EntropyScanArgs) -> Result<(ScanReport, Option<String>), CliError> {
    let mut report = ScanReport::default();
    let mut out_dir = None;
    let mut seed = args.common.seed.unwrap_or(0);
    if let Some(path) = &args.scenario {
        let loaded = load(read_scenario(path)?, true)?;
        seed = args.common.seed.unwrap_or(loaded.scenario.seed);
        out_dir = loaded.scenario.out_dir.clone();
        report.scenario = Some(loaded.scenario.name.clone());
        report.rows = with_pool(args.common.jobs, || scan_scenario(&loaded, seed))??;
    }
    if args.theorem1 {
        report.theorem1 = with_pool(args.common.jobs, || theorem1_sweep(args.n, seed))??;
    }
    if args.demo_svb {
        report.svb = Some(no_universal_quantifier_demo()?);
    }
    Ok((report, out_dir))
}

pub fn write_outputs(report: &ScanReport, dir: &std::path::Path) -> Result<(), CliError> {
    ensure_dir(dir)?;
    let b = |x: bool| x.to_string();
    if report.scenario.is_some() {
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.past.clone(),
                    fmt_float(r.past_probability),
                    r.prior.to_string(),
                    fmt_float(r.avg_entropy),
                    fmt_float(r.avg_entropy_trivial),
                    fmt_float(r.filtered_entropy),
                    fmt_float(r.lower_bound),
                    fmt_float(r.lower_margin),
                    fmt_float(r.upper_margin),
                    b(r.holds),
                ]
            })
            .collect();
        let header = [
            "past",
            "past_probability",
            "prior",
            "avg_entropy",
            "avg_entropy_trivial",
            "filtered_entropy",
            "lower_bound",
            "lower_margin",
            "upper_margin",
            "holds",
        ];
        write_csv(dir, "entropy_scan.csv", &header, &rows)?;
    }
    if !report.theorem1.is_empty() {
        let rows: Vec<Vec<String>> = report
            .theorem1
            .iter()
            .map(|r| {
                vec![
                    r.id.to_string(),
                    r.d_q.to_string(),
                    r.d_a.to_string(),
                    r.effects.to_string(),
                    fmt_float(r.s_trivial),
                    fmt_float(r.s_extension),
                    fmt_float(r.s_marginal),
                    fmt_float(r.lower_margin),
                    fmt_float(r.upper_margin),
                    b(r.holds),
                ]
            })
            .collect();
        let header =
            ["id", "d_q", "d_a", "effects", "s_trivial", "s_extension", "s_marginal", "lower_margin", "upper_margin", "holds"];
        write_csv(dir, "theorem1_sweep.csv", &header, &rows)?;
    }
    if let Some(svb) = &report.svb {
        let rows: Vec<Vec<String>> = svb
            .values
            .iter()
            .map(|v| {
                vec![
                    v.extension.clone(),
                    v.povm.clone(),
                    fmt_float(v.avg_entropy),
                    fmt_float(v.expected),
                    fmt_float((v.avg_entropy - v.expected).abs()),
                ]
            })
            .collect();
        write_csv(dir, "svb_demo.csv", &["extension", "povm", "avg_entropy", "expected", "abs_error"], &rows)?;
    }
    write_json(dir, "entropy_scan.json", report)?;
    Ok(())
}

pub fn run(args: &EntropyScanArgs) -> Result<(), CliError> {
    let (report, scenario_out) = compute(args)?;
    let out = resolve_out(&args.common, scenario_out.as_deref());
    write_outputs(&report, &out)?;
    if let Some(name) = &report.scenario {
        let ok = report.rows.iter().filter(|r| r.holds).count();
        println!("scenario {name}: {ok}/{} rows within bounds", report.rows.len());
    }
    if !report.theorem1.is_empty() {
        let ok = report.theorem1.iter().filter(|r| r.holds).count();
        let worst = report.theorem1.iter().map(|r| r.lower_margin.min(r.upper_margin)).fold(f64::INFINITY, f64::min);
        println!("random extensions: {ok}/{} ordered, smallest margin {worst:.3e}", report.theorem1.len());
    }
    if let Some(svb) = &report.svb {
        for v in &svb.values {
            println!("{} / {}: {:.12} (expected {:.12})", v.extension, v.povm, v.avg_entropy, v.expected);
        }
    }
    println!("results written to {}", out.display());
    let failures = report.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join("; ")))
    }
}
