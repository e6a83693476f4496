//! `simulate`: sampled measurement records as JSON lines.

use std::fmt::Write as _;
use std::fs;

use rayon::prelude::*;
use retrosmooth::random::stream_rng;
use retrosmooth::trajectory::{sample_joint_record, sample_record, MeasurementRecord, RecordLine};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::ensure_dir;
use crate::scenario::{load, read_scenario, Loaded};
use crate::{resolve_out, with_pool, SimulateArgs};

pub const TRAJECTORY_FILE: &str = "trajectories.jsonl";

/// First line of every trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub scenario: String,
    pub n_trajectories: usize,
    pub steps: usize,
    pub seed: u64,
    pub alice_outcomes: Vec<String>,
    pub bob_outcomes: Option<Vec<String>>,
}

/// Samples `n` records; trajectory `i` draws from its own random stream.
pub fn sample(loaded: &Loaded, n: usize, seed: u64) -> Result<Vec<MeasurementRecord>, CliError> {
    let steps = loaded.scenario.steps;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let rec = if loaded.has_bob {
                let (r, _) = sample_joint_record(&loaded.joint, &loaded.rho0, steps, &mut rng)?;
                MeasurementRecord::from_joint(&loaded.joint, &r)
            } else {
                let (r, _) = sample_record(&loaded.alice, &loaded.rho0, steps, &mut rng)?;
                MeasurementRecord::from_alice(&loaded.alice, &r)
            };
            Ok(rec)
        })
        .collect()
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let loaded = load(read_scenario(&args.scenario)?, true)?;
    let seed = args.common.seed.unwrap_or(loaded.scenario.seed);
    let records = with_pool(args.common.jobs, || sample(&loaded, args.n, seed))??;
    let header = Header {
        scenario: loaded.scenario.name.clone(),
        n_trajectories: args.n,
        steps: loaded.scenario.steps,
        seed,
        alice_outcomes: loaded.alice.outcomes().to_vec(),
        bob_outcomes: loaded.has_bob.then(|| loaded.joint.bob_outcomes().to_vec()),
    };
    let mut text = serde_json::to_string(&header).expect("header serializes");
    text.push('\n');
    for (i, rec) in records.iter().enumerate() {
        for line in rec.to_lines(i) {
            let _ = writeln!(text, "{}", serde_json::to_string(&line).expect("record line serializes"));
        }
    }
    let out = resolve_out(&args.common, loaded.scenario.out_dir.as_deref());
    ensure_dir(&out)?;
    let path = out.join(TRAJECTORY_FILE);
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    println!("wrote {} trajectories of {} steps to {}", args.n, loaded.scenario.steps, path.display());
    Ok(())
}

/// Reads a trajectory file: an optional header line followed by record lines.
pub fn read_records(path: &std::path::Path) -> Result<(Option<Header>, Vec<(usize, MeasurementRecord)>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut header = None;
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        if i == 0 {
            if let Ok(h) = serde_json::from_str::<Header>(raw) {
                header = Some(h);
                continue;
            }
        }
        let de = &mut serde_json::Deserializer::from_str(raw);
        let line: RecordLine = serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::Config(format!("{} line {}, field `{}`: {}", path.display(), i + 1, e.path(), e.inner())))?;
        lines.push(line);
    }
    let records = MeasurementRecord::from_lines(&lines).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((header, records))
}
