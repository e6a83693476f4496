use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use retrosmooth::linalg::{entropy_vn, DensityOperator, Matrix};
use retrosmooth::trajectory::{discretize, demo_driven_damped_qubit, enumerate_records};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_retrosmooth"));
    c.env_remove("RETROSMOOTH_CAP");
    c
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn scenario(name: &str) -> String {
    scenarios().join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn out_dir(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

fn read_json(dir: &str, file: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(Path::new(dir).join(file)).unwrap()).unwrap()
}

fn matrix(v: &Value) -> Matrix<f64> {
    let rows = |key: &str| -> Vec<Vec<f64>> {
        v[key].as_array().unwrap().iter().map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()).collect()
    };
    Matrix::from_parts(&rows("real"), Some(&rows("imag"))).unwrap()
}

fn smooth_enumerate(dir: &TempDir, name: &str, scenario_path: &str, priors: &str) -> Value {
    let out = out_dir(dir, name);
    let o = run(&["smooth", "--scenario", scenario_path, "--enumerate", "--prior", priors, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    read_json(&out, "smoothed.json")
}

fn summary<'a>(report: &'a Value, prior: &str) -> &'a Value {
    report["summary"].as_array().unwrap().iter().find(|s| s["prior"] == prior).unwrap()
}

#[test]
fn simulate_is_deterministic_across_runs_and_worker_counts() {
    let dir = TempDir::new().unwrap();
    let mut files = Vec::new();
    for (i, jobs) in ["1", "4", "4"].iter().enumerate() {
        let out = out_dir(&dir, &format!("run{i}"));
        let o = run(&[
            "simulate",
            "--scenario",
            &scenario("split_detection.json"),
            "--n",
            "50",
            "--seed",
            "9",
            "--jobs",
            jobs,
            "--out",
            &out,
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        files.push(fs::read(Path::new(&out).join("trajectories.jsonl")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[1], files[2]);
    let other = out_dir(&dir, "other");
    run(&["simulate", "--scenario", &scenario("split_detection.json"), "--n", "50", "--seed", "10", "--out", &other]);
    assert_ne!(files[0], fs::read(Path::new(&other).join("trajectories.jsonl")).unwrap());
}

#[test]
fn simulate_zero_trajectories_writes_only_the_header() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "empty");
    let o = run(&["simulate", "--scenario", &scenario("driven_damped_qubit.json"), "--n", "0", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(Path::new(&out).join("trajectories.jsonl")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1);
    let header: Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(header["n_trajectories"], 0);
    assert_eq!(header["scenario"], "driven-damped-qubit");
}

#[test]
fn single_outcome_instrument_gives_identical_records() {
    let dir = TempDir::new().unwrap();
    let path = write(
        &dir,
        "unitary.json",
        r#"{"name": "rotation", "rho0": "ground", "steps": 3, "smoothing_index": 1,
            "system": {"instrument": {"outcomes": ["only"],
                "kraus": [[{"real": [[0.0, 1.0], [1.0, 0.0]]}]]}}}"#,
    );
    let out = out_dir(&dir, "sim");
    let o = run(&["simulate", "--scenario", &path, "--n", "20", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(Path::new(&out).join("trajectories.jsonl")).unwrap();
    let records: Vec<Value> = text.lines().skip(1).map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 60);
    assert!(records.iter().all(|r| r["alice"] == "only" && r["bob"].is_null()));
}

#[test]
fn simulated_frequencies_match_enumerated_probabilities() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "sim");
    let n = 20_000usize;
    let o = run(&["simulate", "--scenario", &scenario("driven_damped_qubit.json"), "--n", &n.to_string(), "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(Path::new(&out).join("trajectories.jsonl")).unwrap();
    let mut by_traj: HashMap<u64, String> = HashMap::new();
    for line in text.lines().skip(1) {
        let v: Value = serde_json::from_str(line).unwrap();
        by_traj.entry(v["trajectory"].as_u64().unwrap()).or_default().push_str(v["alice"].as_str().unwrap());
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for rec in by_traj.values() {
        *counts.entry(rec.clone()).or_default() += 1;
    }
    let joint = discretize(&demo_driven_damped_qubit(1.0, 1.0, 0.5, 0.02)).unwrap();
    let alice = joint.alice_marginal();
    let exact = enumerate_records(&alice, &DensityOperator::maximally_mixed(2), 4, 1_000_000).unwrap();
    for (record, p) in exact {
        let key: String = record.iter().map(|&y| alice.outcomes()[y].as_str()).collect();
        let freq = *counts.get(&key).unwrap_or(&0) as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        if p == 0.0 {
            assert_eq!(freq, 0.0, "record {key}");
        } else {
            assert!((freq - p).abs() <= 3.0 * sigma, "record {key}: frequency {freq} vs probability {p}");
        }
    }
}

#[test]
fn smooth_outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let mut seen = Vec::new();
    for (i, jobs) in ["1", "3"].iter().enumerate() {
        let out = out_dir(&dir, &format!("s{i}"));
        let o = run(&[
            "smooth",
            "--scenario",
            &scenario("weak_measurement.json"),
            "--enumerate",
            "--jobs",
            jobs,
            "--out",
            &out,
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let files: Vec<Vec<u8>> = ["smoothed.csv", "smoothed.json", "smoothed_summary.csv"]
            .iter()
            .map(|f| fs::read(Path::new(&out).join(f)).unwrap())
            .collect();
        seen.push(files);
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn clhs_smoothing_returns_the_filtered_state() {
    let dir = TempDir::new().unwrap();
    let report = smooth_enumerate(&dir, "clhs", &scenario("driven_damped_qubit.json"), "clhs");
    assert!(summary(&report, "clhs")["averaging_residual"].as_f64().unwrap() < 1e-10);
    for row in report["rows"].as_array().unwrap() {
        if row["status"] == "ok" {
            let s = matrix(&row["smoothed"]);
            let f = matrix(&row["filtered"]);
            assert!((&s - &f).max_abs() < 1e-10, "record {}", row["record"]);
        }
    }
}

#[test]
fn pf_smoothing_averages_to_the_filtered_state() {
    let dir = TempDir::new().unwrap();
    for file in ["driven_damped_qubit.json", "split_detection.json", "lindblad_qubit.json"] {
        let report = smooth_enumerate(&dir, file, &scenario(file), "pf,gw,gw-variant,pf-variant");
        for prior in ["pf", "gw", "gw-variant", "pf-variant"] {
            let s = summary(&report, prior);
            assert!(s["averaging_residual"].as_f64().unwrap() < 1e-8, "{file} {prior}");
            assert!((s["total_probability"].as_f64().unwrap() - 1.0).abs() < 1e-8, "{file} {prior}");
            assert_eq!(s["failed"], 0, "{file} {prior}");
        }
    }
}

#[test]
fn gw_and_gw_variant_agree_for_a_pure_initial_state() {
    let dir = TempDir::new().unwrap();
    let path = write(
        &dir,
        "pure.json",
        r#"{"name": "pure-demo", "rho0": "excited", "steps": 4, "smoothing_index": 2,
            "system": {"driven_damped_qubit": {"omega": 1.0, "kappa": 1.0, "eta": 0.5, "dt": 0.02}}}"#,
    );
    let report = smooth_enumerate(&dir, "pure", &path, "gw,gw-variant");
    let rows = report["rows"].as_array().unwrap();
    let mut compared = 0;
    for pair in rows.chunks(2) {
        assert_eq!(pair[0]["record"], pair[1]["record"]);
        if pair[0]["status"] == "ok" {
            assert!((&matrix(&pair[0]["smoothed"]) - &matrix(&pair[1]["smoothed"])).max_abs() < 1e-10);
            compared += 1;
        }
    }
    assert!(compared > 0);
}

#[test]
fn emitted_matrices_pass_the_density_operator_check() {
    let dir = TempDir::new().unwrap();
    let report = smooth_enumerate(&dir, "all", &scenario("weak_measurement.json"), "pf,gw,gw-variant,pf-variant,clhs,custom");
    let mut count = 0;
    for row in report["rows"].as_array().unwrap() {
        for key in ["filtered", "smoothed"] {
            let m = matrix(&row[key]);
            assert_eq!(row[key]["dim"], 2);
            DensityOperator::new(m).unwrap();
            count += 1;
        }
    }
    assert_eq!(count, 8 * 6 * 2);
}

#[test]
fn zero_probability_records_are_reported_and_the_run_continues() {
    let dir = TempDir::new().unwrap();
    let records = write(
        &dir,
        "records.jsonl",
        concat!(
            "{\"trajectory\":0,\"step\":0,\"alice\":\"click\",\"bob\":null}\n",
            "{\"trajectory\":0,\"step\":1,\"alice\":\"click\",\"bob\":null}\n",
            "{\"trajectory\":0,\"step\":2,\"alice\":\"none\",\"bob\":null}\n",
            "{\"trajectory\":0,\"step\":3,\"alice\":\"none\",\"bob\":null}\n",
            "{\"trajectory\":1,\"step\":0,\"alice\":\"none\",\"bob\":null}\n",
            "{\"trajectory\":1,\"step\":1,\"alice\":\"click\",\"bob\":null}\n",
            "{\"trajectory\":1,\"step\":2,\"alice\":\"none\",\"bob\":null}\n",
            "{\"trajectory\":1,\"step\":3,\"alice\":\"none\",\"bob\":null}\n",
        ),
    );
    let out = out_dir(&dir, "out");
    let o = run(&["smooth", "--scenario", &scenario("split_detection.json"), "--records", &records, "--prior", "pf,gw", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_json(&out, "smoothed.json");
    let statuses: Vec<&str> = report["rows"].as_array().unwrap().iter().map(|r| r["status"].as_str().unwrap()).collect();
    assert_eq!(statuses, ["zero-probability", "zero-probability", "ok", "ok"]);
    assert!(report["summary"][0]["averaging_residual"].is_null());
}

#[test]
fn smooth_reads_files_written_by_simulate() {
    let dir = TempDir::new().unwrap();
    let sim = out_dir(&dir, "sim");
    let o = run(&["simulate", "--scenario", &scenario("driven_damped_qubit.json"), "--n", "5", "--out", &sim]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = out_dir(&dir, "out");
    let records = Path::new(&sim).join("trajectories.jsonl").display().to_string();
    let o = run(&["smooth", "--scenario", &scenario("driven_damped_qubit.json"), "--records", &records, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_json(&out, "smoothed.json");
    assert_eq!(report["rows"].as_array().unwrap().len(), 25);
    assert!(report["rows"].as_array().unwrap().iter().all(|r| r["status"] == "ok"));
}

#[test]
fn demo_svb_reports_the_four_values() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "svb");
    let o = run(&["entropy-scan", "--demo-svb", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_json(&out, "entropy_scan.json");
    let ln2 = std::f64::consts::LN_2;
    let expected = [("gamma1", "Z", 0.0), ("gamma1", "X", ln2), ("gamma2", "Z", ln2), ("gamma2", "X", 0.0)];
    let values = report["svb"]["values"].as_array().unwrap();
    assert_eq!(values.len(), 4);
    for (v, (ext, povm, s)) in values.iter().zip(expected) {
        assert_eq!(v["extension"], ext);
        assert_eq!(v["povm"], povm);
        assert!((v["avg_entropy"].as_f64().unwrap() - s).abs() < 1e-10);
    }
    let csv = fs::read_to_string(Path::new(&out).join("svb_demo.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn entropy_scan_orders_priors_within_the_bounds() {
    let dir = TempDir::new().unwrap();
    let path = write(
        &dir,
        "scan.json",
        r#"{"name": "scan", "rho0": "maximally_mixed", "steps": 3, "smoothing_index": 1, "seed": 5,
            "prior_kinds": ["pf", "clhs", "custom", "gw"], "custom_ancilla_dim": 3,
            "system": {"driven_damped_qubit": {"omega": 1.0, "kappa": 1.0, "eta": 0.5, "dt": 0.02}}}"#,
    );
    let out = out_dir(&dir, "scan");
    let o = run(&["entropy-scan", "--scenario", &path, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_json(&out, "entropy_scan.json");
    let rows = report["rows"].as_array().unwrap();
    let mut by_past: HashMap<String, HashMap<String, f64>> = HashMap::new();
    for r in rows {
        assert_eq!(r["holds"], true);
        by_past
            .entry(r["past"].as_str().unwrap().into())
            .or_default()
            .insert(r["prior"].as_str().unwrap().into(), r["avg_entropy"].as_f64().unwrap());
        if r["prior"] == "clhs" {
            assert!((r["avg_entropy"].as_f64().unwrap() - r["filtered_entropy"].as_f64().unwrap()).abs() < 1e-10);
        }
    }
    assert_eq!(by_past.len(), 2);
    for priors in by_past.values() {
        assert!(priors["pf"] <= priors["custom"] + 1e-12);
        assert!(priors["pf"] <= priors["gw"] + 1e-12);
        assert!(priors["custom"] <= priors["clhs"] + 1e-12);
    }
}

#[test]
fn theorem1_sweep_is_deterministic_and_ordered() {
    let dir = TempDir::new().unwrap();
    let mut files = Vec::new();
    for i in 0..2 {
        let out = out_dir(&dir, &format!("t{i}"));
        let o = run(&["entropy-scan", "--theorem1", "--n", "40", "--seed", "3", "--out", &out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        files.push(fs::read(Path::new(&out).join("theorem1_sweep.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 41);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn classical_limit_matches_the_classical_smoother() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "cl");
    let o = run(&["classical-limit", "--scenario", &scenario("two_state_chain.json"), "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_json(&out, "classical_limit.json");
    assert!(report["max_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(report["compared"], 16 * 5 * 2);
}

#[test]
fn identity_dynamics_returns_the_prior() {
    let dir = TempDir::new().unwrap();
    let path = write(
        &dir,
        "identity.json",
        r#"{"name": "identity", "rho0": {"real": [[0.3, 0.0], [0.0, 0.7]]}, "steps": 3, "smoothing_index": 1,
            "diagonal": true, "prior_kinds": ["pf", "gw-variant"],
            "system": {"classical": {"transition": [[1.0, 0.0], [0.0, 1.0]],
                "likelihood": [[0.5, 0.5], [0.5, 0.5]], "outcomes": ["a", "b"]}}}"#,
    );
    let out = out_dir(&dir, "cl");
    let o = run(&["classical-limit", "--scenario", &path, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = smooth_enumerate(&dir, "sm", &path, "pf,gw-variant");
    for row in report["rows"].as_array().unwrap() {
        let s = matrix(&row["smoothed"]);
        assert!((s[(0, 0)].re - 0.3).abs() < 1e-12 && (s[(1, 1)].re - 0.7).abs() < 1e-12);
    }
}

#[test]
fn delta_prior_with_noiseless_readout_stays_a_delta() {
    let dir = TempDir::new().unwrap();
    let path = write(
        &dir,
        "delta.json",
        r#"{"name": "delta", "rho0": "excited", "steps": 3, "smoothing_index": 2, "diagonal": true,
            "prior_kinds": ["pf", "gw-variant"],
            "system": {"classical": {"transition": [[1.0, 0.0], [0.0, 1.0]],
                "likelihood": [[1.0, 0.0], [0.0, 1.0]], "outcomes": ["0", "1"]}}}"#,
    );
    let out = out_dir(&dir, "cl");
    let o = run(&["classical-limit", "--scenario", &path, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = smooth_enumerate(&dir, "sm", &path, "pf,gw-variant");
    for row in report["rows"].as_array().unwrap().iter().filter(|r| r["status"] == "ok") {
        let s = matrix(&row["smoothed"]);
        assert_eq!(row["record"], "1 1 1");
        assert!((s[(1, 1)].re - 1.0).abs() < 1e-12);
    }
}

#[test]
fn classical_limit_rejects_unmarked_or_coherent_scenarios() {
    let dir = TempDir::new().unwrap();
    let o = run(&["classical-limit", "--scenario", &scenario("weak_measurement.json"), "--out", &out_dir(&dir, "a")]);
    assert_eq!(code(&o), 2);
    let path = write(
        &dir,
        "hadamard.json",
        r#"{"name": "hadamard", "rho0": "ground", "steps": 2, "smoothing_index": 1, "diagonal": true,
            "system": {"instrument": {"outcomes": ["h"],
                "kraus": [[{"real": [[0.7071067811865476, 0.7071067811865476], [0.7071067811865476, -0.7071067811865476]]}]]}}}"#,
    );
    let o = run(&["classical-limit", "--scenario", &path, "--out", &out_dir(&dir, "b")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("coherence"), "{}", stderr(&o));
}

#[test]
fn verify_passes_on_a_fresh_checkout() {
    let o = run(&["verify"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    for name in ["density operators", "averaging recovers filtered state, pf", "classical limit", "two-extension example"] {
        assert!(text.contains(name), "missing check {name}");
    }
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 14);
}

#[test]
fn verify_names_the_scenario_with_an_injected_completeness_defect() {
    let o = run(&["verify", "--scenario", &scenario("defective_instrument.json")]);
    assert_eq!(code(&o), 1);
    let fail: Vec<String> = stdout(&o).lines().filter(|l| l.starts_with("FAIL")).map(String::from).collect();
    assert_eq!(fail.len(), 1, "{fail:?}");
    assert!(fail[0].contains("instrument completeness [defective-weak-measurement]"));
    assert!(fail[0].contains("1.000e-3"));
}

#[test]
fn verify_accepts_complete_user_scenarios() {
    let o = run(&["verify", "--scenario", &scenario("split_detection.json"), "--scenario", &scenario("weak_measurement.json")]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("[split-detection]"));
}

#[test]
fn defective_instruments_are_config_errors_outside_verify() {
    let o = run(&["smooth", "--scenario", &scenario("defective_instrument.json"), "--enumerate", "--out", "/nonexistent"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("incomplete"));
}

#[test]
fn parse_errors_report_line_and_field() {
    let dir = TempDir::new().unwrap();
    let path = write(
        &dir,
        "bad.json",
        "{\n  \"name\": \"bad\",\n  \"rho0\": \"ground\",\n  \"steps\": \"four\",\n  \"smoothing_index\": 0,\n  \"system\": {\"driven_damped_qubit\": {\"omega\": 1, \"kappa\": 1, \"eta\": 0.5, \"dt\": 0.02}}\n}\n",
    );
    let o = run(&["simulate", "--scenario", &path]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("line 4") && err.contains("`steps`"), "{err}");

    let path = write(&dir, "state.json", r#"{"name": "x", "rho0": "sideways", "steps": 1, "smoothing_index": 0,
        "system": {"driven_damped_qubit": {"omega": 1, "kappa": 1, "eta": 0.5, "dt": 0.02}}}"#);
    let o = run(&["simulate", "--scenario", &path]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("rho0"));
}

#[test]
fn cap_environment_variable_overrides_the_scenario() {
    let o = bin()
        .args(["smooth", "--scenario", &scenario("driven_damped_qubit.json"), "--enumerate", "--out", "/nonexistent"])
        .env("RETROSMOOTH_CAP", "4")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cap 4"), "{}", stderr(&o));
}

#[test]
fn unknown_prior_kind_is_a_usage_error() {
    let o = run(&["smooth", "--scenario", &scenario("driven_damped_qubit.json"), "--enumerate", "--prior", "pf,nope"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn filtered_entropy_column_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let report = smooth_enumerate(&dir, "ent", &scenario("split_detection.json"), "pf");
    for row in report["rows"].as_array().unwrap().iter().filter(|r| r["status"] == "ok") {
        let rho = DensityOperator::new(matrix(&row["smoothed"])).unwrap();
        assert!((entropy_vn(&rho) - row["entropy"].as_f64().unwrap()).abs() < 1e-14);
    }
}

#[test]
fn gw_falls_back_to_sampled_bob_records_beyond_the_cap() {
    let dir = TempDir::new().unwrap();
    let base = r#""rho0": "maximally_mixed", "steps": 4, "smoothing_index": 4, "seed": 2,
        "system": {"driven_damped_qubit": {"omega": 1.0, "kappa": 1.0, "eta": 0.5, "dt": 0.02}}"#;
    let sampled_path = write(&dir, "sampled.json", &format!(r#"{{"name": "sampled", "enumeration_cap": 4, "gw_samples": 4000, {base}}}"#));
    let capped_path = write(&dir, "capped.json", &format!(r#"{{"name": "capped", "enumeration_cap": 4, {base}}}"#));
    let exact_path = write(&dir, "exact.json", &format!(r#"{{"name": "exact", {base}}}"#));
    let records = write(
        &dir,
        "records.jsonl",
        concat!(
            "{\"trajectory\":0,\"step\":0,\"alice\":\"0\",\"bob\":null}\n",
            "{\"trajectory\":0,\"step\":1,\"alice\":\"0\",\"bob\":null}\n",
            "{\"trajectory\":0,\"step\":2,\"alice\":\"1\",\"bob\":null}\n",
            "{\"trajectory\":0,\"step\":3,\"alice\":\"0\",\"bob\":null}\n",
        ),
    );
    let smooth_gw = |path: &str, name: &str| -> Value {
        let out = out_dir(&dir, name);
        let o = run(&["smooth", "--scenario", path, "--records", &records, "--prior", "gw", "--out", &out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        read_json(&out, "smoothed.json")
    };
    let exact = smooth_gw(&exact_path, "exact");
    let sampled = smooth_gw(&sampled_path, "sampled");
    let capped = smooth_gw(&capped_path, "capped");
    assert_eq!(exact["rows"][0]["approximate"], false);
    assert_eq!(sampled["rows"][0]["approximate"], true);
    assert!(capped["rows"][0]["status"].as_str().unwrap().contains("exceeds cap"));
    let diff = (&matrix(&exact["rows"][0]["smoothed"]) - &matrix(&sampled["rows"][0]["smoothed"])).max_abs();
    assert!(diff < 5e-2, "sampled estimate differs by {diff}");
}
