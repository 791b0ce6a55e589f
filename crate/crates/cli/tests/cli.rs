use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qvcss(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qvcss"));
    c.args(args).env_remove("QVCSS_OUTPUT_DIR");
    c
}

fn ok(c: &mut Command) -> Output {
    let o = c.output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, extra: &[&str]) {
    let mut args = vec!["simulate", "--n", "80", "--p", "8", "--seed", "3", "--out", s(dir)];
    args.extend_from_slice(extra);
    ok(&mut qvcss(&args));
}

fn short_fit(data: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec!["fit", "--data", s(data), "--iterations", "300", "--burn-in", "100", "--out", s(out)];
    args.extend_from_slice(extra);
    ok(&mut qvcss(&args));
}

#[test]
fn simulate_writes_dataset_truth_and_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), &[]);
    let csv = std::fs::read_to_string(tmp.path().join("dataset.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.first(), Some(&"V"));
    assert_eq!(header.last(), Some(&"Y"));
    assert_eq!(header.len(), 8 + 2);
    assert_eq!(lines.count(), 80);
    let truth = json(&tmp.path().join("truth.json"));
    assert_eq!(truth["support"], serde_json::json!([1, 2, 3]));
    assert_eq!(json(&tmp.path().join("scenario.json"))["seed"], 3);
}

#[test]
fn simulate_is_byte_identical_on_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    simulate(&a, &["--errors", "t2"]);
    simulate(&b, &["--errors", "t2"]);
    for f in ["dataset.csv", "truth.json", "scenario.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn snp_covariates_take_three_levels() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), &["--covariates", "snp"]);
    let csv = std::fs::read_to_string(tmp.path().join("dataset.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        for x in &cells[1..cells.len() - 1] {
            assert!([0.0, 1.0, 2.0].contains(x), "SNP value {x}");
        }
    }
}

#[test]
fn fit_outputs_and_chain_streams() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), &[]);
    let out = tmp.path().join("fit");
    short_fit(&tmp.path().join("dataset.csv"), &out, &["--chains", "2"]);
    for f in ["samples.bin", "samples.json", "curves.csv", "summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary = json(&out.join("summary.json"));
    let streams: Vec<u64> = summary["chains"].as_array().unwrap().iter().map(|c| c["stream_id"].as_u64().unwrap()).collect();
    assert_eq!(streams, vec![0, 1]);
    assert_eq!(summary["selection"]["rule"], "mpm");
    let curves = std::fs::read_to_string(out.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().next().unwrap(), "j,v,median,lower,upper");
}

#[test]
fn laplace_only_fit_uses_interval_selection() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), &[]);
    let out = tmp.path().join("fit");
    short_fit(&tmp.path().join("dataset.csv"), &out, &["--method", "bqrvc"]);
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["selection"]["rule"], "ci");
    assert!(summary["selection"]["inclusion"].is_null());
}

#[test]
fn evaluate_reports_metrics_for_one_and_many_fits() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    simulate(root, &[]);
    let data = root.join("dataset.csv");
    short_fit(&data, &root.join("f1"), &[]);
    short_fit(&data, &root.join("f2"), &["--seed", "2"]);
    let truth = root.join("truth.json");
    ok(&mut qvcss(&["evaluate", "--fit", s(&root.join("f1")), "--truth", s(&truth), "--out", s(&root.join("e1"))]));
    let m = json(&root.join("e1/metrics.json"));
    let fit = &m["fits"][0]["metrics"];
    let imse: f64 = fit["imse"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((fit["timse"].as_f64().unwrap() - imse).abs() < 1e-12);
    assert!(m["aggregate"].is_null());

    ok(&mut qvcss(&[
        "evaluate",
        "--fit",
        s(&root.join("f1")),
        "--fit",
        s(&root.join("f2")),
        "--truth",
        s(&truth),
        "--out",
        s(&root.join("e2")),
    ]));
    let m = json(&root.join("e2/metrics.json"));
    assert_eq!(m["fits"].as_array().unwrap().len(), 2);
    assert_eq!(m["aggregate"]["replicates"], 2);
}

#[test]
fn evaluate_without_truth_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    simulate(root, &[]);
    short_fit(&root.join("dataset.csv"), &root.join("f"), &[]);
    let o = qvcss(&["evaluate", "--fit", s(&root.join("f")), "--truth", s(&root.join("missing.json")), "--out", s(root)])
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("not found"));
}

#[test]
fn diagnose_needs_two_chains_or_split() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    simulate(root, &[]);
    let fit = root.join("f");
    short_fit(&root.join("dataset.csv"), &fit, &[]);
    let o = qvcss(&["diagnose", "--fit", s(&fit), "--out", s(root)]).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--split"));

    ok(&mut qvcss(&["diagnose", "--fit", s(&fit), "--split", "--checkpoint-step", "50", "--out", s(root)]));
    let report = json(&root.join("psrf.json"));
    assert_eq!(report["split"], true);
    assert_eq!(report["chains_used"], 2);
    assert_eq!(report["draws"], 100);
    let trace = report["parameters"][0]["trace"].as_array().unwrap();
    let points: Vec<u64> = trace.iter().map(|t| t[0].as_u64().unwrap()).collect();
    assert_eq!(points, vec![50, 100]);
}

#[test]
fn replicate_study_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let config = serde_json::json!({
        "scenarios": [{ "n": 60, "p": 6 }],
        "methods": ["bqrvcss"],
        "replicates": 2,
        "seed_base": 10,
        "run": { "mcmc": { "iterations": 200, "burn_in": 100, "chains": 2 }, "grid_points": 30 },
        "diagnose": true
    });
    let cfg_path = root.join("study.json");
    std::fs::write(&cfg_path, config.to_string()).unwrap();
    let out = root.join("out");
    ok(&mut qvcss(&["replicate-study", "--config", s(&cfg_path), "--out", s(&out)]));
    let fits = std::fs::read_to_string(out.join("fits.csv")).unwrap();
    assert_eq!(fits.lines().count(), 3);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert_eq!(std::fs::read_dir(out.join("manifests")).unwrap().count(), 2);
    assert!(fits.lines().nth(1).unwrap().contains(",10,"));

    // A rerun reuses the manifests and reproduces the tables.
    ok(&mut qvcss(&["replicate-study", "--config", s(&cfg_path), "--out", s(&out), "--sequential"]));
    let again = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary, again);
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env-out");
    ok(qvcss(&["simulate", "--n", "30", "--p", "4"]).env("QVCSS_OUTPUT_DIR", &out));
    assert!(out.join("dataset.csv").exists());
}

#[test]
fn bad_arguments_are_reported() {
    let o = qvcss(&["simulate", "--errors", "cauchy", "--out", "/tmp"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), &[]);
    let o = qvcss(&["fit", "--data", s(&tmp.path().join("dataset.csv")), "--iterations", "10", "--burn-in", "10"])
        .output()
        .unwrap();
    assert!(!o.status.success());
}
