//! End-to-end tests of the binary: file pipeline, determinism, exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};

static DIR_COUNTER: AtomicU32 = AtomicU32::new(0);

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "seeqst-cli-test-{}-{}-{}",
        std::process::id(),
        tag,
        DIR_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn seeqst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seeqst"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json_of(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn plan_full_counts() {
    let dir = scratch_dir("plan-counts");
    let out5 = dir.join("n5");
    assert_ok(&seeqst(&["plan", "--full", "-n", "5", "--out", out5.to_str().unwrap()]));
    let circuits = json_of(&out5.join("circuits.json"));
    assert_eq!(circuits["circuits"].as_array().unwrap().len(), 63);
    assert_eq!(json_of(&out5.join("plan.json"))["subsets"].as_array().unwrap().len(), 32);

    let out3 = dir.join("n3-local");
    assert_ok(&seeqst(&[
        "plan", "--full", "-n", "3", "--variant", "local", "--out",
        out3.to_str().unwrap(),
    ]));
    assert_eq!(
        json_of(&out3.join("circuits.json"))["circuits"].as_array().unwrap().len(),
        27
    );
}

#[test]
fn plan_single_off_diagonal_subset() {
    let dir = scratch_dir("plan-single");
    assert_ok(&seeqst(&[
        "plan", "--elements", "0:31", "-n", "5", "--out", dir.to_str().unwrap(),
    ]));
    let plan = json_of(&dir.join("plan.json"));
    assert_eq!(plan["subsets"].as_array().unwrap().len(), 1);
    assert_eq!(plan["subsets"][0]["mask"], 31);
    let circuits = json_of(&dir.join("circuits.json"));
    assert_eq!(circuits["circuits"].as_array().unwrap().len(), 2);
}

#[test]
fn plan_elements_from_file() {
    let dir = scratch_dir("plan-at-file");
    let listing = dir.join("elements.txt");
    fs::write(&listing, "0:0\n3:1\n").unwrap();
    assert_ok(&seeqst(&[
        "plan",
        "--elements",
        &format!("@{}", listing.display()),
        "-n",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]));
    let plan = json_of(&dir.join("plan.json"));
    let masks: Vec<u64> = plan["subsets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["mask"].as_u64().unwrap())
        .collect();
    assert_eq!(masks, vec![0, 2]);
}

#[test]
fn plan_flag_conflicts_exit_2() {
    let out = seeqst(&["plan", "--full", "--elements", "0:1", "-n", "2", "--out", "/tmp"]);
    assert_eq!(out.status.code(), Some(2));
    let out = seeqst(&["plan", "-n", "2", "--out", "/tmp"]);
    assert_eq!(out.status.code(), Some(2));
    let out = seeqst(&["plan", "--full", "-n", "2", "--threshold", "0.1", "--out", "/tmp"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn threshold_prunes_with_diagonal_file() {
    let dir = scratch_dir("threshold");
    let diag = dir.join("diag.json");
    fs::write(&diag, "[1.0, 0.0, 0.0, 0.0]").unwrap();
    assert_ok(&seeqst(&[
        "plan", "--full", "-n", "2", "--threshold", "0.01", "--diagonal",
        diag.to_str().unwrap(), "--out", dir.to_str().unwrap(),
    ]));
    let plan = json_of(&dir.join("plan.json"));
    assert_eq!(plan["subsets"].as_array().unwrap().len(), 1);
    assert_eq!(plan["subsets"][0]["mask"], 0);
}

#[test]
fn run_is_deterministic_and_counts_match() {
    let dir = scratch_dir("run-det");
    let plan = dir.join("plan");
    assert_ok(&seeqst(&["plan", "--full", "-n", "5", "--out", plan.to_str().unwrap()]));

    let run_a = dir.join("a");
    let run_b = dir.join("b");
    for out in [&run_a, &run_b] {
        assert_ok(&seeqst(&[
            "run", "--plan", plan.to_str().unwrap(), "--state", "plusy", "--shots",
            "2048", "--seed", "11", "--out", out.to_str().unwrap(),
        ]));
    }
    let bytes_a = fs::read(run_a.join("records.json")).unwrap();
    let bytes_b = fs::read(run_b.join("records.json")).unwrap();
    assert_eq!(bytes_a, bytes_b, "same manifest must give identical bytes");

    let records = json_of(&run_a.join("records.json"));
    assert_eq!(records["records"].as_array().unwrap().len(), 63);
    for r in records["records"].as_array().unwrap() {
        let total: u64 = r["counts"]
            .as_object()
            .unwrap()
            .values()
            .map(|v| v.as_u64().unwrap())
            .sum();
        assert_eq!(total, 2048);
    }
    // every output embeds the producing manifest's hash
    assert!(records["manifest_hash"].is_string());
}

#[test]
fn capacity_errors_exit_3() {
    let dir = scratch_dir("capacity");
    let plan = dir.join("plan");
    assert_ok(&seeqst(&["plan", "--full", "-n", "7", "--out", plan.to_str().unwrap()]));
    let out = seeqst(&[
        "run", "--plan", plan.to_str().unwrap(), "--state", "plusy", "--noise",
        "depol:0.01", "--shots", "64", "--seed", "1", "--out",
        dir.join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    // noiseless pure-state execution at 7 qubits is within capacity
    assert_ok(&seeqst(&[
        "run", "--plan", plan.to_str().unwrap(), "--state", "plusy", "--shots",
        "64", "--seed", "1", "--out", dir.join("ok").to_str().unwrap(),
    ]));
}

#[test]
fn estimate_direct_report_and_csv() {
    let dir = scratch_dir("estimate-direct");
    let plan = dir.join("plan");
    let run = dir.join("run");
    let est = dir.join("est");
    assert_ok(&seeqst(&["plan", "--full", "-n", "2", "--out", plan.to_str().unwrap()]));
    assert_ok(&seeqst(&[
        "run", "--plan", plan.to_str().unwrap(), "--state", "ghz-i", "--shots",
        "16384", "--seed", "3", "--out", run.to_str().unwrap(),
    ]));
    assert_ok(&seeqst(&[
        "estimate", "--records", run.to_str().unwrap(), "--circuits",
        plan.to_str().unwrap(), "--method", "direct", "--truth", "ghz-i", "--csv",
        "delta.csv", "--out", est.to_str().unwrap(),
    ]));

    let report = json_of(&est.join("report.json"));
    assert_eq!(report["method"], "DIRECT");
    assert_eq!(report["elements"].as_array().unwrap().len(), 16);
    let fidelity = report["metrics"]["fidelity"].as_f64().unwrap();
    assert!(fidelity > 0.99, "fidelity {fidelity}");

    // the ghz-i corner element rho_03 = i/2 must be recovered
    let e03 = report["elements"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["row"] == 0 && e["col"] == 3)
        .unwrap();
    assert!((e03["im"].as_f64().unwrap() - 0.5).abs() < 0.02);

    let csv = fs::read_to_string(est.join("delta.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# manifest_hash="));
    assert_eq!(lines[1], "cnot_count,delta_err,n_elements");
    // N=2: groups are 0 CNOTs (S_1, S_2, S_3) and 1 CNOT (S_4)
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("0,"));
    assert!(lines[3].starts_with("1,"));
}

#[test]
fn estimate_mle_reaches_high_fidelity() {
    let dir = scratch_dir("estimate-mle");
    let plan = dir.join("plan");
    let run = dir.join("run");
    let est = dir.join("est");
    assert_ok(&seeqst(&["plan", "--full", "-n", "3", "--out", plan.to_str().unwrap()]));
    assert_ok(&seeqst(&[
        "run", "--plan", plan.to_str().unwrap(), "--state", "plusy", "--shots",
        "16384", "--seed", "5", "--out", run.to_str().unwrap(),
    ]));
    assert_ok(&seeqst(&[
        "estimate", "--records", run.to_str().unwrap(), "--circuits",
        plan.to_str().unwrap(), "--method", "mle", "--truth", "plusy", "--out",
        est.to_str().unwrap(),
    ]));
    let report = json_of(&est.join("report.json"));
    assert_eq!(report["method"], "MLE");
    let fidelity = report["metrics"]["fidelity"].as_f64().unwrap();
    assert!(fidelity >= 0.99, "fidelity {fidelity}");
    assert_eq!(report["config"]["converged"], true);
}

#[test]
fn estimate_rejects_incomplete_records() {
    let dir = scratch_dir("estimate-incomplete");
    let plan = dir.join("plan");
    let run = dir.join("run");
    assert_ok(&seeqst(&["plan", "--full", "-n", "2", "--out", plan.to_str().unwrap()]));
    assert_ok(&seeqst(&[
        "run", "--plan", plan.to_str().unwrap(), "--state", "plusy", "--shots",
        "512", "--seed", "2", "--out", run.to_str().unwrap(),
    ]));
    // drop the ODD records, leaving unpaired EVEN settings
    let records_path = run.join("records.json");
    let mut doc = json_of(&records_path);
    let filtered: Vec<serde_json::Value> = doc["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["label"] != "ODD")
        .cloned()
        .collect();
    doc["records"] = serde_json::Value::Array(filtered);
    fs::write(&records_path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();

    let out = seeqst(&[
        "estimate", "--records", run.to_str().unwrap(), "--circuits",
        plan.to_str().unwrap(), "--method", "direct", "--out",
        dir.join("est").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scaling_writes_observations_and_fit() {
    let dir = scratch_dir("scaling");
    assert_ok(&seeqst(&[
        "scaling", "--variant", "sq", "--n-list", "3,4", "--s-list", "1024,4096",
        "--states", "3", "--subsets-per-m", "2", "--seed", "9", "--out",
        dir.to_str().unwrap(),
    ]));
    let csv = fs::read_to_string(dir.join("observations.csv")).unwrap();
    assert!(csv.starts_with("# manifest_hash="));
    assert!(csv.lines().nth(1).unwrap().starts_with("n_qubits,block_size,shots,mean_delta_err"));
    assert!(csv.lines().count() > 10);
    let model = json_of(&dir.join("scaling_model.json"));
    assert!(model["b1"].as_f64().unwrap() > 0.0);

    // an unfittable sweep is a usage error
    let out = seeqst(&[
        "scaling", "--n-list", "3", "--s-list", "1024", "--states", "1", "--out",
        dir.join("tiny").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scaling_cnot_variant_is_flat_in_block_size() {
    let dir = scratch_dir("scaling-cnot");
    assert_ok(&seeqst(&[
        "scaling", "--variant", "cnot", "--n-list", "3,4", "--s-list", "2048,8192",
        "--states", "6", "--subsets-per-m", "3", "--seed", "17", "--out",
        dir.to_str().unwrap(),
    ]));
    // per-M mean errors at fixed (N, S) coincide for M >= 1
    let csv = fs::read_to_string(dir.join("observations.csv")).unwrap();
    let mut by_point: std::collections::BTreeMap<(u64, u64), Vec<f64>> =
        std::collections::BTreeMap::new();
    for line in csv.lines().skip(2) {
        let cols: Vec<&str> = line.split(',').collect();
        let n: u64 = cols[0].parse().unwrap();
        let m: u64 = cols[1].parse().unwrap();
        let s: u64 = cols[2].parse().unwrap();
        let mean: f64 = cols[3].parse().unwrap();
        if m >= 1 {
            by_point.entry((n, s)).or_default().push(mean);
        }
    }
    for ((n, s), means) in by_point {
        let max = means.iter().cloned().fold(0.0, f64::max);
        let min = means.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(
            max / min < 2.0,
            "GHZ-basis error varies with M at (N={n}, S={s}): {means:?}"
        );
    }
}

#[test]
fn verify_passes() {
    let out = seeqst(&["verify", "--max-n", "5", "--dense-n", "3", "--contract-n", "3"]);
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("ok")).count() >= 8);
}

#[test]
fn jobs_flag_does_not_change_results() {
    let dir = scratch_dir("jobs");
    let plan = dir.join("plan");
    assert_ok(&seeqst(&["plan", "--full", "-n", "3", "--out", plan.to_str().unwrap()]));
    let one = dir.join("one");
    let many = dir.join("many");
    assert_ok(&seeqst(&[
        "--jobs", "1", "run", "--plan", plan.to_str().unwrap(), "--state", "random:4",
        "--shots", "1024", "--seed", "6", "--out", one.to_str().unwrap(),
    ]));
    assert_ok(&seeqst(&[
        "--jobs", "4", "run", "--plan", plan.to_str().unwrap(), "--state", "random:4",
        "--shots", "1024", "--seed", "6", "--out", many.to_str().unwrap(),
    ]));
    assert_eq!(
        fs::read(one.join("records.json")).unwrap(),
        fs::read(many.join("records.json")).unwrap()
    );
}
