//! End-to-end checks of the benchmark harness: config expansion, trace
//! determinism, audit re-runs, fixtures, and the binary's exit codes.

use std::path::Path;
use std::process::Command;

use isqa::cli::{parse_config, run_benchmark};

const BIN: &str = env!("CARGO_BIN_EXE_isqa");

fn write(path: &Path, body: &str) {
    std::fs::write(path, body).unwrap();
}

#[test]
fn sweep_runs_emit_deterministic_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bench.toml");
    write(
        &config_path,
        r#"
[defaults]
max_outer = 400
tol_direction = 1e-10
audits = ["lemma2", "lemma3", "thm2_bound", "floor", "a4"]

[[run]]
name = "sweep"
instance = "sc-quadratic-l1"
dimension = 4
seed = [3, 4]
linesearch = ["ls1", "ls3"]
eta = 0.9
metric = "clipped-diagonal"
band = [0.5, 2.0]
sigma = 0.25
"#,
    );
    let plans = parse_config(&config_path).unwrap();
    assert_eq!(plans.len(), 4, "2 seeds x 2 searches");

    let out_a = dir.path().join("out-a");
    let out_b = dir.path().join("out-b");
    let outcome_a = run_benchmark(&plans, &out_a, 2, None).unwrap();
    let outcome_b = run_benchmark(&plans, &out_b, 1, None).unwrap();
    assert!(outcome_a.all_ok, "{:#?}", outcome_a.runs.iter().map(|r| &r.error).collect::<Vec<_>>());
    assert!(outcome_b.all_ok);

    for plan in &plans {
        let a = std::fs::read(out_a.join(format!("{}.csv", plan.id))).unwrap();
        let b = std::fs::read(out_b.join(format!("{}.csv", plan.id))).unwrap();
        assert_eq!(a, b, "trace {} not byte-identical across reruns", plan.id);
        assert!(!a.is_empty());
    }
    let summary = std::fs::read_to_string(out_a.join("summary.txt")).unwrap();
    assert_eq!(summary.matches("[run.").count(), 4);
    assert_eq!(summary.matches("status = \"ok\"").count(), 4);
    assert!(summary.contains("audit.lemma3 = \"pass"));
    // Rate columns appear for instances with a known optimum.
    assert_eq!(summary.matches("tail_q_ratio = ").count(), 4);
    assert_eq!(summary.matches("r_linear_score = ").count(), 4);
}

#[test]
fn empty_config_succeeds_with_empty_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("empty.toml");
    write(&config_path, "");
    let plans = parse_config(&config_path).unwrap();
    assert!(plans.is_empty());
    let out = dir.path().join("out");
    let outcome = run_benchmark(&plans, &out, 1, None).unwrap();
    assert!(outcome.all_ok);
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("runs = 0"));
}

#[test]
fn inner_budget_exhaustion_is_flagged_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("stress.toml");
    write(
        &config_path,
        r#"
[[run]]
name = "stress"
instance = "sc-quadratic-l1"
dimension = 4
seed = 5
eta = 0.999999
max_inner = 3
max_outer = 200
metric = "clipped-diagonal"
band = [0.5, 2.0]
"#,
    );
    let plans = parse_config(&config_path).unwrap();
    let out = dir.path().join("out");
    let outcome = run_benchmark(&plans, &out, 1, None).unwrap();
    assert_eq!(outcome.runs.len(), 1);
    let run = &outcome.runs[0];
    assert!(run.error.is_none());
    assert!(
        run.uncertified_iterations > 0,
        "stress config should exhaust the inner cap"
    );
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains(&format!(
        "uncertified_iterations = {}",
        run.uncertified_iterations
    )));
}

#[test]
fn binary_run_audit_and_fixture_flow() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("one.toml");
    write(
        &config_path,
        r#"
[[run]]
name = "single"
instance = "fbs-reference"
dimension = 4
seed = 9
linesearch = "ls3"
eta = 0.9
max_outer = 300
"#,
    );
    let out = dir.path().join("out");

    let status = Command::new(BIN)
        .args(["run", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&out)
        .args(["--jobs", "2", "--audits", "all"])
        .status()
        .unwrap();
    assert!(status.success());

    let plans = parse_config(&config_path).unwrap();
    assert_eq!(plans.len(), 1);
    let trace = out.join(format!("{}.csv", plans[0].id));
    assert!(trace.exists());

    let status = Command::new(BIN)
        .args(["audit", "--trace"])
        .arg(&trace)
        .arg("--spec")
        .arg(&config_path)
        .status()
        .unwrap();
    assert!(status.success());

    // Fixtures: refuses to overwrite without --force.
    let fixture_dir = dir.path().join("fixtures");
    let status = Command::new(BIN)
        .args(["fixtures", "--regen", "--dir"])
        .arg(&fixture_dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(fixture_dir.join("reference.txt").exists());
    let status = Command::new(BIN)
        .args(["fixtures", "--regen", "--dir"])
        .arg(&fixture_dir)
        .status()
        .unwrap();
    assert!(!status.success(), "second regen must demand --force");
    let status = Command::new(BIN)
        .args(["fixtures", "--regen", "--force", "--dir"])
        .arg(&fixture_dir)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn seed_env_override_collapses_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("seeds.toml");
    write(
        &config_path,
        r#"
[[run]]
instance = "quartic"
dimension = 3
seed = [1, 2, 3]
max_outer = 50
"#,
    );
    let out = dir.path().join("out");
    let status = Command::new(BIN)
        .env("ISQA_SEED", "77")
        .args(["run", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    // All three sweep entries collapse to the override seed.
    assert_eq!(summary.matches("[run.").count(), 1);
    assert!(summary.contains("seed = 77"));
}

#[test]
fn invalid_configs_are_rejected_with_named_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.toml");
    write(
        &config_path,
        r#"
[[run]]
instance = "sc-quadratic-l1"
linesearch = "ls2"
gamma = 0.6
metric = "clipped-diagonal"
band = [1.0, 2.0]
"#,
    );
    let err = parse_config(&config_path).unwrap_err().to_string();
    assert!(err.contains("ls2.gamma must lie in (0, m/2) = (0, 0.5)"), "{err}");

    // The fixture-only instance is rejected for solver runs at build time.
    write(
        &config_path,
        r#"
[[run]]
instance = "counterexample-region"
"#,
    );
    let plans = parse_config(&config_path).unwrap();
    let out = dir.path().join("out");
    let outcome = run_benchmark(&plans, &out, 1, None).unwrap();
    assert!(!outcome.all_ok);
    assert!(outcome.runs[0]
        .error
        .as_deref()
        .unwrap()
        .contains("evaluation fixture"));
}
