//! The benchmark harness used by the `isqa` binary, driven in-process:
//! write a config, expand its sweeps, execute with audits, inspect the
//! summary.

use isqa::cli::{parse_config, run_benchmark};

fn main() -> isqa::Result<()> {
    let dir = std::env::temp_dir().join("isqa-harness-example");
    std::fs::create_dir_all(&dir)?;
    let config_path = dir.join("bench.toml");
    std::fs::write(
        &config_path,
        r#"
[defaults]
max_outer = 2000
tol_direction = 1e-10
audits = ["lemma2", "lemma3", "thm2_bound", "floor"]

[[run]]
name = "demo"
instance = "sc-quadratic-l1"
dimension = 10
seed = 42
linesearch = ["ls1", "ls3"]
eta = [0.5, 0.9]
metric = "clipped-diagonal"
band = [0.5, 2.0]
sigma = 0.25
"#,
    )?;

    let plans = parse_config(&config_path)?;
    println!("config expands to {} runs:", plans.len());
    for plan in &plans {
        println!("  {}", plan.id);
    }

    let out_dir = dir.join("out");
    let outcome = run_benchmark(&plans, &out_dir, 2, None)?;
    println!(
        "\nbenchmark {}; artifacts in {}",
        if outcome.all_ok { "ok" } else { "FAILED" },
        out_dir.display()
    );
    for run in &outcome.runs {
        println!(
            "  {}: {} outer iterations, {} audits passed",
            run.id,
            run.outer_iterations,
            run.audits.iter().filter(|a| a.passed).count(),
        );
    }
    println!("\nsummary.txt:\n");
    print!("{}", std::fs::read_to_string(out_dir.join("summary.txt"))?);
    Ok(())
}
