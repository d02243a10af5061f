//! Minimal end-to-end solve: catalog problem, default-ish config, report.
//!
//! Run with `cargo run --example quickstart`.

use isqa::driver::{sqa_run, SolverConfig};
use isqa::inner::InexactnessPolicy;
use isqa::linesearch::{LineSearchSpec, LsVariant};
use isqa::metric_policy::{MetricPolicy, MetricPolicyKind};
use isqa::problems::catalog_instantiate;

fn main() -> isqa::Result<()> {
    // A strongly convex quadratic plus an l1 term; the factory also
    // computes a cross-validated reference optimum.
    let problem = catalog_instantiate("sc-quadratic-l1", 20, 42)?;
    let f_star = problem.known_f_star.unwrap();

    let config = SolverConfig {
        problem,
        metric_policy: MetricPolicy::new(MetricPolicyKind::ClippedDiagonal, 0.5, 2.0)?,
        inexactness: InexactnessPolicy::certificate(0.9, 0.25),
        linesearch: LineSearchSpec::new(LsVariant::Ls3, 0.5, 0.5, 1.0),
        max_outer: 2_000,
        tol_direction: 1e-12,
        tol_fgap: Some(1e-10),
        seed: 42,
    };
    config.validate()?;

    let report = sqa_run(&config);
    println!(
        "terminated by {} after {} outer / {} inner iterations",
        report.termination_reason.label(),
        report.records.len(),
        report.total_inner_iterations,
    );
    println!("F* (reference)  = {f_star:.12e}");
    println!("F (final)       = {:.12e}", report.final_f);
    println!("gap             = {:.3e}", report.final_f - f_star);

    println!("\n  k      F(x_k) - F*    alpha    ||d||_H      inner");
    for record in report.records.iter().step_by(report.records.len() / 10 + 1) {
        println!(
            "{:4}  {:13.6e}  {:7.4}  {:11.4e}  {:5}",
            record.k,
            record.fgap.unwrap(),
            record.alpha_k,
            record.dir_norm_metric,
            record.inner_iters,
        );
    }
    Ok(())
}
