//! Certificate vs fixed-count subproblem stopping, and how total inner
//! work scales with the target accuracy.
//!
//! The certificate stops as soon as a computed subgradient proves the
//! relative rule; a fixed step count certifies an effective accuracy
//! `1 - (1 - sigma)^N` through the inner solver's linear contraction.

use isqa::diagnostics::least_squares_fit;
use isqa::driver::{sqa_run, SolverConfig};
use isqa::inner::InexactnessPolicy;
use isqa::linesearch::{LineSearchSpec, LsVariant};
use isqa::metric_policy::{MetricPolicy, MetricPolicyKind};
use isqa::problems::catalog_instantiate;

fn main() -> isqa::Result<()> {
    let problem = catalog_instantiate("sc-quadratic-l1", 10, 11)?;

    println!("certificate mode:");
    println!("  eta     outer  total-inner  final gap");
    for eta in [0.5, 0.9, 0.99, 0.999] {
        let config = SolverConfig {
            problem: problem.clone(),
            metric_policy: MetricPolicy::new(MetricPolicyKind::ClippedDiagonal, 0.5, 2.0)?,
            inexactness: InexactnessPolicy::certificate(eta, 0.25),
            linesearch: LineSearchSpec::new(LsVariant::Ls3, 0.5, 0.5, 1.0),
            max_outer: 5_000,
            tol_direction: 0.0,
            tol_fgap: Some(1e-10),
            seed: 11,
        };
        config.validate()?;
        let report = sqa_run(&config);
        println!(
            "  {eta:<6}  {:5}  {:11}  {:9.2e}",
            report.records.len(),
            report.total_inner_iterations,
            report.final_f - problem.known_f_star.unwrap(),
        );
    }

    // Fixed-count mode: inner work to reach accuracy eps grows like
    // log(1/eps).
    let config = SolverConfig {
        problem: problem.clone(),
        metric_policy: MetricPolicy::scaled_identity(0.5)?,
        inexactness: InexactnessPolicy::fixed_count(5, 0.5),
        linesearch: LineSearchSpec::new(LsVariant::Ls3, 0.5, 0.5, 1.0),
        max_outer: 20_000,
        tol_direction: 0.0,
        tol_fgap: Some(1e-10),
        seed: 11,
    };
    config.validate()?;
    let report = sqa_run(&config);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    println!("\nfixed count (5 steps per subproblem):");
    println!("  eps      inner iterations to reach it");
    for decade in 2..=10 {
        let eps = 10f64.powi(-decade);
        if let Some(rec) = report.records.iter().find(|r| r.fgap.unwrap() <= eps) {
            let total: usize = report.records[..=rec.k].iter().map(|r| r.inner_iters).sum();
            println!("  1e-{decade:02}    {total}");
            xs.push((1.0 / eps).ln());
            ys.push(total as f64);
        }
    }
    let (_, slope, r2) = least_squares_fit(&xs, &ys)?;
    println!("  linear in log(1/eps): slope {slope:.2}, R^2 = {r2:.4}");
    Ok(())
}
