//! The four backtracking strategies side by side on the same problem.
//!
//! LS1 tests the full objective against the linearized decrease; LS2 only
//! watches gradient variation; LS3 and LS4 add the metric quadratic to the
//! acceptance threshold (LS4 touching only the smooth part). They accept
//! different stepsizes but share the same sufficient-decrease guarantee.

use isqa::diagnostics::observed_alpha_floor;
use isqa::driver::{sqa_run, SolverConfig};
use isqa::inner::InexactnessPolicy;
use isqa::linesearch::{LineSearchSpec, LsVariant};
use isqa::metric_policy::MetricPolicy;
use isqa::problems::catalog_instantiate;

fn main() -> isqa::Result<()> {
    let problem = catalog_instantiate("sc-quadratic-l1", 12, 7)?;
    let f_star = problem.known_f_star.unwrap();

    println!("variant  iters  total-inner  min-alpha  ls-trials/iter  final gap");
    for variant in [LsVariant::Ls1, LsVariant::Ls2, LsVariant::Ls3, LsVariant::Ls4] {
        let metric = MetricPolicy::scaled_identity(0.5)?; // H = 2I
        let gamma = match variant {
            LsVariant::Ls2 => 0.4 * metric.lower,
            _ => 0.5,
        };
        let config = SolverConfig {
            problem: problem.clone(),
            metric_policy: metric,
            inexactness: InexactnessPolicy::certificate(0.9, 0.5),
            linesearch: LineSearchSpec::new(variant, 0.5, gamma, 1.0),
            max_outer: 5_000,
            tol_direction: 1e-11,
            tol_fgap: None,
            seed: 7,
        };
        config.validate()?;
        let report = sqa_run(&config);
        let trials: usize = report.records.iter().map(|r| r.ls_trials).sum();
        println!(
            "{:>7}  {:5}  {:11}  {:9.4}  {:14.2}  {:9.2e}",
            variant.label(),
            report.records.len(),
            report.total_inner_iterations,
            observed_alpha_floor(&report.records, report.records.len() / 2),
            trials as f64 / report.records.len() as f64,
            report.final_f - f_star,
        );
    }
    Ok(())
}
