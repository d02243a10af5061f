//! Stepsize floors under gradient Lipschitz continuity: for each search
//! strategy, the predicted lower bound on accepted stepsizes against the
//! smallest stepsize observed across a long run.

use isqa::diagnostics::{observed_alpha_floor, stepsize_floor};
use isqa::driver::{sqa_run, SolverConfig};
use isqa::inner::InexactnessPolicy;
use isqa::linesearch::{LineSearchSpec, LsVariant};
use isqa::metric_policy::MetricPolicy;
use isqa::problems::catalog_instantiate;

fn main() -> isqa::Result<()> {
    for name in ["sc-quadratic-l1", "logistic-l1"] {
        let problem = catalog_instantiate(name, 6, 42)?;
        let lip = problem.known_local_l.unwrap();
        println!("{name} (L = {lip:.4}):");
        println!("  variant  floor     observed min alpha");
        for variant in [LsVariant::Ls1, LsVariant::Ls2, LsVariant::Ls3, LsVariant::Ls4] {
            let metric = MetricPolicy::scaled_identity(1.0 / lip)?; // m = M = L
            let gamma = match variant {
                LsVariant::Ls2 => 0.4 * metric.lower,
                _ => 0.5,
            };
            let eta = 0.9;
            let config = SolverConfig {
                problem: problem.clone(),
                metric_policy: metric,
                inexactness: InexactnessPolicy::certificate(eta, 0.5),
                linesearch: LineSearchSpec::new(variant, 0.5, gamma, 1.0),
                max_outer: 10_000,
                tol_direction: 1e-12,
                tol_fgap: None,
                seed: 42,
            };
            config.validate()?;
            let report = sqa_run(&config);
            let floor = stepsize_floor(
                variant,
                0.5,
                gamma,
                1.0,
                eta,
                config.metric_policy.lower,
                lip,
            );
            let observed = observed_alpha_floor(&report.records, report.records.len() / 2);
            println!("  {:>7}  {floor:<8.4}  {observed:.4}", variant.label());
        }
        println!();
    }
    Ok(())
}
