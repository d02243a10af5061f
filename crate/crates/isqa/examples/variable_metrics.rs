//! Metric policies compared: fixed scaling, clipped diagonal curvature,
//! and the clipped dense secant estimate.
//!
//! Every policy certifies the same spectral band, so the convergence
//! guarantees are identical; what changes is how much per-iteration
//! curvature the model captures.

use isqa::driver::{sqa_run, SolverConfig};
use isqa::inner::InexactnessPolicy;
use isqa::linesearch::{LineSearchSpec, LsVariant};
use isqa::metric_policy::{MetricPolicy, MetricPolicyKind};
use isqa::problems::catalog_instantiate;

fn main() -> isqa::Result<()> {
    let problem = catalog_instantiate("logistic-l1", 8, 3)?;
    let f_star = problem.known_f_star.unwrap();

    let policies = [
        ("scaled-identity", MetricPolicy::scaled_identity(1.0)?),
        (
            "clipped-diagonal",
            MetricPolicy::new(MetricPolicyKind::ClippedDiagonal, 0.05, 2.0)?,
        ),
        (
            "clipped-secant",
            MetricPolicy::new(MetricPolicyKind::ClippedSecant { memory: 5 }, 0.05, 2.0)?,
        ),
    ];

    println!("policy            outer  total-inner  final gap");
    for (name, metric_policy) in policies {
        let config = SolverConfig {
            problem: problem.clone(),
            metric_policy,
            inexactness: InexactnessPolicy::certificate(0.9, 0.02),
            linesearch: LineSearchSpec::new(LsVariant::Ls3, 0.5, 0.5, 1.0),
            max_outer: 20_000,
            tol_direction: 1e-10,
            tol_fgap: None,
            seed: 3,
        };
        config.validate()?;
        let report = sqa_run(&config);
        println!(
            "{name:<16}  {:5}  {:11}  {:9.2e}",
            report.records.len(),
            report.total_inner_iterations,
            report.final_f - f_star,
        );
    }
    Ok(())
}
