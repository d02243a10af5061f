//! Runtime audits of the convergence theory on a live run: the decrease
//! relations, the explicit sublinear bound, the inner-solver soundness,
//! and the measured Q-linear rate against its guaranteed ceiling.

use isqa::diagnostics::{
    observed_alpha_floor, rate_report, run_with_audits, theorem_zeta, AuditKind,
};
use isqa::driver::SolverConfig;
use isqa::inner::InexactnessPolicy;
use isqa::linesearch::{LineSearchSpec, LsVariant};
use isqa::metric_policy::{MetricPolicy, MetricPolicyKind};
use isqa::problems::catalog_instantiate;

fn main() -> isqa::Result<()> {
    let problem = catalog_instantiate("sc-quadratic-l1", 15, 21)?;
    let f_star = problem.known_f_star.unwrap();
    let mu = problem.known_qg_mu.unwrap();

    let config = SolverConfig {
        problem,
        metric_policy: MetricPolicy::new(MetricPolicyKind::ClippedDiagonal, 0.5, 2.0)?,
        inexactness: InexactnessPolicy::certificate(0.9, 0.25),
        linesearch: LineSearchSpec::new(LsVariant::Ls1, 0.5, 0.5, 1.0),
        max_outer: 4_000,
        tol_direction: 1e-12,
        tol_fgap: None,
        seed: 21,
    };
    config.validate()?;

    let audited = run_with_audits(&config, &AuditKind::all())?;
    for audit in &audited.audits {
        println!(
            "audit {:<10} {}  ({})",
            audit.kind.label(),
            if audit.passed { "pass" } else { "FAIL" },
            audit.detail
        );
    }

    let report = &audited.report;
    let rates = rate_report(report, f_star, report.records.len() / 5)?;
    let alpha_floor = observed_alpha_floor(&report.records, report.records.len() / 5);
    let zeta = theorem_zeta(0.9, mu, config.metric_policy.upper);
    println!(
        "\nmeasured tail Q-ratio  {:.4}   guaranteed ceiling 1 - zeta alpha gamma = {:.4}",
        rates.tail_q_max,
        1.0 - zeta * alpha_floor * config.linesearch.gamma,
    );
    if let Some(last) = rates.r_linear_scores.last() {
        println!("final ||x_k - x*||^(1/k) = {last:.4} (R-linear when < 1)");
    }
    Ok(())
}
