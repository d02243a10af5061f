//! Inexact subproblem solver: proximal-gradient steps on the model `Q`
//! with two stopping modes.
//!
//! The model's smooth part has Hessian `H` with certified bounds
//! `m <= spec(H) <= M`, so proximal-gradient steps at `tau = 1/M` descend
//! monotonically and contract the gap `Q - Q*` by at least `(1 - m/M)`
//! per step. Two ways to realize the relative acceptance rule
//! `Q(candidate) <= eta Q*` (using `Q(anchor) = 0`):
//!
//! * fixed-count: exactly `N` steps; the contraction certifies the rule
//!   with effective `eta = 1 - (1 - sigma)^N`;
//! * certificate: stop once `Q(y) <= -(eta/(1-eta)) ||xi||^2 / (2m)` for a
//!   computed subgradient `xi` of `Q` at `y`. Since
//!   `Q* >= Q(y) - ||xi||^2/(2m)` by strong convexity, this implies the
//!   rule; the check is conservative and never accepts a violator.

use crate::error::{Error, Result};
use crate::model::{SubproblemModel, Vector};

/// Inner stopping rule.
#[derive(Debug, Clone, PartialEq)]
pub enum InnerStopMode {
    /// Run exactly this many proximal-gradient steps.
    FixedCount { n_inner: usize },
    /// Stop at the first iterate whose subgradient certificate implies the
    /// relative rule. Requires `eta < 1`.
    Certificate,
}

/// Relative-accuracy policy for the subproblem solve.
#[derive(Debug, Clone)]
pub struct InexactnessPolicy {
    /// Target relative accuracy in `(0, 1]`.
    pub eta: f64,
    pub mode: InnerStopMode,
    /// Declared uniform contraction factor complement in `(0, 1)`: the gap
    /// shrinks by `(1 - sigma)` per step. Must be certified by the metric
    /// band (`sigma <= m/M`).
    pub sigma: f64,
    /// Iteration cap for certificate mode; `None` uses
    /// [`default_max_inner`]. Hitting the cap returns an uncertified
    /// result instead of failing.
    pub max_inner: Option<usize>,
}

impl InexactnessPolicy {
    pub fn certificate(eta: f64, sigma: f64) -> Self {
        InexactnessPolicy {
            eta,
            mode: InnerStopMode::Certificate,
            sigma,
            max_inner: None,
        }
    }

    pub fn fixed_count(n_inner: usize, sigma: f64) -> Self {
        InexactnessPolicy {
            eta: 1.0,
            mode: InnerStopMode::FixedCount { n_inner },
            sigma,
            max_inner: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::usage(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::usage(format!(
                "sigma must lie in (0, 1), got {}",
                self.sigma
            )));
        }
        if matches!(self.mode, InnerStopMode::Certificate) && self.eta >= 1.0 {
            return Err(Error::usage(
                "certificate mode requires eta < 1; at eta = 1 the check degenerates \
                 to demanding an exact minimizer (use fixed-count instead)",
            ));
        }
        if let InnerStopMode::FixedCount { n_inner } = self.mode {
            if n_inner == 0 {
                return Err(Error::usage("fixed-count mode requires n_inner >= 1"));
            }
        }
        if self.max_inner == Some(0) {
            return Err(Error::usage("max_inner must be positive when set"));
        }
        Ok(())
    }

    /// The accuracy the chosen mode actually certifies: `eta` itself in
    /// certificate mode, `1 - (1 - sigma)^N` in fixed-count mode.
    pub fn effective_eta(&self) -> f64 {
        match self.mode {
            InnerStopMode::Certificate => self.eta,
            InnerStopMode::FixedCount { n_inner } => {
                1.0 - (1.0 - self.sigma).powi(n_inner as i32)
            }
        }
    }
}

/// Outcome of one subproblem solve.
#[derive(Debug, Clone)]
pub struct InnerResult {
    pub candidate: Vector,
    pub iterations_used: usize,
    /// Whether the relative rule is established (always in fixed-count
    /// mode; in certificate mode only if the certificate fired before the
    /// iteration cap).
    pub certified: bool,
    /// `Q(candidate)`; never positive.
    pub q_value: f64,
    /// Norm of the final computed subgradient of `Q`.
    pub residual_norm: f64,
}

/// One proximal-gradient step on `Q` from `y` with stepsize `tau`:
/// `prox_{tau g}(y - tau (grad f(x_k) + H (y - x_k)))`. Requires
/// `tau <= 1/M` so the step is a guaranteed descent.
pub fn prox_grad_step(model: &SubproblemModel, y: &Vector, tau: f64) -> Result<Vector> {
    if tau <= 0.0 {
        return Err(Error::usage("prox_grad_step requires tau > 0"));
    }
    if tau > 1.0 / model.metric().upper + 1e-15 {
        return Err(Error::usage(format!(
            "prox_grad_step requires tau <= 1/M = {}, got {tau}; the descent guarantee is void",
            1.0 / model.metric().upper
        )));
    }
    let grad = model.quad_grad(y);
    let forward = y - &(grad * tau);
    model.reg().prox(&forward, tau)
}

/// Subgradient of `Q` at `y_next` produced as a by-product of the step
/// `y_prev -> y_next`: with `q` the smooth part of the model,
/// `xi = grad q(y_next) - grad q(y_prev) + (y_prev - y_next)/tau`.
pub fn subgrad_residual(
    model: &SubproblemModel,
    y_prev: &Vector,
    y_next: &Vector,
    tau: f64,
) -> Vector {
    let g_next = model.quad_grad(y_next);
    let g_prev = model.quad_grad(y_prev);
    &g_next - &g_prev + &((y_prev - y_next) / tau)
}

/// Certified optimality-gap bound from strong convexity:
/// `Q(y) - Q* <= ||xi||^2 / (2m)` for any `xi` in the subdifferential of
/// `Q` at `y`.
pub fn certificate_gap_bound(model: &SubproblemModel, xi: &Vector) -> f64 {
    xi.dot(xi) / (2.0 * model.metric().lower)
}

/// Iteration cap for certificate mode.
pub fn default_max_inner(eta: f64, lower: f64, upper: f64) -> usize {
    let ratio = upper / lower;
    let target = (1.0 / (1.0 - eta)).ln();
    (10.0 * (ratio * target).ceil()).max(10.0) as usize
}

/// Solves the subproblem to the policy's accuracy, starting from the
/// anchor.
pub fn inner_solve(model: &SubproblemModel, policy: &InexactnessPolicy) -> Result<InnerResult> {
    policy.validate()?;
    let tau = 1.0 / model.metric().upper;
    let mut y = model.anchor().clone();

    match policy.mode {
        InnerStopMode::FixedCount { n_inner } => {
            let mut residual = 0.0;
            for l in 0..n_inner {
                let y_next = prox_grad_step(model, &y, tau)?;
                if l == n_inner - 1 {
                    residual = subgrad_residual(model, &y, &y_next, tau)
                        .dot(&subgrad_residual(model, &y, &y_next, tau))
                        .sqrt();
                }
                y = y_next;
            }
            let q_value = model.eval_q(&y);
            if !q_value.is_finite() {
                return Err(Error::numerical(format!(
                    "non-finite Q after {n_inner} fixed inner steps: Q = {q_value}, y = {y:?}"
                )));
            }
            Ok(InnerResult {
                candidate: y,
                iterations_used: n_inner,
                certified: true,
                q_value,
                residual_norm: residual,
            })
        }
        InnerStopMode::Certificate => {
            let cap = policy.max_inner.unwrap_or_else(|| {
                default_max_inner(policy.eta, model.metric().lower, model.metric().upper)
            });
            let threshold_factor = policy.eta / (1.0 - policy.eta);
            let mut last_q = 0.0;
            let mut last_residual = f64::INFINITY;
            for l in 1..=cap {
                let y_next = prox_grad_step(model, &y, tau)?;
                let xi = subgrad_residual(model, &y, &y_next, tau);
                let q_value = model.eval_q(&y_next);
                if !q_value.is_finite() {
                    return Err(Error::numerical(format!(
                        "non-finite Q at inner iteration {l}: Q = {q_value}, y = {y_next:?}"
                    )));
                }
                let bound = certificate_gap_bound(model, &xi);
                last_q = q_value;
                last_residual = xi.dot(&xi).sqrt();
                y = y_next;
                if q_value <= -threshold_factor * bound {
                    return Ok(InnerResult {
                        candidate: y,
                        iterations_used: l,
                        certified: true,
                        q_value,
                        residual_norm: last_residual,
                    });
                }
            }
            Ok(InnerResult {
                candidate: y,
                iterations_used: cap,
                certified: false,
                q_value: last_q,
                residual_norm: last_residual,
            })
        }
    }
}

/// Q-values along the proximal-gradient trajectory from the anchor
/// (`trace[l] = Q(y_l)`, `trace[0] = 0`). Used by the contraction audits.
pub fn contraction_trace(model: &SubproblemModel, steps: usize) -> Result<Vec<f64>> {
    let tau = 1.0 / model.metric().upper;
    let mut y = model.anchor().clone();
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(0.0);
    for _ in 0..steps {
        y = prox_grad_step(model, &y, tau)?;
        trace.push(model.eval_q(&y));
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Metric, ObjectiveSplit};
    use crate::problems::{Regularizer, SmoothFn};
    use ndarray::{array, Array1, Array2};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    /// 1-d model with grad 2 at anchor 0, H = 1, g = |x|; exact minimizer
    /// -1 with Q* = -0.5.
    fn one_d_model() -> SubproblemModel {
        let obj = ObjectiveSplit::new(
            Arc::new(SmoothFn::Quadratic {
                matrix: Array2::eye(1),
                linear: array![-2.0],
            }),
            Arc::new(Regularizer::L1 { weight: 1.0 }),
        );
        SubproblemModel::new(&obj, Metric::scaled_identity(1.0).unwrap(), array![0.0]).unwrap()
    }

    #[test]
    fn prox_grad_step_lands_on_1d_minimizer() {
        let model = one_d_model();
        let y1 = prox_grad_step(&model, &array![0.0], 1.0).unwrap();
        assert_eq!(y1[0], -1.0);
        assert!((model.eval_q(&y1) + 0.5).abs() < 1e-15);
        // Fixed point afterwards.
        let y2 = prox_grad_step(&model, &y1, 1.0).unwrap();
        assert!((y2[0] - y1[0]).abs() < 1e-12);
        // Residual at the minimizer is zero.
        let xi = subgrad_residual(&model, &y1, &y2, 1.0);
        assert!(xi.dot(&xi).sqrt() < 1e-10);
    }

    #[test]
    fn prox_grad_step_rejects_large_tau() {
        let model = one_d_model();
        assert!(prox_grad_step(&model, &array![0.0], 1.5).is_err());
    }

    #[test]
    fn gradient_step_formula_when_g_zero() {
        let obj = ObjectiveSplit::new(
            Arc::new(SmoothFn::Quadratic {
                matrix: Array2::eye(2),
                linear: array![0.0, 0.0],
            }),
            Arc::new(Regularizer::Zero),
        );
        let anchor = array![1.0, -1.0];
        let model =
            SubproblemModel::new(&obj, Metric::scaled_identity(1.0).unwrap(), anchor.clone())
                .unwrap();
        let y = array![0.5, 0.25];
        let tau = 0.5;
        let grad_anchor = model.grad_at_anchor().clone();
        let expected = &y - &((&grad_anchor + &(&y - &anchor)) * tau);
        let got = prox_grad_step(&model, &y, tau).unwrap();
        for (a, b) in got.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn subgradient_inequality_on_random_points() {
        let model = one_d_model();
        let tau = 1.0;
        let y_prev = array![0.3];
        let y_next = prox_grad_step(&model, &y_prev, tau).unwrap();
        let xi = subgrad_residual(&model, &y_prev, &y_next, tau);
        let q_next = model.eval_q(&y_next);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let z = array![rng.random::<f64>() * 6.0 - 3.0];
            let lhs = model.eval_q(&z);
            let rhs = q_next + xi.dot(&(&z - &y_next));
            assert!(lhs >= rhs - 1e-10, "subgradient inequality violated");
        }
    }

    #[test]
    fn certificate_bound_formula() {
        let model = one_d_model();
        let xi = array![0.2];
        assert!((certificate_gap_bound(&model, &xi) - 0.02).abs() < 1e-15);
        let zero = array![0.0];
        assert_eq!(certificate_gap_bound(&model, &zero), 0.0);
    }

    #[test]
    fn inner_solve_anchor_optimal() {
        // grad 0 at anchor, g = 0: the anchor is the exact minimizer.
        let obj = ObjectiveSplit::new(
            Arc::new(SmoothFn::Quadratic {
                matrix: Array2::eye(1),
                linear: array![0.0],
            }),
            Arc::new(Regularizer::Zero),
        );
        let model =
            SubproblemModel::new(&obj, Metric::scaled_identity(1.0).unwrap(), array![0.0])
                .unwrap();
        let policy = InexactnessPolicy::certificate(0.9, 0.5);
        let result = inner_solve(&model, &policy).unwrap();
        assert!(result.certified);
        assert!(result.iterations_used <= 1);
        assert_eq!(result.q_value, 0.0);
        assert_eq!(result.candidate[0], 0.0);
    }

    #[test]
    fn inner_solve_1d_certificate_after_one_step() {
        let model = one_d_model();
        let policy = InexactnessPolicy::certificate(0.9, 0.5);
        let result = inner_solve(&model, &policy).unwrap();
        assert!(result.certified);
        assert_eq!(result.iterations_used, 1);
        assert_eq!(result.candidate[0], -1.0);
        assert!((result.q_value + 0.5).abs() < 1e-12);
        assert!(result.residual_norm < 1e-12);
    }

    #[test]
    fn certificate_mode_rejects_eta_one() {
        let policy = InexactnessPolicy::certificate(1.0, 0.5);
        assert!(policy.validate().is_err());
    }

    #[test]
    fn effective_eta_fixed_count() {
        let policy = InexactnessPolicy::fixed_count(5, 0.25);
        let expected = 1.0 - (0.75_f64).powi(5);
        assert!((policy.effective_eta() - expected).abs() < 1e-15);
    }

    fn random_model(rng: &mut ChaCha8Rng, dim: usize) -> SubproblemModel {
        // Random diagonal metric in [0.5, 2.0]; random quadratic; l1 reg.
        let entries: Array1<f64> =
            Array1::from_iter((0..dim).map(|_| 0.5 + 1.5 * rng.random::<f64>()));
        let metric = Metric::new(
            crate::model::MetricKind::Diagonal { entries },
            0.5,
            2.0,
        )
        .unwrap();
        let linear: Array1<f64> =
            Array1::from_iter((0..dim).map(|_| rng.random::<f64>() * 4.0 - 2.0));
        let obj = ObjectiveSplit::new(
            Arc::new(SmoothFn::Quadratic {
                matrix: Array2::eye(dim),
                linear,
            }),
            Arc::new(Regularizer::L1 { weight: 0.3 }),
        );
        let anchor = Array1::from_iter((0..dim).map(|_| rng.random::<f64>() - 0.5));
        SubproblemModel::new(&obj, metric, anchor).unwrap()
    }

    #[test]
    fn a4_contraction_against_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let model = random_model(&mut rng, 3);
            let (_, q_star) = crate::oracle::subproblem_oracle(&model, 1e-14).unwrap();
            let sigma = model.metric().lower / model.metric().upper;
            let trace = contraction_trace(&model, 50).unwrap();
            for (l, &q) in trace.iter().enumerate() {
                let bound = (1.0 - sigma).powi(l as i32) * (-q_star);
                assert!(
                    q - q_star <= bound + 1e-9 * (1.0 + bound.abs()),
                    "A4 violated at step {l}: gap {} > bound {bound}",
                    q - q_star
                );
            }
        }
    }

    #[test]
    fn certificate_soundness_against_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..20 {
            let model = random_model(&mut rng, 4);
            for eta in [0.5, 0.9, 0.99] {
                let policy = InexactnessPolicy::certificate(eta, 0.25);
                let result = inner_solve(&model, &policy).unwrap();
                assert!(result.certified, "certificate should fire at desk scale");
                let (_, q_star) = crate::oracle::subproblem_oracle(&model, 1e-14).unwrap();
                assert!(
                    result.q_value <= eta * q_star + 1e-10,
                    "eta-rule violated: Q = {}, eta Q* = {}",
                    result.q_value,
                    eta * q_star
                );
                // Never worse than the anchor.
                assert!(result.q_value <= 0.0);
            }
        }
    }

    #[test]
    fn certificate_cap_yields_uncertified_result() {
        // Diagonal metric with m < M needs several inner steps to certify a
        // demanding eta; a tiny cap must flag the result instead of failing.
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let model = random_model(&mut rng, 3);
        let mut policy = InexactnessPolicy::certificate(0.999_999, 0.25);
        policy.max_inner = Some(2);
        let result = inner_solve(&model, &policy).unwrap();
        assert!(!result.certified);
        assert_eq!(result.iterations_used, 2);
        assert!(result.q_value <= 0.0);
    }

    #[test]
    fn fixed_count_hits_a4_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let model = random_model(&mut rng, 3);
            let sigma = model.metric().lower / model.metric().upper;
            let policy = InexactnessPolicy::fixed_count(5, sigma);
            let result = inner_solve(&model, &policy).unwrap();
            let (_, q_star) = crate::oracle::subproblem_oracle(&model, 1e-14).unwrap();
            let bound = (1.0 - sigma).powi(5) * (-q_star);
            assert!(result.q_value - q_star <= bound + 1e-9 * (1.0 + bound.abs()));
            assert_eq!(result.iterations_used, 5);
        }
    }
}
