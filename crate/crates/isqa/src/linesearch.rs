//! The four backtracking strategies determining the stepsize along the
//! fixed direction `d = candidate - anchor`.
//!
//! Trial stepsizes walk the grid `alpha_bar * beta^i`. The acceptance
//! inequalities (with `Delta` the model's linearized decrease at the
//! candidate and `F = f + g`):
//!
//! * LS1: `F(x + a d) - F(x) <= gamma a Delta`
//! * LS2: `||grad f(x + a d) - grad f(x)|| <= gamma ||d||` (the accepted
//!   update has `x_next - x = a d`, so the factor `a` on both sides of the
//!   written condition cancels against the trial step)
//! * LS3: `F(x + a d) - F(x) <= a (Delta + gamma/2 ||d||_H^2)`
//! * LS4: `f(x + a d) - f(x) <= a (<grad f(x), d> + gamma/2 ||d||_H^2)`
//!
//! Acceptance uses `<=` with an absolute slack of 1e-12 so analytically
//! tight cases are not rejected by round-off.

use crate::error::{Error, Result};
use crate::model::{ObjectiveSplit, SubproblemModel, Vector};

const ACCEPT_SLACK: f64 = 1e-12;

/// Default trial budget; exhaustion signals an upstream bug, not a search
/// failure (the stepsize provably exists).
pub const DEFAULT_TRIAL_BUDGET: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LsVariant {
    Ls1,
    Ls2,
    Ls3,
    Ls4,
}

impl LsVariant {
    pub fn label(&self) -> &'static str {
        match self {
            LsVariant::Ls1 => "ls1",
            LsVariant::Ls2 => "ls2",
            LsVariant::Ls3 => "ls3",
            LsVariant::Ls4 => "ls4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ls1" => Ok(LsVariant::Ls1),
            "ls2" => Ok(LsVariant::Ls2),
            "ls3" => Ok(LsVariant::Ls3),
            "ls4" => Ok(LsVariant::Ls4),
            other => Err(Error::usage(format!(
                "unknown line search variant {other:?} (expected ls1..ls4)"
            ))),
        }
    }
}

/// Variant plus its backtracking parameters.
#[derive(Debug, Clone)]
pub struct LineSearchSpec {
    pub variant: LsVariant,
    /// Trial shrink factor in (0, 1).
    pub beta: f64,
    /// Acceptance parameter; range depends on the variant.
    pub gamma: f64,
    /// Initial (and maximal) trial stepsize in (0, 1].
    pub alpha_bar: f64,
    pub max_trials: usize,
}

impl LineSearchSpec {
    pub fn new(variant: LsVariant, beta: f64, gamma: f64, alpha_bar: f64) -> Self {
        LineSearchSpec {
            variant,
            beta,
            gamma,
            alpha_bar,
            max_trials: DEFAULT_TRIAL_BUDGET,
        }
    }

    /// Validates ranges; `metric_lower` is the active policy's `m`, needed
    /// for the LS2 constraint `gamma < m/2`.
    pub fn validate(&self, metric_lower: f64) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::usage(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if !(self.alpha_bar > 0.0 && self.alpha_bar <= 1.0) {
            return Err(Error::usage(format!(
                "alpha_bar must lie in (0, 1], got {}",
                self.alpha_bar
            )));
        }
        match self.variant {
            LsVariant::Ls2 => {
                let half_m = metric_lower / 2.0;
                if !(self.gamma > 0.0 && self.gamma < half_m) {
                    return Err(Error::usage(format!(
                        "ls2.gamma must lie in (0, m/2) = (0, {half_m}), got {}",
                        self.gamma
                    )));
                }
            }
            _ => {
                if !(self.gamma > 0.0 && self.gamma < 1.0) {
                    return Err(Error::usage(format!(
                        "{}.gamma must lie in (0, 1), got {}",
                        self.variant.label(),
                        self.gamma
                    )));
                }
            }
        }
        if self.max_trials == 0 {
            return Err(Error::usage("max_trials must be positive"));
        }
        Ok(())
    }
}

/// Accepted stepsize with the trial count and the final inequality sides.
#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    /// Number of trials evaluated; `alpha = alpha_bar * beta^(trials - 1)`.
    pub trials: usize,
    pub accepted_condition_lhs: f64,
    pub accepted_condition_rhs: f64,
}

/// Evaluates one variant's acceptance inequality at trial stepsize `alpha`.
/// Returns `(accept, lhs, rhs)`.
pub fn ls_condition(
    variant: LsVariant,
    obj: &ObjectiveSplit,
    model: &SubproblemModel,
    candidate: &Vector,
    alpha: f64,
    gamma: f64,
) -> Result<(bool, f64, f64)> {
    let anchor = model.anchor();
    let direction = candidate - anchor;
    let trial = anchor + &(&direction * alpha);

    let (lhs, rhs) = match variant {
        LsVariant::Ls1 => {
            let f_anchor = obj.smooth_value(anchor) + model.g_at_anchor();
            let f_trial = obj.value_unchecked(&trial);
            let delta = model.eval_delta(candidate);
            (f_trial - f_anchor, gamma * alpha * delta)
        }
        LsVariant::Ls2 => {
            let grad_trial = obj.smooth_grad(&trial);
            let diff = &grad_trial - model.grad_at_anchor();
            let lhs = diff.dot(&diff).sqrt();
            let rhs = gamma * direction.dot(&direction).sqrt();
            (lhs, rhs)
        }
        LsVariant::Ls3 => {
            let f_anchor = obj.smooth_value(anchor) + model.g_at_anchor();
            let f_trial = obj.value_unchecked(&trial);
            let delta = model.eval_delta(candidate);
            let quad = 0.5 * gamma * model.metric().norm_sq(&direction);
            (f_trial - f_anchor, alpha * (delta + quad))
        }
        LsVariant::Ls4 => {
            let f_trial = obj.smooth_value(&trial);
            let f_anchor = obj.smooth_value(anchor);
            let slope = model.grad_at_anchor().dot(&direction);
            let quad = 0.5 * gamma * model.metric().norm_sq(&direction);
            (f_trial - f_anchor, alpha * (slope + quad))
        }
    };

    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(Error::numerical(format!(
            "non-finite line search condition at alpha = {alpha}: lhs = {lhs}, rhs = {rhs}"
        )));
    }
    Ok((lhs <= rhs + ACCEPT_SLACK, lhs, rhs))
}

/// Returns the largest trial stepsize on the grid passing the variant's
/// condition. A zero direction accepts `alpha_bar` immediately.
pub fn backtrack(
    spec: &LineSearchSpec,
    obj: &ObjectiveSplit,
    model: &SubproblemModel,
    candidate: &Vector,
) -> Result<LineSearchOutcome> {
    if candidate == model.anchor() {
        return Ok(LineSearchOutcome {
            alpha: spec.alpha_bar,
            trials: 1,
            accepted_condition_lhs: 0.0,
            accepted_condition_rhs: 0.0,
        });
    }
    let mut alpha = spec.alpha_bar;
    for trial in 1..=spec.max_trials {
        let (accept, lhs, rhs) =
            ls_condition(spec.variant, obj, model, candidate, alpha, spec.gamma)?;
        if accept {
            return Ok(LineSearchOutcome {
                alpha,
                trials: trial,
                accepted_condition_lhs: lhs,
                accepted_condition_rhs: rhs,
            });
        }
        alpha *= spec.beta;
    }
    Err(Error::LineSearchBudget {
        budget: spec.max_trials,
        iteration: 0,
    })
}
