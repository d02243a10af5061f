//! Outer loop: metric selection, inexact subproblem solve, line search,
//! convex-combination update, trace recording, termination.

use crate::error::{Error, Result};
use crate::inner::{inner_solve, InexactnessPolicy, InnerResult, InnerStopMode};
use crate::linesearch::{backtrack, LineSearchOutcome, LineSearchSpec};
use crate::metric_policy::{HistoryPair, MetricPolicy, MetricPolicyKind};
use crate::model::{SubproblemModel, Vector};
use crate::problems::ProblemInstance;

/// Fully specified solver run.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub problem: ProblemInstance,
    pub metric_policy: MetricPolicy,
    pub inexactness: InexactnessPolicy,
    pub linesearch: LineSearchSpec,
    pub max_outer: usize,
    /// Stop once `||d||_H` falls to this value.
    pub tol_direction: f64,
    /// Stop once `F(x) - F*` falls to this value (requires a known `F*`).
    pub tol_fgap: Option<f64>,
    pub seed: u64,
}

impl SolverConfig {
    /// Cross-field validation: variant-specific gamma ranges against the
    /// metric band, inner accuracy ranges, solvability of the instance.
    pub fn validate(&self) -> Result<()> {
        if !self.problem.solvable() {
            return Err(Error::usage(format!(
                "instance {:?} is an evaluation fixture and cannot be solved",
                self.problem.name
            )));
        }
        if !self.problem.objective.reg.contains(&self.problem.x0) {
            return Err(Error::usage("x0 must lie in the regularizer domain"));
        }
        self.linesearch.validate(self.metric_policy.lower)?;
        self.inexactness.validate()?;
        if matches!(self.inexactness.mode, InnerStopMode::FixedCount { .. }) {
            let certified = self.metric_policy.lower / self.metric_policy.upper;
            if self.inexactness.sigma > certified + 1e-12 {
                return Err(Error::usage(format!(
                    "declared sigma {} exceeds the certified inner contraction m/M = {certified}",
                    self.inexactness.sigma
                )));
            }
        }
        if self.tol_direction < 0.0 {
            return Err(Error::usage("tol_direction must be nonnegative"));
        }
        if let Some(tol) = self.tol_fgap {
            if tol < 0.0 {
                return Err(Error::usage("tol_fgap must be nonnegative"));
            }
            if self.problem.known_f_star.is_none() {
                return Err(Error::usage(
                    "tol_fgap requires an instance with a known F*",
                ));
            }
        }
        Ok(())
    }
}

/// One outer-iteration trace row; every diagnostic audit reads these.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `F(x_k)` before the update.
    pub f_k: f64,
    pub alpha_k: f64,
    /// `||d_k||` with `d_k` the inner candidate minus the anchor.
    pub dir_norm: f64,
    /// `||d_k||` in the iteration metric.
    pub dir_norm_metric: f64,
    /// `Q(candidate)` for this iteration's model.
    pub q_bar: f64,
    pub inner_iters: usize,
    pub certified: bool,
    pub ls_trials: usize,
    /// Distance from `x_k` to the known optimal set, when a projector
    /// exists.
    pub dist_to_x: Option<f64>,
    /// `F(x_k) - F*`, when `F*` is known.
    pub fgap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TerminationReason {
    DirectionTolerance,
    FgapTolerance,
    MaxOuter,
    Error(String),
}

impl TerminationReason {
    pub fn label(&self) -> &'static str {
        match self {
            TerminationReason::DirectionTolerance => "direction-tolerance",
            TerminationReason::FgapTolerance => "fgap-tolerance",
            TerminationReason::MaxOuter => "max-outer",
            TerminationReason::Error(_) => "error",
        }
    }
}

/// Completed (or aborted) run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub final_point: Vector,
    pub final_f: f64,
    pub records: Vec<IterationRecord>,
    pub termination_reason: TerminationReason,
    pub total_inner_iterations: usize,
}

/// Mutable loop state across outer iterations.
pub struct SolverState {
    x: Vector,
    smooth_value: f64,
    reg_value: f64,
    history: Vec<HistoryPair>,
    k: usize,
}

impl SolverState {
    pub fn new(config: &SolverConfig) -> Self {
        let x = config.problem.x0.clone();
        let smooth_value = config.problem.objective.smooth_value(&x);
        let reg_value = config.problem.objective.reg_value(&x);
        SolverState {
            x,
            smooth_value,
            reg_value,
            history: Vec::new(),
            k: 0,
        }
    }

    pub fn current_point(&self) -> &Vector {
        &self.x
    }

    pub fn current_value(&self) -> f64 {
        self.smooth_value + self.reg_value
    }
}

/// Everything a step observer may inspect about one iteration.
pub struct StepObservation<'a> {
    pub k: usize,
    pub model: &'a SubproblemModel,
    pub inner: &'a InnerResult,
    pub line: &'a LineSearchOutcome,
    pub x_next: &'a Vector,
}

fn history_window(policy: &MetricPolicy) -> usize {
    match policy.kind {
        MetricPolicyKind::ScaledIdentity { .. } => 1,
        MetricPolicyKind::ClippedDiagonal => 2,
        MetricPolicyKind::ClippedSecant { memory } => memory + 1,
    }
}

/// Executes one pass of the outer loop, mutating `state` and returning the
/// iteration's record.
pub fn sqa_step(state: &mut SolverState, config: &SolverConfig) -> Result<IterationRecord> {
    sqa_step_observed(state, config, &mut |_: &StepObservation| {})
}

fn sqa_step_observed(
    state: &mut SolverState,
    config: &SolverConfig,
    observer: &mut dyn FnMut(&StepObservation),
) -> Result<IterationRecord> {
    let obj = &config.problem.objective;
    let grad = obj.smooth_grad(&state.x);

    state.history.push(HistoryPair {
        x: state.x.clone(),
        grad,
    });
    let window = history_window(&config.metric_policy);
    if state.history.len() > window {
        let drop = state.history.len() - window;
        state.history.drain(..drop);
    }

    let metric = config.metric_policy.next_metric(&state.history);
    let model = SubproblemModel::new(obj, metric, state.x.clone())?;
    let inner = inner_solve(&model, &config.inexactness)?;

    let outcome = backtrack(&config.linesearch, obj, &model, &inner.candidate).map_err(|e| {
        match e {
            Error::LineSearchBudget { budget, .. } => Error::LineSearchBudget {
                budget,
                iteration: state.k,
            },
            other => other,
        }
    })?;

    let direction = &inner.candidate - &state.x;
    let dir_norm = direction.dot(&direction).sqrt();
    let dir_norm_metric = model.metric().norm(&direction);

    let x_next = if outcome.alpha == 1.0 {
        inner.candidate.clone()
    } else {
        &state.x + &(&direction * outcome.alpha)
    };

    let f_k = state.current_value();
    let record = IterationRecord {
        k: state.k,
        f_k,
        alpha_k: outcome.alpha,
        dir_norm,
        dir_norm_metric,
        q_bar: inner.q_value,
        inner_iters: inner.iterations_used,
        certified: inner.certified,
        ls_trials: outcome.trials,
        dist_to_x: config
            .problem
            .known_projector
            .as_ref()
            .map(|p| p.distance(&state.x)),
        fgap: config.problem.known_f_star.map(|fs| f_k - fs),
    };

    observer(&StepObservation {
        k: state.k,
        model: &model,
        inner: &inner,
        line: &outcome,
        x_next: &x_next,
    });

    state.smooth_value = obj.smooth_value(&x_next);
    state.reg_value = obj.reg_value(&x_next);
    state.x = x_next;
    state.k += 1;

    Ok(record)
}

/// First satisfied criterion in fixed order: fgap, direction, budget.
pub fn termination_check(
    record: &IterationRecord,
    config: &SolverConfig,
) -> Option<TerminationReason> {
    if let (Some(gap), Some(tol)) = (record.fgap, config.tol_fgap) {
        if gap <= tol {
            return Some(TerminationReason::FgapTolerance);
        }
    }
    if record.dir_norm_metric <= config.tol_direction {
        return Some(TerminationReason::DirectionTolerance);
    }
    if record.k + 1 >= config.max_outer {
        return Some(TerminationReason::MaxOuter);
    }
    None
}

/// Runs the outer loop to termination. Deterministic given the config.
pub fn sqa_run(config: &SolverConfig) -> SolveReport {
    sqa_run_observed(config, &mut |_: &StepObservation| {})
}

/// As [`sqa_run`], invoking `observer` with full per-iteration context
/// (model, inner result, line search outcome) before each update. Audits
/// that need oracle access to the subproblem hook in here.
pub fn sqa_run_observed(
    config: &SolverConfig,
    observer: &mut dyn FnMut(&StepObservation),
) -> SolveReport {
    let mut state = SolverState::new(config);
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut reason = TerminationReason::MaxOuter;

    while records.len() < config.max_outer {
        match sqa_step_observed(&mut state, config, observer) {
            Ok(record) => {
                let stop = termination_check(&record, config);
                records.push(record);
                if let Some(r) = stop {
                    reason = r;
                    break;
                }
            }
            Err(e) => {
                reason = TerminationReason::Error(e.to_string());
                break;
            }
        }
    }

    let total_inner_iterations = records.iter().map(|r| r.inner_iters).sum();
    SolveReport {
        final_point: state.x,
        final_f: state.smooth_value + state.reg_value,
        records,
        termination_reason: reason,
        total_inner_iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linesearch::LsVariant;
    use crate::model::ObjectiveSplit;
    use crate::problems::{catalog_instantiate, ProblemInstance, Regularizer, SmoothFn};
    use ndarray::{array, Array2};
    use std::sync::Arc;

    fn one_d_quadratic(x0: f64) -> ProblemInstance {
        let objective = ObjectiveSplit::new(
            Arc::new(SmoothFn::Quadratic {
                matrix: Array2::eye(1),
                linear: array![0.0],
            }),
            Arc::new(Regularizer::Zero),
        );
        ProblemInstance {
            objective,
            name: "unit-quadratic".into(),
            known_f_star: Some(0.0),
            known_projector: Some(crate::problems::Projector::Point(array![0.0])),
            known_qg_mu: Some(1.0),
            known_local_l: Some(1.0),
            level_bounded: true,
            x0: array![x0],
            dimension: 1,
            seed: 0,
        }
    }

    fn basic_config(problem: ProblemInstance, variant: LsVariant, gamma: f64) -> SolverConfig {
        SolverConfig {
            problem,
            metric_policy: MetricPolicy::scaled_identity(1.0).unwrap(),
            inexactness: InexactnessPolicy::fixed_count(1, 0.5),
            linesearch: LineSearchSpec::new(variant, 0.5, gamma, 1.0),
            max_outer: 100,
            tol_direction: 1e-12,
            tol_fgap: None,
            seed: 0,
        }
    }

    #[test]
    fn step_from_optimum_is_fixed_point() {
        let config = basic_config(one_d_quadratic(0.0), LsVariant::Ls1, 0.5);
        config.validate().unwrap();
        let mut state = SolverState::new(&config);
        let record = sqa_step(&mut state, &config).unwrap();
        assert_eq!(record.dir_norm, 0.0);
        assert_eq!(record.alpha_k, 1.0);
        assert_eq!(state.current_point()[0], 0.0);
    }

    #[test]
    fn one_step_reaches_minimizer_on_unit_quadratic() {
        // Exact inner solve (m = M), LS1 gamma = 0.5 accepts alpha = 1,
        // so x1 = 0 from x0 = 1.
        let config = basic_config(one_d_quadratic(1.0), LsVariant::Ls1, 0.5);
        config.validate().unwrap();
        let mut state = SolverState::new(&config);
        let record = sqa_step(&mut state, &config).unwrap();
        assert_eq!(record.alpha_k, 1.0);
        assert_eq!(record.dir_norm, 1.0);
        assert_eq!(state.current_point()[0], 0.0);
    }

    #[test]
    fn zero_budget_returns_empty_report() {
        let mut config = basic_config(one_d_quadratic(1.0), LsVariant::Ls3, 0.5);
        config.max_outer = 0;
        config.tol_direction = 0.0;
        let report = sqa_run(&config);
        assert!(report.records.is_empty());
        assert_eq!(report.termination_reason, TerminationReason::MaxOuter);
    }

    #[test]
    fn monotone_decrease_on_catalog_instance() {
        let instance = catalog_instantiate("sc-quadratic-l1", 5, 42).unwrap();
        let mut config = SolverConfig {
            problem: instance,
            metric_policy: MetricPolicy::new(
                MetricPolicyKind::ClippedDiagonal,
                0.5,
                2.5,
            )
            .unwrap(),
            inexactness: InexactnessPolicy::certificate(0.9, 0.2),
            linesearch: LineSearchSpec::new(LsVariant::Ls3, 0.5, 0.5, 1.0),
            max_outer: 500,
            tol_direction: 0.0,
            tol_fgap: None,
            seed: 42,
        };
        config.tol_direction = 0.0;
        config.validate().unwrap();
        let report = sqa_run(&config);
        assert!(!report.records.is_empty());
        for pair in report.records.windows(2) {
            assert!(
                pair[1].f_k <= pair[0].f_k + 1e-12,
                "monotone decrease violated at k = {}",
                pair[1].k
            );
        }
    }

    #[test]
    fn fgap_termination_fires_first() {
        let instance = catalog_instantiate("sc-quadratic-l1", 4, 7).unwrap();
        let config = SolverConfig {
            problem: instance,
            metric_policy: MetricPolicy::scaled_identity(0.5).unwrap(),
            inexactness: InexactnessPolicy::fixed_count(1, 0.9),
            linesearch: LineSearchSpec::new(LsVariant::Ls3, 0.5, 0.9, 1.0),
            max_outer: 5000,
            tol_direction: 0.0,
            tol_fgap: Some(1e-8),
            seed: 7,
        };
        config.validate().unwrap();
        let report = sqa_run(&config);
        assert_eq!(report.termination_reason, TerminationReason::FgapTolerance);
        let last = report.records.last().unwrap();
        assert!(last.fgap.unwrap() <= 1e-8);
    }

    #[test]
    fn identical_configs_give_bit_identical_records() {
        let make = || {
            let instance = catalog_instantiate("sc-quadratic-l1", 4, 3).unwrap();
            let config = SolverConfig {
                problem: instance,
                metric_policy: MetricPolicy::new(
                    MetricPolicyKind::ClippedSecant { memory: 4 },
                    0.5,
                    2.5,
                )
                .unwrap(),
                inexactness: InexactnessPolicy::certificate(0.9, 0.2),
                linesearch: LineSearchSpec::new(LsVariant::Ls1, 0.5, 0.4, 1.0),
                max_outer: 60,
                tol_direction: 1e-13,
                tol_fgap: None,
                seed: 3,
            };
            sqa_run(&config)
        };
        let a = make();
        let b = make();
        assert_eq!(a.records, b.records);
        assert_eq!(a.final_point, b.final_point);
    }

    #[test]
    fn config_rejects_fixture_instance() {
        let instance = catalog_instantiate("counterexample-region", 2, 0).unwrap();
        let config = SolverConfig {
            problem: instance,
            metric_policy: MetricPolicy::scaled_identity(1.0).unwrap(),
            inexactness: InexactnessPolicy::certificate(0.9, 0.5),
            linesearch: LineSearchSpec::new(LsVariant::Ls3, 0.5, 0.5, 1.0),
            max_outer: 10,
            tol_direction: 1e-10,
            tol_fgap: None,
            seed: 0,
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn config_rejects_uncertified_sigma() {
        let mut config = basic_config(one_d_quadratic(1.0), LsVariant::Ls3, 0.5);
        config.metric_policy =
            MetricPolicy::new(MetricPolicyKind::ClippedDiagonal, 0.5, 2.0).unwrap();
        config.inexactness = InexactnessPolicy::fixed_count(3, 0.5); // m/M = 0.25
        assert!(config.validate().is_err());
    }
}
