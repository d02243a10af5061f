//! Rate estimators, decrease audits, stepsize floors and growth-condition
//! probes over completed solve reports.
//!
//! Asymptotic statements (liminf floors, vanishing directions, `o(1/k)`
//! tails) are approximated at desk scale by burn-in minima and decade-mean
//! decay ratios; the 10% thresholds are pragmatic defaults recorded in the
//! outcome, not claims of theorem-exactness.

use ndarray::Array1;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::driver::{sqa_run_observed, IterationRecord, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::linesearch::LsVariant;
use crate::model::Vector;
use crate::problems::ProblemInstance;

/// Absolute audit slack, scaled by `(1 + |F_k|)` where noted.
const AUDIT_SLACK: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Rate reports
// ---------------------------------------------------------------------------

/// Convergence-rate measurements extracted from one run.
#[derive(Debug, Clone)]
pub struct RateReport {
    /// `(F_{k+1} - F*)/(F_k - F*)` per consecutive recorded pair.
    pub q_ratios: Vec<f64>,
    /// Max Q-ratio over the post-burn-in tail.
    pub tail_q_max: f64,
    /// `k (F_k - F*)`.
    pub sublinear_scores: Vec<f64>,
    /// `||x_k - x*||^(1/k)` for `k >= 1`, from the recorded distances.
    pub r_linear_scores: Vec<f64>,
}

/// Q-ratios of the function-value gaps. Gaps at or below the numerical
/// floor `1e-14` end the scan; a gap below `F* - 1e-12` means the supplied
/// `F*` is inconsistent with the run.
pub fn qlinear_ratio(
    report: &SolveReport,
    f_star: f64,
    burn_in: usize,
) -> Result<(Vec<f64>, f64)> {
    let mut ratios = Vec::new();
    let mut tail_max: f64 = 0.0;
    for pair in report.records.windows(2) {
        let gap0 = pair[0].f_k - f_star;
        let gap1 = pair[1].f_k - f_star;
        if gap0 < -1e-12 || gap1 < -1e-12 {
            return Err(Error::usage(format!(
                "inconsistent F*: recorded value beats it by {:.3e}",
                (gap0.min(gap1)).abs()
            )));
        }
        if gap0 <= 1e-14 || gap1 < 0.0 {
            break;
        }
        let ratio = gap1.max(0.0) / gap0;
        if pair[0].k >= burn_in {
            tail_max = tail_max.max(ratio);
        }
        ratios.push(ratio);
    }
    Ok((ratios, tail_max))
}

/// Contraction constant of the Q-linear theorem:
/// `eta mu / (4 M)` when `mu <= 2 M`, otherwise `1 - M/mu`.
pub fn theorem_zeta(eta: f64, mu: f64, upper_m: f64) -> f64 {
    if mu <= 2.0 * upper_m {
        eta * mu / (4.0 * upper_m)
    } else {
        1.0 - upper_m / mu
    }
}

/// The scaled-gap sequence `k (F_k - F*)`.
pub fn sublinear_score(report: &SolveReport, f_star: f64) -> Vec<f64> {
    report
        .records
        .iter()
        .map(|r| r.k as f64 * (r.f_k - f_star))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SublinearVerdict {
    Pass,
    Fail,
    InsufficientData,
}

/// `o(1/k)` verdict: the tail-decade mean of the scores must fall below 10%
/// of the mid-run (two decades earlier) mean. Needs at least 1000
/// iterations to resolve a decade structure.
pub fn sublinear_verdict(scores: &[f64]) -> SublinearVerdict {
    let k_max = scores.len().saturating_sub(1);
    if k_max < 1000 {
        return SublinearVerdict::InsufficientData;
    }
    let tail = window_mean(scores, k_max / 10, k_max);
    let mid = window_mean(scores, k_max / 1000, k_max / 100);
    if !(mid > 0.0) {
        // Mid-run scores already at zero: the tail cannot be worse.
        return SublinearVerdict::Pass;
    }
    if tail <= 0.1 * mid {
        SublinearVerdict::Pass
    } else {
        SublinearVerdict::Fail
    }
}

/// Mean of `values[k]` over `k` in `(lo, hi]`.
fn window_mean(values: &[f64], lo: usize, hi: usize) -> f64 {
    let hi = hi.min(values.len().saturating_sub(1));
    if hi <= lo {
        return f64::NAN;
    }
    let slice = &values[(lo + 1)..=hi];
    slice.iter().sum::<f64>() / slice.len() as f64
}

/// Smallest stepsize after burn-in, the empirical stand-in for the
/// theorems' uniform lower bound.
pub fn observed_alpha_floor(records: &[IterationRecord], burn_in: usize) -> f64 {
    records
        .iter()
        .filter(|r| r.k >= burn_in)
        .map(|r| r.alpha_k)
        .fold(f64::INFINITY, f64::min)
}

/// Assembles the full rate report for a run with known `F*`.
pub fn rate_report(report: &SolveReport, f_star: f64, burn_in: usize) -> Result<RateReport> {
    let (q_ratios, tail_q_max) = qlinear_ratio(report, f_star, burn_in)?;
    let sublinear_scores = sublinear_score(report, f_star);
    let r_linear_scores = report
        .records
        .iter()
        .filter(|r| r.k >= 1)
        .filter_map(|r| r.dist_to_x.map(|d| d.powf(1.0 / r.k as f64)))
        .collect();
    Ok(RateReport {
        q_ratios,
        tail_q_max,
        sublinear_scores,
        r_linear_scores,
    })
}

// ---------------------------------------------------------------------------
// Explicit bounds
// ---------------------------------------------------------------------------

/// Per-iteration explicit sublinear bound
/// `(M R0^2 + gap_0) / (sum_{i<k} alpha_i c)` with `c = gamma eta` for LS1
/// and `c = eta` for LS2-4. Entry `j` is the bound at `k = j + 1`.
pub fn theorem2_bound(
    records: &[IterationRecord],
    f_star: f64,
    upper_m: f64,
    r0: f64,
    gamma: f64,
    eta: f64,
    variant: LsVariant,
) -> Vec<f64> {
    if records.is_empty() {
        return Vec::new();
    }
    let factor = match variant {
        LsVariant::Ls1 => gamma * eta,
        _ => eta,
    };
    let numerator = upper_m * r0 * r0 + (records[0].f_k - f_star);
    let mut bounds = Vec::with_capacity(records.len().saturating_sub(1));
    let mut denom = 0.0;
    for pair in records.windows(2) {
        denom += pair[0].alpha_k * factor;
        bounds.push(numerator / denom);
    }
    bounds
}

/// Variant-specific liminf stepsize floor under gradient Lipschitz
/// continuity (constant `lip`), capped at the search's own `alpha_bar`.
pub fn stepsize_floor(
    variant: LsVariant,
    beta: f64,
    gamma: f64,
    alpha_bar: f64,
    eta: f64,
    lower_m: f64,
    lip: f64,
) -> f64 {
    let root = (1.0 - eta).max(0.0).sqrt();
    let raw = match variant {
        LsVariant::Ls1 => beta * (1.0 - gamma) * lower_m * (eta + 1.0 + root) / (lip * (1.0 + root)),
        LsVariant::Ls2 => beta * gamma / lip,
        LsVariant::Ls3 | LsVariant::Ls4 => beta * gamma * lower_m / lip,
    };
    raw.min(1.0).min(alpha_bar)
}

/// True iff the post-burn-in stepsize minimum respects the floor.
pub fn stepsize_floor_audit(report: &SolveReport, floor: f64, burn_in: usize) -> bool {
    observed_alpha_floor(&report.records, burn_in) >= floor - 1e-12
}

// ---------------------------------------------------------------------------
// Abstract sequence lemma
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecursionVerdict {
    HypothesisHolds,
    BigOConfirmed,
    SmallOConfirmed,
    Violated,
}

/// Checks the three-sequence recursion
/// `delta_{k+1} <= delta_k + c (-lambda_k delta_k + A_k lambda_k^2 / 2)`
/// pointwise, then classifies the decay of `k delta_k`: bounded confirms
/// `O(1/k)`; vanishing (together with `A_k -> 0`) confirms `o(1/k)`.
pub fn recursion_rate_check(
    deltas: &[f64],
    lambdas: &[f64],
    a_seq: &[f64],
    c: f64,
) -> Result<RecursionVerdict> {
    if deltas.len() != lambdas.len() || deltas.len() != a_seq.len() {
        return Err(Error::usage("sequences must have equal length"));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::usage("c must lie in (0, 1]"));
    }
    if deltas.iter().chain(a_seq).any(|&v| v < 0.0) {
        return Err(Error::usage("sequences must be nonnegative"));
    }
    if lambdas.iter().any(|&l| !(0.0..=1.0).contains(&l)) {
        return Err(Error::usage("lambda_k must lie in [0, 1]"));
    }

    for k in 0..deltas.len().saturating_sub(1) {
        let rhs = deltas[k]
            + c * (-lambdas[k] * deltas[k] + 0.5 * a_seq[k] * lambdas[k] * lambdas[k]);
        if deltas[k + 1] > rhs + 1e-12 * (1.0 + deltas[k].abs()) {
            return Ok(RecursionVerdict::Violated);
        }
    }

    let n = deltas.len();
    let scaled: Vec<f64> = deltas
        .iter()
        .enumerate()
        .map(|(k, &d)| k as f64 * d)
        .collect();

    // Vanishing tests via the tail's log-log slope: robust from a hundred
    // to a hundred thousand terms.
    if tail_vanishes(a_seq) && tail_vanishes(&scaled) {
        return Ok(RecursionVerdict::SmallOConfirmed);
    }

    // Boundedness of k delta_k: the late maximum must not outgrow the
    // early maximum.
    let half = n / 2;
    let early_max = scaled[..half.max(1)].iter().cloned().fold(0.0, f64::max);
    let late_max = scaled[half..].iter().cloned().fold(0.0, f64::max);
    if late_max <= 1.2 * early_max + 1e-12 {
        return Ok(RecursionVerdict::BigOConfirmed);
    }
    Ok(RecursionVerdict::HypothesisHolds)
}

/// Whether the sequence's tail decays toward zero, judged by the log-log
/// slope over the last three quarters of the indices (slope at or below
/// -0.2 counts, as does an identically zero tail).
fn tail_vanishes(values: &[f64]) -> bool {
    let n = values.len();
    if n < 16 {
        return false;
    }
    let from = n / 4;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut tail_max: f64 = 0.0;
    for (k, &v) in values.iter().enumerate().skip(from.max(1)) {
        tail_max = tail_max.max(v);
        if v > 0.0 {
            xs.push((k as f64).ln());
            ys.push(v.ln());
        }
    }
    if tail_max == 0.0 {
        return true;
    }
    if xs.len() < 10 {
        return false;
    }
    match least_squares_fit(&xs, &ys) {
        Ok((_, slope, _)) => slope <= -0.2,
        Err(_) => false,
    }
}

// ---------------------------------------------------------------------------
// Growth conditions
// ---------------------------------------------------------------------------

/// Sampling box half-width shared by the growth probes.
const PROBE_HALFWIDTH: f64 = 5.0;

/// Empirical quadratic-growth modulus: the minimum of
/// `2 (F(x) - F*) / dist(x, X)^2` over sampled points of the initial
/// sublevel set.
pub fn qg_estimate(instance: &ProblemInstance, samples: usize, seed: u64) -> Result<f64> {
    qg_estimate_in_box(instance, samples, seed, PROBE_HALFWIDTH)
}

/// As [`qg_estimate`] with an explicit sampling half-width around the
/// optimal set.
pub fn qg_estimate_in_box(
    instance: &ProblemInstance,
    samples: usize,
    seed: u64,
    halfwidth: f64,
) -> Result<f64> {
    let (f_star, projector) = oracle_fields(instance)?;
    let level = instance.objective.value(&instance.x0)?;
    let center = projector.project(&Array1::zeros(instance.dim()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let mut used = 0;
    for _ in 0..samples {
        let x: Vector = (0..instance.dim())
            .map(|i| center[i] + (rng.random::<f64>() * 2.0 - 1.0) * halfwidth)
            .collect();
        let value = instance.objective.value(&x)?;
        if !value.is_finite() || value > level {
            continue;
        }
        let dist = projector.distance(&x);
        if dist < 1e-9 {
            continue;
        }
        used += 1;
        best = best.min(2.0 * (value - f_star) / (dist * dist));
    }
    if used == 0 {
        return Err(Error::usage(
            "no admissible samples for the QG estimate; widen the box or raise samples",
        ));
    }
    Ok(best)
}

/// A sampled point and mixing weight violating the optimal-set
/// strong-convexity inequality.
#[derive(Debug, Clone)]
pub struct OsscWitness {
    pub x: Vector,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Searches for a violation of
/// `F(lx + (1-l) P(x)) <= l F(x) + (1-l) F* - mu l (1-l)/2 dist(x, X)^2`.
/// Returns the first witness found, or `None` when the inequality held on
/// every sample.
pub fn ossc_violation_search(
    instance: &ProblemInstance,
    mu: f64,
    samples: usize,
    seed: u64,
) -> Result<Option<OsscWitness>> {
    let (f_star, projector) = oracle_fields(instance)?;
    let center = projector.project(&Array1::zeros(instance.dim()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x: Vector = (0..instance.dim())
            .map(|i| center[i] + (rng.random::<f64>() * 2.0 - 1.0) * PROBE_HALFWIDTH)
            .collect();
        let value = instance.objective.value(&x)?;
        if !value.is_finite() {
            continue;
        }
        let proj = projector.project(&x);
        let diff = &x - &proj;
        let dist_sq = diff.dot(&diff);
        if dist_sq < 1e-18 {
            continue;
        }
        for lambda in [rng.random::<f64>(), 0.25, 0.5, 0.75] {
            let mix = &x * lambda + &proj * (1.0 - lambda);
            let lhs = instance.objective.value(&mix)?;
            let rhs = lambda * value + (1.0 - lambda) * f_star
                - 0.5 * mu * lambda * (1.0 - lambda) * dist_sq;
            if lhs > rhs + 1e-12 * (1.0 + rhs.abs()) {
                return Ok(Some(OsscWitness {
                    x,
                    lambda,
                    lhs,
                    rhs,
                }));
            }
        }
    }
    Ok(None)
}

fn oracle_fields(
    instance: &ProblemInstance,
) -> Result<(f64, &crate::problems::Projector)> {
    let f_star = instance
        .known_f_star
        .ok_or_else(|| Error::usage("instance has no known F*"))?;
    let projector = instance
        .known_projector
        .as_ref()
        .ok_or_else(|| Error::usage("instance has no known projector"))?;
    Ok((f_star, projector))
}

// ---------------------------------------------------------------------------
// Direction decay
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct DecayAudit {
    pub pass: bool,
    pub insufficient_data: bool,
    /// tail-decade mean / first-decade mean of the direction norms.
    pub ratio: f64,
}

/// Vanishing-direction audit: the tail-decade mean of `||d_k||` must fall
/// below 10% of the first-decade mean. Runs too short to form two decades
/// pass vacuously with the flag set.
pub fn direction_decay_audit(report: &SolveReport) -> DecayAudit {
    let norms: Vec<f64> = report.records.iter().map(|r| r.dir_norm).collect();
    let k_max = norms.len().saturating_sub(1);
    if k_max < 20 {
        return DecayAudit {
            pass: true,
            insufficient_data: true,
            ratio: f64::NAN,
        };
    }
    let head_mean = {
        let slice = &norms[..=(k_max / 10).max(1)];
        slice.iter().sum::<f64>() / slice.len() as f64
    };
    let tail_mean = window_mean(&norms, k_max - k_max / 10, k_max);
    let ratio = if head_mean > 0.0 {
        tail_mean / head_mean
    } else {
        0.0
    };
    DecayAudit {
        pass: ratio <= 0.1,
        insufficient_data: false,
        ratio,
    }
}

// ---------------------------------------------------------------------------
// Record-level audits
// ---------------------------------------------------------------------------

/// Named audit families exposed to the benchmark configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuditKind {
    /// Per-step relation between the F decrease and `Q(candidate)`.
    Lemma2,
    /// Sufficient decrease with the explicit variant constant.
    Lemma3,
    /// Explicit sublinear bound domination.
    Thm2Bound,
    /// Stepsize floor from the local Lipschitz constant.
    Floor,
    /// Inner-solver soundness: certificate vs oracle, contraction, and the
    /// model-decrease inequality.
    A4,
}

impl AuditKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lemma2" => Ok(AuditKind::Lemma2),
            "lemma3" => Ok(AuditKind::Lemma3),
            "thm2_bound" => Ok(AuditKind::Thm2Bound),
            "floor" => Ok(AuditKind::Floor),
            "a4" => Ok(AuditKind::A4),
            other => Err(Error::config(format!(
                "unknown audit {other:?}; expected lemma2, lemma3, thm2_bound, floor, a4"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            AuditKind::Lemma2 => "lemma2",
            AuditKind::Lemma3 => "lemma3",
            AuditKind::Thm2Bound => "thm2_bound",
            AuditKind::Floor => "floor",
            AuditKind::A4 => "a4",
        }
    }

    pub fn all() -> Vec<AuditKind> {
        vec![
            AuditKind::Lemma2,
            AuditKind::Lemma3,
            AuditKind::Thm2Bound,
            AuditKind::Floor,
            AuditKind::A4,
        ]
    }
}

/// Result of one audit over one run.
#[derive(Debug, Clone)]
pub struct AuditOutcome {
    pub kind: AuditKind,
    pub passed: bool,
    pub checked: usize,
    pub violations: usize,
    pub detail: String,
}

impl AuditOutcome {
    fn skipped(kind: AuditKind, why: &str) -> Self {
        AuditOutcome {
            kind,
            passed: true,
            checked: 0,
            violations: 0,
            detail: format!("skipped: {why}"),
        }
    }
}

/// Sufficient-decrease constant: `gamma eta / (2 (1 + sqrt(1 - eta)))` for
/// LS1, `eta / (2 (1 + sqrt(1 - eta)))` for LS2-4.
pub fn sufficient_decrease_constant(variant: LsVariant, gamma: f64, eta: f64) -> f64 {
    let base = eta / (2.0 * (1.0 + (1.0 - eta).max(0.0).sqrt()));
    match variant {
        LsVariant::Ls1 => gamma * base,
        _ => base,
    }
}

fn decrease_pairs(records: &[IterationRecord]) -> impl Iterator<Item = (&IterationRecord, f64)> {
    records
        .windows(2)
        .map(|pair| (&pair[0], pair[1].f_k - pair[0].f_k))
}

/// Lemma 2 audit: `F(x_{k+1}) - F(x_k) <= gamma alpha_k Q_k` for LS1 and
/// `<= alpha_k Q_k` for LS2-4. Uncertified iterations are excluded.
pub fn audit_lemma2(
    records: &[IterationRecord],
    variant: LsVariant,
    gamma: f64,
) -> AuditOutcome {
    let factor = match variant {
        LsVariant::Ls1 => gamma,
        _ => 1.0,
    };
    let mut checked = 0;
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for (rec, decrease) in decrease_pairs(records) {
        if !rec.certified {
            continue;
        }
        checked += 1;
        let bound = factor * rec.alpha_k * rec.q_bar;
        let slack = AUDIT_SLACK * (1.0 + rec.f_k.abs());
        if decrease > bound + slack {
            violations += 1;
            worst = worst.max(decrease - bound);
        }
    }
    AuditOutcome {
        kind: AuditKind::Lemma2,
        passed: violations == 0,
        checked,
        violations,
        detail: if violations == 0 {
            format!("{checked} pairs checked")
        } else {
            format!("{violations} violations, worst excess {worst:.3e}")
        },
    }
}

/// Lemma 3 audit: `F(x_{k+1}) - F(x_k) <= -alpha_k c1 ||d_k||_H^2` with the
/// variant-specific `c1`.
pub fn audit_lemma3(
    records: &[IterationRecord],
    variant: LsVariant,
    gamma: f64,
    eta: f64,
) -> AuditOutcome {
    let c1 = sufficient_decrease_constant(variant, gamma, eta);
    let mut checked = 0;
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for (rec, decrease) in decrease_pairs(records) {
        if !rec.certified {
            continue;
        }
        checked += 1;
        let bound = -rec.alpha_k * c1 * rec.dir_norm_metric * rec.dir_norm_metric;
        let slack = AUDIT_SLACK * (1.0 + rec.f_k.abs());
        if decrease > bound + slack {
            violations += 1;
            worst = worst.max(decrease - bound);
        }
    }
    AuditOutcome {
        kind: AuditKind::Lemma3,
        passed: violations == 0,
        checked,
        violations,
        detail: if violations == 0 {
            format!("{checked} pairs checked with c1 = {c1:.6}")
        } else {
            format!("{violations} violations, worst excess {worst:.3e}")
        },
    }
}

/// Model-decrease inequality implied by the acceptance rule:
/// `Q_k <= -(eta / (2 (1 + sqrt(1-eta)))) ||d_k||_H^2` on every certified
/// iteration.
pub fn audit_model_decrease(records: &[IterationRecord], eta: f64) -> (usize, usize) {
    let c = eta / (2.0 * (1.0 + (1.0 - eta).max(0.0).sqrt()));
    let mut checked = 0;
    let mut violations = 0;
    for rec in records {
        if !rec.certified {
            continue;
        }
        checked += 1;
        let bound = -c * rec.dir_norm_metric * rec.dir_norm_metric;
        if rec.q_bar > bound + AUDIT_SLACK * (1.0 + rec.f_k.abs()) {
            violations += 1;
        }
    }
    (checked, violations)
}

/// Explicit-bound audit: the theorem's per-k bound must dominate the
/// measured gap at every recorded iteration.
pub fn audit_thm2_bound(
    records: &[IterationRecord],
    f_star: f64,
    upper_m: f64,
    gamma: f64,
    eta: f64,
    variant: LsVariant,
) -> Option<AuditOutcome> {
    let r0 = records
        .iter()
        .filter_map(|r| r.dist_to_x)
        .fold(f64::NAN, f64::max);
    if !r0.is_finite() {
        return None;
    }
    let bounds = theorem2_bound(records, f_star, upper_m, r0, gamma, eta, variant);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for (j, bound) in bounds.iter().enumerate() {
        let gap = records[j + 1].f_k - f_star;
        if gap > bound + AUDIT_SLACK {
            violations += 1;
            worst = worst.max(gap - bound);
        }
    }
    Some(AuditOutcome {
        kind: AuditKind::Thm2Bound,
        passed: violations == 0,
        checked: bounds.len(),
        violations,
        detail: if violations == 0 {
            format!("R0 = {r0:.6}, {} bounds checked", bounds.len())
        } else {
            format!("{violations} violations, worst excess {worst:.3e}")
        },
    })
}

/// Floor audit wrapper with the standard half-run burn-in.
pub fn audit_floor(report: &SolveReport, config: &SolverConfig) -> AuditOutcome {
    let Some(lip) = config.problem.known_local_l.filter(|&l| l > 0.0) else {
        return AuditOutcome::skipped(AuditKind::Floor, "no Lipschitz metadata on the instance");
    };
    let spec = &config.linesearch;
    let floor = stepsize_floor(
        spec.variant,
        spec.beta,
        spec.gamma,
        spec.alpha_bar,
        config.inexactness.effective_eta(),
        config.metric_policy.lower,
        lip,
    );
    let burn_in = report.records.len() / 2;
    let observed = observed_alpha_floor(&report.records, burn_in);
    let passed = observed >= floor - 1e-12;
    AuditOutcome {
        kind: AuditKind::Floor,
        passed,
        checked: report.records.len().saturating_sub(burn_in),
        violations: usize::from(!passed),
        detail: format!("floor {floor:.6}, observed post-burn-in min {observed:.6}"),
    }
}

/// A complete audited run.
#[derive(Debug)]
pub struct AuditedRun {
    pub report: SolveReport,
    pub audits: Vec<AuditOutcome>,
}

/// Runs the config once and evaluates the requested audits. The A4 audit
/// samples iterations during the run (at most ~64 of them) and replays
/// their subproblems against the oracle.
pub fn run_with_audits(config: &SolverConfig, kinds: &[AuditKind]) -> Result<AuditedRun> {
    config.validate()?;
    let want_a4 = kinds.contains(&AuditKind::A4);
    let stride = (config.max_outer / 48).max(1);
    let mut sampled: Vec<(crate::model::SubproblemModel, crate::inner::InnerResult)> = Vec::new();
    let mut observer = |obs: &crate::driver::StepObservation| {
        // Early iterations are always sampled; long runs thin out by stride.
        if want_a4 && (obs.k < 16 || obs.k.is_multiple_of(stride)) && sampled.len() < 64 {
            sampled.push((obs.model.clone(), obs.inner.clone()));
        }
    };
    let report = sqa_run_observed(config, &mut observer);

    let eta = config.inexactness.effective_eta();
    let variant = config.linesearch.variant;
    let gamma = config.linesearch.gamma;
    let mut audits = Vec::new();
    for kind in kinds {
        let outcome = match kind {
            AuditKind::Lemma2 => audit_lemma2(&report.records, variant, gamma),
            AuditKind::Lemma3 => audit_lemma3(&report.records, variant, gamma, eta),
            AuditKind::Thm2Bound => match config.problem.known_f_star {
                Some(f_star) => audit_thm2_bound(
                    &report.records,
                    f_star,
                    config.metric_policy.upper,
                    gamma,
                    eta,
                    variant,
                )
                .unwrap_or_else(|| {
                    AuditOutcome::skipped(AuditKind::Thm2Bound, "no recorded distances")
                }),
                None => AuditOutcome::skipped(AuditKind::Thm2Bound, "no known F*"),
            },
            AuditKind::Floor => audit_floor(&report, config),
            AuditKind::A4 => audit_a4_samples(&report, &sampled, eta)?,
        };
        audits.push(outcome);
    }
    Ok(AuditedRun { report, audits })
}

fn audit_a4_samples(
    report: &SolveReport,
    sampled: &[(crate::model::SubproblemModel, crate::inner::InnerResult)],
    eta: f64,
) -> Result<AuditOutcome> {
    let mut checked = 0;
    let mut violations = 0;
    let mut details = Vec::new();

    // Certificate soundness and contraction on the sampled subproblems.
    for (model, inner) in sampled {
        let (_, q_star) = crate::oracle::subproblem_oracle(model, 1e-12)?;
        if inner.certified {
            checked += 1;
            if inner.q_value > eta * q_star + AUDIT_SLACK {
                violations += 1;
                details.push(format!(
                    "eta-rule: Q = {:.6e} > eta Q* = {:.6e}",
                    inner.q_value,
                    eta * q_star
                ));
            }
        }
        let sigma = model.metric().lower / model.metric().upper;
        let trace = crate::inner::contraction_trace(model, 20)?;
        for (l, &q) in trace.iter().enumerate() {
            checked += 1;
            let bound = (1.0 - sigma).powi(l as i32) * (-q_star);
            if q - q_star > bound + 1e-9 * (1.0 + bound.abs()) {
                violations += 1;
                details.push(format!("contraction at inner step {l}"));
                break;
            }
        }
    }

    // Record-level model-decrease inequality on the whole run.
    let (c2, v2) = audit_model_decrease(&report.records, eta);
    checked += c2;
    violations += v2;
    if v2 > 0 {
        details.push(format!("model-decrease inequality: {v2} violations"));
    }

    Ok(AuditOutcome {
        kind: AuditKind::A4,
        passed: violations == 0,
        checked,
        violations,
        detail: if violations == 0 {
            format!("{} subproblems sampled, {checked} checks", sampled.len())
        } else {
            details.join("; ")
        },
    })
}

// ---------------------------------------------------------------------------
// Least squares (for the inner-complexity scaling fit)
// ---------------------------------------------------------------------------

/// Ordinary least-squares fit `y ~ a + b x`; returns `(a, b, r_squared)`.
pub fn least_squares_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::usage("need at least two points to fit"));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::usage("degenerate fit: all x equal"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((intercept, slope, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::TerminationReason;

    fn synthetic_report(gaps: &[f64], f_star: f64) -> SolveReport {
        let records = gaps
            .iter()
            .enumerate()
            .map(|(k, &g)| IterationRecord {
                k,
                f_k: f_star + g,
                alpha_k: 1.0,
                dir_norm: 1.0,
                dir_norm_metric: 1.0,
                q_bar: -1.0,
                inner_iters: 1,
                certified: true,
                ls_trials: 1,
                dist_to_x: None,
                fgap: Some(g),
            })
            .collect();
        SolveReport {
            final_point: Array1::zeros(1),
            final_f: f_star + gaps.last().copied().unwrap_or(0.0),
            records,
            termination_reason: TerminationReason::MaxOuter,
            total_inner_iterations: gaps.len(),
        }
    }

    #[test]
    fn qlinear_geometric_sequence() {
        let gaps: Vec<f64> = (0..40).map(|k| 0.5_f64.powi(k)).collect();
        let report = synthetic_report(&gaps, 1.0);
        let (ratios, tail_max) = qlinear_ratio(&report, 1.0, 8).unwrap();
        assert!(ratios.iter().all(|r| (r - 0.5).abs() < 1e-12));
        assert!((tail_max - 0.5).abs() < 1e-12);
    }

    #[test]
    fn qlinear_constant_sequence_flags_unit_ratios() {
        let gaps = vec![1.0; 10];
        let report = synthetic_report(&gaps, 0.0);
        let (ratios, tail_max) = qlinear_ratio(&report, 0.0, 0).unwrap();
        assert!(ratios.iter().all(|&r| r == 1.0));
        assert_eq!(tail_max, 1.0);
    }

    #[test]
    fn qlinear_rejects_inconsistent_f_star() {
        let gaps = vec![1.0, 0.5];
        let report = synthetic_report(&gaps, 0.0);
        assert!(qlinear_ratio(&report, 2.0, 0).is_err());
    }

    #[test]
    fn zeta_values() {
        assert!((theorem_zeta(1.0, 1.0, 1.0) - 0.25).abs() < 1e-15);
        assert!((theorem_zeta(0.5, 1.0, 1.0) - 0.125).abs() < 1e-15);
        assert!((theorem_zeta(0.7, 4.0, 1.0) - 0.75).abs() < 1e-15);
        for (eta, mu, m) in [(0.3, 0.5, 1.0), (0.99, 10.0, 1.0), (1.0, 2.0, 1.0)] {
            let z = theorem_zeta(eta, mu, m);
            assert!(z > 0.0 && z < 1.0);
        }
    }

    #[test]
    fn sublinear_verdicts_on_synthetic_families() {
        // gap = 1/k^2 -> scores ~ 1/k -> pass.
        let gaps: Vec<f64> = (0..100_000)
            .map(|k| 1.0 / ((k + 1) as f64 * (k + 1) as f64))
            .collect();
        let report = synthetic_report(&gaps, 0.0);
        let scores = sublinear_score(&report, 0.0);
        assert_eq!(sublinear_verdict(&scores), SublinearVerdict::Pass);

        // gap = 1/k -> scores constant -> fail.
        let gaps: Vec<f64> = (0..100_000).map(|k| 1.0 / (k + 1) as f64).collect();
        let report = synthetic_report(&gaps, 0.0);
        let scores = sublinear_score(&report, 0.0);
        assert_eq!(sublinear_verdict(&scores), SublinearVerdict::Fail);

        // Short runs cannot resolve the decades.
        assert_eq!(
            sublinear_verdict(&[1.0, 0.5, 0.1]),
            SublinearVerdict::InsufficientData
        );
    }

    #[test]
    fn theorem2_bound_formula() {
        // All alpha = 1, gamma eta = 1, M R0^2 + gap0 = 2 -> bound_k = 2/k.
        let gaps = vec![1.0; 6];
        let report = synthetic_report(&gaps, 0.0);
        let bounds = theorem2_bound(&report.records, 0.0, 1.0, 1.0, 1.0, 1.0, LsVariant::Ls1);
        for (j, b) in bounds.iter().enumerate() {
            let k = (j + 1) as f64;
            assert!((b - 2.0 / k).abs() < 1e-12);
        }
    }

    #[test]
    fn floor_formulas() {
        // LS2 example.
        let f = stepsize_floor(LsVariant::Ls2, 0.5, 0.4, 1.0, 0.9, 1.0, 1.0);
        assert!((f - 0.2).abs() < 1e-15);
        // LS3 example.
        let f = stepsize_floor(LsVariant::Ls3, 0.5, 0.5, 1.0, 0.9, 1.0, 1.0);
        assert!((f - 0.25).abs() < 1e-15);
        // LS1 with eta = 1: (eta + 1 + 0)/(1 + 0) = 2.
        let f = stepsize_floor(LsVariant::Ls1, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0);
        assert!((f - 0.5).abs() < 1e-15);
        // Monotone in m, antitone in L.
        for variant in [LsVariant::Ls1, LsVariant::Ls2, LsVariant::Ls3, LsVariant::Ls4] {
            let lo = stepsize_floor(variant, 0.5, 0.4, 1.0, 0.9, 0.5, 2.0);
            let hi_m = stepsize_floor(variant, 0.5, 0.4, 1.0, 0.9, 1.0, 2.0);
            let lo_l = stepsize_floor(variant, 0.5, 0.4, 1.0, 0.9, 0.5, 4.0);
            assert!(hi_m >= lo);
            assert!(lo_l <= lo);
        }
    }

    #[test]
    fn floor_audit_on_synthetic_alphas() {
        let mut report = synthetic_report(&[1.0, 0.9, 0.8, 0.7], 0.0);
        for r in &mut report.records {
            r.alpha_k = 0.3;
        }
        assert!(stepsize_floor_audit(&report, 0.2, 1));
        assert!(!stepsize_floor_audit(&report, 0.35, 1));
    }

    #[test]
    fn recursion_check_classifies_families() {
        // Lengths spanning two orders of magnitude.
        for n in [100usize, 1_000, 31_623, 100_000] {
            // delta = 1/(k+1), lambda = 1, A chosen for equality with
            // c = 1: A_k = 2 delta_{k+1}. O(1/k) but not o(1/k).
            let deltas: Vec<f64> = (0..n).map(|k| 1.0 / (k + 1) as f64).collect();
            let lambdas = vec![1.0; n];
            let a_seq: Vec<f64> = (0..n).map(|k| 2.0 / (k + 2) as f64).collect();
            let verdict = recursion_rate_check(&deltas, &lambdas, &a_seq, 1.0).unwrap();
            assert_eq!(verdict, RecursionVerdict::BigOConfirmed, "length {n}");

            // delta = 1/(k+1)^2, A = 1/(k+1): o(1/k).
            let deltas: Vec<f64> = (0..n).map(|k| 1.0 / ((k + 1) as f64).powi(2)).collect();
            let a_seq: Vec<f64> = (0..n).map(|k| 1.0 / (k + 1) as f64).collect();
            let verdict = recursion_rate_check(&deltas, &lambdas, &a_seq, 1.0).unwrap();
            assert_eq!(verdict, RecursionVerdict::SmallOConfirmed, "length {n}");
        }

        // Increase somewhere the hypothesis forbids.
        let deltas = vec![1.0, 2.0, 0.5];
        let lambdas = vec![1.0, 1.0, 1.0];
        let a_seq = vec![0.1, 0.1, 0.1];
        let verdict = recursion_rate_check(&deltas, &lambdas, &a_seq, 1.0).unwrap();
        assert_eq!(verdict, RecursionVerdict::Violated);
    }

    #[test]
    fn recursion_check_rejects_bad_input() {
        assert!(recursion_rate_check(&[1.0], &[1.0, 0.5], &[1.0], 1.0).is_err());
        assert!(recursion_rate_check(&[1.0], &[2.0], &[1.0], 1.0).is_err());
        assert!(recursion_rate_check(&[1.0], &[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn qg_estimate_on_growth_example() {
        let instance = crate::problems::catalog_instantiate("qg-not-ossc", 1, 11).unwrap();
        let est = qg_estimate(&instance, 10_000, 5).unwrap();
        assert!(est >= 2.0 - 1e-6, "QG estimate {est} below 2");
    }

    #[test]
    fn qg_estimate_quadratic_modulus() {
        // Pure strongly convex quadratic: estimate tracks the modulus.
        let instance = crate::problems::catalog_instantiate("sc-quadratic-l1", 2, 9).unwrap();
        // mu = 1 from the generator; l1 only adds growth, so the estimate
        // must come out within a few percent of 1 from above.
        let est = qg_estimate(&instance, 20_000, 3).unwrap();
        assert!(est >= 1.0 - 1e-9, "estimate {est}");
        assert!(est <= 1.05, "estimate {est} outside the 5% window");
    }

    #[test]
    fn qg_estimate_quartic_vanishes_near_zero() {
        let instance = crate::problems::catalog_instantiate("quartic", 1, 4).unwrap();
        let wide = qg_estimate_in_box(&instance, 20_000, 7, 1.0).unwrap();
        let narrow = qg_estimate_in_box(&instance, 20_000, 7, 1e-2).unwrap();
        assert!(narrow < wide);
        assert!(narrow < 1e-3, "no QG modulus near zero, got {narrow}");
    }

    #[test]
    fn ossc_witness_found_for_growth_example() {
        let instance = crate::problems::catalog_instantiate("qg-not-ossc", 1, 11).unwrap();
        for mu in [1e-6, 1e-3, 0.5, 2.0] {
            let witness = ossc_violation_search(&instance, mu, 2000, 13).unwrap();
            assert!(witness.is_some(), "no OSSC witness for mu = {mu}");
        }
    }

    #[test]
    fn ossc_no_witness_for_strongly_convex_quadratic() {
        let instance = crate::problems::catalog_instantiate("sc-quadratic-l1", 2, 9).unwrap();
        // mu = 0 reduces to convexity; also test the strong-convexity
        // modulus itself.
        for mu in [0.0, 1.0] {
            let witness = ossc_violation_search(&instance, mu, 2000, 17).unwrap();
            assert!(
                witness.is_none(),
                "unexpected OSSC violation at mu = {mu}: {witness:?}"
            );
        }
    }

    #[test]
    fn direction_decay_on_synthetic_norms() {
        let mut report = synthetic_report(&vec![1.0; 200], 0.0);
        for (k, r) in report.records.iter_mut().enumerate() {
            r.dir_norm = 0.9_f64.powi(k as i32);
        }
        assert!(direction_decay_audit(&report).pass);

        for r in report.records.iter_mut() {
            r.dir_norm = 1.0;
        }
        assert!(!direction_decay_audit(&report).pass);

        let short = synthetic_report(&[1.0, 0.5], 0.0);
        let audit = direction_decay_audit(&short);
        assert!(audit.pass && audit.insufficient_data);
    }

    #[test]
    fn quartic_run_respects_its_local_floor() {
        use crate::driver::sqa_run;
        use crate::inner::InexactnessPolicy;
        use crate::linesearch::LineSearchSpec;
        use crate::metric_policy::MetricPolicy;

        let instance = crate::problems::catalog_instantiate("quartic", 3, 11).unwrap();
        let lip = instance.known_local_l.unwrap();
        let config = crate::driver::SolverConfig {
            problem: instance,
            metric_policy: MetricPolicy::scaled_identity(1.0).unwrap(),
            inexactness: InexactnessPolicy::certificate(0.9, 0.5),
            linesearch: LineSearchSpec::new(LsVariant::Ls3, 0.5, 0.5, 1.0),
            max_outer: 2_000,
            tol_direction: 0.0,
            tol_fgap: None,
            seed: 11,
        };
        config.validate().unwrap();
        let report = sqa_run(&config);
        let floor = stepsize_floor(LsVariant::Ls3, 0.5, 0.5, 1.0, 0.9, 1.0, lip);
        assert!(stepsize_floor_audit(&report, floor, report.records.len() / 2));
    }

    #[test]
    fn direction_decay_passes_on_a_converging_run() {
        use crate::driver::sqa_run;
        use crate::inner::InexactnessPolicy;
        use crate::linesearch::LineSearchSpec;
        use crate::metric_policy::MetricPolicy;

        let instance = crate::problems::catalog_instantiate("sc-quadratic-l1", 4, 5).unwrap();
        let config = crate::driver::SolverConfig {
            problem: instance,
            metric_policy: MetricPolicy::scaled_identity(0.5).unwrap(),
            inexactness: InexactnessPolicy::certificate(0.9, 0.5),
            linesearch: LineSearchSpec::new(LsVariant::Ls3, 0.5, 0.5, 1.0),
            max_outer: 300,
            tol_direction: 0.0,
            tol_fgap: None,
            seed: 5,
        };
        config.validate().unwrap();
        let report = sqa_run(&config);
        let audit = direction_decay_audit(&report);
        assert!(audit.pass && !audit.insufficient_data, "ratio {}", audit.ratio);
    }

    #[test]
    fn least_squares_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 2.0 * x).collect();
        let (a, b, r2) = least_squares_fit(&xs, &ys).unwrap();
        assert!((a - 3.0).abs() < 1e-12);
        assert!((b - 2.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }
}
