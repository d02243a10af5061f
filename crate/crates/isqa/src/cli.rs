//! Benchmark harness: config ingestion, experiment execution, trace and
//! summary emission.
//!
//! Configs are TOML with one `[[run]]` block per experiment family; the
//! fields `instance`, `dimension`, `seed`, `linesearch` and `eta` accept
//! either a scalar or a list, and lists expand as a cartesian product.
//! Traces are CSV with full double precision (17 significant digits), so
//! reruns with identical configs produce byte-identical files.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Deserialize;

use crate::diagnostics::{run_with_audits, AuditKind, AuditOutcome};
use crate::driver::{IterationRecord, SolveReport, SolverConfig, TerminationReason};
use crate::error::{Error, Result};
use crate::inner::{InexactnessPolicy, InnerStopMode};
use crate::linesearch::{LineSearchSpec, LsVariant};
use crate::metric_policy::{MetricPolicy, MetricPolicyKind};
use crate::oracle::FixtureRecord;
use crate::problems::{catalog_instantiate, CATALOG};

// ---------------------------------------------------------------------------
// Config file schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(vs) => vs.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DefaultsBlock {
    max_outer: Option<usize>,
    tol_direction: Option<f64>,
    tol_fgap: Option<f64>,
    seed: Option<u64>,
    audits: Option<Vec<String>>,
    beta: Option<f64>,
    gamma: Option<f64>,
    alpha_bar: Option<f64>,
    metric: Option<String>,
    tau: Option<f64>,
    band: Option<[f64; 2]>,
    memory: Option<usize>,
    inner: Option<String>,
    n_inner: Option<usize>,
    sigma: Option<f64>,
    eta: Option<f64>,
    max_inner: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunBlock {
    name: Option<String>,
    instance: OneOrMany<String>,
    dimension: Option<OneOrMany<usize>>,
    seed: Option<OneOrMany<u64>>,
    linesearch: Option<OneOrMany<String>>,
    eta: Option<OneOrMany<f64>>,
    max_outer: Option<usize>,
    tol_direction: Option<f64>,
    tol_fgap: Option<f64>,
    audits: Option<Vec<String>>,
    beta: Option<f64>,
    gamma: Option<f64>,
    alpha_bar: Option<f64>,
    metric: Option<String>,
    tau: Option<f64>,
    band: Option<[f64; 2]>,
    memory: Option<usize>,
    inner: Option<String>,
    n_inner: Option<usize>,
    sigma: Option<f64>,
    max_inner: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    defaults: Option<DefaultsBlock>,
    #[serde(default)]
    run: Vec<RunBlock>,
}

/// One fully expanded, statically validated experiment.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub id: String,
    pub instance: String,
    pub dimension: usize,
    pub seed: u64,
    pub linesearch: LineSearchSpec,
    pub metric: MetricPolicy,
    pub inexactness: InexactnessPolicy,
    pub max_outer: usize,
    pub tol_direction: f64,
    pub tol_fgap: Option<f64>,
    pub audits: Vec<AuditKind>,
}

impl RunPlan {
    /// Instantiates the problem (running the oracle reference if needed)
    /// and assembles the solver config.
    pub fn build(&self) -> Result<SolverConfig> {
        let problem = catalog_instantiate(&self.instance, self.dimension, self.seed)?;
        let config = SolverConfig {
            problem,
            metric_policy: self.metric.clone(),
            inexactness: self.inexactness.clone(),
            linesearch: self.linesearch.clone(),
            max_outer: self.max_outer,
            tol_direction: self.tol_direction,
            tol_fgap: self.tol_fgap,
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

fn parse_audit_names(names: &[String]) -> Result<Vec<AuditKind>> {
    names.iter().map(|s| AuditKind::parse(s)).collect()
}

fn default_dimension(instance: &str) -> usize {
    match instance {
        "qg-not-ossc" => 1,
        "counterexample-region" => 2,
        _ => 10,
    }
}

/// Reads, expands and statically validates a benchmark config file.
/// `ISQA_SEED` in the environment overrides every seed.
pub fn parse_config(path: &Path) -> Result<Vec<RunPlan>> {
    let text = std::fs::read_to_string(path)?;
    let file: ConfigFile = toml::from_str(&text).map_err(|e| Error::config(e.to_string()))?;
    let defaults = file.defaults.unwrap_or_default();

    let seed_override: Option<u64> = match std::env::var("ISQA_SEED") {
        Ok(v) => Some(v.parse().map_err(|_| {
            Error::config(format!("ISQA_SEED must be an unsigned integer, got {v:?}"))
        })?),
        Err(_) => None,
    };

    let mut plans = Vec::new();
    let mut seen_ids = HashSet::new();
    for (block_idx, block) in file.run.iter().enumerate() {
        let instances = block.instance.values();
        let dims: Vec<Option<usize>> = match &block.dimension {
            Some(d) => d.values().into_iter().map(Some).collect(),
            None => vec![None],
        };
        let seeds = block
            .seed
            .as_ref()
            .map(|s| s.values())
            .unwrap_or_else(|| vec![defaults.seed.unwrap_or(42)]);
        let variants: Vec<String> = block
            .linesearch
            .as_ref()
            .map(|l| l.values())
            .unwrap_or_else(|| vec!["ls3".to_string()]);
        let etas: Vec<Option<f64>> = match &block.eta {
            Some(e) => e.values().into_iter().map(Some).collect(),
            None => vec![defaults.eta],
        };

        for instance in &instances {
            if !CATALOG.contains(&instance.as_str()) {
                return Err(Error::config(format!(
                    "run.instance: unknown instance {instance:?}; expected one of {CATALOG:?}"
                )));
            }
            for dim in &dims {
                for &seed in &seeds {
                    for variant_name in &variants {
                        for eta in &etas {
                            let plan = expand_one(
                                block_idx,
                                block,
                                &defaults,
                                instance,
                                dim.unwrap_or_else(|| default_dimension(instance)),
                                seed_override.unwrap_or(seed),
                                variant_name,
                                *eta,
                            )?;
                            if seen_ids.insert(plan.id.clone()) {
                                plans.push(plan);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(plans)
}

#[allow(clippy::too_many_arguments)]
fn expand_one(
    block_idx: usize,
    block: &RunBlock,
    defaults: &DefaultsBlock,
    instance: &str,
    dimension: usize,
    seed: u64,
    variant_name: &str,
    eta: Option<f64>,
) -> Result<RunPlan> {
    let variant = LsVariant::parse(variant_name)?;

    let metric_name = block
        .metric
        .clone()
        .or_else(|| defaults.metric.clone())
        .unwrap_or_else(|| "scaled-identity".to_string());
    let band = block.band.or(defaults.band).unwrap_or([0.5, 2.0]);
    let tau = block.tau.or(defaults.tau).unwrap_or(1.0);
    let memory = block.memory.or(defaults.memory).unwrap_or(5);
    let metric = match metric_name.as_str() {
        "scaled-identity" => MetricPolicy::scaled_identity(tau)?,
        "clipped-diagonal" => {
            MetricPolicy::new(MetricPolicyKind::ClippedDiagonal, band[0], band[1])?
        }
        "clipped-secant" => MetricPolicy::new(
            MetricPolicyKind::ClippedSecant { memory },
            band[0],
            band[1],
        )?,
        other => {
            return Err(Error::config(format!(
                "run.metric: unknown policy {other:?}; expected scaled-identity, \
                 clipped-diagonal or clipped-secant"
            )))
        }
    };

    let sigma_default = (metric.lower / metric.upper).min(0.999_999);
    let sigma = block.sigma.or(defaults.sigma).unwrap_or(sigma_default);
    let inner_name = block
        .inner
        .clone()
        .or_else(|| defaults.inner.clone())
        .unwrap_or_else(|| "certificate".to_string());
    let max_inner = block.max_inner.or(defaults.max_inner);
    let inexactness = match inner_name.as_str() {
        "certificate" => InexactnessPolicy {
            eta: eta.unwrap_or(0.9),
            mode: InnerStopMode::Certificate,
            sigma,
            max_inner,
        },
        "fixed" => InexactnessPolicy {
            eta: eta.unwrap_or(1.0),
            mode: InnerStopMode::FixedCount {
                n_inner: block.n_inner.or(defaults.n_inner).unwrap_or(5),
            },
            sigma,
            max_inner,
        },
        other => {
            return Err(Error::config(format!(
                "run.inner: unknown mode {other:?}; expected certificate or fixed"
            )))
        }
    };
    inexactness
        .validate()
        .map_err(|e| Error::config(format!("run.eta/sigma: {e}")))?;
    if matches!(inexactness.mode, InnerStopMode::FixedCount { .. })
        && inexactness.sigma > metric.lower / metric.upper + 1e-12
    {
        return Err(Error::config(format!(
            "run.sigma: declared contraction {} exceeds the certified m/M = {}",
            inexactness.sigma,
            metric.lower / metric.upper
        )));
    }

    let beta = block.beta.or(defaults.beta).unwrap_or(0.5);
    let gamma = block.gamma.or(defaults.gamma).unwrap_or(match variant {
        LsVariant::Ls2 => 0.4 * metric.lower,
        _ => 0.5,
    });
    let alpha_bar = block.alpha_bar.or(defaults.alpha_bar).unwrap_or(1.0);
    let linesearch = LineSearchSpec::new(variant, beta, gamma, alpha_bar);
    linesearch
        .validate(metric.lower)
        .map_err(|e| Error::config(format!("run.{}: {e}", variant.label())))?;

    let max_outer = block.max_outer.or(defaults.max_outer).unwrap_or(10_000);
    let tol_direction = block
        .tol_direction
        .or(defaults.tol_direction)
        .unwrap_or(1e-10);
    if tol_direction < 0.0 {
        return Err(Error::config("run.tol_direction must be nonnegative"));
    }
    let tol_fgap = block.tol_fgap.or(defaults.tol_fgap);
    if let Some(t) = tol_fgap {
        if t < 0.0 {
            return Err(Error::config("run.tol_fgap must be nonnegative"));
        }
    }

    let audits = match block.audits.as_ref().or(defaults.audits.as_ref()) {
        Some(names) => parse_audit_names(names)?,
        None => vec![AuditKind::Lemma2, AuditKind::Lemma3],
    };

    let prefix = block
        .name
        .clone()
        .unwrap_or_else(|| format!("run{block_idx:02}"));
    let eta_label = inexactness.eta;
    let id = format!(
        "{prefix}-{instance}-n{dimension}-{}-eta{eta_label}-seed{seed}",
        variant.label()
    );

    Ok(RunPlan {
        id,
        instance: instance.to_string(),
        dimension,
        seed,
        linesearch,
        metric,
        inexactness,
        max_outer,
        tol_direction,
        tol_fgap,
        audits,
    })
}

// ---------------------------------------------------------------------------
// Trace files
// ---------------------------------------------------------------------------

/// Writes one CSV row per iteration record in a stable column order with
/// 17 significant digits. Optional columns appear only when populated.
pub fn emit_trace(report: &SolveReport, path: &Path) -> Result<()> {
    let has_fgap = report.records.first().is_some_and(|r| r.fgap.is_some());
    let has_dist = report
        .records
        .first()
        .is_some_and(|r| r.dist_to_x.is_some());
    let mut out = String::new();
    out.push('k');
    out.push_str(",F_k");
    if has_fgap {
        out.push_str(",fgap");
    }
    out.push_str(",alpha_k,dir_norm,dir_norm_metric,Q_bar,inner_iters,certified,ls_trials");
    if has_dist {
        out.push_str(",dist_to_X");
    }
    out.push('\n');
    for r in &report.records {
        write!(out, "{},{:.16e}", r.k, r.f_k).expect("string write");
        if has_fgap {
            write!(out, ",{:.16e}", r.fgap.unwrap_or(f64::NAN)).expect("string write");
        }
        write!(
            out,
            ",{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
            r.alpha_k,
            r.dir_norm,
            r.dir_norm_metric,
            r.q_bar,
            r.inner_iters,
            r.certified,
            r.ls_trials
        )
        .expect("string write");
        if has_dist {
            write!(out, ",{:.16e}", r.dist_to_x.unwrap_or(f64::NAN)).expect("string write");
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parses a trace emitted by [`emit_trace`]; records round-trip exactly.
pub fn read_trace(path: &Path) -> Result<Vec<IterationRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::usage("empty trace file"))?;
    let columns: Vec<&str> = header.split(',').collect();
    let index_of = |name: &str| columns.iter().position(|c| *c == name);
    let k_col = index_of("k").ok_or_else(|| Error::usage("trace missing column k"))?;
    let f_col = index_of("F_k").ok_or_else(|| Error::usage("trace missing column F_k"))?;
    let fgap_col = index_of("fgap");
    let alpha_col =
        index_of("alpha_k").ok_or_else(|| Error::usage("trace missing column alpha_k"))?;
    let dn_col =
        index_of("dir_norm").ok_or_else(|| Error::usage("trace missing column dir_norm"))?;
    let dnm_col = index_of("dir_norm_metric")
        .ok_or_else(|| Error::usage("trace missing column dir_norm_metric"))?;
    let q_col = index_of("Q_bar").ok_or_else(|| Error::usage("trace missing column Q_bar"))?;
    let ii_col = index_of("inner_iters")
        .ok_or_else(|| Error::usage("trace missing column inner_iters"))?;
    let cert_col =
        index_of("certified").ok_or_else(|| Error::usage("trace missing column certified"))?;
    let lst_col =
        index_of("ls_trials").ok_or_else(|| Error::usage("trace missing column ls_trials"))?;
    let dist_col = index_of("dist_to_X");

    let mut records = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let get = |idx: usize| -> Result<&str> {
            fields
                .get(idx)
                .copied()
                .ok_or_else(|| Error::usage(format!("short trace row: {line}")))
        };
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::usage(format!("bad float {s:?} in trace")))
        };
        records.push(IterationRecord {
            k: get(k_col)?
                .parse()
                .map_err(|_| Error::usage("bad k in trace"))?,
            f_k: parse_f(get(f_col)?)?,
            fgap: match fgap_col {
                Some(c) => Some(parse_f(get(c)?)?),
                None => None,
            },
            alpha_k: parse_f(get(alpha_col)?)?,
            dir_norm: parse_f(get(dn_col)?)?,
            dir_norm_metric: parse_f(get(dnm_col)?)?,
            q_bar: parse_f(get(q_col)?)?,
            inner_iters: get(ii_col)?
                .parse()
                .map_err(|_| Error::usage("bad inner_iters in trace"))?,
            certified: match get(cert_col)? {
                "true" => true,
                "false" => false,
                other => return Err(Error::usage(format!("bad certified flag {other:?}"))),
            },
            ls_trials: get(lst_col)?
                .parse()
                .map_err(|_| Error::usage("bad ls_trials in trace"))?,
            dist_to_x: match dist_col {
                Some(c) => Some(parse_f(get(c)?)?),
                None => None,
            },
        });
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Benchmark execution
// ---------------------------------------------------------------------------

/// Result of one benchmark run, as it lands in the summary.
#[derive(Debug)]
pub struct RunSummary {
    pub id: String,
    pub plan: RunPlan,
    pub termination: Option<TerminationReason>,
    pub outer_iterations: usize,
    pub total_inner_iterations: usize,
    pub final_f: f64,
    pub final_fgap: Option<f64>,
    /// Max Q-ratio of the gap sequence after a 20% burn-in, when `F*` is
    /// known.
    pub tail_q_ratio: Option<f64>,
    /// `||x_k - x*||^(1/k)` at the last recorded iteration, when a
    /// projector is known.
    pub r_linear_score: Option<f64>,
    pub uncertified_iterations: usize,
    pub audits: Vec<AuditOutcome>,
    pub error: Option<String>,
}

impl RunSummary {
    pub fn ok(&self) -> bool {
        self.error.is_none()
            && !matches!(self.termination, Some(TerminationReason::Error(_)))
            && self.audits.iter().all(|a| a.passed)
    }
}

#[derive(Debug)]
pub struct BenchmarkOutcome {
    pub runs: Vec<RunSummary>,
    pub all_ok: bool,
}

/// Executes every plan (optionally on `jobs` worker threads), writing one
/// trace file per run plus a `summary.txt` in plan order. Per-run failures
/// land in the summary; the remaining runs continue.
pub fn run_benchmark(
    plans: &[RunPlan],
    out_dir: &Path,
    jobs: usize,
    audits_override: Option<&[AuditKind]>,
) -> Result<BenchmarkOutcome> {
    std::fs::create_dir_all(out_dir)?;

    let effective: Vec<RunPlan> = plans
        .iter()
        .map(|p| {
            let mut p = p.clone();
            if let Some(kinds) = audits_override {
                p.audits = kinds.to_vec();
            }
            p
        })
        .collect();

    let mut slots: Vec<Option<RunSummary>> = Vec::new();
    slots.resize_with(effective.len(), || None);
    let slots = Mutex::new(slots);
    let next = AtomicUsize::new(0);
    let workers = jobs.max(1).min(effective.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= effective.len() {
                    break;
                }
                let summary = execute_and_emit(&effective[idx], out_dir);
                slots.lock().expect("results lock")[idx] = Some(summary);
            });
        }
    });

    let runs: Vec<RunSummary> = slots
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every plan executed"))
        .collect();
    let all_ok = runs.iter().all(|r| r.ok());
    write_summary(&runs, &out_dir.join("summary.txt"))?;
    Ok(BenchmarkOutcome { runs, all_ok })
}

fn write_summary(runs: &[RunSummary], path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# isqa benchmark summary").expect("string write");
    writeln!(out, "runs = {}", runs.len()).expect("string write");
    for r in runs {
        writeln!(out).expect("string write");
        writeln!(out, "[run.{}]", r.id).expect("string write");
        writeln!(out, "instance = \"{}\"", r.plan.instance).expect("string write");
        writeln!(out, "dimension = {}", r.plan.dimension).expect("string write");
        writeln!(out, "seed = {}", r.plan.seed).expect("string write");
        writeln!(out, "linesearch = \"{}\"", r.plan.linesearch.variant.label())
            .expect("string write");
        writeln!(out, "eta = {}", r.plan.inexactness.eta).expect("string write");
        writeln!(
            out,
            "effective_eta = {}",
            r.plan.inexactness.effective_eta()
        )
        .expect("string write");
        writeln!(out, "sigma_declared = {}", r.plan.inexactness.sigma).expect("string write");
        match &r.termination {
            Some(t) => writeln!(out, "termination = \"{}\"", t.label()).expect("string write"),
            None => writeln!(out, "termination = \"not-run\"").expect("string write"),
        }
        writeln!(out, "outer_iterations = {}", r.outer_iterations).expect("string write");
        writeln!(
            out,
            "total_inner_iterations = {}",
            r.total_inner_iterations
        )
        .expect("string write");
        writeln!(out, "uncertified_iterations = {}", r.uncertified_iterations)
            .expect("string write");
        if r.final_f.is_finite() {
            writeln!(out, "final_f = {:.16e}", r.final_f).expect("string write");
        }
        if let Some(gap) = r.final_fgap {
            writeln!(out, "final_fgap = {gap:.16e}").expect("string write");
        }
        if let Some(ratio) = r.tail_q_ratio {
            writeln!(out, "tail_q_ratio = {ratio:.6}").expect("string write");
        }
        if let Some(score) = r.r_linear_score {
            writeln!(out, "r_linear_score = {score:.6}").expect("string write");
        }
        for audit in &r.audits {
            writeln!(
                out,
                "audit.{} = \"{}: {}\"",
                audit.kind.label(),
                if audit.passed { "pass" } else { "FAIL" },
                audit.detail
            )
            .expect("string write");
        }
        if let Some(err) = &r.error {
            writeln!(out, "error = \"{err}\"").expect("string write");
        }
        writeln!(out, "status = \"{}\"", if r.ok() { "ok" } else { "failed" })
            .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Full `run` subcommand: parse, execute, emit traces, summarize.
pub fn run_command(
    config_path: &Path,
    out_dir: &Path,
    jobs: usize,
    audits_override: Option<&[AuditKind]>,
) -> Result<bool> {
    let plans = parse_config(config_path)?;
    let outcome = run_benchmark(&plans, out_dir, jobs, audits_override)?;
    Ok(outcome.all_ok)
}

fn execute_and_emit(plan: &RunPlan, out_dir: &Path) -> RunSummary {
    let built = plan.build();
    match built {
        Ok(config) => match run_with_audits(&config, &plan.audits) {
            Ok(audited) => {
                let report = audited.report;
                let trace_path = out_dir.join(format!("{}.csv", plan.id));
                let io_error = emit_trace(&report, &trace_path).err().map(|e| e.to_string());
                let final_fgap = config
                    .problem
                    .known_f_star
                    .map(|fs| report.final_f - fs);
                let tail_q_ratio = config.problem.known_f_star.and_then(|fs| {
                    crate::diagnostics::qlinear_ratio(&report, fs, report.records.len() / 5)
                        .ok()
                        .map(|(_, tail)| tail)
                });
                let r_linear_score = report
                    .records
                    .iter()
                    .rev()
                    .find(|r| r.k >= 1 && r.dist_to_x.is_some())
                    .and_then(|r| r.dist_to_x.map(|d| d.powf(1.0 / r.k as f64)));
                RunSummary {
                    id: plan.id.clone(),
                    plan: plan.clone(),
                    termination: Some(report.termination_reason.clone()),
                    outer_iterations: report.records.len(),
                    total_inner_iterations: report.total_inner_iterations,
                    final_f: report.final_f,
                    final_fgap,
                    tail_q_ratio,
                    r_linear_score,
                    uncertified_iterations: report
                        .records
                        .iter()
                        .filter(|r| !r.certified)
                        .count(),
                    audits: audited.audits,
                    error: match (&report.termination_reason, io_error) {
                        (TerminationReason::Error(msg), _) => Some(msg.clone()),
                        (_, Some(io)) => Some(io),
                        _ => None,
                    },
                }
            }
            Err(e) => error_summary(plan, e.to_string()),
        },
        Err(e) => error_summary(plan, e.to_string()),
    }
}

fn error_summary(plan: &RunPlan, message: String) -> RunSummary {
    RunSummary {
        id: plan.id.clone(),
        plan: plan.clone(),
        termination: None,
        outer_iterations: 0,
        total_inner_iterations: 0,
        final_f: f64::NAN,
        final_fgap: None,
        tail_q_ratio: None,
        r_linear_score: None,
        uncertified_iterations: 0,
        audits: Vec::new(),
        error: Some(message),
    }
}

// ---------------------------------------------------------------------------
// Audit command
// ---------------------------------------------------------------------------

/// Re-runs the record-level diagnostics on a stored trace against the run
/// parameters from a config file. When the config expands to several runs,
/// `run_id` picks the one matching the trace.
pub fn audit_command(
    trace_path: &Path,
    config_path: &Path,
    run_id: Option<&str>,
) -> Result<Vec<AuditOutcome>> {
    let plans = parse_config(config_path)?;
    let plan = match run_id {
        Some(id) => plans
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::config(format!("no run with id {id:?} in config")))?,
        None => {
            if plans.len() != 1 {
                return Err(Error::config(format!(
                    "config expands to {} runs; pass --run-id to select one of: {}",
                    plans.len(),
                    plans
                        .iter()
                        .map(|p| p.id.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                )));
            }
            &plans[0]
        }
    };

    let records = read_trace(trace_path)?;
    let eta = plan.inexactness.effective_eta();
    let variant = plan.linesearch.variant;
    let gamma = plan.linesearch.gamma;

    let mut outcomes = Vec::new();
    for kind in &plan.audits {
        let outcome = match kind {
            AuditKind::Lemma2 => crate::diagnostics::audit_lemma2(&records, variant, gamma),
            AuditKind::Lemma3 => {
                crate::diagnostics::audit_lemma3(&records, variant, gamma, eta)
            }
            AuditKind::Thm2Bound | AuditKind::Floor | AuditKind::A4 => {
                // These need the instance; rebuild it (deterministic).
                let config = plan.build()?;
                match kind {
                    AuditKind::Thm2Bound => match config.problem.known_f_star {
                        Some(f_star) => crate::diagnostics::audit_thm2_bound(
                            &records,
                            f_star,
                            config.metric_policy.upper,
                            gamma,
                            eta,
                            variant,
                        )
                        .unwrap_or_else(|| AuditOutcome {
                            kind: AuditKind::Thm2Bound,
                            passed: true,
                            checked: 0,
                            violations: 0,
                            detail: "skipped: no recorded distances".into(),
                        }),
                        None => AuditOutcome {
                            kind: AuditKind::Thm2Bound,
                            passed: true,
                            checked: 0,
                            violations: 0,
                            detail: "skipped: no known F*".into(),
                        },
                    },
                    AuditKind::Floor => {
                        let pseudo_report = SolveReport {
                            final_point: config.problem.x0.clone(),
                            final_f: records.last().map(|r| r.f_k).unwrap_or(f64::NAN),
                            records: records.clone(),
                            termination_reason: TerminationReason::MaxOuter,
                            total_inner_iterations: records
                                .iter()
                                .map(|r| r.inner_iters)
                                .sum(),
                        };
                        crate::diagnostics::audit_floor(&pseudo_report, &config)
                    }
                    AuditKind::A4 => {
                        let (checked, violations) =
                            crate::diagnostics::audit_model_decrease(&records, eta);
                        AuditOutcome {
                            kind: AuditKind::A4,
                            passed: violations == 0,
                            checked,
                            violations,
                            detail: format!(
                                "model-decrease inequality over the stored trace \
                                 ({checked} certified iterations)"
                            ),
                        }
                    }
                    _ => unreachable!(),
                }
            }
        };
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

// ---------------------------------------------------------------------------
// Fixtures command
// ---------------------------------------------------------------------------

/// Default (instance, dimension) pairs for the reference fixture file.
pub const FIXTURE_SET: &[(&str, usize)] = &[
    ("sc-quadratic-l1", 5),
    ("logistic-l1", 5),
    ("quartic", 3),
    ("qg-not-ossc", 1),
    ("counterexample-region", 2),
    ("fbs-reference", 6),
];

pub const FIXTURE_SEED: u64 = 42;
pub const FIXTURE_TOL: f64 = 1e-12;

/// Rebuilds the reference fixtures under `dir`. Refuses to overwrite an
/// existing file unless `force` is set.
pub fn regen_fixtures(dir: &Path, force: bool) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("reference.txt");
    if path.exists() && !force {
        return Err(Error::usage(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    let mut records = Vec::new();
    for &(name, dim) in FIXTURE_SET {
        let instance = catalog_instantiate(name, dim, FIXTURE_SEED)?;
        let (x_star, f_star) = crate::oracle::reference_solution(&instance, FIXTURE_TOL)?;
        records.push(FixtureRecord {
            name: name.to_string(),
            dimension: dim,
            seed: FIXTURE_SEED,
            f_star,
            tol: FIXTURE_TOL,
            x_star: x_star.to_vec(),
        });
    }
    crate::oracle::write_fixtures(&path, &records)?;
    Ok(path)
}
