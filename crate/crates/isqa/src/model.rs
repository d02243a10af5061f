//! Objective split, metric inner products and the frozen subproblem model.
//!
//! The solver minimizes `F = f + g` where `f` is smooth and `g` is a
//! prox-capable convex regularizer. At each outer iterate `x_k` it builds
//! the model
//!
//! ```text
//! Q(x) = <grad f(x_k), x - x_k> + g(x) - g(x_k) + 1/2 ||x - x_k||_H^2
//! ```
//!
//! over the iteration metric `H` (a symmetric positive operator with
//! certified spectral bounds `m`, `M`). The linearized decrease
//! `Delta(x)` is the same expression without the quadratic term, so
//! `Q(x) = Delta(x) + 1/2 ||x - x_k||_H^2` identically.
//!
//! All values are extended reals: `+inf` encodes points outside `dom g`.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problems::{Regularizer, SmoothFn};

/// Dense finite-dimensional real vector.
pub type Vector = Array1<f64>;

/// Returns an error if any coordinate is NaN or infinite.
pub fn check_finite(v: &Vector) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::numerical("vector has non-finite coordinates"))
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Symmetric positive operator shape.
#[derive(Debug, Clone)]
pub enum MetricKind {
    /// `H = factor * I`.
    ScaledIdentity { factor: f64 },
    /// `H = diag(entries)`.
    Diagonal { entries: Vector },
    /// Full symmetric matrix.
    Dense { matrix: Array2<f64> },
}

/// Iteration metric `H` with certified spectral bounds `m <= spec(H) <= M`.
#[derive(Debug, Clone)]
pub struct Metric {
    kind: MetricKind,
    /// Lower spectral bound `m`.
    pub lower: f64,
    /// Upper spectral bound `M`.
    pub upper: f64,
}

/// Report from sampling-based bound validation.
#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub trials: usize,
    pub min_quotient: f64,
    pub max_quotient: f64,
}

impl Metric {
    pub fn new(kind: MetricKind, lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0) || !(upper >= lower) {
            return Err(Error::usage(format!(
                "metric bounds must satisfy 0 < m <= M, got m={lower}, M={upper}"
            )));
        }
        Ok(Metric { kind, lower, upper })
    }

    pub fn scaled_identity(factor: f64) -> Result<Self> {
        Metric::new(MetricKind::ScaledIdentity { factor }, factor, factor)
    }

    /// Diagonal metric; bounds are the exact min/max entries.
    pub fn diagonal(entries: Vector) -> Result<Self> {
        let lower = entries.iter().cloned().fold(f64::INFINITY, f64::min);
        let upper = entries.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Metric::new(MetricKind::Diagonal { entries }, lower, upper)
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    /// Applies `v -> H v`.
    pub fn apply(&self, v: &Vector) -> Vector {
        match &self.kind {
            MetricKind::ScaledIdentity { factor } => v * *factor,
            MetricKind::Diagonal { entries } => entries * v,
            MetricKind::Dense { matrix } => matrix.dot(v),
        }
    }

    /// Metric inner product `<u, H v>`.
    pub fn inner(&self, u: &Vector, v: &Vector) -> f64 {
        u.dot(&self.apply(v))
    }

    /// Squared metric norm `<v, H v>`.
    pub fn norm_sq(&self, v: &Vector) -> f64 {
        match &self.kind {
            MetricKind::ScaledIdentity { factor } => factor * v.dot(v),
            MetricKind::Diagonal { entries } => v.iter().zip(entries).map(|(c, h)| h * c * c).sum(),
            MetricKind::Dense { matrix } => v.dot(&matrix.dot(v)),
        }
    }

    pub fn norm(&self, v: &Vector) -> f64 {
        self.norm_sq(v).max(0.0).sqrt()
    }

    /// Checks the declared bounds. Diagonal and scaled-identity metrics are
    /// checked exactly against their spectrum; dense metrics are probed on
    /// `trials` random unit vectors. Any Rayleigh quotient outside
    /// `[m (1 - 1e-9), M (1 + 1e-9)]` fails with the offending vector.
    pub fn validate_bounds(&self, trials: usize, seed: u64) -> Result<BoundsReport> {
        if trials == 0 {
            return Err(Error::usage("validate_bounds requires trials >= 1"));
        }
        let lo_gate = self.lower * (1.0 - 1e-9);
        let hi_gate = self.upper * (1.0 + 1e-9);
        let mut min_q = f64::INFINITY;
        let mut max_q = f64::NEG_INFINITY;

        let mut check = |quotient: f64, vector: &Vector| -> Result<()> {
            min_q = min_q.min(quotient);
            max_q = max_q.max(quotient);
            if quotient < lo_gate || quotient > hi_gate {
                return Err(Error::MetricBound {
                    quotient,
                    lower: self.lower,
                    upper: self.upper,
                    vector: vector.to_vec(),
                });
            }
            Ok(())
        };

        match &self.kind {
            MetricKind::ScaledIdentity { factor } => {
                let e = Array1::from_elem(1, 1.0);
                check(*factor, &e)?;
            }
            MetricKind::Diagonal { entries } => {
                // Exact: the eigenvectors are the coordinate axes.
                for (i, &h) in entries.iter().enumerate() {
                    let mut e = Array1::zeros(entries.len());
                    e[i] = 1.0;
                    check(h, &e)?;
                }
            }
            MetricKind::Dense { matrix } => {
                let n = matrix.nrows();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..trials {
                    let mut v: Vector =
                        Array1::from_iter((0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0));
                    let norm = v.dot(&v).sqrt();
                    if norm < 1e-12 {
                        continue;
                    }
                    v /= norm;
                    check(self.norm_sq(&v), &v)?;
                }
            }
        }

        Ok(BoundsReport {
            trials,
            min_quotient: min_q,
            max_quotient: max_q,
        })
    }
}

/// The composite objective `F = f + g`.
#[derive(Debug, Clone)]
pub struct ObjectiveSplit {
    pub smooth: Arc<SmoothFn>,
    pub reg: Arc<Regularizer>,
    dim: usize,
}

impl ObjectiveSplit {
    pub fn new(smooth: Arc<SmoothFn>, reg: Arc<Regularizer>) -> Self {
        let dim = smooth.dim();
        ObjectiveSplit { smooth, reg, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `F(x) = f(x) + g(x)` as an extended real; `+inf` off `dom g`.
    pub fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &Vector) -> f64 {
        let g = self.reg.value(x);
        if g == f64::INFINITY {
            return f64::INFINITY;
        }
        self.smooth.value(x) + g
    }

    pub fn smooth_value(&self, x: &Vector) -> f64 {
        self.smooth.value(x)
    }

    pub fn smooth_grad(&self, x: &Vector) -> Vector {
        self.smooth.grad(x)
    }

    pub fn reg_value(&self, x: &Vector) -> f64 {
        self.reg.value(x)
    }
}

/// Frozen first-order snapshot of `F` at the anchor `x_k`, together with the
/// iteration metric. Evaluates the model `Q` and the linearized decrease
/// `Delta`.
#[derive(Debug, Clone)]
pub struct SubproblemModel {
    anchor: Vector,
    grad_at_anchor: Vector,
    g_at_anchor: f64,
    metric: Metric,
    reg: Arc<Regularizer>,
}

impl SubproblemModel {
    /// Freezes `grad f(x_k)` and `g(x_k)`. Fails if `x_k` is outside `dom g`.
    pub fn new(obj: &ObjectiveSplit, metric: Metric, anchor: Vector) -> Result<Self> {
        check_dim(obj.dim(), anchor.len())?;
        if !obj.reg.contains(&anchor) {
            return Err(Error::usage(
                "subproblem anchor must lie in the regularizer domain",
            ));
        }
        let grad_at_anchor = obj.smooth_grad(&anchor);
        let g_at_anchor = obj.reg_value(&anchor);
        check_finite(&grad_at_anchor)?;
        Ok(SubproblemModel {
            anchor,
            grad_at_anchor,
            g_at_anchor,
            metric,
            reg: Arc::clone(&obj.reg),
        })
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    pub fn grad_at_anchor(&self) -> &Vector {
        &self.grad_at_anchor
    }

    pub fn g_at_anchor(&self) -> f64 {
        self.g_at_anchor
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn reg(&self) -> &Arc<Regularizer> {
        &self.reg
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// `Q(x)`; exactly zero at the anchor, `+inf` off `dom g`.
    pub fn eval_q(&self, x: &Vector) -> f64 {
        assert_eq!(self.dim(), x.len(), "subproblem dimension mismatch");
        if *x == self.anchor {
            return 0.0;
        }
        let g = self.reg.value(x);
        if g == f64::INFINITY {
            return f64::INFINITY;
        }
        let step = x - &self.anchor;
        self.grad_at_anchor.dot(&step) + g - self.g_at_anchor + 0.5 * self.metric.norm_sq(&step)
    }

    /// Linearized decrease `Delta(x)`; zero at the anchor.
    pub fn eval_delta(&self, x: &Vector) -> f64 {
        assert_eq!(self.dim(), x.len(), "subproblem dimension mismatch");
        if *x == self.anchor {
            return 0.0;
        }
        let g = self.reg.value(x);
        if g == f64::INFINITY {
            return f64::INFINITY;
        }
        let step = x - &self.anchor;
        self.grad_at_anchor.dot(&step) + g - self.g_at_anchor
    }

    /// Gradient of the smooth part: `grad f(x_k) + H (y - x_k)`.
    pub fn quad_grad(&self, y: &Vector) -> Vector {
        &self.grad_at_anchor + &self.metric.apply(&(y - &self.anchor))
    }
}
