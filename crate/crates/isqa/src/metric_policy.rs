//! Produces the per-iteration metric while certifying the global spectral
//! band `[m, M]`.
//!
//! The convergence guarantees rest entirely on every produced operator
//! staying inside the declared band, so curvature estimates are clamped
//! (never rejected): diagonal estimates entrywise, dense secant estimates
//! by eigenvalue clipping.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::{Metric, MetricKind, Vector};
use crate::na_bridge;

/// One stored `(x, grad f(x))` observation.
#[derive(Debug, Clone)]
pub struct HistoryPair {
    pub x: Vector,
    pub grad: Vector,
}

/// Curvature model family.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricPolicyKind {
    /// `H = (1/tau) I`; reduces the outer scheme to forward-backward
    /// splitting.
    ScaledIdentity { tau: f64 },
    /// Diagonal secant estimate, entrywise clamped into the band.
    ClippedDiagonal,
    /// Dense limited-memory secant estimate, spectrally clamped.
    ClippedSecant { memory: usize },
}

/// Metric factory with its certified band.
#[derive(Debug, Clone)]
pub struct MetricPolicy {
    pub kind: MetricPolicyKind,
    /// Lower bound `m` reported by every produced metric.
    pub lower: f64,
    /// Upper bound `M` reported by every produced metric.
    pub upper: f64,
}

impl MetricPolicy {
    pub fn new(kind: MetricPolicyKind, lower: f64, upper: f64) -> Result<Self> {
        if let MetricPolicyKind::ScaledIdentity { tau } = kind {
            if tau <= 0.0 {
                return Err(Error::usage("scaled-identity tau must be positive"));
            }
            let factor = 1.0 / tau;
            return Ok(MetricPolicy {
                kind,
                lower: factor,
                upper: factor,
            });
        }
        if !(lower > 0.0) || !(upper >= lower) {
            return Err(Error::usage(format!(
                "metric policy requires 0 < m <= M, got m={lower}, M={upper}"
            )));
        }
        Ok(MetricPolicy { kind, lower, upper })
    }

    pub fn scaled_identity(tau: f64) -> Result<Self> {
        MetricPolicy::new(MetricPolicyKind::ScaledIdentity { tau }, 0.0, 0.0)
    }

    /// Builds the next metric from recent `(x, grad)` observations. The
    /// first iteration (or any degenerate history) falls back to the
    /// geometric band midpoint `sqrt(m M) I`.
    pub fn next_metric(&self, history: &[HistoryPair]) -> Metric {
        match &self.kind {
            MetricPolicyKind::ScaledIdentity { tau } => {
                Metric::scaled_identity(1.0 / tau).expect("tau validated at construction")
            }
            MetricPolicyKind::ClippedDiagonal => {
                let dim = match history.last() {
                    Some(pair) => pair.x.len(),
                    None => return self.fallback(1),
                };
                if history.len() < 2 {
                    return self.fallback(dim);
                }
                let prev = &history[history.len() - 2];
                let last = &history[history.len() - 1];
                let s = &last.x - &prev.x;
                let y = &last.grad - &prev.grad;
                let mid = (self.lower * self.upper).sqrt();
                let entries: Vector = s
                    .iter()
                    .zip(y.iter())
                    .map(|(&si, &yi)| {
                        let estimate = if si.abs() > 1e-12 { yi / si } else { mid };
                        clamp_entry(estimate, self.lower, self.upper)
                    })
                    .collect();
                Metric::new(
                    MetricKind::Diagonal { entries },
                    self.lower,
                    self.upper,
                )
                .expect("band validated at construction")
            }
            MetricPolicyKind::ClippedSecant { memory } => {
                let dim = match history.last() {
                    Some(pair) => pair.x.len(),
                    None => return self.fallback(1),
                };
                if history.len() < 2 {
                    return self.fallback(dim);
                }
                let mid = (self.lower * self.upper).sqrt();
                let mut b = Array2::eye(dim) * mid;
                let start = history.len().saturating_sub(memory + 1);
                for window in history[start..].windows(2) {
                    let s = &window[1].x - &window[0].x;
                    let y = &window[1].grad - &window[0].grad;
                    let sy = s.dot(&y);
                    let s_norm = s.dot(&s).sqrt();
                    let y_norm = y.dot(&y).sqrt();
                    // Skip pairs without usable positive curvature.
                    if sy <= 1e-12 * s_norm * y_norm || s_norm == 0.0 {
                        continue;
                    }
                    let bs = b.dot(&s);
                    let sbs = s.dot(&bs);
                    if sbs > 0.0 {
                        b = b - outer(&bs, &bs) / sbs + outer(&y, &y) / sy;
                    }
                }
                let b = (&b + &b.t()) * 0.5;
                clip_spectrum(&b, self.lower, self.upper)
                    .expect("symmetrized estimate always clips")
            }
        }
    }

    fn fallback(&self, dim: usize) -> Metric {
        let mid = (self.lower * self.upper).sqrt();
        Metric::new(
            MetricKind::Diagonal {
                entries: Array1::from_elem(dim, mid),
            },
            self.lower,
            self.upper,
        )
        .expect("band validated at construction")
    }
}

fn clamp_entry(v: f64, lo: f64, hi: f64) -> f64 {
    if v.is_nan() {
        (lo * hi).sqrt()
    } else {
        v.clamp(lo, hi)
    }
}

fn outer(a: &Vector, b: &Vector) -> Array2<f64> {
    let n = a.len();
    Array2::from_shape_fn((n, n), |(i, j)| a[i] * b[j])
}

/// Eigen-decomposes a symmetric operator and clamps its spectrum into
/// `[m, M]`, yielding a metric that satisfies the band exactly.
pub fn clip_spectrum(candidate: &Array2<f64>, lower: f64, upper: f64) -> Result<Metric> {
    if candidate.nrows() != candidate.ncols() {
        return Err(Error::usage("clip_spectrum requires a square operator"));
    }
    let n = candidate.nrows();
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((candidate[[i, j]] - candidate[[j, i]]).abs());
        }
    }
    if asym > 1e-10 {
        return Err(Error::usage(format!(
            "clip_spectrum requires a symmetric operator (max asymmetry {asym:.3e})"
        )));
    }
    if !(lower > 0.0) || !(upper >= lower) {
        return Err(Error::usage("clip_spectrum requires 0 < m <= M"));
    }
    let eigen = na_bridge::to_nalgebra(candidate).symmetric_eigen();
    let mut values = eigen.eigenvalues.clone();
    for v in values.iter_mut() {
        *v = v.clamp(lower, upper);
    }
    let rebuilt = &eigen.eigenvectors
        * nalgebra::DMatrix::from_diagonal(&values)
        * eigen.eigenvectors.transpose();
    let rebuilt = (&rebuilt + rebuilt.transpose()) * 0.5;
    Metric::new(
        MetricKind::Dense {
            matrix: na_bridge::to_ndarray(&rebuilt),
        },
        lower,
        upper,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn scaled_identity_metric() {
        let policy = MetricPolicy::scaled_identity(2.0).unwrap();
        let metric = policy.next_metric(&[]);
        assert_eq!(metric.lower, 0.5);
        assert_eq!(metric.upper, 0.5);
        let v = array![2.0, -4.0];
        assert_eq!(metric.apply(&v), array![1.0, -2.0]);
    }

    #[test]
    fn clipped_diagonal_clamps_curvature() {
        let policy = MetricPolicy::new(MetricPolicyKind::ClippedDiagonal, 0.5, 2.0).unwrap();
        // Secant curvature (0.1, 5.0) must clamp to (0.5, 2.0).
        let history = vec![
            HistoryPair {
                x: array![0.0, 0.0],
                grad: array![0.0, 0.0],
            },
            HistoryPair {
                x: array![1.0, 1.0],
                grad: array![0.1, 5.0],
            },
        ];
        let metric = policy.next_metric(&history);
        match metric.kind() {
            MetricKind::Diagonal { entries } => {
                assert_eq!(entries, &array![0.5, 2.0]);
            }
            other => panic!("expected diagonal metric, got {other:?}"),
        }
        assert!(metric.validate_bounds(10, 0).is_ok());
    }

    #[test]
    fn empty_history_falls_back_to_band_midpoint() {
        for kind in [
            MetricPolicyKind::ClippedDiagonal,
            MetricPolicyKind::ClippedSecant { memory: 5 },
        ] {
            let policy = MetricPolicy::new(kind, 0.5, 2.0).unwrap();
            let metric = policy.next_metric(&[]);
            let v = array![1.0];
            let expected = (0.5_f64 * 2.0).sqrt();
            assert!((metric.apply(&v)[0] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn clip_spectrum_clamps_eigenvalues() {
        let candidate = array![[0.01, 0.0], [0.0, 10.0]];
        let metric = clip_spectrum(&candidate, 1.0, 2.0).unwrap();
        let e0 = array![1.0, 0.0];
        let e1 = array![0.0, 1.0];
        assert!((metric.norm_sq(&e0) - 1.0).abs() < 1e-12);
        assert!((metric.norm_sq(&e1) - 2.0).abs() < 1e-12);
        assert!(metric.validate_bounds(100, 1).is_ok());
    }

    #[test]
    fn clip_spectrum_idempotent_in_band() {
        let candidate = array![[1.5, 0.2], [0.2, 1.2]];
        let metric = clip_spectrum(&candidate, 0.5, 2.0).unwrap();
        match metric.kind() {
            MetricKind::Dense { matrix } => {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((matrix[[i, j]] - candidate[[i, j]]).abs() < 1e-12);
                    }
                }
            }
            other => panic!("expected dense metric, got {other:?}"),
        }
    }

    #[test]
    fn clip_spectrum_identity_unchanged() {
        let metric = clip_spectrum(&Array2::eye(3), 0.5, 2.0).unwrap();
        let v = array![1.0, -2.0, 0.5];
        let applied = metric.apply(&v);
        for (a, b) in applied.iter().zip(v.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn clip_spectrum_rejects_asymmetric() {
        let candidate = array![[1.0, 0.5], [0.0, 1.0]];
        assert!(matches!(
            clip_spectrum(&candidate, 0.5, 2.0),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn clipped_secant_output_respects_band() {
        let policy =
            MetricPolicy::new(MetricPolicyKind::ClippedSecant { memory: 3 }, 0.5, 2.0).unwrap();
        // Quadratic curvature with eigenvalues well outside the band.
        let a = array![[10.0, 0.0], [0.0, 0.05]];
        let mut history = Vec::new();
        let mut x = array![1.0, 1.0];
        for _ in 0..6 {
            history.push(HistoryPair {
                x: x.clone(),
                grad: a.dot(&x),
            });
            x = &x * 0.7 + array![0.01, -0.02];
        }
        let metric = policy.next_metric(&history);
        assert!(metric.validate_bounds(200, 3).is_ok());
    }
}
