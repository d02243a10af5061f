//! Test-problem catalog: smooth terms with gradient oracles, prox-capable
//! regularizers, and the growth/counterexample fixtures.
//!
//! Every catalog regularizer has a closed-form prox. The one exception is
//! the 2-d constrained counterexample region, which exists purely as an
//! evaluation fixture (it is never handed to the solver; its `prox` is a
//! usage error).

use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ObjectiveSplit, Vector};
use crate::na_bridge;

/// Smooth convex term `f` with an exact gradient oracle.
#[derive(Debug, Clone)]
pub enum SmoothFn {
    /// `f = 0`.
    Zero { dim: usize },
    /// `f(x) = 1/2 x' A x - b' x` with `A` symmetric positive definite.
    Quadratic { matrix: Array2<f64>, linear: Vector },
    /// Mean logistic loss: `f(w) = 1/N sum log(1 + exp(-y_i <x_i, w>))`.
    Logistic { features: Array2<f64>, labels: Vector },
    /// `f(x) = 1/4 sum x_i^4`. Gradient is not globally Lipschitz.
    Quartic { dim: usize },
}

fn logistic_loss(t: f64) -> f64 {
    // log(1 + exp(t)) computed stably for large |t|.
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

impl SmoothFn {
    pub fn dim(&self) -> usize {
        match self {
            SmoothFn::Zero { dim } | SmoothFn::Quartic { dim } => *dim,
            SmoothFn::Quadratic { linear, .. } => linear.len(),
            SmoothFn::Logistic { features, .. } => features.ncols(),
        }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            SmoothFn::Zero { .. } => 0.0,
            SmoothFn::Quadratic { matrix, linear } => 0.5 * x.dot(&matrix.dot(x)) - linear.dot(x),
            SmoothFn::Logistic { features, labels } => {
                let z = features.dot(x);
                let n = labels.len() as f64;
                z.iter()
                    .zip(labels)
                    .map(|(&zi, &yi)| logistic_loss(-yi * zi))
                    .sum::<f64>()
                    / n
            }
            SmoothFn::Quartic { .. } => 0.25 * x.iter().map(|c| c.powi(4)).sum::<f64>(),
        }
    }

    pub fn grad(&self, x: &Vector) -> Vector {
        match self {
            SmoothFn::Zero { dim } => Array1::zeros(*dim),
            SmoothFn::Quadratic { matrix, linear } => matrix.dot(x) - linear,
            SmoothFn::Logistic { features, labels } => {
                let z = features.dot(x);
                let n = labels.len() as f64;
                // d/dz log(1+exp(-y z)) = -y sigma(-y z)
                let coeffs: Vector = z
                    .iter()
                    .zip(labels)
                    .map(|(&zi, &yi)| {
                        let s = 1.0 / (1.0 + (yi * zi).exp());
                        -yi * s / n
                    })
                    .collect();
                features.t().dot(&coeffs)
            }
            SmoothFn::Quartic { .. } => x.iter().map(|c| c.powi(3)).collect(),
        }
    }

    /// All catalog smooth terms are finite on the whole space.
    pub fn contains(&self, _x: &Vector) -> bool {
        true
    }

    /// Global gradient Lipschitz constant, when one exists.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            SmoothFn::Zero { .. } => Some(0.0),
            SmoothFn::Quadratic { matrix, .. } => {
                let eigen = na_bridge::to_nalgebra(matrix).symmetric_eigen();
                Some(eigen.eigenvalues.iter().cloned().fold(0.0, f64::max))
            }
            SmoothFn::Logistic { features, labels } => {
                let svd = na_bridge::to_nalgebra(features).svd(false, false);
                let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
                Some(smax * smax / (4.0 * labels.len() as f64))
            }
            SmoothFn::Quartic { .. } => None,
        }
    }

    /// Strong-convexity modulus, when positive and known.
    pub fn strong_convexity(&self) -> Option<f64> {
        match self {
            SmoothFn::Quadratic { matrix, .. } => {
                let eigen = na_bridge::to_nalgebra(matrix).symmetric_eigen();
                let min = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
                (min > 0.0).then_some(min)
            }
            _ => None,
        }
    }
}

/// Proper lsc convex regularizer `g` with a closed-form prox.
#[derive(Debug, Clone)]
pub enum Regularizer {
    /// `g = 0`.
    Zero,
    /// `g(x) = weight * ||x||_1`.
    L1 { weight: f64 },
    /// Separable growth example: `phi(u) = |u|` for `|u| < 1`, `u^2` else.
    /// Satisfies quadratic growth with mu = 2 but not optimal-set strong
    /// convexity.
    QgExample,
    /// 2-d fixture `g(x, y) = x + sqrt(x^2 + y^2)` on `{x + y^2 <= 1}`,
    /// `+inf` outside. Evaluation-only: no prox.
    CounterexampleRegion,
}

fn qg_piece(u: f64) -> f64 {
    if u.abs() < 1.0 {
        u.abs()
    } else {
        u * u
    }
}

impl Regularizer {
    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { weight } => weight * x.iter().map(|c| c.abs()).sum::<f64>(),
            Regularizer::QgExample => x.iter().map(|&c| qg_piece(c)).sum(),
            Regularizer::CounterexampleRegion => {
                assert_eq!(x.len(), 2, "counterexample region is 2-dimensional");
                counterexample_eval(x[0], x[1])
            }
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        match self {
            Regularizer::CounterexampleRegion => x[0] + x[1] * x[1] <= 1.0,
            _ => true,
        }
    }

    /// Scalar evaluation for separable regularizers; the fast path for the
    /// brute-force 1-d prox checks.
    pub fn value_1d(&self, u: f64) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { weight } => weight * u.abs(),
            Regularizer::QgExample => qg_piece(u),
            Regularizer::CounterexampleRegion => {
                panic!("counterexample-region is not one-dimensional")
            }
        }
    }

    pub fn prox_capable(&self) -> bool {
        !matches!(self, Regularizer::CounterexampleRegion)
    }

    /// `prox(v, tau) = argmin_u tau g(u) + 1/2 ||u - v||^2`.
    pub fn prox(&self, v: &Vector, tau: f64) -> Result<Vector> {
        if tau <= 0.0 {
            return Err(Error::usage(format!("prox requires tau > 0, got {tau}")));
        }
        match self {
            Regularizer::Zero => Ok(v.clone()),
            Regularizer::L1 { weight } => prox_l1(v, tau * weight),
            Regularizer::QgExample => v.iter().map(|&c| prox_qg_example(c, tau)).collect(),
            Regularizer::CounterexampleRegion => Err(Error::usage(
                "counterexample-region has no closed-form prox; it is an evaluation fixture only",
            )),
        }
    }
}

/// Componentwise soft thresholding `sign(v_i) max(|v_i| - tau, 0)`.
pub fn prox_l1(v: &Vector, tau: f64) -> Result<Vector> {
    if tau <= 0.0 {
        return Err(Error::usage(format!("prox_l1 requires tau > 0, got {tau}")));
    }
    Ok(v.iter()
        .map(|&c| c.signum() * (c.abs() - tau).max(0.0))
        .collect())
}

/// Exact prox of the growth-example piece `phi`: minimizes
/// `tau phi(u) + 1/2 (u - v)^2` by comparing the per-piece stationary
/// candidates and the breakpoints `0`, `+-1`.
pub fn prox_qg_example(v: f64, tau: f64) -> Result<f64> {
    if tau <= 0.0 {
        return Err(Error::usage(format!(
            "prox_qg_example requires tau > 0, got {tau}"
        )));
    }
    let objective = |u: f64| tau * qg_piece(u) + 0.5 * (u - v) * (u - v);
    let mut candidates = [0.0, 1.0, -1.0, f64::NAN, f64::NAN];
    // Inner piece |u| < 1: soft threshold.
    let soft = v.signum() * (v.abs() - tau).max(0.0);
    if soft.abs() < 1.0 {
        candidates[3] = soft;
    }
    // Outer piece |u| >= 1: stationarity of tau u^2 + 1/2 (u - v)^2.
    let quad = v / (1.0 + 2.0 * tau);
    if quad.abs() >= 1.0 {
        candidates[4] = quad;
    }
    let mut best = 0.0;
    let mut best_val = objective(0.0);
    for &u in &candidates {
        if u.is_nan() {
            continue;
        }
        let val = objective(u);
        if val < best_val {
            best_val = val;
            best = u;
        }
    }
    Ok(best)
}

/// The constrained 2-d fixture: `x + sqrt(x^2 + y^2)` where `x + y^2 <= 1`,
/// `+inf` elsewhere.
pub fn counterexample_eval(x: f64, y: f64) -> f64 {
    if x + y * y <= 1.0 {
        x + x.hypot(y)
    } else {
        f64::INFINITY
    }
}

/// One row of the counterexample trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexamplePoint {
    pub point: (f64, f64),
    pub value: f64,
    pub distance: f64,
}

/// Walks `z_i = (-(i+1), 1)` for `i = 0..=k`. The objective values decrease
/// strictly toward the minimum 0 while the distance to the optimal set
/// `{(x, 0) : x <= 0}` stays exactly 1: convergence in value does not force
/// convergence in distance.
pub fn counterexample_trace(k: usize) -> Vec<CounterexamplePoint> {
    (0..=k)
        .map(|i| {
            let x = -((i + 1) as f64);
            let y = 1.0;
            CounterexamplePoint {
                point: (x, y),
                value: counterexample_eval(x, y),
                distance: distance_to_halfline(x, y),
            }
        })
        .collect()
}

fn distance_to_halfline(x: f64, y: f64) -> f64 {
    let px = x.min(0.0);
    (x - px).hypot(y)
}

/// Projection onto the known optimal set of a catalog instance.
#[derive(Debug, Clone)]
pub enum Projector {
    /// Singleton optimal set.
    Point(Vector),
    /// `{(x, 0) : x <= 0}` in the plane (counterexample fixture).
    NonpositiveHalfAxis,
}

impl Projector {
    pub fn project(&self, x: &Vector) -> Vector {
        match self {
            Projector::Point(p) => p.clone(),
            Projector::NonpositiveHalfAxis => {
                let mut p = Array1::zeros(2);
                p[0] = x[0].min(0.0);
                p
            }
        }
    }

    pub fn distance(&self, x: &Vector) -> f64 {
        let p = self.project(x);
        let d = x - &p;
        d.dot(&d).sqrt()
    }
}

/// A fully described benchmark problem.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub objective: ObjectiveSplit,
    pub name: String,
    pub known_f_star: Option<f64>,
    pub known_projector: Option<Projector>,
    /// Quadratic-growth modulus, when established.
    pub known_qg_mu: Option<f64>,
    /// Gradient Lipschitz constant: global where one exists, otherwise local
    /// on the initial sublevel region.
    pub known_local_l: Option<f64>,
    pub level_bounded: bool,
    pub x0: Vector,
    pub dimension: usize,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.dimension
    }

    /// Whether the instance may be handed to the solver driver.
    pub fn solvable(&self) -> bool {
        self.objective.reg.prox_capable()
    }
}

/// Names accepted by [`catalog_instantiate`].
pub const CATALOG: &[&str] = &[
    "sc-quadratic-l1",
    "logistic-l1",
    "quartic",
    "qg-not-ossc",
    "counterexample-region",
    "fbs-reference",
];

/// Builds a catalog instance. Numeric reference values (`F*`, the optimal
/// point) for instances without a closed-form solution are produced by the
/// dual-route oracle at construction time, deterministically in `seed`.
pub fn catalog_instantiate(name: &str, dimension: usize, seed: u64) -> Result<ProblemInstance> {
    if dimension == 0 {
        return Err(Error::usage("dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match name {
        "sc-quadratic-l1" => {
            let (matrix, mu, lip) = random_spd(dimension, 1.0, 2.0, &mut rng);
            let linear: Vector = uniform_vec(dimension, 1.0, &mut rng);
            let x0 = uniform_vec(dimension, 2.0, &mut rng);
            let smooth = SmoothFn::Quadratic { matrix, linear };
            let objective = ObjectiveSplit::new(
                Arc::new(smooth),
                Arc::new(Regularizer::L1 { weight: 0.1 }),
            );
            let mut instance = ProblemInstance {
                objective,
                name: name.to_string(),
                known_f_star: None,
                known_projector: None,
                // f strongly convex with modulus mu, g convex, so F grows
                // quadratically with the same modulus around its minimizer.
                known_qg_mu: Some(mu),
                known_local_l: Some(lip),
                level_bounded: true,
                x0,
                dimension,
                seed,
            };
            attach_reference(&mut instance)?;
            Ok(instance)
        }
        "logistic-l1" => {
            let samples = (8 * dimension).max(16);
            let features = Array2::from_shape_fn((samples, dimension), |_| {
                rng.random::<f64>() * 2.0 - 1.0
            });
            let planted = uniform_vec(dimension, 1.5, &mut rng);
            let labels: Vector = features
                .rows()
                .into_iter()
                .map(|row| {
                    let margin = row.dot(&planted) + 0.2 * (rng.random::<f64>() - 0.5);
                    if margin >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            let smooth = SmoothFn::Logistic { features, labels };
            let lip = smooth.lipschitz();
            let x0 = Array1::zeros(dimension);
            let objective = ObjectiveSplit::new(
                Arc::new(smooth),
                Arc::new(Regularizer::L1 { weight: 0.01 }),
            );
            let mut instance = ProblemInstance {
                objective,
                name: name.to_string(),
                known_f_star: None,
                known_projector: None,
                known_qg_mu: None,
                known_local_l: lip,
                level_bounded: true,
                x0,
                dimension,
                seed,
            };
            attach_reference(&mut instance)?;
            Ok(instance)
        }
        "quartic" => {
            let x0: Vector = Array1::from_iter((0..dimension).map(|_| {
                let mag = 1.0 + 0.8 * rng.random::<f64>();
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }));
            let smooth = SmoothFn::Quartic { dim: dimension };
            let f0 = smooth.value(&x0);
            // Sublevel set of x0 lies in ||x||_inf <= (4 f0)^(1/4), where the
            // Hessian norm is bounded by 3 sqrt(4 f0).
            let local_l = 3.0 * (4.0 * f0).sqrt();
            let objective = ObjectiveSplit::new(Arc::new(smooth), Arc::new(Regularizer::Zero));
            Ok(ProblemInstance {
                objective,
                name: name.to_string(),
                known_f_star: Some(0.0),
                known_projector: Some(Projector::Point(Array1::zeros(dimension))),
                known_qg_mu: None,
                known_local_l: Some(local_l),
                level_bounded: true,
                x0,
                dimension,
                seed,
            })
        }
        "qg-not-ossc" => {
            if dimension != 1 {
                return Err(Error::usage("qg-not-ossc is one-dimensional"));
            }
            let x0 = Array1::from_elem(1, 2.0 + 2.0 * rng.random::<f64>());
            let objective = ObjectiveSplit::new(
                Arc::new(SmoothFn::Zero { dim: 1 }),
                Arc::new(Regularizer::QgExample),
            );
            Ok(ProblemInstance {
                objective,
                name: name.to_string(),
                known_f_star: Some(0.0),
                known_projector: Some(Projector::Point(Array1::zeros(1))),
                known_qg_mu: Some(2.0),
                known_local_l: None,
                level_bounded: true,
                x0,
                dimension,
                seed,
            })
        }
        "counterexample-region" => {
            if dimension != 2 {
                return Err(Error::usage("counterexample-region is two-dimensional"));
            }
            let objective = ObjectiveSplit::new(
                Arc::new(SmoothFn::Zero { dim: 2 }),
                Arc::new(Regularizer::CounterexampleRegion),
            );
            Ok(ProblemInstance {
                objective,
                name: name.to_string(),
                known_f_star: Some(0.0),
                known_projector: Some(Projector::NonpositiveHalfAxis),
                known_qg_mu: None,
                known_local_l: None,
                level_bounded: false,
                x0: ndarray::array![-1.0, 1.0],
                dimension,
                seed,
            })
        }
        "fbs-reference" => {
            let entries: Vector =
                Array1::from_iter((0..dimension).map(|_| 0.5 + rng.random::<f64>()));
            let mu = entries.iter().cloned().fold(f64::INFINITY, f64::min);
            let lip = entries.iter().cloned().fold(0.0, f64::max);
            let matrix = Array2::from_diag(&entries);
            let linear = uniform_vec(dimension, 1.0, &mut rng);
            let x0 = uniform_vec(dimension, 2.0, &mut rng);
            let objective = ObjectiveSplit::new(
                Arc::new(SmoothFn::Quadratic { matrix, linear }),
                Arc::new(Regularizer::L1 { weight: 0.1 }),
            );
            let mut instance = ProblemInstance {
                objective,
                name: name.to_string(),
                known_f_star: None,
                known_projector: None,
                known_qg_mu: Some(mu),
                known_local_l: Some(lip),
                level_bounded: true,
                x0,
                dimension,
                seed,
            };
            attach_reference(&mut instance)?;
            Ok(instance)
        }
        other => Err(Error::usage(format!(
            "unknown catalog instance {other:?}; expected one of {CATALOG:?}"
        ))),
    }
}

fn attach_reference(instance: &mut ProblemInstance) -> Result<()> {
    let (x_star, f_star) = crate::oracle::reference_solution(instance, 1e-12)?;
    instance.known_f_star = Some(f_star);
    instance.known_projector = Some(Projector::Point(x_star));
    Ok(())
}

fn uniform_vec(dim: usize, half_width: f64, rng: &mut ChaCha8Rng) -> Vector {
    Array1::from_iter((0..dim).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * half_width))
}

/// Random symmetric matrix with spectrum spread evenly across
/// `[lambda_min, lambda_max]` in a random orthogonal basis. Returns the
/// matrix together with its exact extreme eigenvalues.
fn random_spd(
    dim: usize,
    lambda_min: f64,
    lambda_max: f64,
    rng: &mut ChaCha8Rng,
) -> (Array2<f64>, f64, f64) {
    let eigenvalues: Vec<f64> = if dim == 1 {
        vec![0.5 * (lambda_min + lambda_max)]
    } else {
        (0..dim)
            .map(|i| lambda_min + (lambda_max - lambda_min) * i as f64 / (dim - 1) as f64)
            .collect()
    };
    let raw = nalgebra::DMatrix::from_fn(dim, dim, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let q = raw.qr().q();
    let lambda = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
        eigenvalues.clone(),
    ));
    let a = &q * lambda * q.transpose();
    // Symmetrize against round-off.
    let a = (&a + a.transpose()) * 0.5;
    let mu = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let lip = eigenvalues.iter().cloned().fold(0.0, f64::max);
    (na_bridge::to_ndarray(&a), mu, lip)
}

/// Max relative deviation between the analytic gradient and central finite
/// differences at `x`. Probe points falling outside the domain shrink `h`
/// once before failing.
pub fn grad_check_fd(f: &SmoothFn, x: &Vector, h: f64) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::usage("grad_check_fd requires h > 0"));
    }
    let grad = f.grad(x);
    let mut step = h;
    for attempt in 0..2 {
        let mut ok = true;
        let mut worst: f64 = 0.0;
        for i in 0..x.len() {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[i] += step;
            minus[i] -= step;
            if !f.contains(&plus) || !f.contains(&minus) {
                ok = false;
                break;
            }
            let fd = (f.value(&plus) - f.value(&minus)) / (2.0 * step);
            let rel = (fd - grad[i]).abs() / (1.0 + grad[i].abs());
            worst = worst.max(rel);
        }
        if ok {
            return Ok(worst);
        }
        if attempt == 0 {
            step /= 10.0;
        }
    }
    Err(Error::usage(
        "finite-difference probes left the domain even after shrinking h",
    ))
}
