//! Property tests for the algebraic invariants the solver leans on.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use proptest::prelude::*;

use isqa::linesearch::LsVariant;
use isqa::metric_policy::clip_spectrum;
use isqa::model::{Metric, ObjectiveSplit, SubproblemModel};
use isqa::problems::{prox_l1, prox_qg_example, Regularizer, SmoothFn};

fn coord() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL.prop_map(|v| (v % 10.0).clamp(-10.0, 10.0))
}

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(coord(), 3)
}

proptest! {
    #[test]
    fn soft_threshold_satisfies_the_prox_subgradient_condition(
        v in vec3(),
        tau in 1e-3..2.0f64,
    ) {
        let v = Array1::from_vec(v);
        let p = prox_l1(&v, tau).unwrap();
        for i in 0..v.len() {
            let residual = (v[i] - p[i]) / tau;
            if p[i] != 0.0 {
                // Active coordinate: residual equals the sign exactly.
                prop_assert!((residual - p[i].signum()).abs() <= 1e-12);
            } else {
                prop_assert!(residual.abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn prox_maps_are_nonexpansive(
        a in vec3(),
        b in vec3(),
        tau in 1e-3..3.0f64,
        which in 0..2usize,
    ) {
        let reg = if which == 0 {
            Regularizer::L1 { weight: 0.7 }
        } else {
            Regularizer::QgExample
        };
        let a = Array1::from_vec(a);
        let b = Array1::from_vec(b);
        let pa = reg.prox(&a, tau).unwrap();
        let pb = reg.prox(&b, tau).unwrap();
        let dp = (&pa - &pb).dot(&(&pa - &pb));
        let dv = (&a - &b).dot(&(&a - &b));
        prop_assert!(dp <= dv * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn growth_example_prox_beats_every_grid_point(
        v in -6.0..6.0f64,
        tau in 1e-2..2.5f64,
    ) {
        let p = prox_qg_example(v, tau).unwrap();
        let objective = |u: f64| tau * Regularizer::QgExample.value_1d(u) + 0.5 * (u - v) * (u - v);
        let h_p = objective(p);
        let mut u = -8.0;
        while u <= 8.0 {
            prop_assert!(h_p <= objective(u) + 1e-12);
            u += 1e-3;
        }
    }

    #[test]
    fn model_value_splits_into_linear_decrease_plus_metric_quadratic(
        anchor in vec3(),
        point in vec3(),
        linear in vec3(),
        diag in prop::collection::vec(0.3..3.0f64, 3),
    ) {
        let obj = ObjectiveSplit::new(
            Arc::new(SmoothFn::Quadratic {
                matrix: Array2::eye(3),
                linear: Array1::from_vec(linear),
            }),
            Arc::new(Regularizer::L1 { weight: 0.4 }),
        );
        let metric = Metric::diagonal(Array1::from_vec(diag)).unwrap();
        let anchor = Array1::from_vec(anchor);
        let model = SubproblemModel::new(&obj, metric, anchor.clone()).unwrap();
        prop_assert_eq!(model.eval_q(&anchor), 0.0);
        prop_assert_eq!(model.eval_delta(&anchor), 0.0);

        let x = Array1::from_vec(point);
        let q = model.eval_q(&x);
        let delta = model.eval_delta(&x);
        let half = 0.5 * model.metric().norm_sq(&(&x - &anchor));
        let scale = 1.0 + q.abs().max(delta.abs()).max(half);
        prop_assert!((q - (delta + half)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn clipped_spectra_respect_the_band(
        raw in prop::collection::vec(-3.0..3.0f64, 9),
        lower in 0.2..1.0f64,
        width in 0.1..3.0f64,
    ) {
        let upper = lower + width;
        let mut m = Array2::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                m[[i, j]] = raw[i * 3 + j];
            }
        }
        let sym = (&m + &m.t()) * 0.5;
        let metric = clip_spectrum(&sym, lower, upper).unwrap();
        prop_assert!(metric.validate_bounds(64, 5).is_ok());
    }

    #[test]
    fn stepsize_floor_is_monotone_in_the_band_and_lipschitz_constant(
        beta in 0.1..0.9f64,
        gamma in 0.05..0.9f64,
        eta in 0.1..1.0f64,
        m in 0.1..2.0f64,
        bump in 0.01..2.0f64,
        lip in 0.2..5.0f64,
    ) {
        for variant in [LsVariant::Ls1, LsVariant::Ls2, LsVariant::Ls3, LsVariant::Ls4] {
            let base = isqa::diagnostics::stepsize_floor(variant, beta, gamma, 1.0, eta, m, lip);
            let more_curvature =
                isqa::diagnostics::stepsize_floor(variant, beta, gamma, 1.0, eta, m + bump, lip);
            let rougher_gradient =
                isqa::diagnostics::stepsize_floor(variant, beta, gamma, 1.0, eta, m, lip + bump);
            prop_assert!(more_curvature >= base - 1e-15);
            prop_assert!(rougher_gradient <= base + 1e-15);
        }
    }

    #[test]
    fn counterexample_distance_is_exactly_one(k in 0usize..500) {
        let trace = isqa::problems::counterexample_trace(k);
        prop_assert_eq!(trace.len(), k + 1);
        for row in &trace {
            prop_assert_eq!(row.distance, 1.0);
            prop_assert!(row.value > 0.0);
        }
    }
}
