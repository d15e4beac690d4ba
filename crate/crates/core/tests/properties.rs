use proptest::prelude::*;

use strang_ac::matrix::{nonlinear_propagate_mat, singular_data, taylor_inequality_check, threshold_check};
use strang_ac::potential::{flow_factor, flow_norm_sq};
use strang_ac::spectral::{forward_transform, heat_propagate, ScalarField, TorusGrid};
use strang_ac::vector::{concavity_inequality_check_vec, nonlinear_propagate_vec};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn square(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, m * m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn vector_flow_moves_monotonically_toward_the_sphere(
        w in prop::collection::vec(-3.0..3.0f64, 1..5),
        s in 0.0..2.0f64,
        t in 0.0..2.0f64,
    ) {
        let r0 = norm(&w);
        let r1 = norm(&nonlinear_propagate_vec(&w, s));
        let r2 = norm(&nonlinear_propagate_vec(&w, s + t));
        let tol = 1e-14 * (1.0 + r0);
        if r0 <= 1.0 {
            prop_assert!(r0 <= r1 + tol && r1 <= r2 + tol && r2 <= 1.0 + tol);
        } else {
            prop_assert!(r0 + tol >= r1 && r1 + tol >= r2 && r2 + tol >= 1.0);
        }
        prop_assert!((flow_norm_sq(r0 * r0, s).sqrt() - r1).abs() <= 1e-12 * (1.0 + r1));
        let factor = flow_factor(r0 * r0, s);
        prop_assert!(factor > 0.0 && factor.is_finite());
    }

    #[test]
    fn matrix_flow_pushes_singular_values_toward_one(
        (m, a) in (2usize..=4).prop_flat_map(|m| (Just(m), square(m))),
        t in 0.0..3.0f64,
    ) {
        let before = singular_data(&a, m).unwrap().singular_values;
        let after = singular_data(&nonlinear_propagate_mat(&a, m, t).unwrap(), m).unwrap().singular_values;
        for (b, c) in before.iter().zip(&after) {
            prop_assert!((c - 1.0).abs() <= (b - 1.0).abs() + 1e-12);
            prop_assert!((c - 1.0) * (b - 1.0) >= -1e-12);
        }
    }

    #[test]
    fn matrix_flow_keeps_the_frobenius_ball(
        (m, a) in (2usize..=4).prop_flat_map(|m| (Just(m), square(m))),
        scale in 0.0..1.0f64,
        t in 0.0..10.0f64,
    ) {
        let limit = (m as f64).sqrt();
        let n = norm(&a);
        prop_assume!(n > 0.0);
        let b: Vec<f64> = a.iter().map(|x| x * scale * limit / n).collect();
        prop_assert!(norm(&nonlinear_propagate_mat(&b, m, t).unwrap()) <= limit + 1e-12);
    }

    #[test]
    fn concavity_holds_for_any_step(
        u in prop::collection::vec(-2.0..2.0f64, 3),
        v in prop::collection::vec(-2.0..2.0f64, 3),
        tau in 1e-3..10.0f64,
    ) {
        prop_assert!(concavity_inequality_check_vec(&u, &v, tau).unwrap());
    }

    #[test]
    fn taylor_inequality_under_the_bound(
        u0 in prop::collection::vec(-1.0..1.0f64, 4),
        tip in prop::collection::vec(-1.0..1.0f64, 4),
        frac in 1e-3..1.0f64,
    ) {
        let limit = 2f64.sqrt();
        let clip = |v: Vec<f64>| { let n = norm(&v); if n > limit { v.iter().map(|x| x * limit / n).collect() } else { v } };
        let (u0, tip) = (clip(u0), clip(tip));
        let h: Vec<f64> = tip.iter().zip(&u0).map(|(a, b)| a - b).collect();
        let tau = 0.0897 * frac;
        prop_assert!(threshold_check(tau, 2).satisfied);
        prop_assert!(taylor_inequality_check(&u0, &h, 2, tau).unwrap());
    }

    #[test]
    fn heat_flow_contracts_l2_and_keeps_the_mean(
        values in prop::collection::vec(-1.0..1.0f64, 64),
        t in 0.0..1.0f64,
    ) {
        let grid = TorusGrid::new(2, 8).unwrap();
        let f = ScalarField::new(grid, values).unwrap();
        let g = heat_propagate(&f, t).unwrap();
        prop_assert!(g.l2_norm_squared() <= f.l2_norm_squared() * (1.0 + 1e-13) + 1e-15);
        prop_assert!((g.mean() - f.mean()).abs() <= 1e-14);
        let power = forward_transform(&f).unwrap().power();
        prop_assert!((power * f.grid().volume() - f.l2_norm_squared()).abs() <= 1e-12 * (1.0 + f.l2_norm_squared()));
    }
}
