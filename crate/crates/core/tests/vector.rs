mod common;

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{E, PI};

use common::{max_abs_diff, norm, pde_reference, random_in_ball, random_orthogonal};
use strang_ac::oracle::{integrate_vector_ode, OracleConfig};
use strang_ac::spectral::TorusGrid;
use strang_ac::vector::{
    concavity_inequality_check_vec, concavity_slack_vec, evolve_vec, g_gradient_vec, g_potential_vec,
    modified_energy_vec, nonlinear_propagate_vec, random_direction_ic, smooth_ic, standard_energy_vec,
    strang_step_vec, sup_magnitude, trig_ic, VectorField, VectorSplitConfig,
};

fn matvec(a: &[f64], v: &[f64]) -> Vec<f64> {
    let m = v.len();
    (0..m).map(|i| (0..m).map(|j| a[i * m + j] * v[j]).sum()).collect()
}

#[test]
fn flow_fixed_points_and_oracle_example() {
    assert_eq!(nonlinear_propagate_vec(&[0.0, 0.0, 0.0], 5.0), vec![0.0; 3]);
    let unit = [0.6, 0.0, -0.8];
    for t in [0.0, 0.1, 1.0, 30.0] {
        assert!(max_abs_diff(&nonlinear_propagate_vec(&unit, t), &unit) < 1e-15);
    }
    let w = [0.5, 0.0];
    let oracle = integrate_vector_ode(&w, 0.1, &OracleConfig::default());
    assert!(max_abs_diff(&nonlinear_propagate_vec(&w, 0.1), &oracle) < 1e-8);
}

#[test]
fn flow_matches_rk4_on_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = OracleConfig::default();
    for case in 0..300 {
        let m = 2 + case % 3;
        let w = random_in_ball(&mut rng, m, 3.0);
        let t = rng.random_range(0.0..=2.0);
        let err = max_abs_diff(&nonlinear_propagate_vec(&w, t), &integrate_vector_ode(&w, t, &cfg));
        assert!(err < 1e-8, "case {case}: {err:e}");
    }
}

#[test]
fn flow_norm_identity_semigroup_and_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..2000 {
        let m = 2 + case % 3;
        let w = random_in_ball(&mut rng, m, 3.0);
        let (s, t): (f64, f64) = (rng.random_range(0.0..=3.0), rng.random_range(0.0..=3.0));
        let lambda = norm(&w).powi(2);
        let e2t = (2.0 * t).exp();
        let out = nonlinear_propagate_vec(&w, t);
        assert_abs_diff_eq!(norm(&out).powi(2), e2t * lambda / ((e2t - 1.0) * lambda + 1.0), epsilon = 1e-12);
        assert!(norm(&out) <= norm(&w).max(1.0) + 1e-15);
        let twice = nonlinear_propagate_vec(&nonlinear_propagate_vec(&w, s), t);
        assert!(max_abs_diff(&twice, &nonlinear_propagate_vec(&w, s + t)) < 1e-12);
        let r = random_orthogonal(&mut rng, m);
        let rotated = nonlinear_propagate_vec(&matvec(&r, &w), t);
        assert!(max_abs_diff(&rotated, &matvec(&r, &out)) < 1e-13);
    }
}

#[test]
fn one_step_local_error_is_third_order() {
    let grid = TorusGrid::new(1, 32).unwrap();
    let u0 = VectorField::from_fn(&grid, 2, |p| vec![0.6 * p[0].cos() + 0.2, 0.5 * (2.0 * p[0]).sin()]);
    let initial: Vec<Vec<f64>> = u0.components().iter().map(|c| c.values().to_vec()).collect();
    let reaction = |w: &[f64]| {
        let mag: f64 = w.iter().map(|x| x * x).sum();
        w.iter().map(|x| (1.0 - mag) * x).collect::<Vec<f64>>()
    };
    let errors: Vec<f64> = [8e-3, 4e-3, 2e-3]
        .iter()
        .map(|&tau| {
            let split = strang_step_vec(&u0, tau).unwrap().next;
            let reference = pde_reference(&grid, &initial, &reaction, tau, 100);
            split
                .components()
                .iter()
                .zip(&reference)
                .map(|(c, r)| max_abs_diff(c.values(), r))
                .fold(0.0, f64::max)
        })
        .collect();
    for pair in errors.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!((6.5..9.5).contains(&ratio), "{errors:?}");
    }
}

#[test]
fn constant_and_zero_fields_are_fixed() {
    let grid = TorusGrid::new(2, 16).unwrap();
    let c = [0.28, -0.96];
    let u = VectorField::constant(&grid, &c);
    let after = evolve_vec(&u, 0.3, 5).unwrap();
    for j in 0..grid.len() {
        assert!(max_abs_diff(&after.at(j), &c) < 1e-14);
    }
    let zero = VectorField::zeros(&grid, 3);
    let next = strang_step_vec(&zero, 0.1).unwrap().next;
    assert_eq!(sup_magnitude(&next), 0.0);
}

#[test]
fn fused_evolution_agrees_with_repeated_steps() {
    let grid = TorusGrid::new(2, 16).unwrap();
    let u0 = smooth_ic(&grid, 2, 1.3).unwrap();
    let mut stepped = u0.clone();
    for _ in 0..20 {
        stepped = strang_step_vec(&stepped, 0.05).unwrap().next;
    }
    assert!(evolve_vec(&u0, 0.05, 20).unwrap().l2_distance(&stepped) < 1e-12);
}

#[test]
fn modified_potential_limits_and_gradient() {
    assert_eq!(g_potential_vec(&[0.0, 0.0], 0.3).unwrap(), 0.0);
    assert_eq!(g_gradient_vec(&[0.0, 0.0], 0.3).unwrap(), vec![0.0, 0.0]);
    for r in [0.5, 0.8, 1.2] {
        let target = 0.25 * (r * r - 1.0f64).powi(2);
        let defect = |tau: f64| (g_potential_vec(&[r, 0.0], tau).unwrap() + 0.25 - target).abs();
        let rates: Vec<f64> = [1e-2, 1e-3, 1e-4].windows(2).map(|p| (defect(p[0]) / defect(p[1])).log10()).collect();
        for rate in rates {
            assert!((0.9..1.1).contains(&rate), "|w| = {r}: rate {rate}");
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    for case in 0..500 {
        let tau = [0.01, 0.1, 1.0][case % 3];
        let mut w = random_in_ball(&mut rng, 3, 2.0);
        if case % 50 == 0 {
            let len = norm(&w).max(1e-3);
            w.iter_mut().for_each(|x| *x /= len);
        }
        let grad = g_gradient_vec(&w, tau).unwrap();
        for i in 0..3 {
            let (mut plus, mut minus) = (w.clone(), w.clone());
            plus[i] += h;
            minus[i] -= h;
            let fd = (g_potential_vec(&plus, tau).unwrap() - g_potential_vec(&minus, tau).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(fd, grad[i], epsilon = 1e-6);
        }
        let q = random_orthogonal(&mut rng, 3);
        assert_abs_diff_eq!(
            g_potential_vec(&matvec(&q, &w), tau).unwrap(),
            g_potential_vec(&w, tau).unwrap(),
            epsilon = 1e-12
        );
    }
}

#[test]
fn concavity_examples_and_random_pairs() {
    assert_eq!(concavity_slack_vec(&[0.3, 0.4], &[0.3, 0.4], 0.5).unwrap(), 0.0);
    let explicit = concavity_slack_vec(&[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
    assert_abs_diff_eq!(explicit, E / (E + 1.0), epsilon = 1e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..2000 {
        let tau = [0.01, 1.0][case % 2];
        let (u, v) = (random_in_ball(&mut rng, 2, 2.0), random_in_ball(&mut rng, 2, 2.0));
        assert!(concavity_inequality_check_vec(&u, &v, tau).unwrap(), "{u:?} {v:?} {tau}");
    }
    assert!(concavity_slack_vec(&[1.0], &[1.0, 0.0], 1.0).is_err());
}

#[test]
fn energies_on_simple_fields() {
    let grid = TorusGrid::new(2, 16).unwrap();
    let vol = (2.0 * PI).powi(2);
    let c = [0.48, 0.64];
    let expected = vol * (g_potential_vec(&c, 0.1).unwrap() + 0.25);
    assert_abs_diff_eq!(modified_energy_vec(&VectorField::constant(&grid, &c), 0.1).unwrap(), expected, epsilon = 1e-11);
    assert_abs_diff_eq!(standard_energy_vec(&VectorField::constant(&grid, &[0.6, 0.8])).unwrap(), 0.0, epsilon = 1e-13);
    assert_abs_diff_eq!(standard_energy_vec(&VectorField::zeros(&grid, 2)).unwrap(), 0.25 * vol, epsilon = 1e-12);

    let line = TorusGrid::new(1, 32).unwrap();
    let circle = VectorField::from_fn(&line, 2, |p| vec![p[0].cos(), p[0].sin()]);
    assert_abs_diff_eq!(standard_energy_vec(&circle).unwrap(), PI, epsilon = 1e-12);
}

#[test]
fn initial_conditions() {
    let grid = TorusGrid::new(2, 32).unwrap();
    let a = random_direction_ic(&grid, 3, 0.8, 7).unwrap();
    assert_abs_diff_eq!(sup_magnitude(&a), 0.8, epsilon = 1e-15);
    for j in 0..grid.len() {
        assert_abs_diff_eq!(a.norm_sq_at(j).sqrt(), 0.8, epsilon = 1e-15);
    }
    assert_eq!(a, random_direction_ic(&grid, 3, 0.8, 7).unwrap());
    assert_ne!(a, random_direction_ic(&grid, 3, 0.8, 8).unwrap());
    assert_eq!(sup_magnitude(&random_direction_ic(&grid, 3, 0.0, 7).unwrap()), 0.0);
    assert!(random_direction_ic(&grid, 3, -1.0, 7).is_err());
    assert_abs_diff_eq!(sup_magnitude(&trig_ic(&grid, 0.8).unwrap()), 0.8, epsilon = 1e-15);
    assert_abs_diff_eq!(sup_magnitude(&smooth_ic(&grid, 3, 2.0).unwrap()), 2.0, epsilon = 1e-14);
}

#[test]
fn trajectories_keep_maximum_principle_and_dissipate() {
    let grid = TorusGrid::new(2, 32).unwrap();
    for tau in [1e-4, 0.1, 1.0, 10.0] {
        for mag in [0.8, 2.0] {
            let mut u = smooth_ic(&grid, 2, mag).unwrap();
            let mut energy = modified_energy_vec(&u, tau).unwrap();
            for _ in 0..40 {
                let bound = sup_magnitude(&u).max(1.0);
                u = strang_step_vec(&u, tau).unwrap().next;
                assert!(sup_magnitude(&u) <= bound + 1e-12);
                let next = modified_energy_vec(&u, tau).unwrap();
                assert!(next <= energy + 1e-10 * energy.abs(), "tau {tau}: {energy} -> {next}");
                energy = next;
            }
        }
    }
}

#[test]
fn energy_gap_is_first_order_in_tau() {
    let grid = TorusGrid::new(2, 32).unwrap();
    let u0 = trig_ic(&grid, 0.8).unwrap();
    let gap = |tau: f64| {
        let steps = (0.1 / tau).round() as usize;
        let mut u = u0.clone();
        let mut worst: f64 = 0.0;
        for n in 0..=steps {
            if n > 0 {
                u = strang_step_vec(&u, tau).unwrap().next;
            }
            worst = worst.max((modified_energy_vec(&u, tau).unwrap() - standard_energy_vec(&u).unwrap()).abs());
        }
        worst
    };
    let ratio = gap(5e-3) / gap(1e-2);
    assert!((0.4..0.6).contains(&ratio), "{ratio}");
}

#[test]
fn split_config_validation() {
    assert!(VectorSplitConfig { tau: 0.1, steps: 10, m: 2 }.validate().is_ok());
    assert!(VectorSplitConfig { tau: 0.0, steps: 10, m: 2 }.validate().is_err());
    assert!(VectorSplitConfig { tau: f64::NAN, steps: 10, m: 2 }.validate().is_err());
    assert!(VectorSplitConfig { tau: 0.1, steps: 10, m: 0 }.validate().is_err());
}
