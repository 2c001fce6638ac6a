//! Checks against independent computations written here rather than in the library.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use gibbs_kdv::cnoidal::{
    cnoidal_profile, cubic_roots_trig, family_norm_sq, k_squared_from_gamma, modulus_from_roots,
    solve_on_sphere, solve_periodic_family, CnoidalParams,
};
use gibbs_kdv::concentration::empirical_mgf;
use gibbs_kdv::elliptic::{complete_k, jacobi_sn};
use gibbs_kdv::floquet::{hamel_min_check, instability_intervals, lame_band_edges, lame_potential};
use gibbs_kdv::gibbs::{sample_gibbs, SampleMethod};
use gibbs_kdv::observables::Observable;
use gibbs_kdv::{EnsembleParams, Model};

#[test]
fn worked_example_roots_and_modulus() {
    let r = cubic_roots_trig(6.0, -14.0 / 3.0, -4.0 / 3.0).unwrap();
    for (got, want) in r.as_array().iter().zip([2.0, 1.0, -2.0 / 3.0]) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    let (k, _) = modulus_from_roots(&r, 6.0).unwrap();
    assert!((k * k - 3.0 / 8.0).abs() < 1e-12);
}

#[test]
fn roots_match_companion_eigenvalues() {
    for &(beta, lambda, c) in &[(6.0, -14.0 / 3.0, -4.0 / 3.0), (1.0, 3.0, 5.0), (2.5, 4.0, 3.0), (0.7, -2.0, -4.0)] {
        // -(beta/6) phi^3 - (lambda/2) phi^2 + C, made monic.
        let (a2, a0) = (3.0 * lambda / beta, -6.0 * c / beta);
        let comp = DMatrix::from_row_slice(3, 3, &[-a2, 0.0, -a0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let mut ev: Vec<f64> = comp.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        let r = cubic_roots_trig(beta, lambda, c).unwrap();
        assert!(r.all_real);
        for (a, b) in ev.iter().zip(r.as_array()) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn quoted_gamma_formula_disagrees_with_roots() {
    let r = cubic_roots_trig(6.0, -14.0 / 3.0, -4.0 / 3.0).unwrap();
    let gamma = (r.theta / 3.0).cos();
    let quoted = k_squared_from_gamma(gamma);
    // Recorded discrepancy: the closed form does not reproduce k^2 = 3/8 here.
    assert!((quoted - 3.0 / 8.0).abs() > 1.0, "quoted k^2 = {quoted}");
    assert!(!(0.0..1.0).contains(&quoted));
}

/// Fourth-order central differences on the closed-form profile.
fn fd_stationarity(p: &CnoidalParams) -> f64 {
    let h = 1e-3;
    (0..50)
        .map(|i| {
            let x = 2.0 * PI * i as f64 / 50.0;
            let f = |s: f64| p.eval(x + s).unwrap();
            let d2 = (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h);
            (d2 + 0.5 * p.beta * f(0.0).powi(2) + p.lambda * f(0.0)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn profiles_satisfy_the_ode_by_finite_differences() {
    for (beta, lambda, m) in [(1.0, 3.0, 1), (2.0, -4.0, 1), (0.5, 5.0, 2)] {
        let p = solve_periodic_family(beta, lambda, m).unwrap();
        let scale = cnoidal_profile(&p, 256).unwrap().max_abs().max(1.0);
        assert!(fd_stationarity(&p) <= 1e-5 * scale.powi(2));
    }
}

#[test]
fn negative_multiplier_family_is_a_constant_shift() {
    for (beta, lambda, m) in [(1.0, 3.0, 1), (2.0, 8.0, 2)] {
        let pos = solve_periodic_family(beta, lambda, m).unwrap();
        let neg = solve_periodic_family(beta, -lambda, m).unwrap();
        let c = 2.0 * lambda / beta;
        for (a, b) in pos.roots.as_array().iter().zip(neg.roots.as_array()) {
            assert!((a + c - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} + {c} vs {b}");
        }
        assert!((pos.k - neg.k).abs() <= 1e-8);
    }
}

#[test]
fn sphere_solution_has_the_requested_norm() {
    let norms: Vec<f64> = [1.05, 1.5, 2.5, 4.0].iter().map(|&l| family_norm_sq(1.0, l, 1).unwrap()).collect();
    assert!(norms.windows(2).all(|w| w[1] > w[0]), "{norms:?}");
    let p = solve_on_sphere(1.0, 2.0, 1).unwrap();
    let n = cnoidal_profile(&p, 1024).unwrap().power_mean(2);
    assert!((n - 2.0).abs() <= 1e-8, "norm {n}");
    assert!(p.lambda > 1.0);
}

#[test]
fn sn_matches_amplitude_ode() {
    // am' = dn = sqrt(1 - k^2 sin^2 am), integrated with classical RK4.
    let k: f64 = 0.8;
    let rhs = |a: f64| (1.0 - k * k * a.sin().powi(2)).sqrt();
    let (mut a, h) = (0.0_f64, 1e-4);
    for step in 1..=30_000 {
        let k1 = rhs(a);
        let k2 = rhs(a + 0.5 * h * k1);
        let k3 = rhs(a + 0.5 * h * k2);
        let k4 = rhs(a + h * k3);
        a += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        if step % 5000 == 0 {
            let x = step as f64 * h;
            assert!((jacobi_sn(x, k).unwrap() - a.sin()).abs() < 1e-10, "x = {x}");
        }
    }
}

#[test]
fn complete_integral_by_simpson_quadrature() {
    // K(k) = int_0^1 dt / sqrt((1-t^2)(1-k^2 t^2)); substitute t = sin u and use Simpson.
    for k in [0.2, 0.5, 0.9] {
        let n = 2000;
        let h = 0.5 * PI / n as f64;
        let f = |u: f64| 1.0 / (1.0 - (k * u.sin()).powi(2)).sqrt();
        let s: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * f(i as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert!((complete_k(k).unwrap() - s).abs() < 1e-12);
    }
}

#[test]
fn lame_two_edges_resolved_near_unit_modulus() {
    let k = 0.99;
    let (g, s) = lame_potential(2.0, k, 512).unwrap();
    let r = instability_intervals(&g, 1.0, (-1.0, 7.0 * s * s), 800, 1e-10).unwrap();
    assert_eq!(r.unstable_count(), 3);
    let mut found = vec![r.lambda0];
    for (a, b) in r.gaps() {
        found.extend([a, b]);
    }
    for (f, e) in found.iter().zip(lame_band_edges(2, k).unwrap()) {
        assert!((f / (s * s) - e).abs() < 1e-7, "{f} vs {e}");
    }
}

#[test]
fn band_edge_agrees_with_galerkin_ground_state() {
    let p = solve_periodic_family(1.0, 3.0, 1).unwrap();
    let g = cnoidal_profile(&p, 512).unwrap();
    let r = instability_intervals(&g, 1.0, (-8.0, 8.0), 400, 1e-11).unwrap();
    let phi = gibbs_kdv::cnoidal::cnoidal_field(&p, 96).unwrap();
    let h = hamel_min_check(&phi, 1.0, 0.0, 129).unwrap();
    assert!((r.lambda0 - h.min_eig).abs() < 1e-8, "{} vs {}", r.lambda0, h.min_eig);
}

#[test]
fn log_mgf_of_negated_observable_is_reflected() {
    let params = EnsembleParams::new(Model::Kdv, 0.005, 1.0, 4).unwrap();
    let batch = sample_gibbs(&params, 4000, 5, SampleMethod::Rejection).unwrap();
    let mut g = vec![0.0; params.dim()];
    g[1] = 1.0;
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    let t: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
    let rt: Vec<f64> = t.iter().rev().copied().collect();
    let a = empirical_mgf(&batch, &Observable::Projection(g), &t, 0.5, 1).unwrap();
    let b = empirical_mgf(&batch, &Observable::Projection(neg), &rt, 0.5, 1).unwrap();
    for (x, y) in a.log_mgf.iter().zip(&b.log_mgf) {
        assert!((x - y).abs() < 1e-12);
    }
}
