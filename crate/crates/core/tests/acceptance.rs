//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Each criterion also has a wall-clock budget that counts towards its verdict.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use gibbs_kdv::cnoidal::{
    classify_constant_points, cnoidal_field, cnoidal_profile, first_integral_flatness, root_closure,
    solve_periodic_family, stationarity_residual, stationarity_residual_grid, CnoidalParams,
};
use gibbs_kdv::concentration::{default_test_family, empirical_mgf, entropy_dirichlet_lowdim};
use gibbs_kdv::convexity::{
    certify_lemma2, certify_model, kdv_threshold, min_scaled_eigenvalue, sample_ball_point,
    scaled_hessian_form_model,
};
use gibbs_kdv::elliptic::{complete_k, jacobi_sn};
use gibbs_kdv::floquet::{
    hamel_min_check, instability_intervals, lame_band_edges, lame_potential, monodromy, HillPotential,
};
use gibbs_kdv::flow::{
    coefficient_distance, default_invariance_observables, evolve, evolve_backward, flow_coupling,
    invariance_experiment, traveling_wave_check, FlowConfig,
};
use gibbs_kdv::gibbs::{sample_gibbs, SampleMethod};
use gibbs_kdv::hamiltonians::{energy, energy_constrained, energy_grad, gibbs_potential, gibbs_potential_grad};
use gibbs_kdv::observables::{unit_first_mode, Observable};
use gibbs_kdv::stats::ks_two_sample;
use gibbs_kdv::{EnsembleParams, FourierField, GridField, Model, PhasePoint};

type Verdict = std::result::Result<(bool, String), String>;
type Criterion = (u32, &'static str, u64, fn() -> Verdict);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

fn random_field(r: &mut ChaCha8Rng, m: usize, amp: f64) -> FourierField {
    let mut f = FourierField::zeros(m);
    let mut c = f.coords().to_vec();
    for (i, v) in c.iter_mut().enumerate() {
        let k = FourierField::wavenumber_of(m, i).max(1) as f64;
        *v = amp * gauss(r) / k;
    }
    f = FourierField::from_coords(c).unwrap();
    f
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

// 1
fn parseval_roundtrip() -> Verdict {
    let mut r = rng(1);
    let (mut norm_err, mut trip_err) = (0.0_f64, 0.0_f64);
    for _ in 0..200 {
        let m = r.random_range(1..=64usize);
        let f = random_field(&mut r, m, 1.0);
        let n = (2 * m + 2).next_power_of_two();
        let g = f.to_grid(n).map_err(e)?;
        let grid_norm: f64 = g.values().iter().map(|v| v * v).sum::<f64>() / n as f64;
        norm_err = norm_err.max((grid_norm - f.l2_norm_sq()).abs() / f.l2_norm_sq());
        let back = FourierField::from_grid(&g, m).map_err(e)?;
        let d = back.coords().iter().zip(f.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        trip_err = trip_err.max(d);
    }
    Ok((
        norm_err <= 1e-12 && trip_err <= 1e-12,
        format!("max rel norm error {norm_err:.2e}, max round-trip error {trip_err:.2e} (tol 1e-12)"),
    ))
}

// 2
fn gradient_hessian_oracle() -> Verdict {
    let (m, beta, n_ball) = (16, 0.7, 1.0);
    let mut worst_grad = 0.0_f64;
    let mut worst_hess = 0.0_f64;
    for model in [Model::Kdv, Model::Mkdv, Model::Nls] {
        let d = model.components() * (2 * m + 1);
        let mut r = rng(2);
        for _ in 0..20 {
            let x = sample_ball_point(&mut r, d, n_ball);
            let pt = |c: Vec<f64>| PhasePoint::from_coords(model, c).unwrap();
            let p = pt(x.clone());
            let h = 1e-6;
            for (grad, fun) in [
                (energy_grad(model, &p, beta).map_err(e)?, 0),
                (gibbs_potential_grad(model, &p, beta).map_err(e)?, 1),
            ] {
                let f = |c: Vec<f64>| -> f64 {
                    if fun == 0 {
                        energy(model, &pt(c), beta).unwrap()
                    } else {
                        gibbs_potential(model, &pt(c), beta).unwrap()
                    }
                };
                let fd: Vec<f64> = (0..d)
                    .map(|i| {
                        let (mut a, mut b) = (x.clone(), x.clone());
                        a[i] += h;
                        b[i] -= h;
                        (f(a) - f(b)) / (2.0 * h)
                    })
                    .collect();
                let scale = grad.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
                let err = grad.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
                worst_grad = worst_grad.max(err);
            }
            // Scaled Hessian vs mixed second differences of V along D^{-1} xi, D^{-1} eta.
            let xi: Vec<f64> = (0..d).map(|_| gauss(&mut r)).collect();
            let eta: Vec<f64> = (0..d).map(|_| gauss(&mut r)).collect();
            let scale_dir = |v: &[f64]| -> Vec<f64> {
                v.iter()
                    .enumerate()
                    .map(|(i, c)| c / FourierField::wavenumber_of(m, i % (2 * m + 1)).max(1) as f64)
                    .collect()
            };
            let (u, w) = (scale_dir(&xi), scale_dir(&eta));
            let hh = 1e-4;
            let v = |s: f64, t: f64| -> f64 {
                let c: Vec<f64> = (0..d).map(|i| x[i] + s * u[i] + t * w[i]).collect();
                gibbs_potential(model, &pt(c), beta).unwrap()
            };
            let fd = (v(hh, hh) - v(hh, -hh) - v(-hh, hh) + v(-hh, -hh)) / (4.0 * hh * hh);
            let form = scaled_hessian_form_model(model, &p, beta, &xi, &eta).map_err(e)?;
            worst_hess = worst_hess.max((form - fd).abs() / form.abs().max(1.0));
        }
    }
    Ok((
        worst_grad <= 1e-5 && worst_hess <= 1e-5,
        format!("3 models x 20 points, M=16: max rel gradient error {worst_grad:.2e}, max rel Hessian-form error {worst_hess:.2e} (tol 1e-5)"),
    ))
}

// 3
fn lemma2_certificate() -> Verdict {
    let beta = 3f64.sqrt() / (64.0 * PI);
    let c = certify_lemma2(beta, 1.0, 32, 100, 20, 3).map_err(e)?;
    let min = c.sampled_min_form.unwrap_or(f64::NEG_INFINITY);
    Ok((
        c.passed && min >= 0.5 - 1e-9,
        format!(
            "beta sqrt(N) = {beta:.5}, M=32, 100x20: sampled min form {min:.6}, min eigenvalue {:.6}, alpha {:?}",
            c.min_eigenvalue.unwrap_or(f64::NAN),
            c.alpha
        ),
    ))
}

// 4
fn mkdv_nls_certificates() -> Verdict {
    let mk = certify_model(Model::Mkdv, 0.25, 1.0, 16, 100, 4).map_err(e)?;
    let nl = certify_model(Model::Nls, 0.45, 1.0, 16, 100, 4).map_err(e)?;
    // Diagnostic only: the attractive sign is outside the certified regime.
    let mut r = rng(41);
    let mut attractive = f64::INFINITY;
    for _ in 0..100 {
        let x = sample_ball_point(&mut r, 2 * 33, 1.0);
        let p = PhasePoint::from_coords(Model::Nls, x).map_err(e)?;
        attractive = attractive.min(min_scaled_eigenvalue(Model::Nls, &p, -0.45).map_err(e)?);
    }
    let (a, b) = (mk.sampled_min_form.unwrap(), nl.sampled_min_form.unwrap());
    Ok((
        mk.passed && nl.passed && a >= 0.5 && b >= 0.5,
        format!(
            "mkdv beta N=0.25: min form {a:.4} eig {:.4}; nls beta N=0.45: min form {b:.4} eig {:.4}; attractive-sign nls diagnostic: min eig {attractive:.4}{}",
            mk.min_eigenvalue.unwrap(),
            nl.min_eigenvalue.unwrap(),
            if mk.eigen_certified == Some(false) {
                "; note: the exact mkdv eigenvalue dips below 1/2 at a sampled point, so the bound holds only along sampled directions"
            } else {
                ""
            }
        ),
    ))
}

// 5
fn constant_points() -> Verdict {
    let mut worst = 0.0_f64;
    let mut quoted_gap = 0.0_f64;
    let mut mins_ok = true;
    for &(beta, n) in &[(1.0, 4.0), (0.3, 2.0), (2.5, 0.7), (0.01, 9.0)] {
        let pts = classify_constant_points(beta, n).map_err(e)?;
        let rn = f64::sqrt(n);
        let target = beta * n.powf(1.5) / 12.0;
        worst = worst
            .max((pts[0].lambda - beta * rn / 2.0).abs())
            .max((pts[0].energy + target).abs())
            .max((pts[1].energy - target).abs());
        for p in &pts {
            let f = FourierField::constant(p.phi, 4);
            worst = worst.max(stationarity_residual(&f, beta, p.lambda));
        }
        mins_ok &= pts[0].local_min && !pts[1].local_min;
        let quoted = energy_constrained(&FourierField::constant(rn, 2), beta, -beta * rn);
        quoted_gap = quoted_gap.max((quoted - target).abs());
    }
    Ok((
        worst <= 1e-12 && mins_ok,
        format!(
            "lambda(-sqrt N) = beta sqrt(N)/2 and H = -/+ beta N^1.5/12 to {worst:.1e}; -sqrt N local min, +sqrt N not; \
             at +sqrt N the multiplier is -beta sqrt(N)/2 (the value -beta sqrt(N) is not stationary and gives H off by up to {quoted_gap:.2})"
        ),
    ))
}

fn families() -> Vec<(f64, f64, usize)> {
    vec![
        (0.5, 2.0, 1),
        (1.0, 3.0, 1),
        (2.0, -4.0, 1),
        (3.0, 1.5, 1),
        (6.0, -14.0 / 3.0, 1),
        (0.5, 5.0, 2),
        (1.0, -6.0, 2),
        (2.0, 8.0, 2),
        (3.0, 4.5, 2),
        (6.0, -10.0, 2),
    ]
}

fn count_maxima(g: &GridField) -> usize {
    let v = g.values();
    let n = v.len();
    (0..n).filter(|&i| v[i] > v[(i + n - 1) % n] && v[i] >= v[(i + 1) % n]).count()
}

fn companion_roots(beta: f64, lambda: f64, c: f64) -> Vec<f64> {
    // -beta/6 phi^3 - lambda/2 phi^2 + C = 0  <=>  phi^3 + (3 lambda / beta) phi^2 - 6C/beta = 0.
    let (a2, a1, a0) = (3.0 * lambda / beta, 0.0, -6.0 * c / beta);
    let comp = DMatrix::from_row_slice(3, 3, &[-a2, -a1, -a0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let mut r: Vec<f64> = comp
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .collect();
    r.sort_by(|a, b| b.total_cmp(a));
    r
}

// 6
fn cnoidal_construction() -> Verdict {
    let (mut st, mut fi, mut rc, mut per, mut vieta, mut comp) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut counts_ok = true;
    for (beta, lambda, m) in families() {
        let p = solve_periodic_family(beta, lambda, m).map_err(e)?;
        let g = cnoidal_profile(&p, 1024).map_err(e)?;
        let scale = g.max_abs().max(1.0);
        st = st.max(stationarity_residual_grid(&g, beta, lambda) / scale);
        fi = fi.max(first_integral_flatness(&g, beta, lambda) / scale.powi(3));
        rc = rc.max(root_closure(beta, lambda, p.c, &p.roots));
        per = per.max(p.periodicity_residual);
        let f = p.roots.as_array();
        vieta = vieta
            .max((lambda + beta * (f[0] + f[1] + f[2]) / 3.0).abs())
            .max((p.c - beta * f[0] * f[1] * f[2] / 6.0).abs());
        for (a, b) in companion_roots(beta, lambda, p.c).iter().zip(f) {
            comp = comp.max((a - b).abs() / b.abs().max(1.0));
        }
        counts_ok &= count_maxima(&g) == m;
    }
    Ok((
        st <= 1e-8 && fi <= 1e-8 && rc <= 1e-10 && per <= 1e-10 && counts_ok,
        format!(
            "10 families: stationarity {st:.1e}, first-integral flatness {fi:.1e} (relative to max(1,|phi|)^3), root closure {rc:.1e}, \
             periodicity {per:.1e}; Vieta {vieta:.1e}, companion-matrix roots {comp:.1e}, wave counts ok: {counts_ok}"
        ),
    ))
}

// 7
fn elliptic_functions() -> Verdict {
    let k0 = (complete_k(0.0).map_err(e)? - PI / 2.0).abs();
    let mut sin_err = 0.0_f64;
    for i in 0..1000 {
        let x = -10.0 + 20.0 * i as f64 / 999.0;
        sin_err = sin_err.max((jacobi_sn(x, 0.0).map_err(e)? - x.sin()).abs());
    }
    let mut quarter = 0.0_f64;
    for j in 1..=9 {
        let k = j as f64 / 10.0;
        quarter = quarter.max((jacobi_sn(complete_k(k).map_err(e)?, k).map_err(e)? - 1.0).abs());
    }
    // Trapezoidal rule on the full period of the smooth periodic integrand.
    let k = 1.0 / 2f64.sqrt();
    let n = 400;
    let quad: f64 = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt()
        })
        .sum::<f64>()
        * (2.0 * PI / n as f64)
        / 4.0;
    let kq = (complete_k(k).map_err(e)? - quad).abs();
    Ok((
        k0 <= 1e-14 && sin_err <= 1e-12 && quarter <= 1e-12 && kq <= 1e-12,
        format!("|K(0)-pi/2| {k0:.1e}, sn(x|0) vs sin {sin_err:.1e}, sn(K|k)-1 {quarter:.1e}, K(1/sqrt2) vs quadrature {kq:.1e}"),
    ))
}

// 8
fn floquet_lame() -> Verdict {
    let zero = HillPotential::zero();
    let mut trace_err = 0.0_f64;
    for i in 0..200 {
        let l = 10.0 * i as f64 / 199.0;
        let t = monodromy(&zero, l).map_err(e)?.trace;
        trace_err = trace_err.max((t - 2.0 * (2.0 * PI * l.sqrt()).cos()).abs());
    }
    let flat = GridField::new(vec![0.0; 32]).map_err(e)?;
    let zr = instability_intervals(&flat, 1.0, (-1.0, 10.0), 2000, 1e-10).map_err(e)?;
    let mut ok = trace_err <= 1e-9 && zr.lambda0.abs() <= 1e-8 && zr.unstable_count() == 1;
    let mut detail = format!(
        "zero potential: trace error {trace_err:.1e}, lambda0 {:.1e}, {} interval(s)",
        zr.lambda0,
        zr.unstable_count()
    );
    // Moduli taken from cnoidal waves, plus k = 0.6.
    let ks = [
        solve_periodic_family(1.0, 3.0, 1).map_err(e)?.k,
        solve_periodic_family(6.0, -14.0 / 3.0, 1).map_err(e)?.k,
        0.6,
    ];
    for ell in [1u32, 2] {
        for &k in &ks {
            let (g, s) = lame_potential(ell as f64, k, 512).map_err(e)?;
            let r = instability_intervals(&g, 1.0, (-1.0, 16.0 * s * s), 2000, 1e-10).map_err(e)?;
            let edges = lame_band_edges(ell, k).unwrap();
            let mut found = vec![r.lambda0];
            for (a, b) in r.gaps() {
                found.push(a);
                found.push(b);
            }
            let edge_err = if found.len() == edges.len() {
                found.iter().zip(&edges).map(|(f, x)| (f / (s * s) - x).abs()).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            ok &= r.unstable_count() == ell as usize + 1 && edge_err <= 1e-6;
            detail.push_str(&format!(
                "; l={ell} k={k:.3}: {} intervals, edge error {edge_err:.1e}",
                r.unstable_count()
            ));
        }
    }
    // The Hill equation of the cnoidal wave itself (index 3 after rescaling).
    let p = solve_periodic_family(1.0, 3.0, 1).map_err(e)?;
    let g = cnoidal_profile(&p, 512).map_err(e)?;
    let hi = p.beta * g.max_abs() + 40.0 * p.scale() * p.scale();
    let r = instability_intervals(&g, p.beta, (-p.beta * g.max_abs() - 2.0, hi), 3000, 1e-10).map_err(e)?;
    detail.push_str(&format!(
        "; cnoidal Hill equation (ell field {:.3}): {} intervals",
        p.ell,
        r.unstable_count()
    ));
    Ok((ok, detail))
}

fn hill_lambda0(p: &CnoidalParams) -> Result<(f64, FourierField), String> {
    let g = cnoidal_profile(p, 512).map_err(e)?;
    let lo = -p.beta * g.max_abs() - 2.0;
    let hi = p.beta * g.max_abs() + 2.0;
    let r = instability_intervals(&g, p.beta, (lo, hi), 600, 1e-10).map_err(e)?;
    Ok((r.lambda0, cnoidal_field(p, 96).map_err(e)?))
}

// 9
fn hamel_consistency() -> Verdict {
    let picks = [(1.0, 3.0, 1), (2.0, -4.0, 1), (0.5, 5.0, 2), (3.0, 4.5, 2), (6.0, -14.0 / 3.0, 1)];
    let mut ok = true;
    let mut worst = 0.0_f64;
    let mut basis = 0.0_f64;
    let mut own = 0;
    for (beta, lambda, m) in picks {
        let p = solve_periodic_family(beta, lambda, m).map_err(e)?;
        let (l0, phi) = hill_lambda0(&p)?;
        let below = hamel_min_check(&phi, beta, l0 - 1e-4, 129).map_err(e)?;
        let above = hamel_min_check(&phi, beta, l0 + 1e-4, 129).map_err(e)?;
        ok &= below.min_eig > 0.0 && above.min_eig < 0.0;
        worst = worst.max((l0 - 1e-4 + below.min_eig - l0).abs());
        let coarse = hamel_min_check(&phi, beta, l0, 65).map_err(e)?;
        let fine = hamel_min_check(&phi, beta, l0, 129).map_err(e)?;
        basis = basis.max((coarse.min_eig - fine.min_eig).abs());
        if !hamel_min_check(&phi, beta, lambda, 129).map_err(e)?.is_local_min {
            own += 1;
        }
    }
    Ok((
        ok && worst <= 1e-4,
        format!(
            "5 cnoidal points: sign flips at lambda0 +- 1e-4: {ok}; |lambda0(Hamel) - lambda0(Floquet)| max {worst:.1e}; \
             basis 65->129 change {basis:.1e}; own multiplier above lambda0 (not a local min) for {own}/5"
        ),
    ))
}

// 10
fn traveling_wave() -> Verdict {
    let p = solve_periodic_family(1.0, 3.0, 1).map_err(e)?;
    let mut cfg = FlowConfig::new(Model::Kdv, p.beta, 1e-5, 0.1, 127);
    cfg.n = 512;
    let r = traveling_wave_check(&p, &cfg).map_err(e)?;
    let speed = r.speed_measured.unwrap_or(f64::NAN);
    let displacement_err = (speed - r.speed_expected).abs() * cfg.t_final;
    Ok((
        displacement_err <= r.grid_cell && r.shape_error <= 1e-6,
        format!(
            "lambda = {:.3}: speed {speed:.8} vs {:.8}, displacement error {displacement_err:.1e} (cell {:.1e}), shape error {:.1e}",
            p.lambda, r.speed_expected, r.grid_cell, r.shape_error
        ),
    ))
}

// 11
fn conservation() -> Verdict {
    // Initial datum drawn from the Gibbs measure it is meant to preserve.
    let params = EnsembleParams::new(Model::Kdv, kdv_threshold(), 1.0, 32).map_err(e)?;
    let batch = sample_gibbs(&params, 1, 11, SampleMethod::Rejection).map_err(e)?;
    let u0 = batch.samples[0].clone();
    let cfg = FlowConfig::new(Model::Kdv, flow_coupling(&params), 1e-4, 1.0, 32);
    // Unit coupling on data of the same size, for the record.
    let unit = evolve(&u0, &FlowConfig::new(Model::Kdv, 1.0, 1e-4, 1.0, 32)).map_err(e)?;
    let fwd = evolve(&u0, &cfg).map_err(e)?;
    let back = evolve_backward(fwd.final_state(), &cfg).map_err(e)?;
    let rev = coefficient_distance(back.final_state(), &u0);
    let rep = &fwd.report;
    Ok((
        rep.l2_drift <= 1e-8 && rep.energy_drift <= 1e-6 && rev <= 1e-7,
        format!(
            "Gibbs datum, M=32, T=1, dt=1e-4, coupling {:.5}: int u^2 drift {:.1e}, H drift {:.1e}, reversibility {rev:.1e}; \
             same datum at coupling 1: H drift {:.1e}",
            cfg.beta, rep.l2_drift, rep.energy_drift, unit.report.energy_drift
        ),
    ))
}

/// Moments of (a0, r^2 = a1^2 + b1^2) for M = 1 KdV by quadrature in (a0, r).
fn m1_quadrature_moments(beta: f64, n: f64) -> [f64; 3] {
    let nodes = 2000;
    let (mut z, mut ea0, mut ea02, mut er2) = (0.0, 0.0, 0.0, 0.0);
    let h0 = 2.0 * n.sqrt() / nodes as f64;
    for i in 0..nodes {
        let a0 = -n.sqrt() + (i as f64 + 0.5) * h0;
        let rmax = (n - a0 * a0).max(0.0).sqrt();
        let hr = rmax / nodes as f64;
        for j in 0..nodes {
            let r = (j as f64 + 0.5) * hr;
            let w = (a0.powi(3) + 3.0 * a0 * r * r) / 6.0;
            let dens = (-a0 * a0 / 2.0 - r * r + beta * w).exp() * 2.0 * PI * r * h0 * hr;
            z += dens;
            ea0 += dens * a0;
            ea02 += dens * a0 * a0;
            er2 += dens * r * r;
        }
    }
    [ea0 / z, ea02 / z, er2 / z]
}

// 12
fn sampler_ground_truth() -> Verdict {
    let (beta, n) = (1.0, 2.0);
    let params = EnsembleParams::new(Model::Kdv, beta, n, 1).map_err(e)?;
    let batch = sample_gibbs(&params, 100_000, 12, SampleMethod::Rejection).map_err(e)?;
    let coords: Vec<Vec<f64>> = batch.samples.iter().map(|s| s.coords()).collect();
    let mean = |f: &dyn Fn(&[f64]) -> f64| coords.iter().map(|c| f(c)).sum::<f64>() / coords.len() as f64;
    let m_a0 = mean(&|c| c[0]);
    let m_a02 = mean(&|c| c[0] * c[0]);
    let m_a12 = mean(&|c| c[1] * c[1]);
    let m_r2 = mean(&|c| c[1] * c[1] + c[2] * c[2]);
    let [q_a0, q_a02, q_r2] = m1_quadrature_moments(beta, n);
    let sd0 = (q_a02 - q_a0 * q_a0).sqrt();
    let first = (m_a0 - q_a0).abs() / sd0;
    let second = [(m_a02 - q_a02).abs() / q_a02, (m_r2 - q_r2).abs() / q_r2, (m_a12 - q_r2 / 2.0).abs() / (q_r2 / 2.0)]
        .into_iter()
        .fold(0.0, f64::max);

    // beta = 0: Brownian loop conditioned on the ball, oracle by direct rejection.
    let (m0, n0) = (4, 2.0);
    let p0 = EnsembleParams::new(Model::Kdv, 0.0, n0, m0).map_err(e)?;
    let b0 = sample_gibbs(&p0, 100_000, 13, SampleMethod::Rejection).map_err(e)?;
    let mut oracle_rng = rand::rngs::StdRng::seed_from_u64(99);
    let mut oracle: Vec<Vec<f64>> = Vec::with_capacity(1_000_000);
    while oracle.len() < 1_000_000 {
        let c: Vec<f64> = (0..2 * m0 + 1)
            .map(|i| {
                let k = FourierField::wavenumber_of(m0, i);
                let sd = if k == 0 { 1.0 } else { 1.0 / (2f64.sqrt() * k as f64) };
                sd * oracle_rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        if c.iter().map(|v| v * v).sum::<f64>() <= n0 {
            oracle.push(c);
        }
    }
    let mut ks = 0.0_f64;
    for obs in [Observable::L2NormSq, Observable::ModeCos(1), Observable::ModeSin(2), Observable::Constant(0.0)] {
        let a = b0.values(&obs).map_err(e)?;
        let b: Vec<f64> = oracle
            .iter()
            .map(|c| obs.evaluate(Model::Kdv, &PhasePoint::from_coords(Model::Kdv, c.clone()).unwrap()).unwrap())
            .collect();
        ks = ks.max(ks_two_sample(&a, &b));
    }
    Ok((
        first <= 0.02 && second <= 0.02 && ks <= 0.02,
        format!(
            "M=1, beta=1, N=2, 1e5 samples: first-moment error {first:.4} sd, max second-moment rel error {second:.4}; \
             beta=0 M=4 N=2 vs 1e6-draw conditioned-Gaussian oracle: max KS {ks:.4}"
        ),
    ))
}

// 13
fn herbst_concentration() -> Verdict {
    let params = EnsembleParams::new(Model::Kdv, 0.005, 1.0, 16).map_err(e)?;
    let batch = sample_gibbs(&params, 100_000, 13, SampleMethod::Rejection).map_err(e)?;
    let t: Vec<f64> = (0..21).map(|i| -2.0 + 0.2 * i as f64).collect();
    let mut dir = vec![0.0; params.dim()];
    let mut r = rng(131);
    for v in dir.iter_mut() {
        *v = gauss(&mut r);
    }
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    dir.iter_mut().for_each(|v| *v /= norm);
    let mut ok = true;
    let mut detail = String::from("beta sqrt(N)=0.005, M=16, 1e5 samples, 21 t in [-2,2]");
    for obs in [unit_first_mode(Model::Kdv, 16), Observable::Projection(dir), Observable::L2Norm] {
        let rep = empirical_mgf(&batch, &obs, &t, 0.5, 7).map_err(e)?;
        let margin = rep
            .log_mgf
            .iter()
            .zip(&rep.bound)
            .zip(&rep.ci_halfwidth)
            .map(|((l, b), c)| l - b - c)
            .fold(f64::NEG_INFINITY, f64::max);
        ok &= rep.pass;
        detail.push_str(&format!("; {}: pass {} (max log J - bound - ci = {margin:.3})", rep.observable, rep.pass));
    }
    Ok((ok, detail))
}

// 14
fn lowdim_lsi() -> Verdict {
    let params = EnsembleParams::new(Model::Kdv, 0.005, 1.0, 1).map_err(e)?;
    let fam = default_test_family(3);
    let res = entropy_dirichlet_lowdim(&params, &fam, 96).map_err(e)?;
    let worst = res.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).unwrap();
    let min_ent = res.iter().map(|r| r.entropy).fold(f64::INFINITY, f64::min);
    Ok((
        worst.ratio <= 4.0 * 1.01 && min_ent >= -1e-12,
        format!(
            "M=1, beta sqrt(N)=0.005, {} test functions: max Ent/Dirichlet {:.4} ({}), bound 4.04; min entropy {min_ent:.1e}",
            res.len(),
            worst.ratio,
            worst.name
        ),
    ))
}

// 15
fn invariance() -> Verdict {
    let params = EnsembleParams::new(Model::Kdv, 0.5 * kdv_threshold(), 1.0, 16).map_err(e)?;
    let obs = default_invariance_observables(&params);
    let r = invariance_experiment(&params, 1.0, 2000, &obs, 15).map_err(e)?;
    let listing: Vec<String> = r
        .observables
        .iter()
        .zip(&r.ks_distance)
        .map(|(n, d)| format!("{n} {d:.4}"))
        .collect();
    Ok((
        r.passed,
        format!(
            "KdV M=16, 2000 samples, T=1, flow coupling beta/2: KS [{}] vs threshold {:.4}; max energy drift {:.1e}",
            listing.join(", "),
            r.threshold,
            r.max_energy_drift
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (1, "parseval and grid round trip", 5, parseval_roundtrip),
        (2, "gradient and Hessian oracles", 30, gradient_hessian_oracle),
        (3, "KdV uniform convexity certificate", 60, lemma2_certificate),
        (4, "mKdV and NLS certificates", 60, mkdv_nls_certificates),
        (5, "constant stationary points", 1, constant_points),
        (6, "cnoidal construction", 60, cnoidal_construction),
        (7, "elliptic functions", 5, elliptic_functions),
        (8, "Floquet and Lame intervals", 120, floquet_lame),
        (9, "second variation vs band edge", 120, hamel_consistency),
        (10, "cnoidal traveling wave", 60, traveling_wave),
        (11, "KdV conservation and reversibility", 60, conservation),
        (12, "sampler ground truth", 120, sampler_ground_truth),
        (13, "Herbst concentration bound", 180, herbst_concentration),
        (14, "low-dimensional LSI quadrature", 120, lowdim_lsi),
        (15, "Gibbs invariance under KdV", 600, invariance),
    ];
    let filter: Option<u32> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let start = Instant::now();
        let verdict = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let (pass, detail) = match verdict {
            Ok((p, d)) => (p && in_time, d),
            Err(msg) => (false, format!("error: {msg}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {id:>2} {name} ({:.2} s, budget {budget} s): {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} failed", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
