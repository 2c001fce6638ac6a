//! Bakry-Emery convexity certificates.
//!
//! The potential is `V = quadratic_part - s * beta * W` with the sign `s`
//! of the Gibbs weight (see [`crate::hamiltonians::gibbs_potential`]). In the
//! scaled coordinates `x = D a`, `D = diag(max(|k|, 1))`, the Hessian of `V` is
//!
//! ```text
//! <xi, eta> - s * beta * mean_x( w(x) (G xi)(x) (G eta)(x) )
//! ```
//!
//! where `G = D^{-1}` acts on coefficient vectors, `w = phi` for KdV,
//! `w = phi^2` for mKdV and the pointwise 2x2 matrix
//! `[[3P^2+Q^2, 2PQ], [2PQ, P^2+3Q^2]]` for NLS. Every mean is taken on the
//! dealiased grid, where it is exact.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{dot, FourierField};
use crate::hamiltonians::{Model, PhasePoint};
use crate::spectral::dealiased_grid_size;

/// Tolerance below 1/2 still accepted as a pass.
pub const PASS_SLACK: f64 = 1e-9;

/// Small-coupling KdV regime `beta sqrt(N) <= sqrt(3)/(32 pi)`.
pub fn kdv_threshold() -> f64 {
    3f64.sqrt() / (32.0 * PI)
}

/// mKdV regime `beta N <= 3/pi^2`.
pub fn mkdv_threshold() -> f64 {
    3.0 / (PI * PI)
}

/// NLS regime `beta N < 1/2`.
pub const NLS_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateRoute {
    /// Uniform convexity on the whole ball, `alpha = 1/2`.
    UniformConvexity,
    /// Head/tail split plus a bounded perturbation argument.
    BoundedPerturbation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityCertificate {
    pub model: Model,
    pub beta: f64,
    #[serde(rename = "N")]
    pub particle_number: f64,
    #[serde(rename = "M")]
    pub truncation: Option<usize>,
    pub route: CertificateRoute,
    pub threshold_ok: bool,
    /// Minimum of the scaled form over sampled points and unit directions.
    pub sampled_min_form: Option<f64>,
    /// Minimum over sampled points of the lowest eigenvalue of the scaled Hessian.
    pub min_eigenvalue: Option<f64>,
    /// Whether `min_eigenvalue >= 1/2` as well.
    pub eigen_certified: Option<bool>,
    #[serde(rename = "K")]
    pub tail_cutoff: Option<usize>,
    pub osc_bound: Option<f64>,
    pub alpha: Option<f64>,
    pub log_alpha: Option<f64>,
    /// Asymptotic constant `C'` in `alpha = exp(-C' beta^{5/2} N^{9/4}) / 2`.
    pub c_prime: Option<f64>,
    /// `2 osc / (beta^{5/2} N^{9/4})` at these parameters.
    pub c_effective: Option<f64>,
    pub passed: bool,
    pub n_points: usize,
    pub n_directions: usize,
    pub seed: u64,
}

/// A point of the ball together with two directions in flat coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianProbe {
    pub point: PhasePoint,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl HessianProbe {
    pub fn new(point: PhasePoint, xi: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        let d = point.coords().len();
        for v in [&xi, &eta] {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            if v.iter().all(|c| *c == 0.0) {
                return Err(Error::InvalidParameter("probe direction must be nonzero".into()));
            }
        }
        Ok(Self { point, xi, eta })
    }

    pub fn evaluate(&self, model: Model, beta: f64) -> Result<f64> {
        scaled_hessian_form_model(model, &self.point, beta, &self.xi, &self.eta)
    }
}

enum Weights {
    Scalar(Vec<f64>),
    Pair { pp: Vec<f64>, pq: Vec<f64>, qq: Vec<f64> },
}

fn hessian_weights(model: Model, point: &PhasePoint, n: usize) -> Result<Weights> {
    Ok(match (model, point) {
        (Model::Kdv, PhasePoint::Real(f)) => Weights::Scalar(f.to_grid(n)?.values().to_vec()),
        (Model::Mkdv, PhasePoint::Real(f)) => {
            Weights::Scalar(f.to_grid(n)?.values().iter().map(|v| v * v).collect())
        }
        (Model::Nls, PhasePoint::Nls(u)) => {
            let p = u.p.to_grid(n)?;
            let q = u.q.to_grid(n)?;
            let (mut pp, mut pq, mut qq) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
            for (a, b) in p.values().iter().zip(q.values()) {
                pp.push(3.0 * a * a + b * b);
                pq.push(2.0 * a * b);
                qq.push(a * a + 3.0 * b * b);
            }
            Weights::Pair { pp, pq, qq }
        }
        _ => {
            return Err(Error::UnsupportedModel(format!(
                "{model} does not match the phase point kind"
            )))
        }
    })
}

/// `D^{-1}` on a single-component coefficient vector.
fn scale_inverse_d(coords: &[f64]) -> Vec<f64> {
    let m = (coords.len() - 1) / 2;
    coords
        .iter()
        .enumerate()
        .map(|(i, c)| c / FourierField::wavenumber_of(m, i).max(1) as f64)
        .collect()
}

/// Grids of `D^{-1} v`, one per component.
fn scaled_direction_grids(v: &[f64], components: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    let block = v.len() / components;
    (0..components)
        .map(|c| {
            let f = FourierField::from_coords(scale_inverse_d(&v[c * block..(c + 1) * block]))?;
            Ok(f.to_grid(n)?.values().to_vec())
        })
        .collect()
}

fn weighted_mean(w: &Weights, u: &[Vec<f64>], v: &[Vec<f64>]) -> f64 {
    let n = u[0].len();
    let s: f64 = match w {
        Weights::Scalar(w) => (0..n).map(|i| w[i] * u[0][i] * v[0][i]).sum(),
        Weights::Pair { pp, pq, qq } => (0..n)
            .map(|i| {
                pp[i] * u[0][i] * v[0][i]
                    + pq[i] * (u[0][i] * v[1][i] + u[1][i] * v[0][i])
                    + qq[i] * u[1][i] * v[1][i]
            })
            .sum(),
    };
    s / n as f64
}

fn check_dims(model: Model, point: &PhasePoint, xi: &[f64], eta: &[f64]) -> Result<usize> {
    let d = model.components() * (2 * point.truncation() + 1);
    for v in [xi, eta] {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.len(),
            });
        }
    }
    Ok(d)
}

/// Scaled Hessian form `<D^{-1} Hess V D^{-1} xi, eta>` of any model. A
/// negative `beta` flips the sign of the interaction.
pub fn scaled_hessian_form_model(
    model: Model,
    point: &PhasePoint,
    beta: f64,
    xi: &[f64],
    eta: &[f64],
) -> Result<f64> {
    check_dims(model, point, xi, eta)?;
    let n = dealiased_grid_size(point.truncation());
    let w = hessian_weights(model, point, n)?;
    let gx = scaled_direction_grids(xi, model.components(), n)?;
    let ge = scaled_direction_grids(eta, model.components(), n)?;
    Ok(dot(xi, eta) - model.weight_sign() * beta * weighted_mean(&w, &gx, &ge))
}

/// Scaled Hessian form of the KdV potential at `point`.
pub fn scaled_hessian_form(point: &FourierField, beta: f64, xi: &[f64], eta: &[f64]) -> Result<f64> {
    scaled_hessian_form_model(Model::Kdv, &PhasePoint::Real(point.clone()), beta, xi, eta)
}

/// Full matrix of the scaled Hessian form in flat coordinates.
pub fn scaled_hessian_matrix(model: Model, point: &PhasePoint, beta: f64) -> Result<DMatrix<f64>> {
    let m = point.truncation();
    let block = 2 * m + 1;
    let comps = model.components();
    let d = comps * block;
    let n = dealiased_grid_size(m);
    let w = hessian_weights(model, point, n)?;
    let basis: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|i| {
            let (c, j) = (i / block, i % block);
            let k = FourierField::wavenumber_of(m, j);
            let grid: Vec<f64> = (0..n)
                .map(|p| {
                    let x = 2.0 * PI * p as f64 / n as f64;
                    if j == 0 {
                        1.0
                    } else if j <= m {
                        SQRT_2 * (k as f64 * x).cos() / k as f64
                    } else {
                        SQRT_2 * (k as f64 * x).sin() / k as f64
                    }
                })
                .collect();
            (0..comps)
                .map(|cc| if cc == c { grid.clone() } else { vec![0.0; n] })
                .collect()
        })
        .collect();
    let mut h = DMatrix::<f64>::identity(d, d);
    for i in 0..d {
        for l in i..d {
            let v = model.weight_sign() * beta * weighted_mean(&w, &basis[i], &basis[l]);
            h[(i, l)] -= v;
            if l != i {
                h[(l, i)] -= v;
            }
        }
    }
    Ok(h)
}

/// Smallest eigenvalue of [`scaled_hessian_matrix`].
pub fn min_scaled_eigenvalue(model: Model, point: &PhasePoint, beta: f64) -> Result<f64> {
    let h = scaled_hessian_matrix(model, point, beta)?;
    let eig = SymmetricEigen::new(h);
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Deterministic RNG stream `index` of `seed`.
pub(crate) fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|c| *c /= norm);
    }
}

/// Point of the ball `{||x||^2 <= N}` in dimension `d`: a Gaussian direction
/// at radius `sqrt(N) U^{1/d}`.
pub fn sample_ball_point(rng: &mut ChaCha8Rng, d: usize, particle_number: f64) -> Vec<f64> {
    let mut v = gaussian_vec(rng, d);
    normalize(&mut v);
    let u: f64 = rng.random();
    let r = particle_number.sqrt() * u.powf(1.0 / d as f64);
    v.iter_mut().for_each(|c| *c *= r);
    v
}

struct SampledForms {
    min_form: f64,
    min_eig: f64,
}

fn sample_forms(
    model: Model,
    beta: f64,
    particle_number: f64,
    m: usize,
    n_points: usize,
    n_directions: usize,
    seed: u64,
) -> Result<SampledForms> {
    let d = model.components() * (2 * m + 1);
    let per_point: Vec<Result<(f64, f64)>> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let point = PhasePoint::from_coords(model, sample_ball_point(&mut rng, d, particle_number))?;
            let mut min_form = f64::INFINITY;
            for _ in 0..n_directions {
                let mut xi = gaussian_vec(&mut rng, d);
                normalize(&mut xi);
                min_form = min_form.min(scaled_hessian_form_model(model, &point, beta, &xi, &xi)?);
            }
            Ok((min_form, min_scaled_eigenvalue(model, &point, beta)?))
        })
        .collect();
    let mut out = SampledForms {
        min_form: f64::INFINITY,
        min_eig: f64::INFINITY,
    };
    for r in per_point {
        let (f, e) = r?;
        out.min_form = out.min_form.min(f);
        out.min_eig = out.min_eig.min(e);
    }
    Ok(out)
}

fn check_sampling(beta: f64, particle_number: f64, m: usize, n_points: usize, n_directions: usize) -> Result<()> {
    if !(beta >= 0.0 && beta.is_finite()) || !(particle_number > 0.0 && particle_number.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need beta >= 0 and N > 0, got beta = {beta}, N = {particle_number}"
        )));
    }
    if m == 0 || n_points == 0 || n_directions == 0 {
        return Err(Error::InvalidParameter(
            "M, n_points and n_directions must be positive".into(),
        ));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sampled_certificate(
    model: Model,
    beta: f64,
    particle_number: f64,
    m: usize,
    threshold_ok: bool,
    n_points: usize,
    n_directions: usize,
    seed: u64,
) -> Result<ConvexityCertificate> {
    check_sampling(beta, particle_number, m, n_points, n_directions)?;
    let s = sample_forms(model, beta, particle_number, m, n_points, n_directions, seed)?;
    let passed = threshold_ok && s.min_form >= 0.5 - PASS_SLACK;
    Ok(ConvexityCertificate {
        model,
        beta,
        particle_number,
        truncation: Some(m),
        route: CertificateRoute::UniformConvexity,
        threshold_ok,
        sampled_min_form: Some(s.min_form),
        min_eigenvalue: Some(s.min_eig),
        eigen_certified: Some(s.min_eig >= 0.5 - PASS_SLACK),
        tail_cutoff: None,
        osc_bound: None,
        alpha: passed.then_some(0.5),
        log_alpha: passed.then_some(0.5f64.ln()),
        c_prime: None,
        c_effective: None,
        passed,
        n_points,
        n_directions,
        seed,
    })
}

/// Uniform convexity certificate for KdV. Passes iff
/// `beta sqrt(N) <= sqrt(3)/(32 pi)` and the sampled minimum of the scaled
/// form is at least `1/2`. The minimum eigenvalue is reported alongside; it is
/// the sharper check and is not part of the verdict.
pub fn certify_lemma2(
    beta: f64,
    particle_number: f64,
    m: usize,
    n_points: usize,
    n_directions: usize,
    seed: u64,
) -> Result<ConvexityCertificate> {
    let threshold_ok = beta * particle_number.sqrt() <= kdv_threshold();
    sampled_certificate(Model::Kdv, beta, particle_number, m, threshold_ok, n_points, n_directions, seed)
}

/// Number of random directions per point used by [`certify_model`].
pub const DEFAULT_DIRECTIONS: usize = 20;

/// Uniform convexity certificate for mKdV (`beta N <= 3/pi^2`) or NLS
/// (`beta N < 1/2`).
pub fn certify_model(
    model: Model,
    beta: f64,
    particle_number: f64,
    m: usize,
    n_points: usize,
    seed: u64,
) -> Result<ConvexityCertificate> {
    let bn = beta * particle_number;
    let threshold_ok = match model {
        Model::Mkdv => bn <= mkdv_threshold(),
        Model::Nls => bn < NLS_THRESHOLD,
        Model::Kdv => {
            return Err(Error::UnsupportedModel(
                "kdv is certified by certify_lemma2".into(),
            ))
        }
    };
    sampled_certificate(model, beta, particle_number, m, threshold_ok, n_points, DEFAULT_DIRECTIONS, seed)
}

/// Hilbert-Schmidt bound `4 beta^2 N / (K-1)^2` on the scaled tail Hessian.
pub fn tail_hessian_hs_bound(beta: f64, particle_number: f64, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("tail cutoff K must be >= 2, got {k}")));
    }
    let km1 = (k - 1) as f64;
    Ok(4.0 * beta * beta * particle_number / (km1 * km1))
}

/// Tail cutoff `K = ceil(4 beta sqrt(N) + 1) + 1`.
pub fn tail_cutoff(beta: f64, particle_number: f64) -> usize {
    (4.0 * beta * particle_number.sqrt() + 1.0).ceil() as usize + 1
}

/// `||V - V_K||_inf <= 7 beta (2K+1)^{3/2} N^{3/2}` on the ball.
pub fn oscillation_bound(beta: f64, particle_number: f64, k: usize) -> f64 {
    7.0 * beta * ((2 * k + 1) as f64).powf(1.5) * particle_number.powf(1.5)
}

/// Large-`beta sqrt(N)` limit of `2 osc / (beta^{5/2} N^{9/4})`: `2 * 7 * 8^{3/2}`.
pub fn asymptotic_c_prime() -> f64 {
    14.0 * 8f64.powf(1.5)
}

/// LSI constant for arbitrary `beta, N` from the head/tail split and the
/// bounded perturbation lemma: `alpha = exp(-2 osc) / 2`.
pub fn lsi_constant_theorem1(beta: f64, particle_number: f64) -> Result<ConvexityCertificate> {
    if !(beta >= 0.0 && beta.is_finite()) || !(particle_number > 0.0 && particle_number.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need beta >= 0 and N > 0, got beta = {beta}, N = {particle_number}"
        )));
    }
    let k = tail_cutoff(beta, particle_number);
    let osc = oscillation_bound(beta, particle_number, k);
    let hs = tail_hessian_hs_bound(beta, particle_number, k)?;
    let log_alpha = 0.5f64.ln() - 2.0 * osc;
    let alpha = log_alpha.exp();
    let scale = beta.powf(2.5) * particle_number.powf(2.25);
    Ok(ConvexityCertificate {
        model: Model::Kdv,
        beta,
        particle_number,
        truncation: None,
        route: CertificateRoute::BoundedPerturbation,
        threshold_ok: hs <= 0.25,
        sampled_min_form: None,
        min_eigenvalue: None,
        eigen_certified: None,
        tail_cutoff: Some(k),
        osc_bound: Some(osc),
        alpha: (alpha > 0.0).then_some(alpha),
        log_alpha: Some(log_alpha),
        c_prime: Some(asymptotic_c_prime()),
        c_effective: (scale > 0.0).then(|| 2.0 * osc / scale),
        passed: hs <= 0.25,
        n_points: 0,
        n_directions: 0,
        seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{gibbs_potential, potential_v, NlsField};

    fn unit(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    #[test]
    fn identity_at_origin_and_for_zero_beta() {
        let m = 4;
        let zero = FourierField::zeros(m);
        for i in 0..9 {
            let e = unit(9, i);
            assert!((scaled_hessian_form(&zero, 3.0, &e, &e).unwrap() - 1.0).abs() < 1e-15);
        }
        let f = FourierField::new(0.2, vec![0.5, 0.1, 0.0, 0.3], vec![0.0, -0.4, 0.2, 0.0]).unwrap();
        let xi = vec![0.3, 0.1, -0.2, 0.5, 0.0, 0.7, 0.1, 0.0, -0.2];
        let eta = vec![0.1, 0.0, 0.4, 0.2, -0.3, 0.0, 0.5, 0.1, 0.0];
        assert!((scaled_hessian_form(&f, 0.0, &xi, &eta).unwrap() - dot(&xi, &eta)).abs() < 1e-15);
        let a = scaled_hessian_form(&f, 1.3, &xi, &eta).unwrap();
        let b = scaled_hessian_form(&f, 1.3, &eta, &xi).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn matrix_agrees_with_form() {
        let mut rng = stream_rng(3, 0);
        for model in [Model::Kdv, Model::Mkdv, Model::Nls] {
            let d = model.components() * 9;
            let p = PhasePoint::from_coords(model, sample_ball_point(&mut rng, d, 2.0)).unwrap();
            let h = scaled_hessian_matrix(model, &p, 0.7).unwrap();
            let xi = gaussian_vec(&mut rng, d);
            let eta = gaussian_vec(&mut rng, d);
            let direct = scaled_hessian_form_model(model, &p, 0.7, &xi, &eta).unwrap();
            let via: f64 = (0..d).map(|i| (0..d).map(|l| xi[i] * h[(i, l)] * eta[l]).sum::<f64>()).sum();
            assert!((direct - via).abs() < 1e-10, "{model}: {direct} vs {via}");
        }
    }

    #[test]
    fn form_matches_second_differences_of_v() {
        let m = 6;
        let d = 2 * m + 1;
        let mut rng = stream_rng(11, 0);
        for model in [Model::Kdv, Model::Mkdv, Model::Nls] {
            let dd = model.components() * d;
            let base = sample_ball_point(&mut rng, dd, 1.5);
            let xi = gaussian_vec(&mut rng, dd);
            let eta = gaussian_vec(&mut rng, dd);
            let beta = 0.8;
            let p = PhasePoint::from_coords(model, base.clone()).unwrap();
            let form = scaled_hessian_form_model(model, &p, beta, &xi, &eta).unwrap();
            // Directions D^{-1} xi, D^{-1} eta in unscaled coordinates.
            let scale = |v: &[f64]| -> Vec<f64> {
                v.chunks(d).flat_map(scale_inverse_d).collect()
            };
            let (u, v) = (scale(&xi), scale(&eta));
            let h = 1e-4;
            let at = |s: f64, t: f64| {
                let c: Vec<f64> = (0..dd).map(|i| base[i] + s * u[i] + t * v[i]).collect();
                gibbs_potential(model, &PhasePoint::from_coords(model, c).unwrap(), beta).unwrap()
            };
            let fd = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
            assert!((fd - form).abs() < 1e-5 * (1.0 + form.abs()), "{model}: fd {fd} vs {form}");
        }
    }

    #[test]
    fn nls_weights_use_both_components() {
        let u = NlsField::new(FourierField::constant(0.6, 2), FourierField::constant(0.8, 2)).unwrap();
        let p = PhasePoint::Nls(u);
        let e = unit(10, 0);
        // w_pp = 3 * 0.36 + 0.64 at every point; the NLS weight sign is negative.
        let f = scaled_hessian_form_model(Model::Nls, &p, 0.5, &e, &e).unwrap();
        assert!((f - (1.0 + 0.5 * 1.72)).abs() < 1e-14);
        let f = scaled_hessian_form_model(Model::Nls, &p, -0.5, &e, &e).unwrap();
        assert!((f - (1.0 - 0.5 * 1.72)).abs() < 1e-14);
        assert!(potential_v(&FourierField::zeros(2), 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_convexity_examples() {
        let beta = kdv_threshold() / 2.0;
        let c = certify_lemma2(beta, 1.0, 8, 10, 5, 1).unwrap();
        assert!(c.threshold_ok && c.passed);
        assert_eq!(c.alpha, Some(0.5));
        let c0 = certify_lemma2(0.0, 1.0, 4, 5, 5, 1).unwrap();
        assert!(c0.passed);
        assert!((c0.sampled_min_form.unwrap() - 1.0).abs() < 1e-12);
        let far = certify_lemma2(10.0, 1.0, 4, 5, 5, 1).unwrap();
        assert!(!far.threshold_ok && !far.passed && far.alpha.is_none());
        assert!(far.sampled_min_form.unwrap().is_finite());
    }

    #[test]
    fn certificates_are_seed_deterministic() {
        let a = certify_model(Model::Mkdv, 0.1, 1.0, 4, 12, 9).unwrap();
        let b = certify_model(Model::Mkdv, 0.1, 1.0, 4, 12, 9).unwrap();
        assert_eq!(a, b);
        assert!(certify_model(Model::Kdv, 0.1, 1.0, 4, 12, 9).is_err());
    }

    #[test]
    fn tail_bound_examples() {
        assert_eq!(tail_hessian_hs_bound(1.0, 1.0, 5).unwrap(), 0.25);
        assert_eq!(tail_hessian_hs_bound(0.0, 3.0, 4).unwrap(), 0.0);
        assert!(tail_hessian_hs_bound(1.0, 1.0, 1).is_err());
        for (b, n) in [(0.1, 1.0), (1.0, 1.0), (2.0, 7.0), (0.01, 100.0)] {
            let k = tail_cutoff(b, n);
            assert!(tail_hessian_hs_bound(b, n, k).unwrap() <= 0.25);
        }
    }

    #[test]
    fn bounded_perturbation_examples() {
        let c = lsi_constant_theorem1(1.0, 1.0).unwrap();
        assert_eq!(c.tail_cutoff, Some(6));
        let osc = c.osc_bound.unwrap();
        assert!((osc - 7.0 * 13f64.powf(1.5)).abs() < 1e-9);
        assert!((osc - 328.1).abs() < 0.05);
        assert!((c.log_alpha.unwrap() - (0.5f64.ln() - 2.0 * osc)).abs() < 1e-9);
        assert!(c.alpha.unwrap() > 0.0);
        let tiny = lsi_constant_theorem1(1e-12, 1.0).unwrap();
        assert!((tiny.alpha.unwrap() - 0.5).abs() < 1e-9);
        assert!((asymptotic_c_prime() - 316.78).abs() < 0.01);
    }
}
