//! Empirical checks of the consequences of a log-Sobolev inequality:
//! the Herbst bound `log E exp(t F) <= t^2/(2 alpha)` for centered 1-Lipschitz
//! `F`, and brute-force entropy/Dirichlet ratios in low dimension.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexity::{kdv_threshold, lsi_constant_theorem1, mkdv_threshold, stream_rng, NLS_THRESHOLD};
use crate::error::{Error, Result};
use crate::gibbs::{log_density, SampleBatch};
use crate::hamiltonians::{EnsembleParams, Model};
use crate::observables::Observable;
use crate::quadrature::gauss_legendre_on;

/// Bootstrap resamples behind each confidence half-width.
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Two-sided 99% normal quantile used for the half-widths.
pub const CI_Z: f64 = 2.576;
/// Relative disagreement tolerated between resolutions `res` and `res/2`.
pub const RICHARDSON_TOL: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MGFReport {
    pub observable: String,
    pub n_samples: usize,
    pub t_grid: Vec<f64>,
    pub log_mgf: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
    pub alpha: f64,
    pub bound: Vec<f64>,
    pub pass: bool,
}

impl MGFReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,log_mgf,ci,bound\n");
        for i in 0..self.t_grid.len() {
            s.push_str(&format!(
                "{:.6},{:.12e},{:.12e},{:.12e}\n",
                self.t_grid[i], self.log_mgf[i], self.ci_halfwidth[i], self.bound[i]
            ));
        }
        s
    }
}

/// `log (sum_i w_i exp(t x_i) / sum_i w_i)`.
fn log_mgf_at(x: &[f64], w: &[f64], t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let top = x.iter().map(|v| t * v).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = x.iter().zip(w).map(|(v, wi)| wi * (t * v - top).exp()).sum();
    let total: f64 = w.iter().sum();
    top + s.ln() - total.ln()
}

fn center(x: &[f64], w: &[f64]) -> Vec<f64> {
    let m: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
    x.iter().map(|v| v - m).collect()
}

/// LSI constant to test against: 1/2 inside the convexity regimes, otherwise
/// the bounded-perturbation constant (KdV only).
pub fn herbst_alpha(params: &EnsembleParams) -> Result<f64> {
    let (b, n) = (params.beta, params.particle_number);
    match params.model {
        Model::Kdv if b * n.sqrt() <= kdv_threshold() => Ok(0.5),
        Model::Kdv => Ok(lsi_constant_theorem1(b, n)?.log_alpha.unwrap_or(f64::NEG_INFINITY).exp()),
        Model::Mkdv if b * n <= mkdv_threshold() => Ok(0.5),
        Model::Nls if b * n < NLS_THRESHOLD => Ok(0.5),
        other => Err(Error::UnsupportedModel(format!(
            "{other}: no LSI constant outside the convexity regime"
        ))),
    }
}

/// Empirical log moment generating function of the centered observable with
/// bootstrap half-widths `CI_Z * sd_boot`. The centering is redone inside
/// each resample, so its bias is part of the interval.
pub fn empirical_mgf(
    batch: &SampleBatch,
    observable: &Observable,
    t_grid: &[f64],
    alpha: f64,
    seed: u64,
) -> Result<MGFReport> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !observable.is_one_lipschitz() {
        return Err(Error::NotLipschitz(observable.name()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be positive")));
    }
    let raw = batch.values(observable)?;
    let w = batch.normalized_weights();
    let x = center(&raw, &w);
    let n = x.len();
    let log_mgf: Vec<f64> = t_grid.par_iter().map(|&t| log_mgf_at(&x, &w, t)).collect();

    // Bootstrap: resample b uses stream b of the seed.
    let boot: Vec<Vec<f64>> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let xs: Vec<f64> = idx.iter().map(|&i| raw[i]).collect();
            let ws: Vec<f64> = idx.iter().map(|&i| w[i]).collect();
            let total: f64 = ws.iter().sum();
            let ws: Vec<f64> = ws.iter().map(|v| v / total).collect();
            let xs = center(&xs, &ws);
            t_grid.iter().map(|&t| log_mgf_at(&xs, &ws, t)).collect()
        })
        .collect();
    let ci_halfwidth: Vec<f64> = (0..t_grid.len())
        .map(|j| {
            let col: Vec<f64> = boot.iter().map(|r| r[j]).collect();
            CI_Z * crate::stats::variance(&col).sqrt()
        })
        .collect();
    let bound: Vec<f64> = t_grid.iter().map(|t| t * t / (2.0 * alpha)).collect();
    let mut report = MGFReport {
        observable: observable.name(),
        n_samples: n,
        t_grid: t_grid.to_vec(),
        log_mgf,
        ci_halfwidth,
        alpha,
        bound,
        pass: false,
    };
    report.pass = herbst_bound_check(&report, alpha);
    Ok(report)
}

/// Whether `log_mgf <= t^2/(2 alpha) + ci` at every grid point.
pub fn herbst_bound_check(report: &MGFReport, alpha: f64) -> bool {
    report
        .t_grid
        .iter()
        .zip(&report.log_mgf)
        .zip(&report.ci_halfwidth)
        .all(|((t, l), ci)| *l <= t * t / (2.0 * alpha) + ci)
}

/// Largest violation of midpoint convexity of `log J` on consecutive grid
/// triples, after allowing the confidence half-width at the midpoint.
/// Nonpositive values mean the empirical curve is log-convex.
pub fn log_convexity_defect(report: &MGFReport) -> f64 {
    (1..report.t_grid.len().saturating_sub(1))
        .map(|i| {
            let l = &report.log_mgf;
            l[i] - 0.5 * (l[i - 1] + l[i + 1]) - report.ci_halfwidth[i]
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A polynomial test function `c + <l, x> + <x, Q x>` of the coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTest {
    pub name: String,
    pub constant: f64,
    pub linear: Vec<f64>,
    /// Symmetric, row-major `d x d`.
    pub quadratic: Vec<f64>,
}

impl PolyTest {
    pub fn constant(d: usize, c: f64) -> Self {
        Self {
            name: format!("const({c})"),
            constant: c,
            linear: vec![0.0; d],
            quadratic: vec![0.0; d * d],
        }
    }

    pub fn coordinate(d: usize, i: usize) -> Self {
        let mut linear = vec![0.0; d];
        linear[i] = 1.0;
        Self {
            name: format!("x{i}"),
            constant: 0.0,
            linear,
            quadratic: vec![0.0; d * d],
        }
    }

    pub fn product(d: usize, i: usize, j: usize) -> Self {
        let mut quadratic = vec![0.0; d * d];
        quadratic[i * d + j] += 0.5;
        quadratic[j * d + i] += 0.5;
        Self {
            name: format!("x{i}*x{j}"),
            constant: 0.0,
            linear: vec![0.0; d],
            quadratic,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let mut v = self.constant;
        for i in 0..d {
            v += self.linear[i] * x[i];
            for j in 0..d {
                v += x[i] * self.quadratic[i * d + j] * x[j];
            }
        }
        v
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        (0..d)
            .map(|i| self.linear[i] + 2.0 * (0..d).map(|j| self.quadratic[i * d + j] * x[j]).sum::<f64>())
            .collect()
    }
}

/// Constant, coordinates, affine shifts, squares and cross products.
pub fn default_test_family(d: usize) -> Vec<PolyTest> {
    let mut fam = vec![PolyTest::constant(d, 1.0)];
    for i in 0..d {
        fam.push(PolyTest::coordinate(d, i));
        let mut shifted = PolyTest::coordinate(d, i);
        shifted.constant = 0.5;
        shifted.name = format!("0.5+x{i}");
        fam.push(shifted);
        fam.push(PolyTest::product(d, i, i));
    }
    for i in 0..d {
        for j in i + 1..d {
            fam.push(PolyTest::product(d, i, j));
        }
    }
    let mut sum = PolyTest::coordinate(d, 0);
    sum.linear.iter_mut().for_each(|v| *v = 1.0);
    sum.name = "sum".into();
    fam.push(sum);
    fam
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsiRatio {
    pub name: String,
    pub entropy: f64,
    pub dirichlet: f64,
    /// `entropy / dirichlet`, 0 when both vanish.
    pub ratio: f64,
}

struct Moments {
    z: f64,
    f2: Vec<f64>,
    f2log: Vec<f64>,
    grad: Vec<f64>,
}

/// Hyperspherical tensor quadrature over the ball `||x||^2 <= N` in
/// dimension `d`: Gauss-Legendre in the radius and polar angles, the
/// trapezoidal rule in the azimuth.
fn ball_moments(params: &EnsembleParams, family: &[PolyTest], res: usize) -> Result<Moments> {
    let d = params.dim();
    let m = params.truncation;
    let block = 2 * m + 1;
    let metric: Vec<f64> = (0..d)
        .map(|i| {
            let k = crate::field::FourierField::wavenumber_of(m, i % block).max(1) as f64;
            1.0 / (k * k)
        })
        .collect();
    let (rs, rw) = gauss_legendre_on(res, 0.0, params.particle_number.sqrt());
    let (ts, tw) = gauss_legendre_on(res, 0.0, PI);
    let n_az = 2 * res;
    let n_polar = d - 2;
    let nf = family.len();
    let polar_count = res.pow(n_polar as u32);

    let partials: Vec<Result<Moments>> = (0..res)
        .into_par_iter()
        .map(|ir| {
            let r = rs[ir];
            let mut acc = Moments {
                z: 0.0,
                f2: vec![0.0; nf],
                f2log: vec![0.0; nf],
                grad: vec![0.0; nf],
            };
            let mut x = vec![0.0; d];
            for pidx in 0..polar_count {
                let mut jac = rw[ir] * r.powi(d as i32 - 1);
                let mut sin_prod = r;
                let mut rem = pidx;
                for a in 0..n_polar {
                    let it = rem % res;
                    rem /= res;
                    let th = ts[it];
                    x[a] = sin_prod * th.cos();
                    jac *= tw[it] * th.sin().powi((d - 2 - a) as i32);
                    sin_prod *= th.sin();
                }
                for ia in 0..n_az {
                    let ph = 2.0 * PI * ia as f64 / n_az as f64;
                    x[d - 2] = sin_prod * ph.cos();
                    x[d - 1] = sin_prod * ph.sin();
                    let wgt = jac * (2.0 * PI / n_az as f64) * log_density(params, &x)?.exp();
                    if wgt == 0.0 {
                        continue;
                    }
                    acc.z += wgt;
                    for (fi, f) in family.iter().enumerate() {
                        let v = f.value(&x);
                        let v2 = v * v;
                        acc.f2[fi] += wgt * v2;
                        if v2 > 0.0 {
                            acc.f2log[fi] += wgt * v2 * v2.ln();
                        }
                        let g = f.gradient(&x);
                        acc.grad[fi] += wgt * g.iter().zip(&metric).map(|(gi, mi)| gi * gi * mi).sum::<f64>();
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = Moments {
        z: 0.0,
        f2: vec![0.0; nf],
        f2log: vec![0.0; nf],
        grad: vec![0.0; nf],
    };
    for p in partials {
        let p = p?;
        total.z += p.z;
        for i in 0..nf {
            total.f2[i] += p.f2[i];
            total.f2log[i] += p.f2log[i];
            total.grad[i] += p.grad[i];
        }
    }
    Ok(total)
}

fn ratios(mo: &Moments, family: &[PolyTest]) -> Vec<LsiRatio> {
    family
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let ef2 = mo.f2[i] / mo.z;
            let ent = if ef2 > 0.0 { mo.f2log[i] / mo.z - ef2 * ef2.ln() } else { 0.0 };
            let dir = mo.grad[i] / mo.z;
            let ratio = if dir > 0.0 { ent / dir } else { 0.0 };
            LsiRatio {
                name: f.name.clone(),
                entropy: ent,
                dirichlet: dir,
                ratio,
            }
        })
        .collect()
}

/// `Ent(F^2)` and `E ||D^{-1} grad F||^2` under the truncated Gibbs measure,
/// with `D = diag(max(|k|, 1))`, by quadrature at `resolution` nodes per axis.
/// Fails with `ResolutionTooCoarse` when entropy or Dirichlet energy move by
/// more than 1% between `resolution/2` and `resolution`.
pub fn entropy_dirichlet_lowdim(
    params: &EnsembleParams,
    family: &[PolyTest],
    resolution: usize,
) -> Result<Vec<LsiRatio>> {
    let d = params.dim();
    if d > 5 {
        return Err(Error::InvalidParameter(format!(
            "{d} coordinates: direct quadrature needs at most 5"
        )));
    }
    if resolution < 8 {
        return Err(Error::InvalidParameter("resolution must be at least 8".into()));
    }
    if let Some(f) = family.iter().find(|f| f.linear.len() != d || f.quadratic.len() != d * d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: f.linear.len(),
        });
    }
    let fine = ratios(&ball_moments(params, family, resolution)?, family);
    let coarse = ratios(&ball_moments(params, family, resolution / 2)?, family);
    for (a, b) in fine.iter().zip(&coarse) {
        for (x, y, what) in [(a.entropy, b.entropy, "entropy"), (a.dirichlet, b.dirichlet, "dirichlet")] {
            let scale = x.abs().max(1e-8);
            if (x - y).abs() > RICHARDSON_TOL * scale {
                return Err(Error::ResolutionTooCoarse(format!(
                    "{what} of {} changes from {y:e} to {x:e}",
                    a.name
                )));
            }
        }
    }
    Ok(fine)
}
