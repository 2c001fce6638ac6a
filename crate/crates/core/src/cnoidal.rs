//! Stationary points of the constrained KdV energy
//! `H_lambda = 1/2 int phi'^2 - beta/6 int phi^3 - lambda/2 int phi^2`.
//!
//! Stationary points solve `phi'' + beta/2 phi^2 + lambda phi = 0`. Besides
//! the constants `0` and `-2 lambda/beta`, the periodic solutions are the
//! cnoidal waves
//!
//! ```text
//! phi(x) = f1 - (f1 - f2) sn^2( s (x1 - x) | k ),   s = sqrt(beta (f1 - f3)/12),
//! ```
//!
//! where `f3 < f2 < f1` are the roots of `-beta/6 phi^3 - lambda/2 phi^2 + C`
//! and `k^2 = (f1 - f2)/(f1 - f3)`. The roots are found through the cubic
//! `z^3 - lambda z/(2C) - beta/(6C) = 0` in `z = 1/phi`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::elliptic::{complete_k, jacobi_sn};
use crate::error::{Error, Result};
use crate::field::{FourierField, GridField};
use crate::floquet::hamel_min_check;
use crate::hamiltonians::energy_constrained;
use crate::spectral::dealiased_grid_size;

/// Periodicity residual accepted by [`cnoidal_profile`].
pub const PERIODICITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicRoots {
    /// Roots in decreasing order. When only one root is real it is stored in
    /// `f1`, and `f2 = f3` hold the common real part of the complex pair.
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    /// Discriminant `beta^2/(144 C^2) - lambda^3/(216 C^3)`.
    pub disc: f64,
    /// Polar form `r e^{i theta} = beta/(12 C) + i sqrt(-D)` (three real roots only).
    pub r: f64,
    pub theta: f64,
    pub all_real: bool,
}

impl CubicRoots {
    /// `f1 f2 + f1 f3 + f2 f3`, which vanishes for three real roots.
    pub fn e2(&self) -> f64 {
        self.f1 * self.f2 + self.f1 * self.f3 + self.f2 * self.f3
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.f1, self.f2, self.f3]
    }
}

/// Cubic `-beta/6 phi^3 - lambda/2 phi^2 + C` whose roots are the turning points.
pub fn turning_cubic(beta: f64, lambda: f64, c: f64, phi: f64) -> f64 {
    -beta / 6.0 * phi.powi(3) - 0.5 * lambda * phi * phi + c
}

/// Whether the operational condition `D < 0`, equivalently
/// `beta^2 < 2 lambda^3 / (3 C)`, holds.
pub fn periodic_condition(beta: f64, lambda: f64, c: f64) -> bool {
    beta * beta < 2.0 * lambda.powi(3) / (3.0 * c)
}

/// The inequality `beta^2 < 3 lambda^3 / (2 C)` as it is often quoted; it is
/// not equivalent to `D < 0` and is reported for comparison only.
pub fn quoted_periodic_condition(beta: f64, lambda: f64, c: f64) -> bool {
    beta * beta < 3.0 * lambda.powi(3) / (2.0 * c)
}

/// Roots of `-beta/6 phi^3 - lambda/2 phi^2 + C` by the trigonometric method
/// applied to the cubic in `z = 1/phi`.
pub fn cubic_roots_trig(beta: f64, lambda: f64, c: f64) -> Result<CubicRoots> {
    if c == 0.0 {
        return Err(Error::DegenerateRoots(
            "C = 0 is the constant-solution regime".into(),
        ));
    }
    if beta == 0.0 {
        return Err(Error::InvalidParameter("beta must be nonzero".into()));
    }
    let p = -lambda / (2.0 * c);
    let q = -beta / (6.0 * c);
    let disc = beta * beta / (144.0 * c * c) - lambda.powi(3) / (216.0 * c.powi(3));
    if disc < 0.0 {
        let r = (-(p / 3.0).powi(3)).sqrt();
        let theta = (-disc).sqrt().atan2(beta / (12.0 * c));
        let amp = 2.0 * r.cbrt();
        let mut f: Vec<f64> = (0..3)
            .map(|j| 1.0 / (amp * ((theta + 2.0 * PI * j as f64) / 3.0).cos()))
            .collect();
        f.sort_by(|a, b| b.total_cmp(a));
        Ok(CubicRoots {
            f1: f[0],
            f2: f[1],
            f3: f[2],
            disc,
            r,
            theta,
            all_real: true,
        })
    } else {
        // Cardano: one real z, complex pair z = -z0/2 +- i w.
        let sq = disc.sqrt();
        let z0 = (-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt();
        let zr = -z0 / 2.0;
        let zi2 = -(p + 3.0 * zr * zr);
        let re = zr / (zr * zr + zi2.max(0.0));
        Ok(CubicRoots {
            f1: 1.0 / z0,
            f2: re,
            f3: re,
            disc,
            r: f64::NAN,
            theta: f64::NAN,
            all_real: false,
        })
    }
}

/// `k^2` written as a function of `gamma = cos(theta/3)`:
/// `2 g sqrt(1-g^2) / (sqrt3/2 - sqrt3 g^2 - g sqrt(1-g^2))`. Kept as a
/// diagnostic; the modulus itself always comes from the roots.
pub fn k_squared_from_gamma(gamma: f64) -> f64 {
    let s = (1.0 - gamma * gamma).sqrt();
    let r3 = 3f64.sqrt();
    2.0 * gamma * s / (r3 / 2.0 - r3 * gamma * gamma - gamma * s)
}

/// Modulus `k = sqrt((f1-f2)/(f1-f3))` and the index `ell > 0` solving
/// `k^2 ell (ell + 1) = beta (f1 - f3)`.
pub fn modulus_from_roots(roots: &CubicRoots, beta: f64) -> Result<(f64, f64)> {
    if !roots.all_real {
        return Err(Error::DegenerateRoots("roots are not all real".into()));
    }
    let (d12, d13) = (roots.f1 - roots.f2, roots.f1 - roots.f3);
    if d12 <= 0.0 || d13 <= d12 {
        return Err(Error::DegenerateRoots(format!(
            "repeated roots {:?} give a degenerate modulus",
            roots.as_array()
        )));
    }
    let k2 = d12 / d13;
    let ell = 0.5 * (-1.0 + (1.0 + 4.0 * beta * d13 / k2).sqrt());
    Ok((k2.sqrt(), ell))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnoidalParams {
    pub beta: f64,
    pub lambda: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub roots: CubicRoots,
    pub k: f64,
    pub ell: f64,
    pub x1: f64,
    pub m: usize,
    /// `|2 pi s - 2 m K(k)|`.
    pub periodicity_residual: f64,
}

impl CnoidalParams {
    /// Builds the parameters for given `(beta, lambda, C)` and wave count `m`.
    pub fn new(beta: f64, lambda: f64, c: f64, m: usize, x1: f64) -> Result<Self> {
        let roots = cubic_roots_trig(beta, lambda, c)?;
        let (k, ell) = modulus_from_roots(&roots, beta)?;
        let s = (beta * (roots.f1 - roots.f3) / 12.0).sqrt();
        let residual = (2.0 * PI * s - 2.0 * m as f64 * complete_k(k)?).abs();
        Ok(Self {
            beta,
            lambda,
            c,
            roots,
            k,
            ell,
            x1,
            m,
            periodicity_residual: residual,
        })
    }

    /// Scale `s = sqrt(beta (f1 - f3)/12)` of the sn argument.
    pub fn scale(&self) -> f64 {
        (self.beta * (self.roots.f1 - self.roots.f3) / 12.0).sqrt()
    }

    pub fn is_periodic(&self) -> bool {
        self.periodicity_residual <= PERIODICITY_TOL * (1.0 + 2.0 * PI * self.scale())
    }

    /// `phi(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let sn = jacobi_sn(self.scale() * (self.x1 - x), self.k)?;
        Ok(self.roots.f1 - (self.roots.f1 - self.roots.f2) * sn * sn)
    }

    /// Number of local maxima of the profile on the circle.
    pub fn wave_count(&self) -> usize {
        self.m
    }
}

/// Samples the cnoidal wave on `n` grid points.
pub fn cnoidal_profile(params: &CnoidalParams, n: usize) -> Result<GridField> {
    if !params.is_periodic() {
        return Err(Error::NoSolution(format!(
            "parameters are not 2pi-periodic (residual {:e})",
            params.periodicity_residual
        )));
    }
    let values = (0..n)
        .map(|i| params.eval(2.0 * PI * i as f64 / n as f64))
        .collect::<Result<Vec<f64>>>()?;
    GridField::new(values)
}

/// Fourier truncation of the cnoidal wave with `m_modes` modes, computed from
/// an oversampled grid.
pub fn cnoidal_field(params: &CnoidalParams, m_modes: usize) -> Result<FourierField> {
    let n = (8 * m_modes + 8).next_power_of_two().max(1024);
    FourierField::from_grid(&cnoidal_profile(params, n)?, m_modes)
}

/// `max |phi'' + beta/2 phi^2 + lambda phi|` with spectral derivatives.
pub fn stationarity_residual_grid(g: &GridField, beta: f64, lambda: f64) -> f64 {
    let d2 = g.derivative(2);
    g.values()
        .iter()
        .zip(d2.values())
        .map(|(p, pp)| (pp + 0.5 * beta * p * p + lambda * p).abs())
        .fold(0.0, f64::max)
}

pub fn stationarity_residual(f: &FourierField, beta: f64, lambda: f64) -> f64 {
    stationarity_residual_grid(&f.to_dealiased_grid(), beta, lambda)
}

/// Values of the first integral `1/2 phi'^2 + beta/6 phi^3 + lambda/2 phi^2`.
pub fn first_integral(g: &GridField, beta: f64, lambda: f64) -> Vec<f64> {
    let d1 = g.derivative(1);
    g.values()
        .iter()
        .zip(d1.values())
        .map(|(p, dp)| 0.5 * dp * dp + beta / 6.0 * p.powi(3) + 0.5 * lambda * p * p)
        .collect()
}

/// `max - min` of the first integral over the grid.
pub fn first_integral_flatness(g: &GridField, beta: f64, lambda: f64) -> f64 {
    let e = first_integral(g, beta, lambda);
    let hi = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}

/// Largest `|f(root)|` over the three roots, relative to the size of the terms.
pub fn root_closure(beta: f64, lambda: f64, c: f64, roots: &CubicRoots) -> f64 {
    roots
        .as_array()
        .iter()
        .map(|&f| {
            let scale = (beta / 6.0 * f.powi(3)).abs() + (0.5 * lambda * f * f).abs() + c.abs();
            turning_cubic(beta, lambda, c, f).abs() / scale.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// `C*` with `D = 0`: `2 lambda^3 / (3 beta^2)`.
pub fn critical_c(beta: f64, lambda: f64) -> f64 {
    2.0 * lambda.powi(3) / (3.0 * beta * beta)
}

fn period_defect(beta: f64, lambda: f64, t: f64, m: usize) -> Result<f64> {
    let c = t * critical_c(beta, lambda);
    let roots = cubic_roots_trig(beta, lambda, c)?;
    let (k, _) = modulus_from_roots(&roots, beta)?;
    let s = (beta * (roots.f1 - roots.f3) / 12.0).sqrt();
    Ok(2.0 * PI * s - 2.0 * m as f64 * complete_k(k)?)
}

/// Finds `C` with `2 pi sqrt(beta (f1 - f3)/12) = 2 m K(k)` by bisection on
/// `t = C/C*` in `(0, 1)`, where `D < 0`. Solutions exist for `|lambda| > m^2`.
pub fn solve_periodic_family(beta: f64, lambda: f64, m: usize) -> Result<CnoidalParams> {
    if !(beta > 0.0 && beta.is_finite()) || m == 0 || !lambda.is_finite() || lambda == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need beta > 0, lambda != 0 and m >= 1 (beta = {beta}, lambda = {lambda}, m = {m})"
        )));
    }
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    let (f_lo, f_hi) = (period_defect(beta, lambda, lo, m)?, period_defect(beta, lambda, hi, m)?);
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSolution(format!(
            "no {m}-wave periodic solution for beta = {beta}, lambda = {lambda} (need |lambda| > m^2)"
        )));
    }
    let rising = f_hi > f_lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = period_defect(beta, lambda, mid, m)?;
        if (f > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    CnoidalParams::new(beta, lambda, t * critical_c(beta, lambda), m, 0.0)
}

/// `int phi^2 dx/2pi` of the periodic solution at `lambda`.
pub fn family_norm_sq(beta: f64, lambda: f64, m: usize) -> Result<f64> {
    let p = solve_periodic_family(beta, lambda, m)?;
    Ok(cnoidal_profile(&p, 1024)?.power_mean(2))
}

/// Places an `m`-wave solution with `lambda > m^2` on the sphere
/// `int phi^2 = N` by bisection in `lambda`.
pub fn solve_on_sphere(beta: f64, particle_number: f64, m: usize) -> Result<CnoidalParams> {
    let m2 = (m * m) as f64;
    let mut lo = m2 * (1.0 + 1e-6);
    let norm_lo = family_norm_sq(beta, lo, m)?;
    if norm_lo >= particle_number {
        return Err(Error::NoSolution(format!(
            "N = {particle_number} is below the smallest reachable norm {norm_lo:e}"
        )));
    }
    let mut hi = 2.0 * m2;
    let mut grow = 0;
    while family_norm_sq(beta, hi, m)? < particle_number {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::NoSolution("sphere bracket not found".into()));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if family_norm_sq(beta, mid, m)? < particle_number {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    solve_periodic_family(beta, 0.5 * (lo + hi), m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantPoint {
    pub phi: f64,
    pub lambda: f64,
    pub energy: f64,
    pub local_min: bool,
    /// Minimum eigenvalue of the second variation on the basis used.
    pub min_eig: f64,
}

/// Basis size used to classify constant stationary points.
pub const CONSTANT_BASIS: usize = 33;

/// The constant stationary points `-sqrt(N)` and `+sqrt(N)` on the sphere
/// `int phi^2 = N`, with their multipliers, energies and second-variation
/// classification.
pub fn classify_constant_points(beta: f64, particle_number: f64) -> Result<Vec<ConstantPoint>> {
    if !(beta > 0.0) || !(particle_number > 0.0) {
        return Err(Error::InvalidParameter("need beta > 0 and N > 0".into()));
    }
    let root_n = particle_number.sqrt();
    let modes = (CONSTANT_BASIS - 1) / 2;
    [-root_n, root_n]
        .into_iter()
        .map(|phi| {
            // phi = -2 lambda / beta.
            let lambda = -beta * phi / 2.0;
            let field = FourierField::constant(phi, modes);
            let check = hamel_min_check(&field, beta, lambda, CONSTANT_BASIS)?;
            Ok(ConstantPoint {
                phi,
                lambda,
                energy: energy_constrained(&field, beta, lambda),
                local_min: check.is_local_min,
                min_eig: check.min_eig,
            })
        })
        .collect()
}

/// Coefficient of `t^2` in `H_lambda(phi + t psi)`:
/// `1/2 int (psi'^2 - (lambda + beta phi) psi^2) dx/2pi`.
pub fn second_variation_form(phi: &FourierField, beta: f64, lambda: f64, psi: &FourierField) -> Result<f64> {
    let m = phi.truncation().max(psi.truncation());
    let n = dealiased_grid_size(m);
    let p = phi.with_truncation(m).to_grid(n)?;
    let s = psi.with_truncation(m).to_grid(n)?;
    let potential: f64 = p
        .values()
        .iter()
        .zip(s.values())
        .map(|(f, y)| (lambda + beta * f) * y * y)
        .sum::<f64>()
        / n as f64;
    Ok(0.5 * (psi.derivative().l2_norm_sq() - potential))
}
