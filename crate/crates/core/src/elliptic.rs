//! Complete elliptic integral `K(k)` and Jacobi elliptic functions by the
//! arithmetic-geometric mean. Moduli are restricted to `0 <= k < 1`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const AGM_MAX_ITER: usize = 64;

/// Elliptic modulus `k` in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EllipticModulus(f64);

impl EllipticModulus {
    pub fn new(k: f64) -> Result<Self> {
        if (0.0..1.0).contains(&k) {
            Ok(Self(k))
        } else {
            Err(Error::ModulusOutOfRange(k))
        }
    }

    pub fn k(self) -> f64 {
        self.0
    }

    /// Complementary modulus `sqrt(1 - k^2)`, computed without cancellation.
    pub fn complement(self) -> f64 {
        ((1.0 - self.0) * (1.0 + self.0)).sqrt()
    }
}

/// Complete elliptic integral of the first kind,
/// `K(k) = int_0^{pi/2} dt / sqrt(1 - k^2 sin^2 t) = pi / (2 AGM(1, k'))`.
pub fn complete_k(k: f64) -> Result<f64> {
    let m = EllipticModulus::new(k)?;
    if k == 0.0 {
        return Ok(FRAC_PI_2);
    }
    let (mut a, mut b) = (1.0_f64, m.complement());
    for _ in 0..AGM_MAX_ITER {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        let done = (a - b).abs() <= 4.0 * f64::EPSILON * an;
        a = an;
        b = bn;
        if done {
            break;
        }
    }
    Ok(FRAC_PI_2 / a)
}

/// `(sn, cn, dn)` of `x` with modulus `k`, by descending AGM with amplitude
/// back-recursion.
pub fn jacobi_sn_cn_dn(x: f64, k: f64) -> Result<(f64, f64, f64)> {
    let phi = jacobi_am(x, k)?;
    let (sn, cn) = phi.sin_cos();
    let dn = (1.0 - k * k * sn * sn).sqrt();
    Ok((sn, cn, dn))
}

/// Jacobi amplitude `am(x|k)`: the `psi` with `x = int_0^psi dt/sqrt(1-k^2 sin^2 t)`.
pub fn jacobi_am(x: f64, k: f64) -> Result<f64> {
    let m = EllipticModulus::new(k)?;
    if k == 0.0 {
        return Ok(x);
    }
    let mut a = vec![1.0_f64];
    let mut c = vec![k];
    let mut b = m.complement();
    for _ in 0..AGM_MAX_ITER {
        let (an, bn) = (*a.last().unwrap(), b);
        if c.last().unwrap().abs() <= f64::EPSILON * an {
            break;
        }
        a.push(0.5 * (an + bn));
        c.push(0.5 * (an - bn));
        b = (an * bn).sqrt();
    }
    let steps = a.len() - 1;
    let mut phi = 2f64.powi(steps as i32) * a[steps] * x;
    for n in (1..=steps).rev() {
        phi = 0.5 * (phi + (c[n] / a[n] * phi.sin()).asin());
    }
    Ok(phi)
}

pub fn jacobi_sn(x: f64, k: f64) -> Result<f64> {
    Ok(jacobi_sn_cn_dn(x, k)?.0)
}

pub fn jacobi_cn(x: f64, k: f64) -> Result<f64> {
    Ok(jacobi_sn_cn_dn(x, k)?.1)
}

pub fn jacobi_dn(x: f64, k: f64) -> Result<f64> {
    Ok(jacobi_sn_cn_dn(x, k)?.2)
}

/// Largest `|sn^2(x + period) - sn^2(x)|` over `samples` points of `[0, 4K]`.
pub fn sn_sq_periodicity_defect(k: f64, period: f64, samples: usize) -> Result<f64> {
    let quarter = complete_k(k)?;
    let mut worst = 0.0_f64;
    for i in 0..samples {
        let x = 4.0 * quarter * i as f64 / samples as f64;
        let d = jacobi_sn(x + period, k)?.powi(2) - jacobi_sn(x, k)?.powi(2);
        worst = worst.max(d.abs());
    }
    Ok(worst)
}

/// Real period of `sn^2(.|k)`, which is `2K(k)` (the period of `sn` is `4K`).
/// The value is checked on a grid before it is returned.
pub fn sn_sq_period(k: f64) -> Result<f64> {
    let period = 2.0 * complete_k(k)?;
    let defect = sn_sq_periodicity_defect(k, period, 257)?;
    if defect > 1e-12 {
        return Err(Error::NoSolution(format!(
            "sn^2 periodicity check failed at k = {k}: defect {defect:e}"
        )));
    }
    Ok(period)
}
