//! FFT plumbing shared by the field, flow and stability modules.
//!
//! Spectra are stored in FFT order: index `k` for `0 <= k < n/2`, index
//! `n - k` for mode `-k`. The physical grid is `x_i = 2*pi*i/n` and the
//! synthesis convention is `u(x_i) = sum_k c_k exp(i k x_i)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plan_cache() -> &'static Mutex<HashMap<usize, Plans>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Forward and inverse FFT plans of size `n`, cached process-wide.
#[derive(Clone)]
pub struct FftPair {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("n", &self.n).finish()
    }
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut cache = plan_cache().lock().expect("fft plan cache poisoned");
        let (forward, inverse) = cache
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
            })
            .clone();
        Self { n, forward, inverse }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Grid values to spectral coefficients `c_k` (divides by `n`).
    pub fn analyze(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
        let scale = 1.0 / self.n as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    /// Spectral coefficients to grid values (no scaling).
    pub fn synthesize(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }
}

/// Signed wavenumber stored at FFT index `idx`.
#[inline]
pub fn wavenumber(idx: usize, n: usize) -> i64 {
    if idx <= n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// Smallest power-of-two grid with at least `4m + 2` points, which keeps
/// cubic and quartic products of `m`-mode fields alias-free.
pub fn dealiased_grid_size(m: usize) -> usize {
    (4 * m + 2).next_power_of_two().max(8)
}

/// Spectral derivative of order `order` of real periodic samples.
/// The Nyquist mode is dropped for odd orders.
pub fn grid_derivative(values: &[f64], order: u32) -> Vec<f64> {
    let n = values.len();
    let fft = FftPair::new(n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.analyze(&mut buf);
    for (idx, z) in buf.iter_mut().enumerate() {
        let k = wavenumber(idx, n);
        if order % 2 == 1 && n.is_multiple_of(2) && idx == n / 2 {
            *z = Complex64::new(0.0, 0.0);
            continue;
        }
        let ik = Complex64::new(0.0, k as f64);
        *z *= ik.powu(order);
    }
    fft.synthesize(&mut buf);
    buf.iter().map(|z| z.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derivative_of_sine() {
        let n = 64;
        let v: Vec<f64> = (0..n).map(|i| (3.0 * 2.0 * PI * i as f64 / n as f64).sin()).collect();
        let d = grid_derivative(&v, 1);
        let d2 = grid_derivative(&v, 2);
        for i in 0..n {
            let x = 2.0 * PI * i as f64 / n as f64;
            assert!((d[i] - 3.0 * (3.0 * x).cos()).abs() < 1e-12);
            assert!((d2[i] + 9.0 * (3.0 * x).sin()).abs() < 1e-11);
        }
    }

    #[test]
    fn dealias_sizes() {
        assert_eq!(dealiased_grid_size(1), 8);
        assert_eq!(dealiased_grid_size(16), 128);
        assert_eq!(dealiased_grid_size(32), 256);
        assert!(dealiased_grid_size(31) >= 4 * 31 + 2);
    }

    #[test]
    fn wavenumbers_fft_order() {
        assert_eq!(wavenumber(0, 8), 0);
        assert_eq!(wavenumber(3, 8), 3);
        assert_eq!(wavenumber(5, 8), -3);
        assert_eq!(wavenumber(7, 8), -1);
    }
}
