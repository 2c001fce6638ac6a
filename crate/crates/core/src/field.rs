//! Real trigonometric polynomials on the circle.
//!
//! A [`FourierField`] with truncation `M` stands for
//!
//! ```text
//! phi(x) = a0 + sum_{k=1}^{M} sqrt(2) (a_k cos kx + b_k sin kx)
//! ```
//!
//! so that the coefficient map is unitary from `l2` onto `L2(T, dx/2pi)`.
//! All integrals over the circle in this crate use the normalised measure
//! `dx/2pi`; on a grid that is the plain mean of the samples.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{dealiased_grid_size, FftPair};

/// Truncated Fourier coefficients of a real periodic field.
///
/// Coordinates are stored flat as `[a0, a_1..a_M, b_1..b_M]`; the same layout
/// is used for gradients, Hessian directions and sampler states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawField", into = "RawField")]
pub struct FourierField {
    coords: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawField {
    a0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<RawField> for FourierField {
    type Error = Error;

    fn try_from(raw: RawField) -> Result<Self> {
        FourierField::new(raw.a0, raw.a, raw.b)
    }
}

impl From<FourierField> for RawField {
    fn from(f: FourierField) -> Self {
        RawField {
            a0: f.a0(),
            a: f.cos_coeffs().to_vec(),
            b: f.sin_coeffs().to_vec(),
        }
    }
}

impl FourierField {
    pub fn new(a0: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::TruncationMismatch(a.len(), b.len()));
        }
        let mut coords = Vec::with_capacity(1 + 2 * a.len());
        coords.push(a0);
        coords.extend(a);
        coords.extend(b);
        Self::from_coords(coords)
    }

    /// Builds a field from the flat `[a0, a.., b..]` layout.
    pub fn from_coords(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: 2 * (coords.len() / 2) + 1,
                got: coords.len(),
            });
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { coords })
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            coords: vec![0.0; 2 * m + 1],
        }
    }

    pub fn constant(c: f64, m: usize) -> Self {
        let mut f = Self::zeros(m);
        f.coords[0] = c;
        f
    }

    /// Single cosine (`sin == false`) or sine mode `k` with coefficient `c`.
    pub fn mode(m: usize, k: usize, sin: bool, c: f64) -> Self {
        let mut f = Self::zeros(m);
        f.set(k, sin, c);
        f
    }

    pub fn truncation(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn a0(&self) -> f64 {
        self.coords[0]
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        let m = self.truncation();
        &self.coords[1..=m]
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        let m = self.truncation();
        &self.coords[m + 1..]
    }

    /// Cosine coefficient of mode `k` (`k = 0` is the constant mode).
    pub fn a(&self, k: usize) -> f64 {
        if k == 0 {
            self.coords[0]
        } else {
            self.coords[k]
        }
    }

    pub fn b(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.coords[self.truncation() + k]
        }
    }

    pub fn set(&mut self, k: usize, sin: bool, value: f64) {
        let m = self.truncation();
        assert!(k <= m, "mode {k} beyond truncation {m}");
        match (k, sin) {
            (0, false) => self.coords[0] = value,
            (0, true) => panic!("the constant mode has no sine part"),
            (k, false) => self.coords[k] = value,
            (k, true) => self.coords[m + k] = value,
        }
    }

    /// Wavenumber attached to flat index `i`.
    pub fn wavenumber_of(m: usize, i: usize) -> usize {
        if i == 0 {
            0
        } else if i <= m {
            i
        } else {
            i - m
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let m = self.truncation();
        let mut s = 0.0;
        for k in 1..=m {
            let kx = k as f64 * x;
            s += self.a(k) * kx.cos() + self.b(k) * kx.sin();
        }
        self.a0() + SQRT_2 * s
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `L2(dx/2pi)` inner product, equal to the coefficient dot product.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(dot(&self.coords, &other.coords))
    }

    /// Homogeneous `H^{1/2}` inner product `sum_k |k| (a_k a'_k + b_k b'_k)`.
    pub fn h_half_inner(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        let m = self.truncation();
        Ok((1..self.dim())
            .map(|i| Self::wavenumber_of(m, i) as f64 * self.coords[i] * other.coords[i])
            .sum())
    }

    /// `phi'`: mode `k` maps `(a_k, b_k) -> (k b_k, -k a_k)`.
    pub fn derivative(&self) -> Self {
        let m = self.truncation();
        let mut out = Self::zeros(m);
        for k in 1..=m {
            let kf = k as f64;
            out.coords[k] = kf * self.b(k);
            out.coords[m + k] = -kf * self.a(k);
        }
        out
    }

    /// Smoothing operator `G`: Fourier multiplier `1/|k|` on `k != 0`.
    /// The constant mode is annihilated, so `G` is not invertible on constants.
    pub fn apply_g(&self) -> Self {
        let m = self.truncation();
        let mut out = Self::zeros(m);
        for i in 1..self.dim() {
            out.coords[i] = self.coords[i] / Self::wavenumber_of(m, i) as f64;
        }
        out
    }

    /// Translate: returns `x -> phi(x + s)`.
    pub fn shifted(&self, s: f64) -> Self {
        let m = self.truncation();
        let mut out = self.clone();
        for k in 1..=m {
            let (sn, cs) = (k as f64 * s).sin_cos();
            let (a, b) = (self.a(k), self.b(k));
            out.coords[k] = a * cs + b * sn;
            out.coords[m + k] = -a * sn + b * cs;
        }
        out
    }

    /// Zero-pads or truncates to `m` modes.
    pub fn with_truncation(&self, m: usize) -> Self {
        let mut out = Self::zeros(m);
        let keep = m.min(self.truncation());
        out.coords[0] = self.coords[0];
        for k in 1..=keep {
            out.coords[k] = self.a(k);
            out.coords[m + k] = self.b(k);
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    /// Complex spectrum in FFT order on an `n`-point grid.
    pub(crate) fn spectrum(&self, n: usize) -> Vec<Complex64> {
        let m = self.truncation();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = Complex64::new(self.a0(), 0.0);
        for k in 1..=m {
            let c = Complex64::new(self.a(k), -self.b(k)) / SQRT_2;
            buf[k] = c;
            buf[n - k] = c.conj();
        }
        buf
    }

    /// Reads `m` modes from an FFT-ordered spectrum of length `n`.
    pub(crate) fn from_spectrum(buf: &[Complex64], m: usize) -> Self {
        let mut out = Self::zeros(m);
        out.coords[0] = buf[0].re;
        for k in 1..=m {
            out.coords[k] = SQRT_2 * buf[k].re;
            out.coords[m + k] = -SQRT_2 * buf[k].im;
        }
        out
    }

    /// Samples the field on `n` equispaced points. Requires `n >= 2M + 2`.
    pub fn to_grid(&self, n: usize) -> Result<GridField> {
        let min = 2 * self.truncation() + 2;
        if n < min {
            return Err(Error::GridTooSmall {
                n,
                modes: self.truncation(),
                min,
            });
        }
        check_pow2(n)?;
        let fft = FftPair::new(n);
        let mut buf = self.spectrum(n);
        fft.synthesize(&mut buf);
        Ok(GridField {
            values: buf.into_iter().map(|z| z.re).collect(),
        })
    }

    /// Samples on the dealiased grid used for cubic and quartic integrands.
    pub fn to_dealiased_grid(&self) -> GridField {
        self.to_grid(dealiased_grid_size(self.truncation()))
            .expect("dealiased grid is always large enough")
    }

    /// Trigonometric interpolation of grid samples, keeping `m` modes.
    pub fn from_grid(g: &GridField, m: usize) -> Result<Self> {
        let n = g.len();
        let min = 2 * m + 2;
        if n < min {
            return Err(Error::GridTooSmall { n, modes: m, min });
        }
        let fft = FftPair::new(n);
        let mut buf: Vec<Complex64> = g.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.analyze(&mut buf);
        Ok(Self::from_spectrum(&buf, m))
    }

    /// `int phi^p dx/2pi` on the dealiased grid (exact for `p <= 4`).
    pub fn power_mean(&self, p: i32) -> f64 {
        self.to_dealiased_grid().power_mean(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("field serialisation cannot fail")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::TruncationMismatch(self.truncation(), other.truncation()));
        }
        Ok(())
    }
}

/// Samples of a periodic function at `x_i = 2*pi*i/n`, `n` a power of two.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    values: Vec<f64>,
}

impl GridField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_pow2(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..n).map(|i| f(grid_point(i, n))).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x(&self, i: usize) -> f64 {
        grid_point(i, self.len())
    }

    /// `int g dx/2pi` by the equal-weight rule.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn power_mean(&self, p: i32) -> f64 {
        self.values.iter().map(|v| v.powi(p)).sum::<f64>() / self.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn derivative(&self, order: u32) -> GridField {
        GridField {
            values: crate::spectral::grid_derivative(&self.values, order),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// CSV dump with header `x,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{},{}", self.x(i), v);
        }
        s
    }
}

pub fn grid_point(i: usize, n: usize) -> f64 {
    2.0 * PI * i as f64 / n as f64
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_pow2(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::GridNotPowerOfTwo(n));
    }
    Ok(())
}
