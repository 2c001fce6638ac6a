//! Hill equations `y'' + (q(x) + lambda) y = 0` with 2pi-periodic `q`:
//! Floquet discriminant, instability intervals, the zeroth band edge and the
//! trigonometric-basis test of the second variation.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::{complete_k, jacobi_sn};
use crate::error::{Error, Result};
use crate::field::{FourierField, GridField};
use crate::spectral::{wavenumber, FftPair};

/// Convergence target for the monodromy trace under step doubling.
pub const TRACE_TOL: f64 = 1e-11;
/// Default number of scan points for [`instability_intervals`].
pub const DEFAULT_SCAN_POINTS: usize = 2000;
/// Default bisection tolerance on band edges.
pub const EDGE_TOL: f64 = 1e-8;
/// Bounded unstable runs whose peak `|Delta| - 2` stays below this are
/// treated as closed gaps (tangential touching of `|Delta| = 2`).
pub const GAP_TOL: f64 = 1e-6;
/// Threshold on the minimum eigenvalue for a strict local minimum.
pub const LOCAL_MIN_TOL: f64 = 1e-10;

const MIN_STEPS: usize = 32;
const MAX_STEPS: usize = 1 << 18;

/// A trigonometric interpolant of a periodic potential, with per-resolution
/// caches of its values at the stepper's Gauss nodes.
#[derive(Debug)]
pub struct HillPotential {
    modes: Vec<(f64, Complex64)>,
    max_abs: f64,
    cache: Mutex<HashMap<usize, Arc<Vec<f64>>>>,
}

impl HillPotential {
    /// `q(x) = scale * values(x)`, interpolated spectrally from the grid.
    pub fn new(values: &GridField, scale: f64) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::GridTooSmall { n, modes: 0, min: 2 });
        }
        if let Some(i) = values.values().iter().position(|v| !(scale * v).is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mut buf: Vec<Complex64> = values.values().iter().map(|&v| Complex64::new(scale * v, 0.0)).collect();
        FftPair::new(n).analyze(&mut buf);
        let modes = buf
            .iter()
            .enumerate()
            .filter(|(i, c)| c.norm() > 0.0 && !(n.is_multiple_of(2) && *i == n / 2))
            .map(|(i, c)| (wavenumber(i, n) as f64, *c))
            .collect();
        Ok(Self {
            modes,
            max_abs: scale.abs() * values.max_abs(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// The zero potential.
    pub fn zero() -> Self {
        Self {
            modes: Vec::new(),
            max_abs: 0.0,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.modes
            .iter()
            .map(|(k, c)| (c * Complex64::from_polar(1.0, k * x)).re)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    fn nodes(&self, steps: usize) -> Arc<Vec<f64>> {
        if let Some(v) = self.cache.lock().expect("cache lock").get(&steps) {
            return v.clone();
        }
        let h = 2.0 * PI / steps as f64;
        let offs = [0.5 - 15f64.sqrt() / 10.0, 0.5, 0.5 + 15f64.sqrt() / 10.0];
        let v: Arc<Vec<f64>> = Arc::new(
            (0..steps)
                .flat_map(|i| offs.map(|c| self.eval((i as f64 + c) * h)))
                .collect(),
        );
        self.cache.lock().expect("cache lock").insert(steps, v.clone());
        v
    }
}

type Mat2 = [[f64; 2]; 2];

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn comm(a: &Mat2, b: &Mat2) -> Mat2 {
    let (p, q) = (mul(a, b), mul(b, a));
    [[p[0][0] - q[0][0], p[0][1] - q[0][1]], [p[1][0] - q[1][0], p[1][1] - q[1][1]]]
}

fn lin(terms: &[(f64, &Mat2)]) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for (c, m) in terms {
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += c * m[i][j];
            }
        }
    }
    out
}

/// `exp` of a traceless 2x2 matrix: `cosh(mu) I + sinh(mu)/mu Omega`, `mu^2 = -det`.
fn expm_traceless(o: &Mat2) -> Mat2 {
    let mu2 = -(o[0][0] * o[1][1] - o[0][1] * o[1][0]);
    let (c, s) = if mu2 > 1e-8 {
        let mu = mu2.sqrt();
        (mu.cosh(), mu.sinh() / mu)
    } else if mu2 < -1e-8 {
        let nu = (-mu2).sqrt();
        (nu.cos(), nu.sin() / nu)
    } else {
        (1.0 + mu2 / 2.0 + mu2 * mu2 / 24.0, 1.0 + mu2 / 6.0 + mu2 * mu2 / 120.0)
    };
    [[c + s * o[0][0], s * o[0][1]], [s * o[1][0], c + s * o[1][1]]]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monodromy {
    pub matrix: Mat2,
    pub trace: f64,
    /// Wronskian of the fundamental system after one period.
    pub det: f64,
    pub steps: usize,
}

/// One period with `steps` sixth-order Magnus steps (three Gauss nodes).
fn propagate(pot: &HillPotential, lambda: f64, steps: usize) -> Mat2 {
    let q = pot.nodes(steps);
    let h = 2.0 * PI / steps as f64;
    let r15 = 15f64.sqrt();
    let mut y: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
    for i in 0..steps {
        let a = |v: f64| -> Mat2 { [[0.0, 1.0], [-(v + lambda), 0.0]] };
        let (a1, a2, a3) = (a(q[3 * i]), a(q[3 * i + 1]), a(q[3 * i + 2]));
        let b1 = lin(&[(h, &a2)]);
        let b2 = lin(&[(h * r15 / 3.0, &a3), (-h * r15 / 3.0, &a1)]);
        let b3 = lin(&[(h * 10.0 / 3.0, &a3), (-h * 20.0 / 3.0, &a2), (h * 10.0 / 3.0, &a1)]);
        let c1 = comm(&b1, &b2);
        let c2 = lin(&[(-1.0 / 60.0, &comm(&b1, &lin(&[(2.0, &b3), (1.0, &c1)])))]);
        let left = lin(&[(-20.0, &b1), (-1.0, &b3), (1.0, &c1)]);
        let right = lin(&[(1.0, &b2), (1.0, &c2)]);
        let omega = lin(&[(1.0, &b1), (1.0 / 12.0, &b3), (1.0 / 240.0, &comm(&left, &right))]);
        y = mul(&expm_traceless(&omega), &y);
    }
    y
}

/// Monodromy matrix over `[0, 2pi]`, refined by step doubling until the trace
/// changes by at most `TRACE_TOL` times the largest of 1 and the matrix entries.
/// Near narrow bands the entries are large while the trace is O(1), so the
/// trace cannot be resolved better than that.
pub fn monodromy(pot: &HillPotential, lambda: f64) -> Result<Monodromy> {
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
    }
    let omega = (lambda.abs() + pot.max_abs()).sqrt();
    let mut steps = ((4.0 * omega * 2.0 * PI).ceil() as usize).max(MIN_STEPS).next_power_of_two();
    let mut prev = propagate(pot, lambda, steps);
    while steps < MAX_STEPS {
        steps *= 2;
        let next = propagate(pot, lambda, steps);
        let (t0, t1) = (prev[0][0] + prev[1][1], next[0][0] + next[1][1]);
        if !t1.is_finite() {
            return Err(Error::StepperFailure(format!("non-finite trace at lambda = {lambda}")));
        }
        let size = next.iter().flatten().fold(1.0_f64, |a, v| a.max(v.abs()));
        if (t1 - t0).abs() <= TRACE_TOL * size {
            return Ok(Monodromy {
                matrix: next,
                trace: t1,
                det: next[0][0] * next[1][1] - next[0][1] * next[1][0],
                steps,
            });
        }
        prev = next;
    }
    Err(Error::StepperFailure(format!(
        "trace did not converge at lambda = {lambda} with {MAX_STEPS} steps"
    )))
}

/// Floquet discriminant `Delta(lambda)` of `y'' + (q + lambda) y = 0` with `q = potential`.
pub fn floquet_trace(potential: &GridField, lambda: f64) -> Result<f64> {
    Ok(monodromy(&HillPotential::new(potential, 1.0)?, lambda)?.trace)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetInterval {
    /// `None` for the unbounded interval `(-inf, lambda0)`.
    pub lo: Option<f64>,
    pub hi: f64,
    pub kind: Stability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetResult {
    pub lambda_grid: Vec<f64>,
    pub traces: Vec<f64>,
    pub intervals: Vec<FloquetInterval>,
    pub lambda0: f64,
    /// Largest Wronskian defect `|det - 1|` seen during the scan.
    pub wronskian_defect: f64,
}

impl FloquetResult {
    /// Number of instability intervals, the unbounded one included.
    pub fn unstable_count(&self) -> usize {
        self.intervals.iter().filter(|i| i.kind == Stability::Unstable).count()
    }

    /// Bounded instability intervals `(lo, hi)`.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.intervals
            .iter()
            .filter_map(|i| match (i.kind, i.lo) {
                (Stability::Unstable, Some(lo)) => Some((lo, i.hi)),
                _ => None,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,trace\n");
        for (l, t) in self.lambda_grid.iter().zip(&self.traces) {
            s.push_str(&format!("{l:.12e},{t:.12e}\n"));
        }
        s
    }
}

fn excess(pot: &HillPotential, lambda: f64) -> Result<f64> {
    Ok(monodromy(pot, lambda)?.trace.abs() - 2.0)
}

/// Bisects the sign change of `|Delta| - 2` inside `[lo, hi]`.
fn bisect_edge(pot: &HillPotential, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let lo_unstable = excess(pot, lo)? > 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (excess(pot, mid)? > 0.0) == lo_unstable {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisects on the sign of the trace until it lands inside the band `|Delta| <= 2`.
fn hidden_band_point(pot: &HillPotential, mut lo: f64, mut hi: f64, trace_lo: f64) -> Result<(f64, Monodromy)> {
    loop {
        let mid = 0.5 * (lo + hi);
        let m = monodromy(pot, mid)?;
        if m.trace.abs() <= 2.0 {
            return Ok((mid, m));
        }
        if hi - lo < f64::EPSILON * mid.abs().max(1.0) {
            return Err(Error::NoSolution(format!("stable band near lambda = {mid} not resolved")));
        }
        if m.trace.signum() == trace_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Scans `lambda_range` for instability intervals of `y'' + (beta phi + lambda) y = 0`.
pub fn instability_intervals(
    potential: &GridField,
    beta: f64,
    lambda_range: (f64, f64),
    scan_points: usize,
    tol: f64,
) -> Result<FloquetResult> {
    instability_intervals_hill(&HillPotential::new(potential, beta)?, lambda_range, scan_points, tol, GAP_TOL)
}

/// Scan-and-bisect over a prepared potential. Bounded unstable runs with peak
/// `|Delta| - 2 < gap_tol` are merged into the surrounding stable band.
pub fn instability_intervals_hill(
    pot: &HillPotential,
    lambda_range: (f64, f64),
    scan_points: usize,
    tol: f64,
    gap_tol: f64,
) -> Result<FloquetResult> {
    let (lo, hi) = lambda_range;
    if !(lo < hi) || scan_points < 2 || !(tol > 0.0) {
        return Err(Error::InvalidParameter(
            "need lambda_lo < lambda_hi, scan_points >= 2 and tol > 0".into(),
        ));
    }
    let coarse: Vec<f64> = (0..scan_points)
        .map(|i| lo + (hi - lo) * i as f64 / (scan_points - 1) as f64)
        .collect();
    let mono = coarse
        .par_iter()
        .map(|&l| monodromy(pot, l))
        .collect::<Result<Vec<_>>>()?;
    let mut wronskian_defect = mono.iter().map(|m| (m.det - 1.0).abs()).fold(0.0, f64::max);
    // A stable band narrower than the scan step shows up as a sign flip of the
    // trace between two unstable samples; locate a point inside it.
    let mut grid = Vec::with_capacity(scan_points);
    let mut traces = Vec::with_capacity(scan_points);
    for i in 0..scan_points {
        if i > 0 {
            let (ta, tb) = (mono[i - 1].trace, mono[i].trace);
            if ta.abs() > 2.0 && tb.abs() > 2.0 && ta.signum() != tb.signum() {
                let (l, m) = hidden_band_point(pot, coarse[i - 1], coarse[i], ta)?;
                wronskian_defect = wronskian_defect.max((m.det - 1.0).abs());
                grid.push(l);
                traces.push(m.trace);
            }
        }
        grid.push(coarse[i]);
        traces.push(mono[i].trace);
    }
    let g: Vec<f64> = traces.iter().map(|t| t.abs() - 2.0).collect();
    if g[0] <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "range too narrow: lambda = {lo} is not inside the unbounded instability interval"
        )));
    }

    // Runs of constant sign on the grid: (first index, last index, unstable).
    let mut runs: Vec<(usize, usize, bool)> = Vec::new();
    for (i, v) in g.iter().enumerate() {
        let u = *v > 0.0;
        match runs.last_mut() {
            Some(r) if r.2 == u => r.1 = i,
            _ => runs.push((i, i, u)),
        }
    }
    // Drop closed gaps: bounded unstable runs with negligible peak.
    let mut merged: Vec<(usize, usize, bool)> = Vec::new();
    for (idx, run) in runs.iter().enumerate() {
        let bounded = idx > 0 && idx + 1 < runs.len();
        let peak = g[run.0..=run.1].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let closed = run.2 && bounded && peak < gap_tol;
        let kind = run.2 && !closed;
        match merged.last_mut() {
            Some(r) if r.2 == kind => r.1 = run.1,
            _ => merged.push((run.0, run.1, kind)),
        }
    }

    let edges = merged
        .windows(2)
        .map(|w| bisect_edge(pot, grid[w[0].1], grid[w[1].0], tol))
        .collect::<Result<Vec<f64>>>()?;
    let intervals: Vec<FloquetInterval> = merged
        .iter()
        .enumerate()
        .map(|(i, r)| FloquetInterval {
            lo: if i == 0 { None } else { Some(edges[i - 1]) },
            hi: if i + 1 < merged.len() { edges[i] } else { hi },
            kind: if r.2 { Stability::Unstable } else { Stability::Stable },
        })
        .collect();
    if intervals.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "range too narrow: no stable band found below lambda = {hi}"
        )));
    }
    let lambda0 = intervals[0].hi;
    Ok(FloquetResult {
        lambda_grid: grid,
        traces,
        intervals,
        lambda0,
        wronskian_defect,
    })
}

/// Zeroth band edge by bracket expansion and bisection of `|Delta| = 2`.
pub fn lambda0(pot: &HillPotential, tol: f64) -> Result<f64> {
    let mut lo = -pot.max_abs() - 1.0;
    while excess(pot, lo)? <= 0.0 {
        lo = 2.0 * lo - 1.0;
        if lo < -1e12 {
            return Err(Error::NoSolution("no lower instability bracket".into()));
        }
    }
    // The periodic ground state lies below mean(-q) <= max|q|.
    let mut hi = pot.max_abs() + 0.25;
    let steps = 400;
    let mut prev = lo;
    let mut prev_trace = monodromy(pot, lo)?.trace;
    for i in 1..=steps {
        let l = lo + (hi - lo) * i as f64 / steps as f64;
        let t = monodromy(pot, l)?.trace;
        if t.abs() <= 2.0 {
            hi = l;
            return bisect_edge(pot, prev, hi, tol);
        }
        if t.signum() != prev_trace.signum() {
            let (inside, _) = hidden_band_point(pot, prev, l, prev_trace)?;
            return bisect_edge(pot, prev, inside, tol);
        }
        prev = l;
        prev_trace = t;
    }
    Err(Error::NoSolution("zeroth band edge not bracketed".into()))
}

/// Standard Lame potential `-l(l+1) k^2 s^2 sn^2(s x | k)` with `s = K(k)/pi`,
/// so that `y'' + (q + lambda) y = 0` is Lame's equation in `z = s x` with
/// eigenvalue `lambda / s^2` and period `2K` in `z`.
pub fn lame_potential(ell: f64, k: f64, n: usize) -> Result<(GridField, f64)> {
    let s = complete_k(k)? / PI;
    let c = -ell * (ell + 1.0) * k * k * s * s;
    let values = (0..n)
        .map(|i| jacobi_sn(s * 2.0 * PI * i as f64 / n as f64, k).map(|v| c * v * v))
        .collect::<Result<Vec<f64>>>()?;
    Ok((GridField::new(values)?, s))
}

/// Known Lame band edges (in units of `s^2`) for `l = 1, 2`, sorted.
pub fn lame_band_edges(ell: u32, k: f64) -> Option<Vec<f64>> {
    let k2 = k * k;
    let mut e = match ell {
        1 => vec![k2, 1.0, 1.0 + k2],
        2 => {
            let r = (1.0 - k2 + k2 * k2).sqrt();
            vec![2.0 + 2.0 * k2 - 2.0 * r, 1.0 + k2, 1.0 + 4.0 * k2, 4.0 + k2, 2.0 + 2.0 * k2 + 2.0 * r]
        }
        _ => return None,
    };
    e.sort_by(f64::total_cmp);
    Some(e)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamelCheck {
    pub min_eig: f64,
    pub is_local_min: bool,
    pub basis_size: usize,
}

/// Minimum eigenvalue of `int (psi'^2 - (lambda + beta phi) psi^2) dx/2pi` on
/// the orthonormal basis `{1, sqrt2 cos jx, sqrt2 sin jx}`, `j <= (basis_size-1)/2`.
pub fn hamel_min_check(phi: &FourierField, beta: f64, lambda: f64, basis_size: usize) -> Result<HamelCheck> {
    if basis_size < 3 {
        return Err(Error::InvalidParameter(format!("basis_size {basis_size} < 3")));
    }
    let j_max = (basis_size - 1) / 2;
    let d = 2 * j_max + 1;
    let n = (2 * (phi.truncation() + 2 * j_max) + 2).next_power_of_two();
    let w: Vec<f64> = phi
        .to_grid(n)?
        .values()
        .iter()
        .map(|p| lambda + beta * p)
        .collect();
    let r2 = 2f64.sqrt();
    // Basis values on the grid, index 0 constant, 1..=J cosines, J+1..=2J sines.
    let basis: Vec<Vec<f64>> = (0..d)
        .map(|b| {
            (0..n)
                .map(|i| {
                    let x = 2.0 * PI * i as f64 / n as f64;
                    match b {
                        0 => 1.0,
                        b if b <= j_max => r2 * (b as f64 * x).cos(),
                        b => r2 * ((b - j_max) as f64 * x).sin(),
                    }
                })
                .collect()
        })
        .collect();
    let weighted: Vec<Vec<f64>> = basis
        .iter()
        .map(|e| e.iter().zip(&w).map(|(a, b)| a * b).collect())
        .collect();
    let rows: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| {
            (0..d)
                .map(|l| {
                    let pot: f64 = weighted[i].iter().zip(&basis[l]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                    let kin = if i == l {
                        let j = if i <= j_max { i } else { i - j_max };
                        (j * j) as f64
                    } else {
                        0.0
                    };
                    kin - pot
                })
                .collect()
        })
        .collect();
    let mut mat = DMatrix::from_fn(d, d, |i, l| rows[i][l]);
    mat = (&mat + mat.transpose()) * 0.5;
    let min_eig = SymmetricEigen::new(mat).eigenvalues.min();
    Ok(HamelCheck {
        min_eig,
        is_local_min: min_eig > LOCAL_MIN_TOL,
        basis_size: d,
    })
}
