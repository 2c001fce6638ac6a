//! Galerkin-truncated spectral integrators for
//!
//! ```text
//! KdV   u_t = -u_xxx - beta u u_x
//! mKdV  u_t = -u_xxx - beta u^2 u_x
//! NLS   u_t = -i u_xx + i beta |u|^2 u        (u = P + iQ)
//! ```
//!
//! by Strang splitting: the linear part is the exact multiplier
//! `exp(i k^3 t)` (KdV, mKdV) or `exp(i k^2 t)` (NLS) on `u = sum c_k e^{ikx}`,
//! the nonlinear part an RK4 substep with products formed on a grid of at
//! least `4M + 2` points and projected back onto `|k| <= M`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cnoidal::{cnoidal_field, CnoidalParams};
use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::gibbs::{sample_gibbs, SampleMethod};
use crate::hamiltonians::{EnsembleParams, Model, NlsField, PhasePoint};
use crate::observables::Observable;
use crate::spectral::{wavenumber, FftPair};
use crate::stats::{ks_critical_value, ks_two_sample};

/// Growth factor of `int u^2` that aborts an integration.
pub const MAX_NORM_GROWTH: f64 = 10.0;
/// Level of the two-sample KS test in [`invariance_experiment`].
pub const KS_LEVEL: f64 = 0.01;
/// Default time step of [`invariance_experiment`].
pub const INVARIANCE_DT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    StrangSplitting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub model: Model,
    pub beta: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub scheme: Scheme,
    /// Record the state every this many steps (0: only the endpoints).
    #[serde(default)]
    pub record_every: usize,
}

impl FlowConfig {
    /// Configuration on the smallest power-of-two grid with `n >= 4M + 2`.
    pub fn new(model: Model, beta: f64, dt: f64, t_final: f64, m: usize) -> Self {
        Self {
            model,
            beta,
            dt,
            t_final,
            m,
            n: crate::spectral::dealiased_grid_size(m),
            scheme: Scheme::StrangSplitting,
            record_every: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter("T must be >= 0 and beta finite".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidParameter("M must be >= 1".into()));
        }
        if self.n < 4 * self.m + 2 {
            return Err(Error::GridTooSmall {
                n: self.n,
                modes: self.m,
                min: 4 * self.m + 2,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    /// Max relative drift of `int u^2`.
    pub l2_drift: f64,
    /// Max relative drift of `N = 1/2 int (P^2 + Q^2)` (NLS only).
    pub number_drift: Option<f64>,
    /// Max relative drift of the Hamiltonian.
    pub energy_drift: f64,
    pub l2_history: Vec<f64>,
    pub energy_history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub report: ConservationReport,
}

impl Trajectory {
    pub fn final_state(&self) -> &PhasePoint {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// CSV rows `t,x,u` (NLS: `t,x,p,q`) on an `n`-point grid.
    pub fn to_csv(&self, n: usize) -> Result<String> {
        let nls = matches!(self.states.first(), Some(PhasePoint::Nls(_)));
        let mut s = String::from(if nls { "t,x,p,q\n" } else { "t,x,u\n" });
        for (t, st) in self.times.iter().zip(&self.states) {
            match st {
                PhasePoint::Real(f) => {
                    let g = f.to_grid(n)?;
                    for (i, v) in g.values().iter().enumerate() {
                        s.push_str(&format!("{t:.8},{:.8},{v:.12e}\n", g.x(i)));
                    }
                }
                PhasePoint::Nls(u) => {
                    let (p, q) = (u.p.to_grid(n)?, u.q.to_grid(n)?);
                    for i in 0..n {
                        s.push_str(&format!(
                            "{t:.8},{:.8},{:.12e},{:.12e}\n",
                            p.x(i),
                            p.values()[i],
                            q.values()[i]
                        ));
                    }
                }
            }
        }
        Ok(s)
    }
}

struct Stepper {
    model: Model,
    beta: f64,
    m: usize,
    n: usize,
    fft: FftPair,
    k: Vec<f64>,
    active: Vec<bool>,
}

impl Stepper {
    fn new(config: &FlowConfig) -> Self {
        let n = config.n;
        let k: Vec<f64> = (0..n).map(|i| wavenumber(i, n) as f64).collect();
        let active = k.iter().map(|v| v.abs() <= config.m as f64).collect();
        Self {
            model: config.model,
            beta: config.beta,
            m: config.m,
            n,
            fft: FftPair::new(n),
            k,
            active,
        }
    }

    fn encode(&self, u: &PhasePoint) -> Vec<Complex64> {
        match u {
            PhasePoint::Real(f) => f.spectrum(self.n),
            PhasePoint::Nls(v) => {
                let (p, q) = (v.p.spectrum(self.n), v.q.spectrum(self.n));
                p.iter().zip(&q).map(|(a, b)| a + Complex64::i() * b).collect()
            }
        }
    }

    fn decode(&self, c: &[Complex64]) -> PhasePoint {
        match self.model {
            Model::Nls => {
                // P and Q spectra from the Hermitian and anti-Hermitian parts.
                let n = self.n;
                let (mut p, mut q) = (vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n]);
                for i in 0..n {
                    let j = (n - i) % n;
                    p[i] = 0.5 * (c[i] + c[j].conj());
                    q[i] = -0.5 * Complex64::i() * (c[i] - c[j].conj());
                }
                PhasePoint::Nls(NlsField {
                    p: FourierField::from_spectrum(&p, self.m),
                    q: FourierField::from_spectrum(&q, self.m),
                })
            }
            _ => PhasePoint::Real(FourierField::from_spectrum(c, self.m)),
        }
    }

    fn omega(&self, k: f64) -> f64 {
        match self.model {
            Model::Nls => k * k,
            _ => k * k * k,
        }
    }

    fn linear(&self, c: &mut [Complex64], h: f64) {
        for (i, z) in c.iter_mut().enumerate() {
            *z *= Complex64::from_polar(1.0, self.omega(self.k[i]) * h);
        }
    }

    fn grid(&self, c: &[Complex64]) -> Vec<Complex64> {
        let mut buf = c.to_vec();
        self.fft.synthesize(&mut buf);
        buf
    }

    fn nonlinear_rhs(&self, c: &[Complex64]) -> Vec<Complex64> {
        let mut u = self.grid(c);
        let b = self.beta;
        match self.model {
            Model::Kdv => u.iter_mut().for_each(|z| *z = Complex64::new(z.re * z.re, 0.0)),
            Model::Mkdv => u.iter_mut().for_each(|z| *z = Complex64::new(z.re.powi(3), 0.0)),
            Model::Nls => u.iter_mut().for_each(|z| *z *= z.norm_sqr()),
        }
        self.fft.analyze(&mut u);
        for (i, z) in u.iter_mut().enumerate() {
            if !self.active[i] {
                *z = Complex64::new(0.0, 0.0);
                continue;
            }
            let ik = Complex64::new(0.0, self.k[i]);
            *z *= match self.model {
                Model::Kdv => -b / 2.0 * ik,
                Model::Mkdv => -b / 3.0 * ik,
                Model::Nls => Complex64::new(0.0, b),
            };
        }
        u
    }

    fn rk4(&self, c: &mut [Complex64], h: f64) {
        let add = |base: &[Complex64], d: &[Complex64], s: f64| -> Vec<Complex64> {
            base.iter().zip(d).map(|(a, b)| a + s * b).collect()
        };
        let k1 = self.nonlinear_rhs(c);
        let k2 = self.nonlinear_rhs(&add(c, &k1, h / 2.0));
        let k3 = self.nonlinear_rhs(&add(c, &k2, h / 2.0));
        let k4 = self.nonlinear_rhs(&add(c, &k3, h));
        for i in 0..c.len() {
            c[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    fn step(&self, c: &mut [Complex64], h: f64) {
        self.linear(c, h / 2.0);
        self.rk4(c, h);
        self.linear(c, h / 2.0);
    }

    fn l2(&self, c: &[Complex64]) -> f64 {
        c.iter().map(|z| z.norm_sqr()).sum()
    }

    fn energy(&self, c: &[Complex64]) -> f64 {
        let kin: f64 = 0.5 * c.iter().zip(&self.k).map(|(z, k)| k * k * z.norm_sqr()).sum::<f64>();
        let u = self.grid(c);
        let n = self.n as f64;
        let b = self.beta;
        match self.model {
            Model::Kdv => kin - b / 6.0 * u.iter().map(|z| z.re.powi(3)).sum::<f64>() / n,
            Model::Mkdv => kin - b / 12.0 * u.iter().map(|z| z.re.powi(4)).sum::<f64>() / n,
            Model::Nls => kin + b / 4.0 * u.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / n,
        }
    }
}

fn relative(x: f64, x0: f64) -> f64 {
    if x == x0 {
        0.0
    } else {
        (x - x0).abs() / x0.abs().max(f64::MIN_POSITIVE)
    }
}

fn integrate(u0: &PhasePoint, config: &FlowConfig, direction: f64) -> Result<Trajectory> {
    config.validate()?;
    let kind_ok = matches!(
        (u0, config.model),
        (PhasePoint::Nls(_), Model::Nls) | (PhasePoint::Real(_), Model::Kdv | Model::Mkdv)
    );
    if !kind_ok {
        return Err(Error::UnsupportedModel(format!(
            "{} does not match the initial data",
            config.model
        )));
    }
    if u0.truncation() != config.m {
        return Err(Error::TruncationMismatch(u0.truncation(), config.m));
    }
    let stepper = Stepper::new(config);
    let mut c = stepper.encode(u0);
    let steps = if config.t_final == 0.0 {
        0
    } else {
        (config.t_final / config.dt - 1e-9).ceil().max(1.0) as usize
    };
    let h = if steps == 0 { 0.0 } else { direction * config.t_final / steps as f64 };

    let (l2_0, e_0) = (stepper.l2(&c), stepper.energy(&c));
    let limit = MAX_NORM_GROWTH * l2_0.max(f64::MIN_POSITIVE);
    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    let mut l2_history = vec![l2_0];
    let mut energy_history = vec![e_0];
    let (mut l2_drift, mut energy_drift) = (0.0_f64, 0.0_f64);
    for s in 1..=steps {
        stepper.step(&mut c, h);
        let (l2, e) = (stepper.l2(&c), stepper.energy(&c));
        if !l2.is_finite() || (l2_0 > 0.0 && l2 > limit) || (l2_0 == 0.0 && l2 > 0.0) {
            return Err(Error::Unstable(format!(
                "int u^2 grew from {l2_0:e} to {l2:e} at t = {:.6}",
                s as f64 * h
            )));
        }
        l2_drift = l2_drift.max(relative(l2, l2_0));
        energy_drift = energy_drift.max(relative(e, e_0));
        let record = s == steps || (config.record_every > 0 && s % config.record_every == 0);
        if record {
            times.push(s as f64 * h);
            states.push(stepper.decode(&c));
            l2_history.push(l2);
            energy_history.push(e);
        }
    }
    Ok(Trajectory {
        times: times.clone(),
        states,
        report: ConservationReport {
            times,
            l2_drift,
            number_drift: (config.model == Model::Nls).then_some(l2_drift),
            energy_drift,
            l2_history,
            energy_history,
        },
    })
}

/// Integrates from `u0` up to `config.t_final`.
pub fn evolve(u0: &PhasePoint, config: &FlowConfig) -> Result<Trajectory> {
    integrate(u0, config, 1.0)
}

/// Integrates backwards in time from `u0` down to `-config.t_final`.
pub fn evolve_backward(u0: &PhasePoint, config: &FlowConfig) -> Result<Trajectory> {
    integrate(u0, config, -1.0)
}

/// `max |u_a - u_b|` over coefficients.
pub fn coefficient_distance(a: &PhasePoint, b: &PhasePoint) -> f64 {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TravelingWaveReport {
    pub speed_expected: f64,
    /// `None` for a constant profile.
    pub speed_measured: Option<f64>,
    /// Shift `s` with `u(x, T) ~ phi(x + s)`, taken in `(-pi/m, pi/m]`.
    pub shift: f64,
    /// `max |u(., T) - phi(. + s)| / max(1, max|phi|)`.
    pub shape_error: f64,
    pub degenerate: bool,
    pub grid_cell: f64,
    pub t_final: f64,
}

/// Correlation `Re sum_k u_k conj(phi_k) e^{-iks}` and its first two derivatives.
fn correlation(u: &[Complex64], phi: &[Complex64], k: &[f64], s: f64) -> (f64, f64, f64) {
    let mut out = (0.0, 0.0, 0.0);
    for i in 0..u.len() {
        let z = u[i] * phi[i].conj() * Complex64::from_polar(1.0, -k[i] * s);
        out.0 += z.re;
        out.1 += (Complex64::new(0.0, -k[i]) * z).re;
        out.2 += (-k[i] * k[i] * z).re;
    }
    out
}

/// Evolves the cnoidal profile under KdV and compares with the translate
/// `phi(x - c t)`, `c = -lambda`.
pub fn traveling_wave_check(params: &CnoidalParams, config: &FlowConfig) -> Result<TravelingWaveReport> {
    if config.model != Model::Kdv || (config.beta - params.beta).abs() > 1e-15 * params.beta.abs().max(1.0) {
        return Err(Error::InvalidParameter(
            "traveling wave check needs a KdV config with the wave's beta".into(),
        ));
    }
    let phi = cnoidal_field(params, config.m)?;
    let grid_cell = 2.0 * PI / config.n as f64;
    let base = TravelingWaveReport {
        speed_expected: -params.lambda,
        speed_measured: None,
        shift: 0.0,
        shape_error: 0.0,
        degenerate: false,
        grid_cell,
        t_final: config.t_final,
    };
    let peak = phi.coords()[1..].iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    if peak < 1e-12 {
        return Ok(TravelingWaveReport {
            degenerate: true,
            ..base
        });
    }
    let traj = evolve(&PhasePoint::Real(phi.clone()), config)?;
    let u = traj.final_state().as_real().expect("KdV state is real").clone();
    let n = config.n;
    let k: Vec<f64> = (0..n).map(|i| wavenumber(i, n) as f64).collect();
    let (us, ps) = (u.spectrum(n), phi.spectrum(n));
    let half = PI / params.m as f64;
    let probes = 8 * n;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for j in 0..probes {
        let s = -half + 2.0 * half * (j as f64 + 0.5) / probes as f64;
        let c = correlation(&us, &ps, &k, s).0;
        if c > best.0 {
            best = (c, s);
        }
    }
    let mut s = best.1;
    for _ in 0..30 {
        let (_, d1, d2) = correlation(&us, &ps, &k, s);
        if d2 >= 0.0 {
            break;
        }
        let ds = -d1 / d2;
        s += ds;
        if ds.abs() < 1e-15 {
            break;
        }
    }
    let aligned = phi.shifted(s);
    let ug = u.to_grid(n)?;
    let ag = aligned.to_grid(n)?;
    let scale = ag.max_abs().max(1.0);
    let shape_error = ug
        .values()
        .iter()
        .zip(ag.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale;
    Ok(TravelingWaveReport {
        speed_measured: (config.t_final > 0.0).then(|| -s / config.t_final),
        shift: s,
        shape_error,
        ..base
    })
}

/// Coupling under which the flow preserves the truncated Gibbs measure: the
/// log density is `-a0^2/2 - 2 H_{beta/2}` for all three models.
pub fn flow_coupling(params: &EnsembleParams) -> f64 {
    params.beta / 2.0
}

/// Observables compared before and after the flow by default.
pub fn default_invariance_observables(params: &EnsembleParams) -> Vec<Observable> {
    vec![
        Observable::L2NormSq,
        Observable::ModeModulus(1),
        Observable::ModeCos(1),
        Observable::Energy(flow_coupling(params)),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub params: EnsembleParams,
    pub flow_coupling: f64,
    pub t_final: f64,
    pub dt: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub observables: Vec<String>,
    pub ks_distance: Vec<f64>,
    pub threshold: f64,
    /// Failure to reject equality of laws for every observable.
    pub passed: bool,
    pub max_l2_drift: f64,
    pub max_energy_drift: f64,
}

/// Samples the Gibbs measure by rejection, evolves each sample to time `T`
/// at [`flow_coupling`], and compares observable laws by two-sample KS.
pub fn invariance_experiment(
    params: &EnsembleParams,
    t_final: f64,
    n_samples: usize,
    observables: &[Observable],
    seed: u64,
) -> Result<InvarianceReport> {
    invariance_experiment_with(params, t_final, n_samples, observables, seed, INVARIANCE_DT)
}

pub fn invariance_experiment_with(
    params: &EnsembleParams,
    t_final: f64,
    n_samples: usize,
    observables: &[Observable],
    seed: u64,
    dt: f64,
) -> Result<InvarianceReport> {
    if n_samples == 0 {
        return Err(Error::EmptyBatch);
    }
    let batch = sample_gibbs(params, n_samples, seed, SampleMethod::Rejection)?;
    let coupling = flow_coupling(params);
    let config = FlowConfig::new(params.model, coupling, dt, t_final, params.truncation);
    let finals: Vec<(PhasePoint, f64, f64)> = batch
        .samples
        .par_iter()
        .map(|u| {
            let tr = evolve(u, &config)?;
            Ok((tr.final_state().clone(), tr.report.l2_drift, tr.report.energy_drift))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ks_distance = Vec::with_capacity(observables.len());
    for obs in observables {
        let before = batch.values(obs)?;
        let after = finals
            .iter()
            .map(|(u, _, _)| obs.evaluate(params.model, u))
            .collect::<Result<Vec<f64>>>()?;
        ks_distance.push(ks_two_sample(&before, &after));
    }
    let threshold = ks_critical_value(n_samples, n_samples, KS_LEVEL);
    Ok(InvarianceReport {
        params: *params,
        flow_coupling: coupling,
        t_final,
        dt,
        n_samples,
        seed,
        observables: observables.iter().map(Observable::name).collect(),
        passed: ks_distance.iter().all(|d| *d < threshold),
        ks_distance,
        threshold,
        max_l2_drift: finals.iter().map(|f| f.1).fold(0.0, f64::max),
        max_energy_drift: finals.iter().map(|f| f.2).fold(0.0, f64::max),
    })
}
