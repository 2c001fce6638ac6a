//! Samplers for the truncated Gibbs measures on the ball
//! `B_N = {||phi||^2 <= N}`.
//!
//! The base measure is the truncated Brownian loop: `a0 ~ N(0, 1)` and
//! `a_j, b_j ~ N(0, 1/(2 j^2))`, independently (one copy per component for
//! NLS). The Gibbs density against it is `I_{B_N} exp(s beta W)` with the
//! interaction `W` and sign `s` of [`Model::weight_sign`], so the log density
//! in coefficient space is
//!
//! ```text
//! -a0^2/2 - sum_j j^2 (a_j^2 + b_j^2) + s beta W,    ||phi||^2 <= N.
//! ```

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexity::stream_rng;
use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::hamiltonians::{interaction, EnsembleParams, Model, PhasePoint};
use crate::observables::Observable;
use crate::stats::{integrated_autocorr_time, mean, variance};

/// Draws allowed per accepted sample before rejection sampling gives up.
pub const MAX_ATTEMPTS_PER_SAMPLE: usize = 2_000_000;

/// ESS below which [`chain_diagnostics`] emits a warning.
pub const MIN_ESS: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMethod {
    Rejection,
    Metropolis,
    Importance,
}

impl std::str::FromStr for SampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rejection" => Ok(SampleMethod::Rejection),
            "metropolis" => Ok(SampleMethod::Metropolis),
            "importance" => Ok(SampleMethod::Importance),
            other => Err(Error::InvalidParameter(format!("unknown sampling method {other}"))),
        }
    }
}

/// Random-walk Metropolis settings. Proposals move coordinate `i` by
/// `step_scale * sd_i * Z` with `sd_i` the base standard deviation of that
/// mode (`1` for the constant mode, `1/(sqrt 2 j)` otherwise).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetropolisConfig {
    pub step_scale: f64,
    pub n_chains: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Adapt `step_scale` during burn-in towards this acceptance rate.
    pub target_acceptance: Option<f64>,
}

impl Default for MetropolisConfig {
    fn default() -> Self {
        Self {
            step_scale: 0.5,
            n_chains: 8,
            burn_in: 2000,
            thin: 5,
            target_acceptance: Some(0.3),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub params: EnsembleParams,
    pub samples: Vec<PhasePoint>,
    /// Relative importance weights (largest weight is 1).
    pub weights: Option<Vec<f64>>,
    pub acceptance_rate: f64,
    pub seed: u64,
    pub method: SampleMethod,
    /// Samples are stored chain after chain in equal blocks.
    pub n_chains: usize,
    /// Final proposal scale of each chain (Metropolis only).
    pub step_scales: Option<Vec<f64>>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Observable values in sample order.
    pub fn values(&self, observable: &Observable) -> Result<Vec<f64>> {
        self.samples
            .iter()
            .map(|p| observable.evaluate(self.params.model, p))
            .collect()
    }

    /// Normalized weights (uniform when the batch is unweighted).
    pub fn normalized_weights(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => {
                let s: f64 = w.iter().sum();
                w.iter().map(|v| v / s).collect()
            }
            None => vec![1.0 / self.len() as f64; self.len()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub acceptance_rate: f64,
    pub observables: Vec<String>,
    pub autocorr_time: Vec<f64>,
    pub ess: Vec<f64>,
    /// Standardized difference between early and late chain means.
    pub stationarity_z: Vec<f64>,
    pub warnings: Vec<String>,
}

fn base_sd(m: usize, i: usize) -> f64 {
    let k = FourierField::wavenumber_of(m, i);
    if k == 0 {
        1.0
    } else {
        1.0 / (std::f64::consts::SQRT_2 * k as f64)
    }
}

fn draw_loop_coords(rng: &mut ChaCha8Rng, model: Model, m: usize) -> Vec<f64> {
    let block = 2 * m + 1;
    (0..model.components() * block)
        .map(|i| base_sd(m, i % block) * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// One truncated Brownian loop drawn from stream 0 of `seed`.
pub fn sample_brownian_loop(m: usize, seed: u64) -> Result<FourierField> {
    if m == 0 {
        return Err(Error::InvalidParameter("truncation M must be >= 1".into()));
    }
    let mut rng = stream_rng(seed, 0);
    FourierField::from_coords(draw_loop_coords(&mut rng, Model::Kdv, m))
}

/// `n` independent loops, loop `i` drawn from stream `i` of `seed`.
pub fn sample_brownian_loops(m: usize, n: usize, seed: u64) -> Result<Vec<FourierField>> {
    if m == 0 {
        return Err(Error::InvalidParameter("truncation M must be >= 1".into()));
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            FourierField::from_coords(draw_loop_coords(&mut rng, Model::Kdv, m))
        })
        .collect()
}

/// Upper bound of `s beta W` on `B_N`, from `||phi||_inf <= sqrt((2M+1) N)`.
pub fn log_weight_bound(params: &EnsembleParams) -> f64 {
    let (b, n, m) = (params.beta, params.particle_number, params.truncation as f64);
    match params.model {
        Model::Kdv => b / 6.0 * ((2.0 * m + 1.0) * n).sqrt() * n,
        Model::Mkdv => b / 12.0 * (2.0 * m + 1.0) * n * n,
        Model::Nls => 0.0,
    }
}

/// Log density of the Gibbs measure in flat coordinates, up to a constant;
/// `-inf` outside the ball.
pub fn log_density(params: &EnsembleParams, coords: &[f64]) -> Result<f64> {
    let m = params.truncation;
    let norm: f64 = coords.iter().map(|c| c * c).sum();
    if norm > params.particle_number {
        return Ok(f64::NEG_INFINITY);
    }
    let block = 2 * m + 1;
    let gauss: f64 = coords
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let sd = base_sd(m, i % block);
            0.5 * c * c / (sd * sd)
        })
        .sum();
    Ok(-gauss + log_weight(params, coords)?)
}

fn log_weight(params: &EnsembleParams, coords: &[f64]) -> Result<f64> {
    if params.beta == 0.0 {
        return Ok(0.0);
    }
    let point = PhasePoint::from_coords(params.model, coords.to_vec())?;
    Ok(params.model.weight_sign() * params.beta * interaction(params.model, &point)?)
}

fn draw_in_ball(rng: &mut ChaCha8Rng, params: &EnsembleParams, attempts: &mut usize) -> Result<Vec<f64>> {
    loop {
        *attempts += 1;
        if *attempts > MAX_ATTEMPTS_PER_SAMPLE {
            return Err(Error::InvalidParameter(format!(
                "rejection sampler exceeded {MAX_ATTEMPTS_PER_SAMPLE} draws for one sample"
            )));
        }
        let c = draw_loop_coords(rng, params.model, params.truncation);
        if c.iter().map(|v| v * v).sum::<f64>() <= params.particle_number {
            return Ok(c);
        }
    }
}

fn to_points(model: Model, coords: Vec<Vec<f64>>) -> Result<Vec<PhasePoint>> {
    coords.into_iter().map(|c| PhasePoint::from_coords(model, c)).collect()
}

fn sample_rejection(params: &EnsembleParams, n: usize, seed: u64) -> Result<SampleBatch> {
    let bound = log_weight_bound(params);
    let draws: Vec<Result<(Vec<f64>, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut attempts = 0;
            loop {
                let c = draw_in_ball(&mut rng, params, &mut attempts)?;
                let log_accept = log_weight(params, &c)? - bound;
                let u: f64 = rng.random();
                if u.ln() < log_accept {
                    return Ok((c, attempts));
                }
            }
        })
        .collect();
    let mut coords = Vec::with_capacity(n);
    let mut total = 0usize;
    for d in draws {
        let (c, a) = d?;
        coords.push(c);
        total += a;
    }
    Ok(SampleBatch {
        params: *params,
        samples: to_points(params.model, coords)?,
        weights: None,
        acceptance_rate: n as f64 / total as f64,
        seed,
        method: SampleMethod::Rejection,
        n_chains: 1,
        step_scales: None,
    })
}

fn sample_importance(params: &EnsembleParams, n: usize, seed: u64) -> Result<SampleBatch> {
    let draws: Vec<Result<(Vec<f64>, f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut attempts = 0;
            let c = draw_in_ball(&mut rng, params, &mut attempts)?;
            let lw = log_weight(params, &c)?;
            Ok((c, lw, attempts))
        })
        .collect();
    let mut coords = Vec::with_capacity(n);
    let mut logw = Vec::with_capacity(n);
    let mut total = 0usize;
    for d in draws {
        let (c, lw, a) = d?;
        coords.push(c);
        logw.push(lw);
        total += a;
    }
    let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights = logw.iter().map(|l| (l - top).exp()).collect();
    Ok(SampleBatch {
        params: *params,
        samples: to_points(params.model, coords)?,
        weights: Some(weights),
        acceptance_rate: n as f64 / total as f64,
        seed,
        method: SampleMethod::Importance,
        n_chains: 1,
        step_scales: None,
    })
}

struct ChainOutput {
    coords: Vec<Vec<f64>>,
    accepted: usize,
    proposed: usize,
    step_scale: f64,
}

fn run_chain(
    params: &EnsembleParams,
    config: &MetropolisConfig,
    len: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ChainOutput> {
    let m = params.truncation;
    let block = 2 * m + 1;
    let mut attempts = 0;
    let mut x = draw_in_ball(rng, params, &mut attempts)?;
    let mut logp = log_density(params, &x)?;
    let sds: Vec<f64> = (0..x.len()).map(|i| base_sd(m, i % block)).collect();
    let mut scale = config.step_scale;
    let step = |x: &mut Vec<f64>, logp: &mut f64, scale: f64, rng: &mut ChaCha8Rng| -> Result<bool> {
        let y: Vec<f64> = x
            .iter()
            .zip(&sds)
            .map(|(v, sd)| v + scale * sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let lq = log_density(params, &y)?;
        let u: f64 = rng.random();
        if lq > f64::NEG_INFINITY && u.ln() < lq - *logp {
            *x = y;
            *logp = lq;
            Ok(true)
        } else {
            Ok(false)
        }
    };
    const WINDOW: usize = 50;
    let mut window_acc = 0;
    for it in 1..=config.burn_in {
        if step(&mut x, &mut logp, scale, rng)? {
            window_acc += 1;
        }
        if it % WINDOW == 0 {
            if let Some(target) = config.target_acceptance {
                let rate = window_acc as f64 / WINDOW as f64;
                scale *= (rate - target).exp();
            }
            window_acc = 0;
        }
    }
    let mut out = ChainOutput {
        coords: Vec::with_capacity(len),
        accepted: 0,
        proposed: 0,
        step_scale: scale,
    };
    while out.coords.len() < len {
        for _ in 0..config.thin {
            out.proposed += 1;
            if step(&mut x, &mut logp, scale, rng)? {
                out.accepted += 1;
            }
        }
        out.coords.push(x.clone());
    }
    Ok(out)
}

fn sample_metropolis(
    params: &EnsembleParams,
    n: usize,
    seed: u64,
    config: &MetropolisConfig,
) -> Result<SampleBatch> {
    if !(config.step_scale > 0.0 && config.step_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Metropolis step size must be > 0, got {}",
            config.step_scale
        )));
    }
    if config.n_chains == 0 || config.thin == 0 {
        return Err(Error::InvalidParameter("n_chains and thin must be >= 1".into()));
    }
    let chains = config.n_chains.min(n);
    let len = n.div_ceil(chains);
    let outputs: Vec<Result<ChainOutput>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            run_chain(params, config, len, &mut rng)
        })
        .collect();
    let mut coords = Vec::with_capacity(chains * len);
    let (mut acc, mut prop) = (0, 0);
    let mut scales = Vec::with_capacity(chains);
    for o in outputs {
        let o = o?;
        acc += o.accepted;
        prop += o.proposed;
        scales.push(o.step_scale);
        coords.extend(o.coords);
    }
    Ok(SampleBatch {
        params: *params,
        samples: to_points(params.model, coords)?,
        weights: None,
        acceptance_rate: acc as f64 / prop.max(1) as f64,
        seed,
        method: SampleMethod::Metropolis,
        n_chains: chains,
        step_scales: Some(scales),
    })
}

/// Samples with the default Metropolis settings.
pub fn sample_gibbs(params: &EnsembleParams, n_samples: usize, seed: u64, method: SampleMethod) -> Result<SampleBatch> {
    sample_gibbs_with(params, n_samples, seed, method, &MetropolisConfig::default())
}

/// Samples `n_samples` points. Metropolis batches hold `n_chains` equal blocks,
/// so the count is rounded up to a multiple of the chain count.
pub fn sample_gibbs_with(
    params: &EnsembleParams,
    n_samples: usize,
    seed: u64,
    method: SampleMethod,
    config: &MetropolisConfig,
) -> Result<SampleBatch> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
    }
    match method {
        SampleMethod::Rejection => sample_rejection(params, n_samples, seed),
        SampleMethod::Importance => sample_importance(params, n_samples, seed),
        SampleMethod::Metropolis => sample_metropolis(params, n_samples, seed, config),
    }
}

fn z_early_late(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 20 {
        return 0.0;
    }
    let (a, b) = (&x[..n / 10], &x[n / 2..]);
    let var_a = variance(a) * integrated_autocorr_time(a) / a.len() as f64;
    let var_b = variance(b) * integrated_autocorr_time(b) / b.len() as f64;
    let s = (var_a + var_b).sqrt();
    if s > 0.0 {
        (mean(a) - mean(b)) / s
    } else {
        0.0
    }
}

/// Autocorrelation times, effective sample sizes and an early/late mean
/// comparison per observable. Chains are analysed separately and pooled.
pub fn chain_diagnostics(batch: &SampleBatch, observables: &[Observable]) -> Result<ChainStats> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = batch.len();
    let chains = batch.n_chains.max(1);
    let len = n / chains;
    let mut stats = ChainStats {
        acceptance_rate: batch.acceptance_rate,
        observables: Vec::new(),
        autocorr_time: Vec::new(),
        ess: Vec::new(),
        stationarity_z: Vec::new(),
        warnings: Vec::new(),
    };
    for obs in observables {
        let values = batch.values(obs)?;
        let blocks: Vec<&[f64]> = values.chunks(len.max(1)).take(chains).collect();
        let tau = blocks
            .iter()
            .map(|b| integrated_autocorr_time(b) * b.len() as f64)
            .sum::<f64>()
            / blocks.iter().map(|b| b.len()).sum::<usize>() as f64;
        let ess = (n as f64 / tau).min(n as f64);
        let z = blocks.iter().map(|b| z_early_late(b)).sum::<f64>() / (blocks.len() as f64).sqrt();
        if ess < MIN_ESS {
            stats
                .warnings
                .push(format!("{}: effective sample size {ess:.1} below {MIN_ESS}", obs.name()));
        }
        if z.abs() > 4.0 {
            stats
                .warnings
                .push(format!("{}: early/late means differ (z = {z:.2})", obs.name()));
        }
        stats.observables.push(obs.name());
        stats.autocorr_time.push(tau);
        stats.ess.push(ess);
        stats.stationarity_z.push(z);
    }
    Ok(stats)
}
