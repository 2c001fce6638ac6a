use clap::Args;
use serde_json::{json, Value};

use gibbs_kdv::cnoidal::{
    classify_constant_points, cnoidal_field, cnoidal_profile, first_integral_flatness, root_closure,
    solve_on_sphere, solve_periodic_family, stationarity_residual_grid, CnoidalParams,
};
use gibbs_kdv::concentration::{empirical_mgf, herbst_alpha};
use gibbs_kdv::convexity::{certify_lemma2, certify_model, lsi_constant_theorem1, DEFAULT_DIRECTIONS};
use gibbs_kdv::floquet::{hamel_min_check, instability_intervals, lame_potential, DEFAULT_SCAN_POINTS};
use gibbs_kdv::flow::{
    default_invariance_observables, evolve, invariance_experiment_with, FlowConfig, INVARIANCE_DT,
};
use gibbs_kdv::gibbs::{chain_diagnostics, sample_gibbs_with, MetropolisConfig, SampleMethod};
use gibbs_kdv::observables::{unit_first_mode, Observable};
use gibbs_kdv::{EnsembleParams, FourierField, GridField, Model, PhasePoint};

use crate::config::Resolver;
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;
use crate::svg::{line_plot, Series};

/// What a subcommand reports back to the runner.
pub struct Outcome {
    pub passed: bool,
    pub seed: Option<u64>,
    pub summary: Value,
}

pub struct Ctx<'a> {
    pub cfg: &'a mut Resolver,
    pub out: &'a mut OutputDir,
    pub svg: bool,
}

#[derive(Args, Debug, Default)]
pub struct EnsembleArgs {
    /// kdv, mkdv or nls.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Particle number (ball radius squared).
    #[arg(long = "N")]
    pub n: Option<f64>,
    /// Fourier truncation.
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn ensemble(ctx: &mut Ctx, a: EnsembleArgs, beta: f64, m: usize) -> CliResult<(EnsembleParams, u64)> {
    let model: Model = ctx.cfg.parsed("model", a.model, "kdv")?;
    let beta = ctx.cfg.get("beta", a.beta, beta)?;
    let n = ctx.cfg.get("N", a.n, 1.0)?;
    let m = ctx.cfg.get("M", a.m, m)?;
    let seed = ctx.cfg.get("seed", a.seed, 0u64)?;
    Ok((EnsembleParams::new(model, beta, n, m)?, seed))
}

fn coord_names(model: Model, m: usize) -> Vec<String> {
    let block = |p: &str| {
        let mut v = vec![format!("{p}a0")];
        v.extend((1..=m).map(|k| format!("{p}a{k}")));
        v.extend((1..=m).map(|k| format!("{p}b{k}")));
        v
    };
    match model {
        Model::Nls => [block("p_"), block("q_")].concat(),
        _ => block(""),
    }
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// rejection, metropolis or importance.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub step_scale: Option<f64>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
}

pub fn sample(ctx: &mut Ctx, a: SampleArgs) -> CliResult<Outcome> {
    let (params, seed) = ensemble(ctx, a.ens, 0.005, 16)?;
    let n = ctx.cfg.get("n-samples", a.n_samples, 1000usize)?;
    let method: SampleMethod = ctx.cfg.parsed("method", a.method, "rejection")?;
    let defaults = MetropolisConfig::default();
    let mc = MetropolisConfig {
        step_scale: ctx.cfg.get("step-scale", a.step_scale, defaults.step_scale)?,
        n_chains: ctx.cfg.get("chains", a.chains, defaults.n_chains)?,
        burn_in: ctx.cfg.get("burn-in", a.burn_in, defaults.burn_in)?,
        thin: ctx.cfg.get("thin", a.thin, defaults.thin)?,
        ..defaults
    };
    let batch = sample_gibbs_with(&params, n, seed, method, &mc)?;

    let mut csv = coord_names(params.model, params.truncation).join(",");
    if batch.weights.is_some() {
        csv.push_str(",weight");
    }
    csv.push('\n');
    for (i, s) in batch.samples.iter().enumerate() {
        let mut row: Vec<String> = s.coords().iter().map(|v| format!("{v:.12e}")).collect();
        if let Some(w) = &batch.weights {
            row.push(format!("{:.12e}", w[i]));
        }
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    ctx.out.write("samples.csv", &csv)?;

    let observables = vec![Observable::L2NormSq, Observable::ModeModulus(1), Observable::Energy(params.beta)];
    let w = batch.normalized_weights();
    let means: Vec<f64> = observables
        .iter()
        .map(|o| batch.values(o).map(|v| v.iter().zip(&w).map(|(x, w)| x * w).sum()))
        .collect::<Result<_, _>>()?;
    let diagnostics = match method {
        SampleMethod::Metropolis => Some(chain_diagnostics(&batch, &observables)?),
        _ => None,
    };
    let summary = json!({
        "params": params,
        "method": method,
        "n_samples": batch.len(),
        "acceptance_rate": batch.acceptance_rate,
        "observables": observables.iter().map(Observable::name).collect::<Vec<_>>(),
        "means": means,
        "diagnostics": diagnostics,
    });
    ctx.out.write_json("summary.json", &summary)?;
    Ok(Outcome {
        passed: true,
        seed: Some(seed),
        summary: json!({ "n_samples": batch.len(), "acceptance_rate": batch.acceptance_rate }),
    })
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub directions: Option<usize>,
}

pub fn certify(ctx: &mut Ctx, a: CertifyArgs) -> CliResult<Outcome> {
    let (params, seed) = ensemble(ctx, a.ens, 0.001, 32)?;
    let points = ctx.cfg.get("points", a.points, 100usize)?;
    let dirs = ctx.cfg.get("directions", a.directions, DEFAULT_DIRECTIONS)?;
    let (b, n, m) = (params.beta, params.particle_number, params.truncation);
    let (cert, sampled) = match params.model {
        Model::Kdv => {
            let sampled = certify_lemma2(b, n, m, points, dirs, seed)?;
            if sampled.threshold_ok {
                (sampled, None)
            } else {
                (lsi_constant_theorem1(b, n)?, Some(sampled))
            }
        }
        model => (certify_model(model, b, n, m, points, seed)?, None),
    };
    ctx.out.write_json("certificate.json", &json!({ "certificate": cert, "uniform_convexity_probe": sampled }))?;
    Ok(Outcome {
        passed: cert.passed,
        seed: Some(seed),
        summary: json!({ "passed": cert.passed, "route": cert.route, "alpha": cert.alpha, "log_alpha": cert.log_alpha }),
    })
}

#[derive(Args, Debug)]
pub struct ConcentrationArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub t_points: Option<usize>,
    /// unit-first-mode, l2-norm, mode-cos:K, mode-sin:K or mode-modulus:K.
    #[arg(long)]
    pub observable: Option<String>,
    #[arg(long)]
    pub method: Option<String>,
}

fn parse_observable(s: &str, model: Model, m: usize) -> CliResult<Observable> {
    let bad = || CliError::Argument(format!("unknown observable {s:?}"));
    let (name, k) = match s.split_once(':') {
        Some((n, k)) => (n, Some(k.parse::<usize>().map_err(|_| bad())?)),
        None => (s, None),
    };
    Ok(match (name, k) {
        ("unit-first-mode", None) => unit_first_mode(model, m),
        ("l2-norm", None) => Observable::L2Norm,
        ("mode-cos", Some(k)) => Observable::ModeCos(k),
        ("mode-sin", Some(k)) => Observable::ModeSin(k),
        ("mode-modulus", Some(k)) => Observable::ModeModulus(k),
        _ => return Err(bad()),
    })
}

pub fn concentration(ctx: &mut Ctx, a: ConcentrationArgs) -> CliResult<Outcome> {
    let (params, seed) = ensemble(ctx, a.ens, 0.005, 16)?;
    let n = ctx.cfg.get("n-samples", a.n_samples, 100_000usize)?;
    let t_max = ctx.cfg.get("t-max", a.t_max, 2.0)?;
    let t_points = ctx.cfg.get("t-points", a.t_points, 21usize)?;
    let obs_name: String = ctx.cfg.get("observable", a.observable, "unit-first-mode".into())?;
    let method: SampleMethod = ctx.cfg.parsed("method", a.method, "rejection")?;
    if t_points < 2 {
        return Err(CliError::Argument("t-points must be >= 2".into()));
    }
    let obs = parse_observable(&obs_name, params.model, params.truncation)?;
    let alpha = herbst_alpha(&params)?;
    let batch = sample_gibbs_with(&params, n, seed, method, &MetropolisConfig::default())?;
    let t: Vec<f64> = (0..t_points)
        .map(|i| -t_max + 2.0 * t_max * i as f64 / (t_points - 1) as f64)
        .collect();
    let report = empirical_mgf(&batch, &obs, &t, alpha, seed)?;
    ctx.out.write("mgf.csv", &report.to_csv())?;
    ctx.out.write_json("mgf.json", &report)?;
    if ctx.svg {
        let upper: Vec<f64> = report.log_mgf.iter().zip(&report.ci_halfwidth).map(|(l, c)| l - c).collect();
        let svg = line_plot(
            &format!("log MGF of {} vs bound (alpha = {alpha:.4})", report.observable),
            "t",
            &[
                Series { label: "log J(t)", x: &t, y: &report.log_mgf },
                Series { label: "log J(t) - CI", x: &t, y: &upper },
                Series { label: "t^2 / (2 alpha)", x: &t, y: &report.bound },
            ],
        );
        ctx.out.write("mgf.svg", &svg)?;
    }
    Ok(Outcome {
        passed: report.pass,
        seed: Some(seed),
        summary: json!({ "passed": report.pass, "alpha": alpha, "observable": report.observable }),
    })
}

#[derive(Args, Debug)]
pub struct CnoidalArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Lagrange multiplier; the periodic family is solved for this value.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Number of waves on the circle.
    #[arg(long)]
    pub m: Option<usize>,
    /// Integration constant; bypasses the periodicity solve.
    #[arg(long = "C", allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Place the solution on the sphere of this particle number instead.
    #[arg(long = "N")]
    pub n: Option<f64>,
    /// Grid size of the written profile.
    #[arg(long)]
    pub grid: Option<usize>,
}

fn cnoidal_params(ctx: &mut Ctx, beta: Option<f64>, lambda: Option<f64>, m: Option<usize>, c: Option<f64>, n: Option<f64>) -> CliResult<CnoidalParams> {
    let beta = ctx.cfg.get("beta", beta, 1.0)?;
    let m = ctx.cfg.get("m", m, 1usize)?;
    if let Some(n) = ctx.cfg.get_opt("N", n)? {
        return Ok(solve_on_sphere(beta, n, m)?);
    }
    let lambda = ctx.cfg.get("lambda", lambda, 3.0)?;
    Ok(match ctx.cfg.get_opt("C", c)? {
        Some(c) => CnoidalParams::new(beta, lambda, c, m, 0.0)?,
        None => solve_periodic_family(beta, lambda, m)?,
    })
}

pub fn cnoidal(ctx: &mut Ctx, a: CnoidalArgs) -> CliResult<Outcome> {
    let p = cnoidal_params(ctx, a.beta, a.lambda, a.m, a.c, a.n)?;
    let grid = ctx.cfg.get("grid", a.grid, 1024usize)?;
    let periodic = p.is_periodic();
    let mut checks = json!({ "root_closure": root_closure(p.beta, p.lambda, p.c, &p.roots), "periodic": periodic });
    if periodic {
        let g = cnoidal_profile(&p, grid)?;
        checks["stationarity_residual"] = json!(stationarity_residual_grid(&g, p.beta, p.lambda));
        checks["first_integral_flatness"] = json!(first_integral_flatness(&g, p.beta, p.lambda));
        checks["norm_sq"] = json!(g.power_mean(2));
        ctx.out.write("profile.csv", &g.to_csv())?;
        if ctx.svg {
            let x: Vec<f64> = (0..g.len()).map(|i| g.x(i)).collect();
            let svg = line_plot(
                &format!("cnoidal profile, beta = {}, lambda = {:.6}, m = {}", p.beta, p.lambda, p.m),
                "x",
                &[Series { label: "phi", x: &x, y: g.values() }],
            );
            ctx.out.write("profile.svg", &svg)?;
        }
    }
    let constants = classify_constant_points(p.beta, checks.get("norm_sq").and_then(Value::as_f64).unwrap_or(1.0)).ok();
    ctx.out.write_json("cnoidal.json", &json!({ "params": p, "checks": checks, "constant_points_same_norm": constants }))?;
    Ok(Outcome {
        passed: true,
        seed: None,
        summary: json!({ "roots": p.roots.as_array(), "k": p.k, "periodic": periodic }),
    })
}

#[derive(Args, Debug)]
pub struct FloquetArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Multiplier of the cnoidal family generating the potential.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Use the standard Lame potential of this index instead of a cnoidal wave.
    #[arg(long)]
    pub lame_ell: Option<f64>,
    /// Modulus of the Lame potential.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub scan: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
}

pub fn floquet(ctx: &mut Ctx, a: FloquetArgs) -> CliResult<Outcome> {
    let grid = ctx.cfg.get("grid", a.grid, 512usize)?;
    let scan = ctx.cfg.get("scan", a.scan, DEFAULT_SCAN_POINTS)?;
    let (g, coupling, cnoidal): (GridField, f64, Option<CnoidalParams>) = match ctx.cfg.get_opt("lame-ell", a.lame_ell)? {
        Some(ell) => {
            let k = ctx.cfg.get("k", a.k, 0.6)?;
            (lame_potential(ell, k, grid)?.0, 1.0, None)
        }
        None => {
            let p = cnoidal_params(ctx, a.beta, a.lambda, a.m, None, None)?;
            (cnoidal_profile(&p, grid)?, p.beta, Some(p))
        }
    };
    let q = coupling.abs() * g.max_abs();
    let lo = ctx.cfg.get("lambda-min", a.lambda_min, -q - 2.0)?;
    let hi = ctx.cfg.get("lambda-max", a.lambda_max, q + 10.0)?;
    let r = instability_intervals(&g, coupling, (lo, hi), scan, 1e-10)?;
    ctx.out.write("trace.csv", &r.to_csv())?;
    let hamel = match &cnoidal {
        Some(p) => Some(hamel_min_check(&cnoidal_field(p, 96)?, p.beta, p.lambda, 129)?),
        None => None,
    };
    ctx.out.write_json(
        "floquet.json",
        &json!({
            "unstable_count": r.unstable_count(),
            "lambda0": r.lambda0,
            "intervals": r.intervals,
            "wronskian_defect": r.wronskian_defect,
            "cnoidal": cnoidal,
            "second_variation_at_own_multiplier": hamel,
        }),
    )?;
    if ctx.svg {
        let clipped: Vec<f64> = r.traces.iter().map(|t| t.clamp(-4.0, 4.0)).collect();
        let two = vec![2.0; r.lambda_grid.len()];
        let minus_two = vec![-2.0; r.lambda_grid.len()];
        let svg = line_plot(
            "Floquet discriminant (clipped to [-4, 4])",
            "lambda",
            &[
                Series { label: "trace", x: &r.lambda_grid, y: &clipped },
                Series { label: "+2", x: &r.lambda_grid, y: &two },
                Series { label: "-2", x: &r.lambda_grid, y: &minus_two },
            ],
        );
        ctx.out.write("trace.svg", &svg)?;
    }
    Ok(Outcome {
        passed: true,
        seed: None,
        summary: json!({ "unstable_count": r.unstable_count(), "lambda0": r.lambda0 }),
    })
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// gibbs (a sample of the ensemble), cnoidal (KdV only) or mode.
    #[arg(long)]
    pub init: Option<String>,
    /// Multiplier of the cnoidal initial datum.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Waves of the cnoidal initial datum.
    #[arg(long)]
    pub waves: Option<usize>,
    /// Amplitude of the first cosine mode for `--init mode`.
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
}

pub fn evolve_cmd(ctx: &mut Ctx, a: EvolveArgs) -> CliResult<Outcome> {
    let (params, seed) = ensemble(ctx, a.ens, 1.0, 32)?;
    let dt = ctx.cfg.get("dt", a.dt, 1e-4)?;
    let t = ctx.cfg.get("T", a.t, 1.0)?;
    let init: String = ctx.cfg.get("init", a.init, "gibbs".into())?;
    let record_every = ctx.cfg.get("record-every", a.record_every, 0usize)?;
    let grid = ctx.cfg.get("grid", a.grid, 256usize)?;
    let m = params.truncation;
    let u0 = match init.as_str() {
        "gibbs" => {
            let sp = EnsembleParams::new(params.model, 0.0, params.particle_number, m)?;
            sample_gibbs_with(&sp, 1, seed, SampleMethod::Rejection, &MetropolisConfig::default())?.samples.remove(0)
        }
        "cnoidal" => {
            if params.model != Model::Kdv {
                return Err(CliError::Argument("cnoidal initial data needs --model kdv".into()));
            }
            let lambda = ctx.cfg.get("lambda", a.lambda, 3.0)?;
            let waves = ctx.cfg.get("waves", a.waves, 1usize)?;
            PhasePoint::Real(cnoidal_field(&solve_periodic_family(params.beta, lambda, waves)?, m)?)
        }
        "mode" => {
            let amp = ctx.cfg.get("amplitude", a.amplitude, 0.5)?;
            let f = FourierField::mode(m, 1, false, amp);
            match params.model {
                Model::Nls => PhasePoint::Nls(gibbs_kdv::NlsField::new(f, FourierField::zeros(m))?),
                _ => PhasePoint::Real(f),
            }
        }
        other => return Err(CliError::Argument(format!("unknown --init {other:?}"))),
    };
    let mut cfg = FlowConfig::new(params.model, params.beta, dt, t, m);
    cfg.record_every = record_every;
    let tr = evolve(&u0, &cfg)?;
    if grid < 2 * m + 2 || !grid.is_power_of_two() {
        return Err(CliError::Argument(format!("--grid must be a power of two >= {}", 2 * m + 2)));
    }
    ctx.out.write("trajectory.csv", &tr.to_csv(grid)?)?;
    ctx.out.write_json("report.json", &json!({ "config": cfg, "init": init, "report": tr.report }))?;
    if ctx.svg {
        let rel = |h: &[f64]| -> Vec<f64> {
            let h0 = h.first().copied().unwrap_or(0.0);
            h.iter().map(|v| (v - h0) / h0.abs().max(f64::MIN_POSITIVE)).collect()
        };
        let (l2, e) = (rel(&tr.report.l2_history), rel(&tr.report.energy_history));
        let svg = line_plot(
            "relative drift of conserved quantities",
            "t",
            &[
                Series { label: "int u^2", x: &tr.report.times, y: &l2 },
                Series { label: "H", x: &tr.report.times, y: &e },
            ],
        );
        ctx.out.write("drift.svg", &svg)?;
    }
    Ok(Outcome {
        passed: true,
        seed: Some(seed),
        summary: json!({ "l2_drift": tr.report.l2_drift, "energy_drift": tr.report.energy_drift }),
    })
}

#[derive(Args, Debug)]
pub struct InvarianceArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long = "T")]
    pub t: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

pub fn invariance(ctx: &mut Ctx, a: InvarianceArgs) -> CliResult<Outcome> {
    let (params, seed) = ensemble(ctx, a.ens, 0.005, 16)?;
    let n = ctx.cfg.get("n-samples", a.n_samples, 2000usize)?;
    let t = ctx.cfg.get("T", a.t, 1.0)?;
    let dt = ctx.cfg.get("dt", a.dt, INVARIANCE_DT)?;
    let obs = default_invariance_observables(&params);
    let r = invariance_experiment_with(&params, t, n, &obs, seed, dt)?;
    ctx.out.write_json("invariance.json", &r)?;
    Ok(Outcome {
        passed: r.passed,
        seed: Some(seed),
        summary: json!({ "passed": r.passed, "ks_distance": r.ks_distance, "threshold": r.threshold }),
    })
}
