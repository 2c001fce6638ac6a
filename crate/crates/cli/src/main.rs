mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, Outcome};
use config::Resolver;
use error::{CliError, CliResult};
use output::OutputDir;

const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "gibbs-kdv", version, about = "Gibbs measures, log-Sobolev certificates and cnoidal waves for periodic KdV, mKdV and NLS")]
struct Cli {
    /// Output directory; receives the result files and run.json.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// JSON object of parameters; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (falls back to GIBBS_KDV_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw samples from the Gibbs measure.
    Sample(commands::SampleArgs),
    /// Log-Sobolev certificate by uniform convexity or bounded perturbation.
    Certify(commands::CertifyArgs),
    /// Empirical log-MGF of a Lipschitz observable against the Herbst bound.
    Concentration(commands::ConcentrationArgs),
    /// Periodic stationary point built from elliptic functions.
    Cnoidal(commands::CnoidalArgs),
    /// Instability intervals of the Hill equation of a cnoidal wave or Lame potential.
    Floquet(commands::FloquetArgs),
    /// Integrate KdV, mKdV or NLS and report conservation.
    Evolve(commands::EvolveArgs),
    /// Compare observable laws before and after the flow.
    Invariance(commands::InvarianceArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Certify(_) => "certify",
            Command::Concentration(_) => "concentration",
            Command::Cnoidal(_) => "cnoidal",
            Command::Floquet(_) => "floquet",
            Command::Evolve(_) => "evolve",
            Command::Invariance(_) => "invariance",
        }
    }
}

fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    match flag {
        Some(0) => Err(CliError::Argument("--threads must be >= 1".into())),
        Some(n) => Ok(Some(n)),
        None => match std::env::var("GIBBS_KDV_THREADS") {
            Ok(s) => s
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .map(Some)
                .ok_or_else(|| CliError::Argument(format!("GIBBS_KDV_THREADS = {s:?} is not a positive integer"))),
            Err(_) => Ok(None),
        },
    }
}

fn run(cli: Cli) -> CliResult<bool> {
    if let Some(n) = thread_count(cli.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Argument(e.to_string()))?;
    }
    let mut cfg = Resolver::new(cli.config.as_deref())?;
    let mut out = OutputDir::create(&cli.out)?;
    let name = cli.command.name();
    let mut ctx = Ctx {
        cfg: &mut cfg,
        out: &mut out,
        svg: cli.svg,
    };
    let Outcome { passed, seed, mut summary } = match cli.command {
        Command::Sample(a) => commands::sample(&mut ctx, a)?,
        Command::Certify(a) => commands::certify(&mut ctx, a)?,
        Command::Concentration(a) => commands::concentration(&mut ctx, a)?,
        Command::Cnoidal(a) => commands::cnoidal(&mut ctx, a)?,
        Command::Floquet(a) => commands::floquet(&mut ctx, a)?,
        Command::Evolve(a) => commands::evolve_cmd(&mut ctx, a)?,
        Command::Invariance(a) => commands::invariance(&mut ctx, a)?,
    };
    summary["passed"] = passed.into();
    out.finish(name, cfg.resolved(), seed, cfg.source.as_deref(), summary)?;
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed; see run.json");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
