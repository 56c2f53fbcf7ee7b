#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "prespa", version, about = "Autonomous parity-recovery simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML run configuration; the bundled default when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Relative solver tolerance (absolute tolerance is 1% of it).
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Conversion curves or logical-state evolution.
    Simulate(#[command(flatten)] Common),
    /// Effective-rate landscape over the two Rabi rates.
    Sweep(#[command(flatten)] Common),
    /// Logical lifetime fit.
    Lifetime(#[command(flatten)] Common),
    /// Passive and active error budgets.
    Budget(#[command(flatten)] Common),
    /// Wigner function of a cardinal state.
    Wigner(#[command(flatten)] Common),
    /// Drive comb frequencies, amplitudes and collisions.
    Plan(#[command(flatten)] Common),
    /// Heating-rate fit to transmon population data.
    HeatingFit {
        /// CSV with `pump_time_us,g,e,f` (or raw `d1..d4` when a calibration is configured).
        data: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<prespa_core::Error>() {
            return match e {
                e if e.is_numerical() => EXIT_NUMERICAL,
                prespa_core::Error::Io(_) => EXIT_FAILURE,
                _ => EXIT_CONFIG,
            };
        }
    }
    EXIT_FAILURE
}

fn prepare(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(tol) = common.tol {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(ConfigError::Parse(format!("--tol must be a positive number, got {tol}")).into());
        }
        cfg.solver.rtol = tol;
        cfg.solver.atol = tol * 1e-2;
    }
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(ConfigError::Parse("--jobs must be >= 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (common, name) = match &cli.command {
        Command::Simulate(c) => (c, "simulate"),
        Command::Sweep(c) => (c, "sweep"),
        Command::Lifetime(c) => (c, "lifetime"),
        Command::Budget(c) => (c, "budget"),
        Command::Wigner(c) => (c, "wigner"),
        Command::Plan(c) => (c, "plan"),
        Command::HeatingFit { common, .. } => (common, "heating-fit"),
    };
    let mut cfg = prepare(common)?;
    if let Command::HeatingFit { data: Some(path), .. } = &cli.command {
        cfg.heating.data = Some(path.clone());
    }
    match &cli.command {
        Command::Simulate(_) => cfg.validate_simulate(),
        Command::Sweep(_) => cfg.validate_sweep(),
        Command::Lifetime(_) => cfg.validate_lifetime(),
        Command::Budget(_) => cfg.validate_budget(),
        Command::Wigner(_) => cfg.validate_wigner(),
        Command::Plan(_) => cfg.validate_plan(),
        Command::HeatingFit { .. } => cfg.validate_heating(),
    }?;
    let out = commands::Output::new(&common.out, name, &cfg)?;
    match cli.command {
        Command::Simulate(_) => commands::simulate(&cfg, &out),
        Command::Sweep(_) => commands::sweep(&cfg, &out),
        Command::Lifetime(_) => commands::lifetime(&cfg, &out),
        Command::Budget(_) => commands::budget(&cfg, &out),
        Command::Wigner(_) => commands::wigner(&cfg, &out),
        Command::Plan(_) => commands::plan(&cfg, &out),
        Command::HeatingFit { .. } => commands::heating_fit(&cfg, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
