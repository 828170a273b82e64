use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracvol_harness::config::PayoffKind;
use fracvol_harness::{emit, run, summary, Experiment, ExperimentConfig, Format, HarnessError};

#[derive(Parser)]
#[command(name = "fracvol", version, about = "Option pricing under fractional stochastic volatility")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo paths per cell.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Time steps per path.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Also build correctors with the triangular heat-step integral, for comparison.
    #[arg(long, global = true)]
    literal_step2: bool,
    /// Use |v| in the log-price update.
    #[arg(long, global = true)]
    reflect_vol: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Prices the first table grid (BS, OU, fOU H = 0.7, 0.9 across α).
    Table2,
    /// Prices the horizon grid at γ = 1.
    Table3,
    /// Prices the fOU I–III grid across α.
    Table5,
    /// Monte Carlo vs. approximation gap as γ decreases.
    GammaSweep,
    /// Checks fBm/fOU identities and sample covariances.
    Validate,
    /// Prices one option by Monte Carlo and by the approximation.
    Price {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        strike: Option<f64>,
        #[arg(long, value_enum)]
        payoff: Option<Payoff>,
        #[arg(long)]
        gamma: Option<f64>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Payoff {
    Call,
    Put,
}

fn configure(cli: Cli) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = match cli.command {
        Command::Table2 => Experiment::Table2,
        Command::Table3 => Experiment::Table3,
        Command::Table5 => Experiment::Table5,
        Command::GammaSweep => Experiment::GammaSweep,
        Command::Validate => Experiment::ValidateProcesses,
        Command::Price { preset, strike, payoff, gamma } => {
            if let Some(p) = preset {
                cfg.price.preset = p;
            }
            if let Some(k) = strike {
                cfg.price.strike = k;
            }
            if let Some(p) = payoff {
                cfg.price.payoff = match p {
                    Payoff::Call => PayoffKind::Call,
                    Payoff::Put => PayoffKind::Put,
                };
            }
            if gamma.is_some() {
                cfg.overrides.gamma = gamma;
            }
            Experiment::PriceSingle
        }
    };
    if let Some(s) = cli.seed {
        cfg.mc.seed = s;
    }
    if let Some(n) = cli.paths {
        cfg.mc.n_paths = n;
    }
    if let Some(n) = cli.steps {
        cfg.mc.n_steps = n;
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    if cli.out.is_some() {
        cfg.output_path = cli.out;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    cfg.approx.literal_step2 |= cli.literal_step2;
    cfg.mc.reflect_vol |= cli.reflect_vol;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure(cli).and_then(|cfg| {
        let report = run(&cfg)?;
        emit(&report, &cfg)?;
        eprint!("{}", summary(&report));
        Ok(report.exit_code())
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
