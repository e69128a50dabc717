use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use nvism::{Result, Variant};
use nvism_cli::config::SolverConfig;
use nvism_cli::stages::{self, CheckInputs, Context, Outcome};
use nvism_cli::{exit_code, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};

/// Inverse scattering pipeline for the zero-energy Novikov-Veselov equation.
#[derive(Parser, Debug)]
#[command(name = "nvism", version)]
struct Cli {
    /// Solver configuration (`key:value` lines); defaults apply otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "nvism-out")]
    out: PathBuf,
    /// Worker thread cap (0 keeps the default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Evolution time, overriding the config.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Odd hierarchy index of the flow, overriding the config.
    #[arg(long = "hierarchy-n", global = true)]
    hierarchy_n: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the configured bump potential and its conductivity.
    MakePotential,
    /// Compute scattering data of a potential.
    Forward {
        /// Potential (NVF1, z-plane).
        #[arg(long)]
        input: PathBuf,
        /// `plus` or `minus`.
        #[arg(long, default_value = "plus")]
        variant: String,
    },
    /// Evolve scattering data by `--tau`.
    Evolve {
        /// Scattering data (NVF1, k-plane).
        #[arg(long)]
        input: PathBuf,
    },
    /// Reconstruct the potential from scattering data.
    Invert {
        /// Scattering data (NVF1, k-plane).
        #[arg(long)]
        input: PathBuf,
    },
    /// Run symmetry and decay checks on stage outputs.
    Check {
        /// Plus-variant scattering data.
        #[arg(long)]
        scattering: Option<PathBuf>,
        /// Minus-variant scattering data, for the checks pairing the variants.
        #[arg(long = "scattering-minus")]
        scattering_minus: Option<PathBuf>,
        /// Reconstructed potential.
        #[arg(long)]
        potential: Option<PathBuf>,
        /// Comma-separated check names (default: all that apply).
        #[arg(long, value_delimiter = ',')]
        names: Vec<String>,
    },
    /// Invert, recompute the scattering data and compare.
    Roundtrip {
        /// Scattering data (NVF1, k-plane).
        #[arg(long)]
        input: PathBuf,
    },
    /// Residual of the inverse-scattering evolution against the NV equation.
    NvResidual {
        /// Scattering data at time 0.
        #[arg(long)]
        input: PathBuf,
    },
    /// Step the NV equation directly and save frames.
    NvRun {
        /// Initial potential (NVF1, z-plane).
        #[arg(long)]
        input: PathBuf,
    },
}

fn config(cli: &Cli) -> Result<SolverConfig> {
    let mut cfg = match &cli.config {
        Some(path) => SolverConfig::load(path)?,
        None => SolverConfig::default(),
    };
    if let Some(tau) = cli.tau {
        cfg.tau = tau;
    }
    if let Some(n) = cli.hierarchy_n {
        cfg.hierarchy_n = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let ctx = Context::new(config(cli)?, cli.out.clone())?;
    match &cli.command {
        Command::MakePotential => stages::make_potential(&ctx),
        Command::Forward { input, variant } => stages::forward(&ctx, input, Variant::from_tag(variant)?),
        Command::Evolve { input } => stages::evolve_stage(&ctx, input),
        Command::Invert { input } => stages::invert(&ctx, input),
        Command::Check {
            scattering,
            scattering_minus,
            potential,
            names,
        } => stages::check(
            &ctx,
            &CheckInputs {
                scattering: scattering.clone(),
                scattering_minus: scattering_minus.clone(),
                potential: potential.clone(),
                names: names.clone(),
            },
        ),
        Command::Roundtrip { input } => stages::roundtrip(&ctx, input),
        Command::NvResidual { input } => stages::nv_residual(&ctx, input),
        Command::NvRun { input } => stages::nv_run_stage(&ctx, input),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NVISM_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = nvism::par::with_threads(cli.threads, || match run(&cli) {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::CheckFailed) => EXIT_CHECK_FAILED,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            exit_code(&e)
        }
    });
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_USAGE as u8))
}
