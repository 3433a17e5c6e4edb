//! `ipsdual`: batch runs of the duality verification engine.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 usage error,
//! 3 malformed configuration, 4 inadmissible parameters, 5 I/O error.

mod commands;
mod config;
mod output;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("inadmissible: {0}")]
    Inadmissible(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Inadmissible(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ipsdual", version, about = "Duality functions for interacting particle systems")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// TOML file with the run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default, Clone)]
pub struct SystemArgs {
    /// irw | sip | sep | bep | sigma-beta
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct KernelArgs {
    /// path | cycle
    #[arg(long)]
    pub geometry: Option<String>,
    #[arg(long)]
    pub sites: Option<usize>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct FamilyArgs {
    /// classical | orthogonal | cheap | trivial
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long = "a", allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long = "b", allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-site duality tables, marginals and θ(λ).
    Tables {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long)]
        nmax: Option<usize>,
        /// Comma-separated continuum points for the mixed column.
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        /// Comma-separated v points for the continuum column (polynomial bodies only).
        #[arg(long, allow_hyphen_values = true)]
        v: Option<String>,
        /// Comma-separated λ grid for marginals and θ(λ).
        #[arg(long = "lambdas", allow_hyphen_values = true)]
        lambdas: Option<String>,
        /// Truncation order of the continuum column.
        #[arg(long)]
        order: Option<u32>,
    },
    /// Exact duality residuals over all small configurations.
    VerifyDuality {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        family: FamilyArgs,
        /// discrete | mixed
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        max_dual_total: Option<usize>,
        #[arg(long)]
        max_entry: Option<usize>,
    },
    /// Intertwining of lattice and diffusion generators through G and H.
    VerifyIntertwining {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        max_total: Option<usize>,
    },
    /// Self-duality of the diffusion generator, as a truncated series.
    VerifyContinuum {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
        #[arg(long)]
        order: Option<u32>,
        /// standard | regularized
        #[arg(long = "continuum-family")]
        continuum_family: Option<String>,
    },
    /// Integrals of duality functions against the stationary marginals.
    StationaryCheck {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        max_total: Option<usize>,
    },
    /// Dimension of the space of self-duality functions for given rates.
    Characterize {
        #[command(flatten)]
        system: SystemArgs,
        /// discrete | continuum-full | continuum-diagonal
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        v: Option<String>,
        #[arg(long)]
        cap: Option<usize>,
        /// Table length M (entries 0..=M) when rates come from --system.
        #[arg(long)]
        size: Option<usize>,
        /// Polynomial degree in the continuum modes.
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Sample paths and the Monte Carlo duality check.
    Simulate {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        t: Option<f64>,
        /// Initial occupations, comma separated.
        #[arg(long)]
        eta: Option<String>,
        /// Dual configuration; enables the duality check.
        #[arg(long)]
        xi: Option<String>,
        /// Initial energies for BEP, comma separated.
        #[arg(long)]
        z: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        record_every: Option<f64>,
        #[arg(long)]
        z_threshold: Option<f64>,
    },
    /// Convergence of the rescaled exclusion generator to its diffusion limit.
    ScalingCheck {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<String>,
        /// Monomial exponents of the test function, comma separated.
        #[arg(long)]
        exponents: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[arg(long)]
        ns: Option<String>,
    },
}

/// Global settings after merging flags over the config file.
pub struct Globals {
    pub out: PathBuf,
    pub seed: u64,
    pub config: Config,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(n) = cli.threads.or(config.threads) {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let globals = Globals {
        out: cli.out.clone().or(config.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
        seed: cli.seed.or(config.seed).unwrap_or(0),
        config,
    };
    commands::dispatch(&cli.command, &globals)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("ipsdual: {e}");
            ExitCode::from(e.code())
        }
    }
}
