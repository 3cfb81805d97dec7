//! Command-line front end.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::holevo::HolevoOptions;
use crate::numerics::{install, Numerics, NUMERICS_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qincompat", version, about = "Incompatibility of multiparameter quantum estimation")]
pub struct Cli {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Relative duality-gap tolerance of the SDP solver.
    #[arg(long, global = true)]
    pub gap_tol: Option<f64>,
    /// Feasibility tolerance of the SDP solver.
    #[arg(long, global = true)]
    pub feas_tol: Option<f64>,
}

impl SolverArgs {
    fn options(&self) -> HolevoOptions {
        let mut opts = HolevoOptions::default();
        if let Some(t) = self.gap_tol {
            opts.sdp.gap_tol = t;
        }
        if let Some(t) = self.feas_tol {
            opts.sdp.feas_tol = t;
        }
        opts
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bounds and incompatibility of a single model.
    Report {
        #[arg(long)]
        model: PathBuf,
        /// Also write the values as a one-row CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Incompatibility over a grid of noise strengths.
    Sweep {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Build a probe with a vanishing commutator matrix and certify it.
    Design(DesignArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DesignKind {
    MaxEntangled,
    Antiparallel,
    BasisProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Encoding {
    /// `1 ⊗ U_θ`.
    Ancilla,
    /// `U_θ ⊗ U_θ`.
    Double,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long, value_enum)]
    pub kind: DesignKind,
    /// JSON file with `generators` and optionally `theta`, `states`, `noise`.
    #[arg(long)]
    pub generators: PathBuf,
    /// Encoding of the maximally entangled design.
    #[arg(long, value_enum, default_value = "ancilla")]
    pub encoding: Encoding,
    /// 1-based eigenvalue pairs used by the anti-parallel design.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub subset: Vec<usize>,
    /// One 0/1 per subset entry; 1 swaps the pair between the two states.
    #[arg(long, value_delimiter = ',')]
    pub signs: Vec<u8>,
    /// Phases of the first state's components.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub phases: Vec<f64>,
    /// Phases of the second state's components.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub phases2: Vec<f64>,
    /// Add the null eigenvector of the commutator to both states.
    #[arg(long)]
    pub zero_mode: bool,
    /// Certify from the commutator matrix alone.
    #[arg(long)]
    pub skip_sdp: bool,
    /// Write the constructed model configuration here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        let code = if matches!(e, crate::Error::Solver(_)) { EXIT_SOLVER } else { EXIT_INPUT };
        CliError { code, message: e.to_string() }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::input(e.0)
    }
}

fn load_numerics() -> Result<(), CliError> {
    let Some(path) = std::env::var_os(NUMERICS_ENV) else { return Ok(()) };
    let n = Numerics::from_file(path.as_ref())?;
    install(n).map_err(|_| CliError::input("numerics already initialized"))
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = load_numerics().and_then(|()| {
        let opts = cli.solver.options();
        match cli.command {
            Command::Report { model, out } => commands::report(&model, out.as_deref(), &opts),
            Command::Sweep { model, from, to, steps, out, workers } => {
                commands::sweep(&model, from, to, steps, out.as_deref(), workers, &opts)
            }
            Command::Design(args) => commands::design(&args, &opts),
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
