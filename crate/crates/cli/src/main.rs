//! soft-floer command line: index, morse, carnot, degree and signature
//! reports from JSON inputs.
//!
//! Exit codes: 0 success, 1 computational failure, 2 usage or schema error.
//! Errors are written to stderr as one JSON object.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use report::CliError;

#[derive(Parser, Debug)]
#[command(name = "soft-floer", version, about = "Finite-dimensional Floer-type invariants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Input JSON file.
    #[arg(long)]
    pub input: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Main numerical tolerance of the subcommand.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Index of a time-symmetric Hessian family by crossings, by the
    /// eigenvalue-one formula and by Galerkin signatures.
    Index {
        #[command(flatten)]
        common: Common,
        /// Galerkin cutoffs, comma separated.
        #[arg(long, value_delimiter = ',')]
        cutoffs: Option<Vec<usize>>,
        /// Grid for the eigenvalue-one crossing search.
        #[arg(long, default_value_t = 2048)]
        grid: usize,
        /// Length of the mean-Hessian prefix of the path.
        #[arg(long, default_value_t = soft_floer::symplectic::DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = soft_floer::symplectic::DEFAULT_STEPS)]
        steps: usize,
    },
    /// Periodic orbits of a torus Hamiltonian, their indices and the Morse
    /// inequalities.
    Morse {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        cutoffs: Option<Vec<usize>>,
        /// Newton seeds per torus axis.
        #[arg(long, default_value_t = 4)]
        grid: usize,
    },
    /// Limiting Betti measures of a step-two Carnot algebra (dim W = 2).
    Carnot {
        #[command(flatten)]
        common: Common,
        /// Initial number of tau cells.
        #[arg(long, default_value_t = 2048)]
        grid: usize,
        #[arg(long, default_value_t = 3.0)]
        horizon: f64,
        /// Endpoint w in W, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,0")]
        w: Vec<f64>,
        /// Rows of the CSV on [0, horizon].
        #[arg(long, default_value_t = 301)]
        points: usize,
        /// Summary JSON path; next to the CSV with a .json extension by default.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Leray-Schauder degree of a finite-rank perturbation of the identity.
    Degree {
        #[command(flatten)]
        common: Common,
        /// Ambient dimensions, comma separated; the map's own by default.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Newton starts per batch.
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Stabilized relative signature of two truncation families.
    Signature {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        cutoffs: Option<Vec<usize>>,
        #[arg(long, default_value_t = 3)]
        window: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Index {
            common,
            cutoffs,
            grid,
            epsilon,
            steps,
        } => commands::index(&common, cutoffs, grid, epsilon, steps),
        Command::Morse { common, cutoffs, grid } => commands::morse(&common, cutoffs, grid),
        Command::Carnot {
            common,
            grid,
            horizon,
            w,
            points,
            summary,
        } => commands::carnot(&common, grid, horizon, w, points, summary),
        Command::Degree { common, dims, grid } => commands::degree(&common, dims, grid),
        Command::Signature {
            common,
            cutoffs,
            window,
        } => commands::signature(&common, cutoffs, window),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
