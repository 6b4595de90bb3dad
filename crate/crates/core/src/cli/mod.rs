//! The `irsub` command-line front end.
//!
//! Exit codes: 0 when every assertion passes, 1 when one fails, 2 for usage
//! and configuration errors (including an oracle cap that is too small), 3
//! for runtime failures.

mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::graph::{GraphError, PairingStrategy};
use crate::martingale::{MartingaleError, TraceOrder};
use crate::oracle::{OracleError, DEFAULT_ORACLE_CAP};

pub use commands::{
    execute, run_verify, GenerateConfig, MartingaleConfig, OracleConfig, OracleQuery, QuadratureMode,
    ResolvedCommand, SampleConfig, SampleRecord, VerifyRun,
};
pub use config::{
    ClaimsSection, ConcentrationSection, ExactSection, IntervalSection, MartingaleSection,
    MonteCarloSection, VarianceSection, VerifyConfig,
};
pub use manifest::{manifest_path, write_atomic, GraphRecord, OutputDigest, RunManifest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config error{}: {message}", at_path(.path))]
    Config { path: String, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Analysis(AnalysisError),
    #[error(transparent)]
    Martingale(#[from] MartingaleError),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

fn at_path(path: &str) -> String {
    if path.is_empty() || path == "." {
        String::new()
    } else {
        format!(" at `{path}`")
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Graph(g) => CliError::Graph(g),
            AnalysisError::Oracle(o) => CliError::Oracle(o),
            AnalysisError::Martingale(m) => CliError::Martingale(m),
            other => CliError::Analysis(other),
        }
    }
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::Config { .. }
            | CliError::Graph(_)
            | CliError::Oracle(_)
            | CliError::Analysis(_) => 2,
            CliError::Martingale(_) | CliError::Io { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "irsub", version, about = "Irregular random subgraphs of regular graphs")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "IRSUB_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Complete,
    Circulant,
    CompleteBipartite,
    Hypercube,
    DisjointCliques,
    RandomRegular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    FullRestart,
    Sequential,
}

impl From<StrategyArg> for PairingStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::FullRestart => PairingStrategy::FullRestart,
            StrategyArg::Sequential => PairingStrategy::Sequential,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Random,
    Identity,
}

impl From<OrderArg> for TraceOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Random => TraceOrder::Random,
            OrderArg::Identity => TraceOrder::Identity,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a graph as an edge list.
    Generate {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        /// Circulant offsets, comma separated; `--d` picks `1..=d/2` instead.
        #[arg(long, value_delimiter = ',')]
        offsets: Option<Vec<usize>>,
        /// Side of `K_{a,a}`.
        #[arg(long)]
        a: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        copies: Option<usize>,
        #[arg(long)]
        size: Option<usize>,
        /// Seed for random regular graphs.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample subgraphs and write one JSON line of degree counts per trial.
    Sample {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact probabilities by enumerating order types.
    Oracle {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        query: OracleQuery,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        vertex: Option<usize>,
        #[arg(long)]
        u: Option<usize>,
        #[arg(long)]
        v: Option<usize>,
        /// Tail threshold, as an integer, `p/q`, or a decimal.
        #[arg(long)]
        z: Option<String>,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        cap: usize,
        /// Written to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run exposure-martingale traces and write one JSON line per trace.
    Martingale {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        traces: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "random")]
        order: OrderArg,
        #[arg(long, value_enum, default_value = "none")]
        quadrature: QuadratureMode,
        /// Directory for one CSV per trace.
        #[arg(long)]
        full: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the checks listed in a TOML config and write the report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Where to write instead of the recorded output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses the process arguments, runs the command, and maps the outcome to
/// an exit code.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let outcome = commands::resolve(cli.command).and_then(|cmd| execute(&cmd));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
