//! Operator surface: reproducible pipelines from the raw credit file to
//! training traces, baselines and analysis tables.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
//! failure.

mod commands;
mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<varqfs_core::data::DataError> for CliError {
    fn from(e: varqfs_core::data::DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

macro_rules! numeric_error {
    ($($ty:path),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Numeric(e.to_string())
            }
        }
    )*};
}
numeric_error!(
    varqfs_core::optimizer::OptimizerError,
    varqfs_core::objective::ObjectiveError,
    varqfs_core::baselines::BaselineError,
    varqfs_core::analysis::AnalysisError,
    varqfs_core::backend::BackendError,
    varqfs_core::estimator::EstimatorError,
    varqfs_core::circuit::CircuitError,
    varqfs_core::logreg::LogRegError
);

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Shared config/override flags.
#[derive(Debug, Args, Clone)]
pub struct CommonOpts {
    /// Declarative run configuration (TOML).
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    /// Input data file (overrides the config).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Feature view: full | reduced20 | first:<k> | rfecv-top:<k>.
    #[arg(long)]
    feature_mode: Option<String>,
    /// Simulation backend: statevector | mps.
    #[arg(long)]
    backend: Option<String>,
    /// Ansatz depth (overrides the config).
    #[arg(long)]
    depth: Option<usize>,
}

impl CommonOpts {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(data) = &self.data {
            cfg.data = data.clone();
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(mode) = &self.feature_mode {
            config::FeatureMode::parse(mode)?;
            cfg.feature_mode = mode.clone();
        }
        if let Some(backend) = &self.backend {
            cfg.backend = config::BackendKind::parse(backend)?;
        }
        if let Some(depth) = self.depth {
            cfg.depth = depth;
        }
        cfg.feature_mode()?;
        Ok(cfg)
    }
}

#[derive(Debug, Parser)]
#[command(name = "varqfs", about = "Variational quantum feature selection pipelines", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a schema-valid synthetic data file (for environments
    /// without the original credit file).
    Synth {
        #[arg(long, default_value_t = 1000)]
        rows: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output path for the generated file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse + encode the data file and write the encoded CSV and split
    /// artifacts.
    Ingest {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Write only the split manifest (indices, seed, correlation report).
    Split {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Train the sampler with QN-SPSA; one subdirectory per sweep seed.
    Train {
        #[command(flatten)]
        common: CommonOpts,
        /// Sweep size override (number of independent seeds).
        #[arg(long)]
        seeds: Option<usize>,
        /// Iteration count override.
        #[arg(long)]
        iterations: Option<usize>,
        /// Shots-per-estimate override.
        #[arg(long)]
        shots: Option<u64>,
        /// Resume from a state snapshot written by a previous run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Classical comparators on the same feature view.
    Baseline {
        #[command(flatten)]
        common: CommonOpts,
        #[command(subcommand)]
        method: BaselineMethod,
    },
    /// Post-training statistics from a result directory.
    Analyze {
        #[command(flatten)]
        common: CommonOpts,
        #[command(subcommand)]
        what: AnalyzeWhat,
    },
}

#[derive(Debug, Subcommand)]
enum BaselineMethod {
    /// Score every subset (capped) and write the full ranking.
    Exhaustive,
    /// Backward elimination to a target size.
    Rfe {
        /// Features to keep (default: half the view).
        #[arg(long)]
        target_k: Option<usize>,
    },
    /// Backward elimination with cross-validated size selection.
    Rfecv {
        /// log | acc
        #[arg(long, default_value = "log")]
        scoring: String,
        #[arg(long)]
        folds: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum AnalyzeWhat {
    /// Train/test score CDFs of the sampled subsets.
    Cdf {
        /// Training-result directory (seed_<k>).
        #[arg(long)]
        result_dir: PathBuf,
    },
    /// Bootstrap confidence intervals for one subset.
    Ci {
        /// Bitstring of the subset; defaults to the best sampled subset of
        /// --result-dir.
        #[arg(long)]
        subset: Option<String>,
        #[arg(long)]
        result_dir: Option<PathBuf>,
    },
    /// Paired win fractions of the top sampled subsets vs a classical one.
    Compare {
        #[arg(long)]
        result_dir: PathBuf,
        /// Classical subset bitstring (or a baseline JSON with a "subset").
        #[arg(long)]
        subset: Option<String>,
        #[arg(long)]
        baseline_json: Option<PathBuf>,
    },
    /// Least-squares 2-local fit of the objective landscape.
    Qubofit {
        /// Number of leading view features to fit (default from config).
        #[arg(long)]
        n: Option<usize>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { rows, seed, out } => commands::synth(rows, seed, &out),
        Command::Ingest { common } => commands::ingest(&common.resolve()?, true),
        Command::Split { common } => commands::ingest(&common.resolve()?, false),
        Command::Train { common, seeds, iterations, shots, resume } => {
            let mut cfg = common.resolve()?;
            if let Some(seeds) = seeds {
                cfg.optimizer.seeds = seeds;
            }
            if let Some(iterations) = iterations {
                cfg.optimizer.iterations = iterations;
            }
            if let Some(shots) = shots {
                cfg.optimizer.shots = shots;
            }
            match resume {
                Some(snapshot) => commands::train_resume(&cfg, &snapshot),
                None => commands::train(&cfg),
            }
        }
        Command::Baseline { common, method } => {
            let cfg = common.resolve()?;
            match method {
                BaselineMethod::Exhaustive => commands::baseline_exhaustive(&cfg),
                BaselineMethod::Rfe { target_k } => commands::baseline_rfe(&cfg, target_k),
                BaselineMethod::Rfecv { scoring, folds } => {
                    commands::baseline_rfecv(&cfg, &scoring, folds)
                }
            }
        }
        Command::Analyze { common, what } => {
            let cfg = common.resolve()?;
            match what {
                AnalyzeWhat::Cdf { result_dir } => commands::analyze_cdf(&cfg, &result_dir),
                AnalyzeWhat::Ci { subset, result_dir } => {
                    commands::analyze_ci(&cfg, subset.as_deref(), result_dir.as_deref())
                }
                AnalyzeWhat::Compare { result_dir, subset, baseline_json } => {
                    commands::analyze_compare(
                        &cfg,
                        &result_dir,
                        subset.as_deref(),
                        baseline_json.as_deref(),
                    )
                }
                AnalyzeWhat::Qubofit { n } => commands::analyze_qubofit(&cfg, n),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes; everything else is usage
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
