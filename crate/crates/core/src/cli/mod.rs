//! The `lids` command-line interface.

mod commands;
mod config;

pub use commands::{InspectReport, PreparedSummary};
pub use config::{DataPaths, OutputPaths, RunConfig, TrainSection};

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::dataset::SplitPolicy;
use crate::error::{Error, Result};
use crate::metrics::ReportFormat;
use crate::model::{Head, Weighting};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const INTEGRITY: i32 = 3;
    pub const TRAINING: i32 = 4;
}

/// Exit code for an error: usage/configuration, integrity, or training abort.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) | Error::Io { .. } => exit::USAGE,
        Error::NonFiniteLoss { .. } => exit::TRAINING,
        _ => exit::INTEGRITY,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lids",
    version,
    about = "Lightweight CNN-BiLSTM intrusion detection for UNSW-NB15 flow records"
)]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SharedArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for initialization, shuffling, splits and dropout.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Reduce gradients in a fixed order (bitwise reproducible with --threads 1).
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// binary or multiclass
    #[arg(long, global = true)]
    pub head: Option<Head>,
    /// official, random:F or subsample:F
    #[arg(long, global = true)]
    pub split: Option<SplitPolicy>,
    /// uniform or inverse-frequency
    #[arg(long, global = true)]
    pub weighting: Option<Weighting>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// Official training CSV.
    #[arg(long)]
    pub train_csv: Option<PathBuf>,
    /// Official testing CSV.
    #[arg(long)]
    pub test_csv: Option<PathBuf>,
    /// Directory written by `prepare`.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the encoder on the training file and cache both encoded datasets.
    Prepare {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Train a model and write it with its per-epoch history.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        /// Adam step size.
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Score a model on the evaluation side of a split.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Also train and score the logistic-regression and KNN baselines.
        #[arg(long)]
        baselines: bool,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
        /// Attack probability at or above which a record is labelled attack.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Label records from a CSV file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Attack probability at or above which a record is labelled attack.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Summarize a model file.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
    },
}

/// Parses `args` (including the program name) and runs the command, writing
/// normal output to `out`. Returns the process exit code.
pub fn run_with<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            if code == exit::OK {
                let _ = write!(out, "{}", e.render());
            } else {
                let _ = write!(err, "{}", e.render());
            }
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    run_with(
        std::env::args_os(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    )
}

pub fn execute(cli: Cli, out: &mut (dyn Write + Send)) -> Result<()> {
    let mut cfg = match &cli.shared.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let s = &cli.shared;
    if let Some(v) = s.seed {
        cfg.seed = v;
    }
    if let Some(v) = s.threads {
        cfg.threads = Some(v);
    }
    if s.deterministic {
        cfg.deterministic = true;
    }
    if let Some(v) = s.head {
        cfg.model.head = v;
    }
    if let Some(v) = s.split {
        cfg.split = v;
    }
    if let Some(v) = s.weighting {
        cfg.weighting = Some(v);
    }
    cfg.validate()?;

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cfg.threads {
            b = b.num_threads(n);
        }
        b.build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
    };
    let head_flag = s.head;
    let out_flag = s.out.clone();
    pool.install(move || match cli.command {
        Command::Prepare { data } => commands::prepare(&cfg, &data, out_flag, out),
        Command::Train {
            data,
            epochs,
            batch_size,
            learning_rate,
        } => {
            cfg.train.epochs = epochs.or(cfg.train.epochs);
            cfg.train.batch_size = batch_size.or(cfg.train.batch_size);
            cfg.train.learning_rate = learning_rate.or(cfg.train.learning_rate);
            cfg.validate()?;
            commands::train(&cfg, &data, out_flag, out)
        }
        Command::Evaluate {
            model,
            data,
            baselines,
            format,
            threshold,
        } => {
            cfg.threshold = threshold.unwrap_or(cfg.threshold);
            cfg.validate()?;
            commands::evaluate(
                &cfg, &model, &data, head_flag, baselines, format, out_flag, out,
            )
        }
        Command::Predict {
            model,
            input,
            threshold,
        } => {
            cfg.threshold = threshold.unwrap_or(cfg.threshold);
            cfg.validate()?;
            commands::predict(&cfg, &model, &input, out_flag, out)
        }
        Command::Inspect { model, format } => commands::inspect(&model, format, out),
    })
}
