//! `citesent`: run citation sentiment experiments from the command line.
//!
//! Exit status is 0 on success, 1 when inputs or configuration fail validation and
//! 2 when a run fails part-way.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "citesent", version, about = "Citation sentiment classification experiments")]
struct Cli {
    /// Log verbosity (error, warn, info, debug, trace); RUST_LOG also works.
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

/// A TOML experiment file plus `key=value` overrides.
#[derive(Args, Clone)]
struct ConfigArgs {
    #[arg(long, short)]
    config: PathBuf,
    /// Override a config value, e.g. `--set svm.c=8192` or `--set net.epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Class distribution of dataset files.
    LoadStats {
        files: Vec<PathBuf>,
        /// Replace context windows by their citation sentence first.
        #[arg(long)]
        derive: bool,
        /// Also print the concatenation of exactly two files under this name.
        #[arg(long, value_name = "NAME")]
        augment: Option<String>,
    },
    /// Check that an annotation file covers and aligns with a dataset.
    AnnotateCheck {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Write TF-IDF document-term matrices as `row col weight` triplets.
    Featurize {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Fit on this fold's training rows and write train and test matrices.
        #[arg(long)]
        fold: Option<usize>,
    },
    /// Train one model on the whole dataset and save it as JSON.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate the configured model and write reports.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Tune hyperparameters by cross-validation, then report the winner.
    Grid {
        #[command(flatten)]
        config: ConfigArgs,
        /// For networks, search the full cartesian product of the value lists.
        #[arg(long)]
        full_grid: bool,
    },
    /// t-test table of the best report against the others.
    Compare {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every model of a result table against the datasets in a directory.
    ReproduceTable {
        #[arg(long, value_parser = clap::value_parser!(u8).range(5..=11))]
        table: u8,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Word vectors for wvCNN_non-static; without it that model is skipped.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Re-tune the SVM instead of using the reported winner.
        #[arg(long)]
        grid: bool,
        /// Smaller networks and fewer epochs.
        #[arg(long)]
        quick: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cli.log)
        .parse_env("RUST_LOG")
        .format_timestamp(None)
        .init();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(if f.validation { 1 } else { 2 })
        }
    }
}
