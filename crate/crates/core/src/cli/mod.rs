//! Command-line front end: `clean`, `genlabels`, `trainmeta`, `diagnose`, `ablate`.
//!
//! Exit codes: 0 success, 2 bad usage or configuration, 3 a cut model was
//! refused by the underfitting guard, 4 any other runtime failure.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::label_gen::UnderfitVerdict;
use crate::meta_classifier::Configuration;
use crate::models::Family;
pub use commands::Context;
pub use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Refused {
        context: String,
        verdict: Box<UnderfitVerdict>,
    },
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Refused { .. } => 3,
            CliError::Runtime(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Refused { .. } => "refused",
            CliError::Runtime(_) => "runtime",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m.clone(),
            CliError::Refused { context, verdict } => format!("{context}: {}", verdict.guidance()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let details = match self {
            CliError::Refused { verdict, .. } => serde_json::to_value(verdict).unwrap_or_default(),
            _ => serde_json::Value::Null,
        };
        json!({
            "error": self.kind(),
            "message": self.message(),
            "exit_code": self.exit_code(),
            "details": details,
        })
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message())
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "misdiag", version, about = "Diagnose why a classifier misclassifies individual rows")]
pub struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, default_value = "misdiag.toml")]
    pub config: PathBuf,
    /// Comma-separated seeds; overrides `seeds` in the configuration.
    #[arg(long, global = true, value_delimiter = ',')]
    pub seed_list: Option<Vec<u64>>,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iteratively remove rows the strong model cannot fit.
    Clean {
        #[arg(long = "dataset")]
        datasets: Vec<String>,
    },
    /// Generate labelled meta-feature profiles from weak and cut models.
    Genlabels {
        #[arg(long = "dataset")]
        datasets: Vec<String>,
    },
    /// Evaluate a train/test configuration and fit the reference tree.
    Trainmeta {
        #[arg(long)]
        configuration: Configuration,
    },
    /// Diagnose held-out rows with a trained tree.
    Diagnose {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        family: Family,
        /// Comma-separated row ids; given without a value, nothing is queried.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        rows: Vec<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Remove features in increasing importance and track accuracy.
    Ablate,
}

fn load_context(cli: &Cli) -> Result<Context, CliError> {
    let mut cfg = ExperimentConfig::load(&cli.config).map_err(CliError::Config)?;
    if let Some(seeds) = &cli.seed_list {
        cfg.seeds = seeds.clone();
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(Context::new(cfg))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = load_context(&cli)?;
    log::info!("configuration hash {}", ctx.hash);
    match cli.command {
        Command::Clean { datasets } => commands::cmd_clean(&ctx, &datasets),
        Command::Genlabels { datasets } => commands::cmd_genlabels(&ctx, &datasets),
        Command::Trainmeta { configuration } => commands::cmd_trainmeta(&ctx, configuration),
        Command::Diagnose {
            tree,
            dataset,
            family,
            rows,
            report,
        } => commands::cmd_diagnose(&ctx, &tree, &dataset, family, &rows, report),
        Command::Ablate => commands::cmd_ablate(&ctx),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
