mod commands;
mod config;
mod obsfile;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use neurela::Error;

/// Neural landscape analysis for meta-black-box optimization.
#[derive(Debug, Parser)]
#[command(name = "neurela", version)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Mode {
    ZeroShot,
    FineTune,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum AnalysisKind {
    Correlation,
    Rq3,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the landscape analyser over a set of MetaBBO tasks.
    Train {
        /// Run configuration (TOML). Optional with --resume.
        #[arg(long, required_unless_present = "resume")]
        config: Option<PathBuf>,
        /// Continue the run stored in this directory.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Work-pool width.
        #[arg(long)]
        jobs: Option<usize>,
        /// Stop after this many generations (simulates an interruption).
        #[arg(long, hide = true)]
        halt_after: Option<usize>,
    },
    /// Score a trained analyser on a task, frozen or fine-tuned.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Task file (TOML).
        #[arg(long)]
        task: PathBuf,
        #[arg(long, value_enum, default_value = "zero_shot")]
        mode: Mode,
        #[arg(long)]
        jobs: Option<usize>,
        /// Report directory instead of a timestamped run directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Extract features from an observation file.
    Extract {
        /// Analyser checkpoint, `ela` or `handcrafted`.
        #[arg(long)]
        extractor: String,
        #[arg(long)]
        input: PathBuf,
        /// Feature CSV; standard output when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Time feature extraction over an (m, d) grid.
    Bench {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Correlation or exploration/exploitation analyses.
    Analyze {
        #[arg(long, value_enum)]
        kind: AnalysisKind,
        /// correlation: ELA then NeurELA feature CSVs; rq3: a study file.
        #[arg(long, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } => 2,
        Error::Integrity { .. } => 4,
        Error::Task { source, .. } => exit_code(source),
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Train {
            config,
            resume,
            jobs,
            halt_after,
        } => commands::train(config, resume, jobs, halt_after),
        Command::Evaluate {
            checkpoint,
            task,
            mode,
            jobs,
            output,
        } => commands::evaluate(&checkpoint, &task, mode, jobs, output),
        Command::Extract {
            extractor,
            input,
            output,
        } => commands::extract(&extractor, &input, output.as_deref()),
        Command::Bench { grid, output } => commands::bench(&grid, output),
        Command::Analyze {
            kind,
            inputs,
            jobs,
            output,
        } => commands::analyze(kind, &inputs, jobs, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
