//! TOML configuration files. Every schema rejects unknown keys and reports
//! the offending line.

use std::fs;
use std::path::{Path, PathBuf};

use neurela::analysis::Extractor;
use neurela::analyzer::AnalyzerConfig;
use neurela::metabbo::TaskSpec;
use neurela::trainer::{OuterEs, TrainingRun};
use neurela::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SNAPSHOT_FILE: &str = "config.toml";
pub const OUTPUT_ROOT_ENV: &str = "NEURELA_OUTPUT_ROOT";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Parent of timestamped run directories.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<PathBuf>,
    /// Shared baseline statistics cache.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_cache: Option<PathBuf>,
}

impl OutputConfig {
    /// Explicit root, then the environment, then `./runs`.
    pub fn root(&self) -> PathBuf {
        self.root
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"))
    }

    pub fn baseline_cache_or(&self, fallback: PathBuf) -> PathBuf {
        self.baseline_cache.clone().unwrap_or(fallback)
    }
}

fn default_q() -> usize {
    10
}

fn default_max_gen() -> usize {
    50
}

/// Training run description consumed by `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(default = "default_max_gen")]
    pub max_gen: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub analyzer: AnalyzerConfig,
    #[serde(default)]
    pub es: OuterEs,
    pub tasks: Vec<TaskSpec>,
}

impl RunConfig {
    pub fn training_run(&self) -> TrainingRun {
        TrainingRun {
            analyzer: self.analyzer.clone(),
            tasks: self.tasks.clone(),
            es: self.es.clone(),
            max_gen: self.max_gen,
            q: self.q,
            seed: self.seed,
        }
    }
}

/// Task file consumed by `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(default)]
    pub output: OutputConfig,
    pub task: TaskSpec,
}

fn default_runs() -> usize {
    10
}

fn all_extractors() -> Vec<Extractor> {
    Extractor::ALL.to_vec()
}

/// Wall-time grid consumed by `bench`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "all_extractors")]
    pub extractors: Vec<Extractor>,
    pub m: Vec<usize>,
    pub d: Vec<usize>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Analyser checkpoint for the NeurELA rows; a random default-size
    /// network otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Exploration/exploitation study consumed by `analyze --kind rq3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rq3Config {
    pub checkpoint: PathBuf,
    pub task: TaskSpec,
    /// Test-set function the runs are recorded on.
    pub function: u32,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Parses `text` as a `T`, turning schema violations into line-numbered
/// errors.
pub fn parse<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        Error::Parse {
            path: path.to_path_buf(),
            line,
            reason: e.message().to_string(),
        }
    })
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, path)
}

pub fn snapshot<T: Serialize>(value: &T, dir: &Path) -> Result<()> {
    let text = toml::to_string_pretty(value).map_err(|e| Error::config(format!("cannot serialize config: {e}")))?;
    fs::write(dir.join(SNAPSHOT_FILE), text)?;
    Ok(())
}

/// Resolves `p` against the directory of the file that named it.
pub fn relative_to(file: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        file.parent().unwrap_or(Path::new(".")).join(p)
    }
}
