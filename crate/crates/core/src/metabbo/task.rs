use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::policy::FeatureMode;
use crate::error::{Error, Result};
use crate::es::EsVariant;
use crate::optimizers::{OptimizerKind, DEFAULT_POPULATION};
use crate::problems::{FunctionId, NoiseModel, ProblemSpec};
use crate::seed;

/// A family of problem instances: every listed function at one dimension,
/// `instances` random offsets each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSet {
    pub functions: Vec<u32>,
    pub dimension: usize,
    #[serde(default = "one")]
    pub instances: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: Option<NoiseModel>,
}

fn one() -> usize {
    1
}

impl ProblemSet {
    pub fn expand(&self) -> Result<Vec<ProblemSpec>> {
        let mut out = Vec::with_capacity(self.functions.len() * self.instances);
        for &f in &self.functions {
            let fid = FunctionId::from_id(f)?;
            for i in 0..self.instances {
                let s = seed::derive(self.seed, &[f as u64, i as u64]);
                let spec = ProblemSpec::sampled(fid, self.dimension, s, self.noise);
                spec.validate()?;
                out.push(spec);
            }
        }
        Ok(out)
    }
}

/// Settings of the inner evolution strategy that meta-trains a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerTraining {
    #[serde(default = "default_inner_variant")]
    pub variant: EsVariant,
    #[serde(default = "default_inner_population")]
    pub population: usize,
    #[serde(default = "default_inner_epochs")]
    pub epochs: usize,
    /// Training problems sampled per candidate evaluation.
    #[serde(default = "one")]
    pub problems_per_eval: usize,
    #[serde(default = "default_inner_sigma")]
    pub sigma: f64,
}

fn default_inner_variant() -> EsVariant {
    EsVariant::SepCmaes
}

fn default_inner_population() -> usize {
    4
}

fn default_inner_epochs() -> usize {
    3
}

fn default_inner_sigma() -> f64 {
    0.3
}

impl Default for InnerTraining {
    fn default() -> Self {
        Self {
            variant: default_inner_variant(),
            population: default_inner_population(),
            epochs: default_inner_epochs(),
            problems_per_eval: 1,
            sigma: default_inner_sigma(),
        }
    }
}

/// One MetaBBO task: a configurable optimizer with its policy template,
/// train/test problems and per-episode budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: String,
    pub optimizer: OptimizerKind,
    #[serde(default = "default_population")]
    pub population: usize,
    pub budget: u64,
    #[serde(default)]
    pub feature_mode: Option<FeatureMode>,
    pub train: ProblemSet,
    pub test: ProblemSet,
    #[serde(default)]
    pub inner: InnerTraining,
    /// Feature width the task's policy template expects; checked against
    /// the analyser when set.
    #[serde(default)]
    pub feature_width: Option<usize>,
}

fn default_population() -> usize {
    DEFAULT_POPULATION
}

impl TaskSpec {
    pub fn feature_mode(&self) -> FeatureMode {
        self.feature_mode.unwrap_or(FeatureMode::default_for(self.optimizer))
    }

    /// Decision steps per episode.
    pub fn horizon(&self) -> usize {
        (self.budget / self.population as u64) as usize
    }

    pub fn train_problems(&self) -> Result<Vec<ProblemSpec>> {
        self.train.expand()
    }

    pub fn test_problems(&self) -> Result<Vec<ProblemSpec>> {
        self.test.expand()
    }

    /// Error when the task pins a feature width other than `width`.
    pub fn check_width(&self, width: usize) -> Result<()> {
        match self.feature_width {
            Some(w) if w != width => Err(Error::config(format!(
                "task '{}' expects feature width {w}, analyser produces {width}",
                self.id
            ))),
            _ => Ok(()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |msg: String| Error::config(format!("task '{}': {msg}", self.id));
        if self.id.is_empty() {
            return Err(Error::config("task id must not be empty"));
        }
        let min = self.optimizer.min_population();
        if self.population < min {
            return Err(ctx(format!("population {} below the minimum {min}", self.population)));
        }
        if self.budget < self.population as u64 {
            return Err(ctx(format!("budget {} is smaller than the population {}", self.budget, self.population)));
        }
        if self.train.functions.is_empty() || self.test.functions.is_empty() {
            return Err(ctx("train and test problem sets must be non-empty".into()));
        }
        let train: BTreeSet<u32> = self.train.functions.iter().copied().collect();
        if let Some(f) = self.test.functions.iter().find(|f| train.contains(f)) {
            return Err(ctx(format!("function {f} appears in both train and test sets")));
        }
        if self.inner.population < 4 {
            return Err(ctx(format!("inner ES population must be at least 4, got {}", self.inner.population)));
        }
        if self.inner.problems_per_eval == 0 {
            return Err(ctx("problems_per_eval must be positive".into()));
        }
        if !(self.inner.sigma > 0.0) {
            return Err(ctx(format!("inner sigma must be positive, got {}", self.inner.sigma)));
        }
        if self.feature_width == Some(0) {
            return Err(ctx("feature_width must be positive".into()));
        }
        self.train_problems().map_err(|e| ctx(e.to_string()))?;
        self.test_problems().map_err(|e| ctx(e.to_string()))?;
        Ok(())
    }
}
