use serde::{Deserialize, Serialize};

use super::extractor::{LandscapeAnalyzer, StepView};
use super::policy::MetaPolicy;
use super::task::TaskSpec;
use crate::analyzer::Observation;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::optimizers::{self, StepConfig};
use crate::problems::{make_problem, ProblemSpec};
use crate::seed;

const OPTIMIZER_STREAM: u64 = 0x0B7;
const NOISE_STREAM: u64 = 0x0015E;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// FNV-1a digest of the observed population (positions then objectives).
    pub digest: u64,
    pub config: StepConfig,
    pub reward: f64,
    /// The observed population, when recording was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<(Matrix, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub f_star: f64,
    /// Best-so-far after the initial population and after every step.
    pub best_history: Vec<f64>,
    pub steps: Vec<StepRecord>,
    /// Evaluations charged to the episode budget.
    pub fe_used: u64,
    pub total_reward: f64,
}

pub fn population_digest(x: &Matrix, y: &[f64]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for v in x.as_slice().iter().chain(y) {
        for b in v.to_le_bytes() {
            h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3);
        }
    }
    h
}

/// Per-step reward: improvement of best-so-far relative to the initial best,
/// floored at 0.
pub fn step_reward(before: f64, after: f64, initial: f64) -> f64 {
    ((before - after) / initial.abs().max(1e-12)).max(0.0)
}

/// Roll out `policy` with `analyzer` on one problem. The initial population is
/// evaluated outside the episode budget; each of the `budget / m` decision
/// steps is charged `m` evaluations.
pub fn run_episode(
    task: &TaskSpec,
    analyzer: &dyn LandscapeAnalyzer,
    policy: &MetaPolicy,
    spec: &ProblemSpec,
    seed_v: u64,
    record: bool,
) -> Result<EpisodeResult> {
    if analyzer.width() != policy.input {
        return Err(Error::config(format!(
            "task '{}': policy expects feature width {}, analyser '{}' produces {}",
            task.id,
            policy.input,
            analyzer.name(),
            analyzer.width()
        )));
    }
    let m = task.population;
    if task.budget < m as u64 {
        return Err(Error::config(format!(
            "task '{}': budget {} is smaller than the population {m}",
            task.id, task.budget
        )));
    }
    let horizon = task.horizon();
    let mut problem = make_problem(spec.clone())?;
    problem.reseed_noise(seed::derive(seed_v, &[NOISE_STREAM]));
    let mut rng = seed::derived_rng(seed_v, &[OPTIMIZER_STREAM]);
    let mut state = optimizers::initialize(task.optimizer, &mut problem, m, &mut rng)?;
    let start_fe = problem.fe_count();
    let lb = problem.lower_bounds();
    let ub = problem.upper_bounds();
    let mut best_history = vec![state.best_so_far];
    let mut steps = Vec::with_capacity(horizon);
    let mut total_reward = 0.0;
    for t in 0..horizon {
        let obs = Observation {
            x: state.x.clone(),
            y: state.y.clone(),
            lb: lb.clone(),
            ub: ub.clone(),
        };
        let view = StepView {
            obs: &obs,
            step: t,
            horizon,
            best_history: &best_history,
        };
        let features = analyzer.extract(&view)?;
        let cfg = policy.act(&features, m)?;
        let before = state.best_so_far;
        optimizers::step(&mut state, &cfg, &mut problem, &mut rng)?;
        let reward = step_reward(before, state.best_so_far, best_history[0]);
        total_reward += reward;
        best_history.push(state.best_so_far);
        steps.push(StepRecord {
            digest: population_digest(&obs.x, &obs.y),
            config: cfg,
            reward,
            population: record.then_some((obs.x, obs.y)),
        });
    }
    Ok(EpisodeResult {
        f_star: state.best_so_far,
        best_history,
        steps,
        fe_used: problem.fe_count() - start_fe,
        total_reward,
    })
}
