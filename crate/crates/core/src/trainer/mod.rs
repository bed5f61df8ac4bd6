//! Outer neuroevolution of the landscape analyser.
//!
//! Each generation the outer ES samples `N` parameter vectors. Every vector
//! is decoded into an analyser, plugged into each of the `K` tasks, scored by
//! the relative-performance metric and averaged over tasks. The `N x K`
//! pipelines are independent and run on a work pool; the ES update is a
//! serial barrier. State is checkpointed after every generation.

mod state;
mod transfer;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analyzer::{AnalyzerCheckpoint, AnalyzerConfig, Network, Provenance};
use crate::error::{Error, Result};
use crate::es::{EsConfig, EsState, EsVariant};
use crate::metabbo::{relative_performance, BaselineCache, BaselineStats, NeurelaAnalyzer, RelativePerformance, TaskSpec};
use crate::seed;

pub use state::{f64_bits, write_history_csv, write_timings_csv, TrainerState, STATE_FILE};
pub use transfer::{fine_tune, zero_shot, FineTuneEpoch, FineTuneReport};

pub const HISTORY_FILE: &str = "history.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const BEST_FILE: &str = "best_analyzer.json";
pub const BASELINE_DIR: &str = "baselines";

const OUTER_STREAM: u64 = 0x0E7E;
const GENERATION_STREAM: u64 = 0x6E4;
const BASELINE_STREAM: u64 = 0xBA5E;

/// Settings of the outer ES over analyser parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuterEs {
    #[serde(default = "default_outer_variant")]
    pub variant: EsVariant,
    #[serde(default = "default_outer_population")]
    pub population: usize,
    #[serde(default = "default_outer_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub path_lr: Option<f64>,
    #[serde(default)]
    pub history_interval: Option<usize>,
}

fn default_outer_variant() -> EsVariant {
    EsVariant::FastCmaes
}

fn default_outer_population() -> usize {
    10
}

fn default_outer_sigma() -> f64 {
    0.3
}

impl Default for OuterEs {
    fn default() -> Self {
        Self {
            variant: default_outer_variant(),
            population: default_outer_population(),
            sigma: default_outer_sigma(),
            path_lr: None,
            history_interval: None,
        }
    }
}

/// Everything that determines a training run's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingRun {
    #[serde(default)]
    pub analyzer: AnalyzerConfig,
    pub tasks: Vec<TaskSpec>,
    #[serde(default)]
    pub es: OuterEs,
    #[serde(default = "default_max_gen")]
    pub max_gen: usize,
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_gen() -> usize {
    50
}

fn default_q() -> usize {
    10
}

impl TrainingRun {
    pub fn validate(&self) -> Result<()> {
        self.analyzer.validate()?;
        if self.tasks.is_empty() {
            return Err(Error::config("a training run needs at least one task"));
        }
        let h = self.analyzer.hidden_dim;
        for (i, t) in self.tasks.iter().enumerate() {
            t.validate()?;
            t.check_width(h)?;
            if self.tasks[..i].iter().any(|o| o.id == t.id) {
                return Err(Error::config(format!("duplicate task id '{}'", t.id)));
            }
        }
        if self.es.population < 4 {
            return Err(Error::config(format!(
                "outer ES population must be at least 4, got {}",
                self.es.population
            )));
        }
        if !(self.es.sigma > 0.0) {
            return Err(Error::config(format!("outer sigma must be positive, got {}", self.es.sigma)));
        }
        if self.q == 0 {
            return Err(Error::config("q must be positive"));
        }
        if self.max_gen == 0 {
            return Err(Error::config("max_gen must be positive"));
        }
        Ok(())
    }

    pub fn es_config(&self) -> EsConfig {
        let mut cfg = EsConfig::new(
            self.es.variant,
            self.analyzer.param_count(),
            self.es.population,
            seed::derive(self.seed, &[OUTER_STREAM]),
        );
        cfg.initial_sigma = self.es.sigma;
        cfg.path_lr = self.es.path_lr;
        cfg.history_interval = self.es.history_interval;
        cfg
    }

    /// Seed base shared by all candidates of `generation`.
    pub fn generation_seed(&self, generation: usize) -> u64 {
        seed::derive(self.seed, &[GENERATION_STREAM, generation as u64])
    }

    pub fn baseline_seed(&self) -> u64 {
        seed::derive(self.seed, &[BASELINE_STREAM])
    }

    /// Digest of everything except `max_gen`, so a finished run can be
    /// extended by resuming with a larger generation limit.
    pub fn digest(&self) -> Result<String> {
        let mut r = self.clone();
        r.max_gen = 0;
        Ok(hex::encode(&Sha256::digest(serde_json::to_vec(&r)?)[..16]))
    }
}

/// Short digest of a parameter vector.
pub fn theta_digest(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    hex::encode(&Sha256::digest(&bytes)[..8])
}

/// One generation of the outer loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    #[serde(with = "state::f64_vec_bits")]
    pub fitness: Vec<f64>,
    #[serde(with = "f64_bits")]
    pub generation_best: f64,
    /// Best fitness seen so far, `None` while no candidate scored finitely.
    #[serde(with = "state::opt_f64_bits")]
    pub best_fitness: Option<f64>,
    pub best_digest: String,
    pub fe_used: u64,
    pub wall_seconds: f64,
}

/// Mean relative performance of one analyser over all tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessReport {
    pub fitness: f64,
    pub per_task: Vec<RelativePerformance>,
    pub fe_used: u64,
}

/// Average per-task results into one fitness value.
pub fn combine(per_task: Vec<RelativePerformance>) -> FitnessReport {
    let fitness = per_task.iter().map(|r| r.upsilon).sum::<f64>() / per_task.len() as f64;
    let fe_used = per_task.iter().map(|r| r.fe_used).sum();
    FitnessReport {
        fitness,
        per_task,
        fe_used,
    }
}

fn check_baselines(tasks: &[TaskSpec], baselines: &[BaselineStats]) -> Result<()> {
    if tasks.is_empty() {
        return Err(Error::config("fitness needs at least one task"));
    }
    if tasks.len() != baselines.len() {
        return Err(Error::config(format!(
            "{} tasks but {} baseline entries",
            tasks.len(),
            baselines.len()
        )));
    }
    for (t, b) in tasks.iter().zip(baselines) {
        if t.id != b.task_id {
            return Err(Error::config(format!("baseline for '{}' supplied for task '{}'", b.task_id, t.id)));
        }
    }
    Ok(())
}

fn task_performance(
    network: &Network,
    task: &TaskSpec,
    baseline: &BaselineStats,
    q: usize,
    seed_v: u64,
) -> Result<RelativePerformance> {
    let analyzer = NeurelaAnalyzer::new(network.clone());
    task.check_width(network.width())
        .and_then(|_| relative_performance(&analyzer, task, baseline, q, seed_v))
        .map_err(|e| e.in_task(&task.id))
}

/// Mean relative performance of the analyser encoded by `theta` over
/// `tasks`, each scored against the matching entry of `baselines`.
pub fn fitness(
    theta: &[f64],
    config: &AnalyzerConfig,
    tasks: &[TaskSpec],
    baselines: &[BaselineStats],
    q: usize,
    seed_v: u64,
) -> Result<FitnessReport> {
    check_baselines(tasks, baselines)?;
    let network = Network::decode(theta, config)?;
    let per_task = tasks
        .par_iter()
        .zip(baselines)
        .map(|(t, b)| task_performance(&network, t, b, q, seed_v))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine(per_task))
}

/// Baseline statistics of every task, served from `cache` when present.
/// Returns the statistics and the FE spent computing missing entries.
pub fn compute_baselines(
    tasks: &[TaskSpec],
    q: usize,
    seed_v: u64,
    cache: &BaselineCache,
) -> Result<(Vec<BaselineStats>, u64)> {
    let mut out = Vec::with_capacity(tasks.len());
    let mut fe = 0;
    for t in tasks {
        let (stats, used) = cache.get_or_compute(t, q, seed_v).map_err(|e| e.in_task(&t.id))?;
        out.push(stats);
        fe += used;
    }
    Ok((out, fe))
}

/// Where and how a run executes; none of this affects its results.
#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub output_dir: PathBuf,
    /// Baseline cache directory; `None` means `<output_dir>/baselines`.
    pub baseline_dir: Option<PathBuf>,
    /// Continue from the state stored in `output_dir`.
    pub resume: bool,
    /// Stop after this many generations in this invocation, leaving a
    /// resumable state behind.
    pub halt_after: Option<usize>,
    /// Work-pool width; `None` uses the global pool.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: Option<Vec<f64>>,
    pub best_fitness: Option<f64>,
    pub history: Vec<GenerationRecord>,
    pub baseline_fe: u64,
    /// Fitness evaluations performed by this invocation.
    pub evaluations: usize,
    pub checkpoints_written: usize,
    /// False when the run stopped early through `halt_after`.
    pub completed: bool,
}

/// Run the outer loop to `run.max_gen` generations.
pub fn train(run: &TrainingRun, opts: &TrainOptions) -> Result<TrainOutcome> {
    run.validate()?;
    match opts.jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::config(format!("cannot build a work pool of width {j}: {e}")))?;
            pool.install(|| train_inner(run, opts))
        }
        None => train_inner(run, opts),
    }
}

fn train_inner(run: &TrainingRun, opts: &TrainOptions) -> Result<TrainOutcome> {
    let dir = &opts.output_dir;
    fs::create_dir_all(dir)?;
    let state_path = dir.join(STATE_FILE);
    let digest = run.digest()?;
    let cache = BaselineCache::new(opts.baseline_dir.clone().unwrap_or_else(|| dir.join(BASELINE_DIR)));

    let mut st = if opts.resume {
        if !state_path.exists() {
            return Err(Error::config(format!("no training state to resume in {}", dir.display())));
        }
        let st = TrainerState::load(&state_path)?;
        if st.run_digest != digest {
            return Err(Error::config(format!(
                "state in {} belongs to a different run configuration",
                dir.display()
            )));
        }
        st
    } else {
        if state_path.exists() {
            return Err(Error::config(format!(
                "{} already holds a training state; resume it or pick a new directory",
                dir.display()
            )));
        }
        TrainerState::new(digest, EsState::init(run.es_config())?)
    };

    let (baselines, fe) = compute_baselines(&run.tasks, run.q, run.baseline_seed(), &cache)?;
    if !opts.resume {
        st.baseline_fe = fe;
    }

    let mut evaluations = 0;
    let mut checkpoints = 0;
    let mut completed = true;
    let k = run.tasks.len();
    while (st.es.generation as usize) < run.max_gen {
        if opts.halt_after.is_some_and(|h| checkpoints >= h) {
            completed = false;
            break;
        }
        let started = Instant::now();
        let generation = st.es.generation as usize;
        let gen_seed = run.generation_seed(generation);
        let cands = st.es.sample();
        let networks: Vec<Network> = cands
            .iter()
            .map(|c| Network::decode(c, &run.analyzer))
            .collect::<Result<_>>()?;
        let cells: Vec<(usize, usize)> = (0..cands.len()).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
        let results: Vec<RelativePerformance> = cells
            .par_iter()
            .map(|&(i, j)| task_performance(&networks[i], &run.tasks[j], &baselines[j], run.q, gen_seed))
            .collect::<Result<_>>()?;
        let reports: Vec<FitnessReport> = results.chunks(k).map(|c| combine(c.to_vec())).collect();
        let fit: Vec<f64> = reports.iter().map(|r| r.fitness).collect();
        evaluations += fit.len();

        let mut gen_best = f64::NEG_INFINITY;
        for (c, &f) in cands.iter().zip(&fit) {
            gen_best = gen_best.max(f);
            if f.is_finite() && st.best_fitness.is_none_or(|b| f > b) {
                st.best_fitness = Some(f);
                st.best = Some(c.clone());
            }
        }
        st.es.update(&cands, &fit)?;
        st.history.push(GenerationRecord {
            generation,
            fitness: fit,
            generation_best: gen_best,
            best_fitness: st.best_fitness,
            best_digest: st.best.as_deref().map(theta_digest).unwrap_or_default(),
            fe_used: reports.iter().map(|r| r.fe_used).sum(),
            wall_seconds: started.elapsed().as_secs_f64(),
        });
        write_artifacts(run, &st, dir)?;
        checkpoints += 1;
        log::info!(
            "generation {generation}: best {:?}, generation best {gen_best}",
            st.best_fitness
        );
    }

    Ok(TrainOutcome {
        best: st.best,
        best_fitness: st.best_fitness,
        history: st.history,
        baseline_fe: st.baseline_fe,
        evaluations,
        checkpoints_written: checkpoints,
        completed,
    })
}

fn write_artifacts(run: &TrainingRun, st: &TrainerState, dir: &Path) -> Result<()> {
    if let Some(best) = &st.best {
        let prov = Provenance {
            generation: st.history.last().map(|r| r.generation),
            seed: Some(run.seed),
            fitness: st.best_fitness,
            note: "best analyser of the outer loop".into(),
        };
        let ckpt = AnalyzerCheckpoint::new(&run.analyzer, best, prov)?;
        state::atomic_write(&dir.join(BEST_FILE), serde_json::to_string_pretty(&ckpt)?.as_bytes())?;
    }
    let mut hist = Vec::new();
    write_history_csv(&mut hist, &st.history)?;
    state::atomic_write(&dir.join(HISTORY_FILE), &hist)?;
    let mut timings = Vec::new();
    write_timings_csv(&mut timings, &st.history)?;
    state::atomic_write(&dir.join(TIMINGS_FILE), &timings)?;
    // the state goes last: a crash before this point replays the generation
    st.save(&dir.join(STATE_FILE))
}
