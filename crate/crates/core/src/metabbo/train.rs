use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::run_episode;
use super::extractor::LandscapeAnalyzer;
use super::policy::MetaPolicy;
use super::task::TaskSpec;
use crate::error::Result;
use crate::es::{EsConfig, EsState, MeanInit};
use crate::seed;

const ES_STREAM: u64 = 0xE5;
const PICK_STREAM: u64 = 0x91C;
const EPISODE_STREAM: u64 = 0xE915;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub generation_best: f64,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOutcome {
    pub best: Vec<f64>,
    /// `None` when no epoch ran.
    pub best_fitness: Option<f64>,
    pub records: Vec<EpochRecord>,
    pub fe_used: u64,
}

/// Maximize `eval` with an ES for `epochs` generations, starting from
/// `initial` and keeping the best candidate seen. `eval` returns the fitness
/// and the evaluations it consumed; candidates of one epoch are evaluated in
/// parallel and reduced in index order. `on_epoch` sees the best-so-far
/// vector after each epoch.
pub fn evolve<F, C>(mut cfg: EsConfig, initial: Vec<f64>, epochs: usize, eval: F, mut on_epoch: C) -> Result<EvolveOutcome>
where
    F: Fn(&[f64], usize) -> Result<(f64, u64)> + Sync,
    C: FnMut(usize, &[f64], f64) -> Result<()>,
{
    cfg.dim = initial.len();
    cfg.initial_mean_mode = MeanInit::Zero;
    cfg.initial_mean = Some(initial.clone());
    let mut best = initial;
    let mut best_fitness: Option<f64> = None;
    let mut records = Vec::with_capacity(epochs);
    let mut fe_used = 0;
    if epochs == 0 {
        return Ok(EvolveOutcome {
            best,
            best_fitness,
            records,
            fe_used,
        });
    }
    let mut es = EsState::init(cfg)?;
    for epoch in 0..epochs {
        let cands = es.sample();
        let results: Vec<(f64, u64)> = cands.par_iter().map(|c| eval(c, epoch)).collect::<Result<_>>()?;
        let fitness: Vec<f64> = results.iter().map(|r| r.0).collect();
        fe_used += results.iter().map(|r| r.1).sum::<u64>();
        let mut gen_best = f64::NEG_INFINITY;
        for (c, &f) in cands.iter().zip(&fitness) {
            gen_best = gen_best.max(f);
            if f.is_finite() && best_fitness.is_none_or(|b| f > b) {
                best_fitness = Some(f);
                best = c.clone();
            }
        }
        es.update(&cands, &fitness)?;
        let bsf = best_fitness.unwrap_or(f64::NEG_INFINITY);
        records.push(EpochRecord {
            epoch,
            generation_best: gen_best,
            best_so_far: bsf,
        });
        on_epoch(epoch, &best, bsf)?;
    }
    Ok(EvolveOutcome {
        best,
        best_fitness,
        records,
        fe_used,
    })
}

/// An analyser either shared by all candidates or built per candidate.
pub enum AnalyzerRef<'a> {
    Borrowed(&'a dyn LandscapeAnalyzer),
    Owned(Box<dyn LandscapeAnalyzer>),
}

impl AnalyzerRef<'_> {
    pub fn get(&self) -> &dyn LandscapeAnalyzer {
        match self {
            AnalyzerRef::Borrowed(a) => *a,
            AnalyzerRef::Owned(a) => a.as_ref(),
        }
    }
}

/// Mean total episode reward of a decoded candidate over the training
/// problems picked for `epoch`. Every candidate of an epoch sees the same
/// problems and episode seeds.
pub fn training_fitness(
    task: &TaskSpec,
    analyzer: &dyn LandscapeAnalyzer,
    policy: &MetaPolicy,
    epoch: usize,
    seed_v: u64,
) -> Result<(f64, u64)> {
    let problems = task.train_problems()?;
    let mut pick = seed::derived_rng(seed_v, &[PICK_STREAM, epoch as u64]);
    let mut total = 0.0;
    let mut fe = 0;
    let n = task.inner.problems_per_eval;
    for j in 0..n {
        let p = &problems[pick.random_range(0..problems.len())];
        let s = seed::derive(seed_v, &[EPISODE_STREAM, epoch as u64, j as u64]);
        let r = run_episode(task, analyzer, policy, p, s, false)?;
        total += r.total_reward;
        fe += r.fe_used;
    }
    Ok((total / n as f64, fe))
}

/// ES over an arbitrary parameter vector decoded by `build` into an
/// analyser and a policy.
pub fn train_vector<B, C>(task: &TaskSpec, seed_v: u64, initial: Vec<f64>, build: B, on_epoch: C) -> Result<EvolveOutcome>
where
    B: for<'v> Fn(&'v [f64]) -> Result<(AnalyzerRef<'static>, MetaPolicy)> + Sync,
    C: FnMut(usize, &[f64], f64) -> Result<()>,
{
    let cfg = es_config(task, initial.len(), seed_v);
    evolve(
        cfg,
        initial,
        task.inner.epochs,
        |v, epoch| {
            let (a, p) = build(v)?;
            training_fitness(task, a.get(), &p, epoch, seed_v)
        },
        on_epoch,
    )
}

fn es_config(task: &TaskSpec, dim: usize, seed_v: u64) -> EsConfig {
    let mut cfg = EsConfig::new(task.inner.variant, dim, task.inner.population, seed::derive(seed_v, &[ES_STREAM]));
    cfg.initial_sigma = task.inner.sigma;
    cfg
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPolicy {
    pub policy: MetaPolicy,
    pub fitness: Option<f64>,
    pub records: Vec<EpochRecord>,
    pub fe_used: u64,
}

/// Meta-train a policy for `analyzer` on the task's training problems,
/// starting from `initial` (or the all-zero policy).
pub fn meta_train(
    task: &TaskSpec,
    analyzer: &dyn LandscapeAnalyzer,
    initial: Option<&MetaPolicy>,
    seed_v: u64,
) -> Result<TrainedPolicy> {
    let (kind, mode, width) = (task.optimizer, task.feature_mode(), analyzer.width());
    let init = match initial {
        Some(p) => p.params.clone(),
        None => MetaPolicy::zeros(kind, mode, width).params,
    };
    let cfg = es_config(task, init.len(), seed_v);
    let out = evolve(
        cfg,
        init,
        task.inner.epochs,
        |v, epoch| {
            let p = MetaPolicy::with_params(kind, mode, width, v.to_vec())?;
            training_fitness(task, analyzer, &p, epoch, seed_v)
        },
        |_, _, _| Ok(()),
    )?;
    Ok(TrainedPolicy {
        policy: MetaPolicy::with_params(kind, mode, width, out.best)?,
        fitness: out.best_fitness,
        records: out.records,
        fe_used: out.fe_used,
    })
}
