//! Evolution strategies behind one init / sample / update interface.
//!
//! Variants: full CMA-ES, separable (diagonal) CMA-ES, a fast low-rank CMA-ES,
//! the rank-one ES (R1ES) and the rank-m ES (RMES). All use the maximization
//! convention: larger fitness is better. Updates depend on fitness only
//! through comparisons, so any strictly increasing transform of the fitness
//! leaves the search distribution unchanged.
//!
//! Sampling draws from a stream derived from `(seed, generation)`, so an
//! [`EsState`] carries no RNG state and resumes exactly after serialization.

mod cma;
mod low_rank;

use std::io::Write;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, Rng};

/// Generations without best-so-far improvement after which the state reports
/// a stall.
pub const STALL_GENERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EsVariant {
    Cmaes,
    SepCmaes,
    FastCmaes,
    R1es,
    Rmes,
}

impl EsVariant {
    pub const ALL: [EsVariant; 5] = [
        EsVariant::Cmaes,
        EsVariant::SepCmaes,
        EsVariant::FastCmaes,
        EsVariant::R1es,
        EsVariant::Rmes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EsVariant::Cmaes => "cmaes",
            EsVariant::SepCmaes => "sep_cmaes",
            EsVariant::FastCmaes => "fast_cmaes",
            EsVariant::R1es => "r1es",
            EsVariant::Rmes => "rmes",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanInit {
    Zero,
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsConfig {
    pub variant: EsVariant,
    pub dim: usize,
    pub population: usize,
    #[serde(default = "default_sigma")]
    pub initial_sigma: f64,
    #[serde(default = "default_mean_init")]
    pub initial_mean_mode: MeanInit,
    /// Evolution-path learning rate of the low-rank variants; `None` means
    /// `2 / (D + 5)`.
    #[serde(default)]
    pub path_lr: Option<f64>,
    /// Generations between stored direction snapshots of the fast CMA-ES and
    /// RMES; `None` means `min(D, 10)`.
    #[serde(default)]
    pub history_interval: Option<usize>,
    /// Initial mean, overriding `initial_mean_mode`.
    #[serde(default)]
    pub initial_mean: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

fn default_sigma() -> f64 {
    0.3
}

fn default_mean_init() -> MeanInit {
    MeanInit::UniformRandom
}

impl EsConfig {
    pub fn new(variant: EsVariant, dim: usize, population: usize, seed: u64) -> Self {
        Self {
            variant,
            dim,
            population,
            initial_sigma: default_sigma(),
            initial_mean_mode: default_mean_init(),
            path_lr: None,
            history_interval: None,
            initial_mean: None,
            seed,
        }
    }

    pub fn path_lr(&self) -> f64 {
        self.path_lr.unwrap_or(2.0 / (self.dim as f64 + 5.0))
    }

    pub fn history_interval(&self) -> usize {
        self.history_interval.unwrap_or(self.dim.min(10)).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::config("es: dimension must be positive"));
        }
        if self.population < 4 {
            return Err(Error::config(format!("es: population must be at least 4, got {}", self.population)));
        }
        if !(self.initial_sigma > 0.0 && self.initial_sigma.is_finite()) {
            return Err(Error::config(format!("es: initial_sigma must be positive, got {}", self.initial_sigma)));
        }
        if let Some(c) = self.path_lr {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::config(format!("es: path_lr must be in (0, 1], got {c}")));
            }
        }
        if let Some(m) = &self.initial_mean {
            if m.len() != self.dim {
                return Err(Error::config(format!(
                    "es: initial_mean has {} entries, dimension is {}",
                    m.len(),
                    self.dim
                )));
            }
        }
        Ok(())
    }
}

/// Recombination weights `ln(N/2 + 0.5) - ln(i)` for the best `floor(N/2)`
/// candidates, normalized to sum to one.
pub fn recombination_weights(n: usize) -> Vec<f64> {
    let mu = n / 2;
    let raw: Vec<f64> = (1..=mu)
        .map(|i| (n as f64 / 2.0 + 0.5).ln() - (i as f64).ln())
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / s).collect()
}

pub fn mu_eff(w: &[f64]) -> f64 {
    1.0 / w.iter().map(|v| v * v).sum::<f64>()
}

/// Expected norm of a `D`-dimensional standard normal vector.
pub fn chi_mean(d: usize) -> f64 {
    let n = d as f64;
    n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))
}

/// Candidate order, best first. Non-finite fitness ranks last; ties keep the
/// lower index first.
pub fn ranking(fitness: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| {
        let (fa, fb) = (fitness[a], fitness[b]);
        match (fa.is_finite(), fb.is_finite()) {
            (true, true) => fb.partial_cmp(&fa).unwrap(),
            (true, false) => std::cmp::Ordering::Less,
            (false, true) => std::cmp::Ordering::Greater,
            (false, false) => std::cmp::Ordering::Equal,
        }
    });
    idx
}

fn standard_normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Cma(cma::CmaModel),
    LowRank(low_rank::LowRankModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsState {
    pub config: EsConfig,
    pub mean: Vec<f64>,
    pub sigma: f64,
    pub generation: u64,
    pub evaluations: u64,
    pub best_x: Option<Vec<f64>>,
    pub best_f: Option<f64>,
    pub generations_since_improvement: usize,
    pub model: Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: u64,
    pub evaluations: u64,
    pub sigma: f64,
    pub best_f: f64,
}

impl EsState {
    pub fn init(config: EsConfig) -> Result<Self> {
        config.validate()?;
        let d = config.dim;
        let mean = match (&config.initial_mean, config.initial_mean_mode) {
            (Some(m), _) => m.clone(),
            (None, MeanInit::Zero) => vec![0.0; d],
            (None, MeanInit::UniformRandom) => {
                let mut rng = seed::derived_rng(config.seed, &[0x3EA9]);
                (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()
            }
        };
        let model = match config.variant {
            EsVariant::Cmaes => Model::Cma(cma::CmaModel::new(d, config.population, true)),
            EsVariant::SepCmaes => Model::Cma(cma::CmaModel::new(d, config.population, false)),
            v => Model::LowRank(low_rank::LowRankModel::new(v, &config)),
        };
        Ok(Self {
            sigma: config.initial_sigma,
            config,
            mean,
            generation: 0,
            evaluations: 0,
            best_x: None,
            best_f: None,
            generations_since_improvement: 0,
            model,
        })
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn population(&self) -> usize {
        self.config.population
    }

    /// Sampling stream of the current generation.
    pub fn sampling_rng(&self) -> Rng {
        seed::derived_rng(self.config.seed, &[0x5A3B1E, self.generation])
    }

    /// The configured number of candidates for this generation.
    pub fn sample(&self) -> Vec<Vec<f64>> {
        self.sample_n(self.config.population)
    }

    /// `n` independent draws from the current search distribution.
    pub fn sample_n(&self, n: usize) -> Vec<Vec<f64>> {
        let mut rng = self.sampling_rng();
        (0..n)
            .map(|_| {
                let y = match &self.model {
                    Model::Cma(c) => c.sample_direction(&mut rng),
                    Model::LowRank(l) => l.sample_direction(&mut rng),
                };
                self.mean.iter().zip(&y).map(|(m, v)| m + self.sigma * v).collect()
            })
            .collect()
    }

    /// Rank-based update from evaluated candidates (higher fitness is better).
    pub fn update(&mut self, candidates: &[Vec<f64>], fitness: &[f64]) -> Result<()> {
        let n = self.config.population;
        if candidates.len() != n || fitness.len() != n {
            return Err(Error::shape(format!(
                "es update expects {n} candidates and fitness values, got {} and {}",
                candidates.len(),
                fitness.len()
            )));
        }
        if let Some(bad) = candidates.iter().find(|c| c.len() != self.config.dim) {
            return Err(Error::shape(format!(
                "es candidate has {} entries, dimension is {}",
                bad.len(),
                self.config.dim
            )));
        }
        let nonfinite = fitness.iter().filter(|f| !f.is_finite()).count();
        if nonfinite > 0 {
            log::warn!("es: {nonfinite} non-finite fitness values ranked last");
        }
        let order = ranking(fitness);
        let w = recombination_weights(n);

        let improved = match (order.first(), self.best_f) {
            (Some(&i), best) if fitness[i].is_finite() => best.is_none_or(|b| fitness[i] > b),
            _ => false,
        };
        if improved {
            let i = order[0];
            self.best_f = Some(fitness[i]);
            self.best_x = Some(candidates[i].clone());
            self.generations_since_improvement = 0;
        } else {
            self.generations_since_improvement += 1;
        }

        let old_mean = self.mean.clone();
        let d = self.config.dim;
        let mut new_mean = vec![0.0; d];
        for (wi, &i) in w.iter().zip(&order) {
            for (m, x) in new_mean.iter_mut().zip(&candidates[i]) {
                *m += wi * x;
            }
        }
        let sigma = self.sigma;
        let gen = self.generation;
        match &mut self.model {
            Model::Cma(c) => {
                let ys: Vec<Vec<f64>> = order[..w.len()]
                    .iter()
                    .map(|&i| candidates[i].iter().zip(&old_mean).map(|(x, m)| (x - m) / sigma).collect())
                    .collect();
                self.sigma = c.update(&ys, &w, sigma, gen)?;
            }
            Model::LowRank(l) => {
                let shift: Vec<f64> = new_mean.iter().zip(&old_mean).map(|(a, b)| (a - b) / sigma).collect();
                self.sigma = l.update(&shift, &w, fitness, sigma, gen);
            }
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Numerical(format!("es: step size degenerated to {}", self.sigma)));
        }
        self.mean = new_mean;
        self.generation += 1;
        self.evaluations += n as u64;
        Ok(())
    }

    pub fn is_stalled(&self) -> bool {
        self.generations_since_improvement >= STALL_GENERATIONS
    }

    pub fn trace_row(&self) -> TraceRow {
        TraceRow {
            generation: self.generation,
            evaluations: self.evaluations,
            sigma: self.sigma,
            best_f: self.best_f.unwrap_or(f64::NAN),
        }
    }
}

/// Write an ES trace as CSV with columns `generation,evaluations,sigma,best_f`.
pub fn write_trace_csv<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
