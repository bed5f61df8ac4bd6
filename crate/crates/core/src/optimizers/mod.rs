//! Low-level population optimizers whose control parameters are supplied
//! from outside at every step.
//!
//! Both optimizers clamp positions to the box and charge `m` evaluations per
//! step to the bound [`Problem`].

mod de;
mod pso;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use de::{de_step, DeConfig};
pub use pso::{pso_step, PsoConfig, VELOCITY_FRACTION};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problems::Problem;
use crate::seed::Rng;

pub const DEFAULT_POPULATION: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    De,
    Pso,
}

impl OptimizerKind {
    pub fn min_population(self) -> usize {
        match self {
            OptimizerKind::De => 4,
            OptimizerKind::Pso => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmMemory {
    pub velocity: Matrix,
    pub pbest_x: Matrix,
    pub pbest_y: Vec<f64>,
    pub gbest_x: Vec<f64>,
    pub gbest_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub x: Matrix,
    pub y: Vec<f64>,
    /// Present only for PSO.
    pub swarm: Option<SwarmMemory>,
    pub best_so_far: f64,
    pub step: usize,
}

impl OptimizerState {
    pub fn population_size(&self) -> usize {
        self.x.rows()
    }

    pub fn dimension(&self) -> usize {
        self.x.cols()
    }

    fn note_best(&mut self, ys: &[f64]) {
        for &v in ys {
            if v < self.best_so_far {
                self.best_so_far = v;
            }
        }
    }
}

/// Uniform initial population, evaluated on `problem`. PSO states also get
/// velocities uniform within the velocity limit and personal bests equal to
/// the start positions.
pub fn initialize(kind: OptimizerKind, problem: &mut Problem, m: usize, rng: &mut Rng) -> Result<OptimizerState> {
    if m < kind.min_population() {
        return Err(Error::config(format!(
            "{kind:?} needs a population of at least {}, got {m}",
            kind.min_population()
        )));
    }
    let d = problem.dimension();
    let lb = problem.lower_bounds();
    let ub = problem.upper_bounds();
    let mut x = Matrix::zeros(m, d);
    for i in 0..m {
        for (j, v) in x.row_mut(i).iter_mut().enumerate() {
            *v = lb[j] + (ub[j] - lb[j]) * rng.random::<f64>();
        }
    }
    let swarm_velocity = (kind == OptimizerKind::Pso).then(|| {
        let mut v = Matrix::zeros(m, d);
        for i in 0..m {
            for (j, e) in v.row_mut(i).iter_mut().enumerate() {
                let vmax = VELOCITY_FRACTION * (ub[j] - lb[j]);
                *e = rng.random_range(-vmax..=vmax);
            }
        }
        v
    });
    let y = problem.evaluate_batch(&x)?;
    let mut state = OptimizerState {
        x,
        y,
        swarm: None,
        best_so_far: f64::INFINITY,
        step: 0,
    };
    let y = state.y.clone();
    state.note_best(&y);
    if let Some(velocity) = swarm_velocity {
        let g = crate::ela::best_index(&state.y);
        state.swarm = Some(SwarmMemory {
            velocity,
            pbest_x: state.x.clone(),
            pbest_y: state.y.clone(),
            gbest_x: state.x.row(g).to_vec(),
            gbest_y: state.y[g],
        });
    }
    Ok(state)
}

/// Control parameters for one step of either optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepConfig {
    De(DeConfig),
    Pso(PsoConfig),
}

pub fn step(state: &mut OptimizerState, cfg: &StepConfig, problem: &mut Problem, rng: &mut Rng) -> Result<()> {
    match cfg {
        StepConfig::De(c) => de_step(state, c, problem, rng),
        StepConfig::Pso(c) => pso_step(state, c, problem, rng),
    }
}

fn clamp_logged(v: f64, lo: f64, hi: f64, what: &str) -> f64 {
    if v.is_nan() {
        log::warn!("{what} is NaN, using {lo}");
        return lo;
    }
    if v < lo || v > hi {
        log::warn!("{what} = {v} outside [{lo}, {hi}], clamped");
    }
    v.clamp(lo, hi)
}
