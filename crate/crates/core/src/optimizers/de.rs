use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{clamp_logged, OptimizerState};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problems::Problem;
use crate::seed::Rng;

/// Per-individual mutation factors and crossover rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub f: Vec<f64>,
    pub cr: Vec<f64>,
}

impl DeConfig {
    pub fn uniform(m: usize, f: f64, cr: f64) -> Self {
        Self {
            f: vec![f; m],
            cr: vec![cr; m],
        }
    }
}

/// One generation of DE/rand/1/bin.
///
/// Per target `i`, in order: donors `r1, r2, r3` drawn by rejection until
/// distinct from each other and from `i`, then `j_rand`, then one uniform per
/// dimension for the crossover test. Trials are clamped to the box, evaluated
/// as one batch, and replace their target when not worse.
pub fn de_step(state: &mut OptimizerState, cfg: &DeConfig, problem: &mut Problem, rng: &mut Rng) -> Result<()> {
    let (m, d) = (state.population_size(), state.dimension());
    if m < 4 {
        return Err(Error::config(format!("DE needs a population of at least 4, got {m}")));
    }
    if cfg.f.len() != m || cfg.cr.len() != m {
        return Err(Error::config(format!(
            "DE config has {} F and {} Cr values for a population of {m}",
            cfg.f.len(),
            cfg.cr.len()
        )));
    }
    let lb = problem.lower_bounds();
    let ub = problem.upper_bounds();
    let mut trials = Matrix::zeros(m, d);
    for i in 0..m {
        let f = clamp_logged(cfg.f[i], 0.0, 1.0, "F");
        let cr = clamp_logged(cfg.cr[i], 0.0, 1.0, "Cr");
        let r1 = draw_distinct(rng, m, &[i]);
        let r2 = draw_distinct(rng, m, &[i, r1]);
        let r3 = draw_distinct(rng, m, &[i, r1, r2]);
        let j_rand = rng.random_range(0..d);
        let (x1, x2, x3) = (state.x.row(r1), state.x.row(r2), state.x.row(r3));
        let target = state.x.row(i);
        let mut trial = vec![0.0; d];
        for j in 0..d {
            let u: f64 = rng.random();
            trial[j] = if u < cr || j == j_rand {
                (x1[j] + f * (x2[j] - x3[j])).clamp(lb[j], ub[j])
            } else {
                target[j]
            };
        }
        trials.row_mut(i).copy_from_slice(&trial);
    }
    let ty = problem.evaluate_batch(&trials)?;
    for i in 0..m {
        if ty[i] <= state.y[i] {
            state.x.row_mut(i).copy_from_slice(trials.row(i));
            state.y[i] = ty[i];
        }
    }
    state.note_best(&ty);
    state.step += 1;
    Ok(())
}

fn draw_distinct(rng: &mut Rng, m: usize, exclude: &[usize]) -> usize {
    loop {
        let r = rng.random_range(0..m);
        if !exclude.contains(&r) {
            return r;
        }
    }
}
