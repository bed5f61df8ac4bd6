use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{clamp_logged, OptimizerState};
use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::seed::Rng;

/// Velocity limit per dimension as a fraction of the box width.
pub const VELOCITY_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
}

/// One synchronous PSO step. Random factors are drawn per particle and per
/// dimension in the order `u1, u2`. Personal bests update on strict
/// improvement, the global best after the whole swarm has moved.
pub fn pso_step(state: &mut OptimizerState, cfg: &PsoConfig, problem: &mut Problem, rng: &mut Rng) -> Result<()> {
    let (m, d) = (state.population_size(), state.dimension());
    let w = clamp_logged(cfg.w, 0.0, 1.0, "w");
    let c1 = clamp_logged(cfg.c1, 0.0, f64::MAX, "c1");
    let c2 = clamp_logged(cfg.c2, 0.0, f64::MAX, "c2");
    let lb = problem.lower_bounds();
    let ub = problem.upper_bounds();
    let swarm = state
        .swarm
        .as_mut()
        .ok_or_else(|| Error::config("PSO step on a state without swarm memory"))?;
    for i in 0..m {
        for j in 0..d {
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            let x = state.x.get(i, j);
            let vmax = VELOCITY_FRACTION * (ub[j] - lb[j]);
            let v = w * swarm.velocity.get(i, j)
                + c1 * u1 * (swarm.pbest_x.get(i, j) - x)
                + c2 * u2 * (swarm.gbest_x[j] - x);
            let v = v.clamp(-vmax, vmax);
            swarm.velocity.set(i, j, v);
            state.x.set(i, j, (x + v).clamp(lb[j], ub[j]));
        }
    }
    let ys = problem.evaluate_batch(&state.x)?;
    for i in 0..m {
        if ys[i] < swarm.pbest_y[i] {
            swarm.pbest_y[i] = ys[i];
            swarm.pbest_x.row_mut(i).copy_from_slice(state.x.row(i));
        }
        if ys[i] < swarm.gbest_y {
            swarm.gbest_y = ys[i];
            swarm.gbest_x = state.x.row(i).to_vec();
        }
    }
    state.y = ys;
    let y = state.y.clone();
    state.note_best(&y);
    state.step += 1;
    Ok(())
}
