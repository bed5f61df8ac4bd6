//! Synthetic black-box problem suite.
//!
//! Each problem instance is one of the 24 BBOB-style functions shifted by a
//! random offset `O` (`f(x - O)`), optionally wrapped in a noise model, with
//! function-evaluation accounting and an optional hard budget.

mod functions;
mod noise;

use std::collections::BTreeSet;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use functions::{t_osz, FunctionId, Landscape};
pub use noise::{NoiseKind, NoiseModel};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::{self, Rng};

pub const LOWER_BOUND: f64 = -5.0;
pub const UPPER_BOUND: f64 = 5.0;
/// Offsets are drawn from `[-OFFSET_RANGE, OFFSET_RANGE]^d`.
pub const OFFSET_RANGE: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub function: FunctionId,
    pub dimension: usize,
    pub offset: Vec<f64>,
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    pub seed: u64,
}

impl ProblemSpec {
    /// Spec with an offset drawn uniformly from `[-4, 4]^d` using `seed`.
    pub fn sampled(function: FunctionId, dimension: usize, seed: u64, noise: Option<NoiseModel>) -> Self {
        let mut rng = seed::derived_rng(seed, &[0x0FF5E7, function.id() as u64]);
        let offset = (0..dimension)
            .map(|_| rng.random_range(-OFFSET_RANGE..=OFFSET_RANGE))
            .collect();
        Self {
            function,
            dimension,
            offset,
            noise,
            seed,
        }
    }

    pub fn lower_bounds(&self) -> Vec<f64> {
        vec![LOWER_BOUND; self.dimension]
    }

    pub fn upper_bounds(&self) -> Vec<f64> {
        vec![UPPER_BOUND; self.dimension]
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::config("problem dimension must be at least 1"));
        }
        if self.offset.len() != self.dimension {
            return Err(Error::config(format!(
                "offset has {} entries, dimension is {}",
                self.offset.len(),
                self.dimension
            )));
        }
        if let Some(o) = self.offset.iter().find(|o| !(o.abs() < UPPER_BOUND)) {
            return Err(Error::config(format!("offset entry {o} is not strictly inside the search box")));
        }
        if let Some(n) = &self.noise {
            if !(n.level >= 0.0 && n.level.is_finite()) {
                return Err(Error::config(format!("noise level must be finite and non-negative, got {}", n.level)));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("f{}_d{}_s{}", self.function.id(), self.dimension, self.seed)
    }
}

/// A problem instance owned by a single run.
#[derive(Debug, Clone)]
pub struct Problem {
    spec: ProblemSpec,
    landscape: Landscape,
    fe_count: u64,
    best_so_far: f64,
    budget: Option<u64>,
    noise_rng: Rng,
}

pub fn make_problem(spec: ProblemSpec) -> Result<Problem> {
    spec.validate()?;
    let mut rng = seed::derived_rng(spec.seed, &[0x1A9D, spec.function.id() as u64]);
    let landscape = Landscape::new(spec.function, spec.dimension, &mut rng);
    let noise_rng = seed::derived_rng(spec.seed, &[0x0015E]);
    Ok(Problem {
        spec,
        landscape,
        fe_count: 0,
        best_so_far: f64::INFINITY,
        budget: None,
        noise_rng,
    })
}

impl Problem {
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    /// Replace the noise stream, e.g. to give independent runs on one
    /// instance independent noise.
    pub fn reseed_noise(&mut self, seed: u64) {
        self.noise_rng = seed::rng(seed);
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension
    }

    pub fn fe_count(&self) -> u64 {
        self.fe_count
    }

    pub fn best_so_far(&self) -> f64 {
        self.best_so_far
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    /// FE still available, `None` when no budget is attached.
    pub fn remaining(&self) -> Option<u64> {
        self.budget.map(|b| b.saturating_sub(self.fe_count))
    }

    pub fn lower_bounds(&self) -> Vec<f64> {
        self.spec.lower_bounds()
    }

    pub fn upper_bounds(&self) -> Vec<f64> {
        self.spec.upper_bounds()
    }

    /// Noise-free objective value at `x`, without FE accounting.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let u: Vec<f64> = x.iter().zip(&self.spec.offset).map(|(a, o)| a - o).collect();
        self.landscape.eval(&u)
    }

    /// Evaluates every row of `xs`. A batch that would overrun the budget is
    /// rejected as a whole and consumes nothing.
    pub fn evaluate_batch(&mut self, xs: &Matrix) -> Result<Vec<f64>> {
        let d = self.spec.dimension;
        if xs.cols() != d {
            return Err(Error::shape(format!("batch has {} columns, problem dimension is {d}", xs.cols())));
        }
        let m = xs.rows() as u64;
        if let Some(budget) = self.budget {
            if self.fe_count + m > budget {
                return Err(Error::BudgetExhausted {
                    used: self.fe_count,
                    requested: m,
                    budget,
                });
            }
        }
        for (i, row) in xs.iter_rows().enumerate() {
            if let Some(v) = row.iter().find(|v| !(LOWER_BOUND..=UPPER_BOUND).contains(*v)) {
                return Err(Error::shape(format!("candidate {i} has coordinate {v} outside [-5, 5]")));
            }
        }
        let mut ys = Vec::with_capacity(xs.rows());
        for row in xs.iter_rows() {
            let mut y = self.objective(row);
            if let Some(noise) = &self.spec.noise {
                y = noise.apply(y, &mut self.noise_rng);
            }
            ys.push(y);
        }
        self.fe_count += m;
        if let Some(min) = ys.iter().copied().filter(|v| !v.is_nan()).reduce(f64::min) {
            self.best_so_far = self.best_so_far.min(min);
        }
        Ok(ys)
    }
}

/// Train/test split of the 24 BBOB function ids.
pub fn bbob_split() -> (BTreeSet<u32>, BTreeSet<u32>) {
    let train = [1, 2, 5, 7, 13, 16, 17, 18, 21, 22, 23, 24].into_iter().collect();
    let test = [3, 4, 6, 8, 9, 10, 11, 12, 14, 15, 19, 20].into_iter().collect();
    (train, test)
}
