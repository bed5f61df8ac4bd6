use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::seed::Rng;

const CAUCHY_CLAMP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `f * exp(level * z)`, `z ~ N(0, 1)`.
    GaussianMultiplicative,
    /// `f + level * c`, `c` standard Cauchy, clamped to `±1e6`.
    CauchyAdditive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub level: f64,
}

impl NoiseModel {
    pub fn apply(&self, value: f64, rng: &mut Rng) -> f64 {
        match self.kind {
            NoiseKind::GaussianMultiplicative => {
                let z: f64 = StandardNormal.sample(rng);
                value * (self.level * z).exp()
            }
            NoiseKind::CauchyAdditive => {
                // standard Cauchy via the inverse CDF
                let u: f64 = rng.random_range(0.0..1.0);
                let c = (std::f64::consts::PI * (u - 0.5)).tan();
                value + (self.level * c).clamp(-CAUCHY_CLAMP, CAUCHY_CLAMP)
            }
        }
    }
}
