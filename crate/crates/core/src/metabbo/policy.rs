use serde::{Deserialize, Serialize};

use super::extractor::Features;
use crate::error::{Error, Result};
use crate::optimizers::{DeConfig, OptimizerKind, PsoConfig, StepConfig};

pub const POLICY_HIDDEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// One decision per candidate from its own feature row.
    PerIndividual,
    /// One decision for the whole population from the pooled features.
    Population,
}

impl FeatureMode {
    pub fn default_for(kind: OptimizerKind) -> Self {
        match kind {
            OptimizerKind::De => FeatureMode::PerIndividual,
            OptimizerKind::Pso => FeatureMode::Population,
        }
    }
}

/// Output ranges `[lo, hi]` of each configuration parameter.
pub fn output_ranges(kind: OptimizerKind) -> &'static [(f64, f64)] {
    match kind {
        // F, Cr
        OptimizerKind::De => &[(0.0, 1.0), (0.0, 1.0)],
        // w, c1, c2
        OptimizerKind::Pso => &[(0.0, 1.0), (0.0, 3.0), (0.0, 3.0)],
    }
}

/// Two-layer perceptron with a tanh hidden layer; each output is squashed by
/// a sigmoid into its parameter range. Parameters are laid out as `w1`
/// (input x hidden, row-major), `b1`, `w2` (hidden x outputs), `b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaPolicy {
    pub kind: OptimizerKind,
    pub mode: FeatureMode,
    pub input: usize,
    pub params: Vec<f64>,
}

impl MetaPolicy {
    pub fn param_count(input: usize, kind: OptimizerKind) -> usize {
        let k = output_ranges(kind).len();
        input * POLICY_HIDDEN + POLICY_HIDDEN + POLICY_HIDDEN * k + k
    }

    /// All-zero parameters: every output sits at the middle of its range.
    pub fn zeros(kind: OptimizerKind, mode: FeatureMode, input: usize) -> Self {
        Self {
            kind,
            mode,
            input,
            params: vec![0.0; Self::param_count(input, kind)],
        }
    }

    pub fn with_params(kind: OptimizerKind, mode: FeatureMode, input: usize, params: Vec<f64>) -> Result<Self> {
        let expected = Self::param_count(input, kind);
        if params.len() != expected {
            return Err(Error::ParamLength {
                expected,
                actual: params.len(),
            });
        }
        Ok(Self {
            kind,
            mode,
            input,
            params,
        })
    }

    /// Squashed outputs for one feature row.
    pub fn forward(&self, s: &[f64]) -> Vec<f64> {
        let ranges = output_ranges(self.kind);
        let k = ranges.len();
        let n = self.input;
        let (w1, rest) = self.params.split_at(n * POLICY_HIDDEN);
        let (b1, rest) = rest.split_at(POLICY_HIDDEN);
        let (w2, b2) = rest.split_at(POLICY_HIDDEN * k);
        let mut hidden = b1.to_vec();
        for (i, &si) in s.iter().enumerate() {
            let row = &w1[i * POLICY_HIDDEN..(i + 1) * POLICY_HIDDEN];
            for (h, w) in hidden.iter_mut().zip(row) {
                *h += si * w;
            }
        }
        for h in hidden.iter_mut() {
            *h = h.tanh();
        }
        let mut out = b2.to_vec();
        for (j, &hj) in hidden.iter().enumerate() {
            let row = &w2[j * k..(j + 1) * k];
            for (o, w) in out.iter_mut().zip(row) {
                *o += hj * w;
            }
        }
        out.iter()
            .zip(ranges)
            .map(|(o, (lo, hi))| lo + (hi - lo) / (1.0 + (-o).exp()))
            .collect()
    }

    /// Configuration for a population of `m` candidates.
    pub fn act(&self, features: &Features, m: usize) -> Result<StepConfig> {
        if features.pop.len() != self.input {
            return Err(Error::config(format!(
                "policy expects {} features, analyser produced {}",
                self.input,
                features.pop.len()
            )));
        }
        let rows: Vec<Vec<f64>> = match (self.mode, &features.indiv) {
            (FeatureMode::PerIndividual, Some(ind)) => {
                if ind.rows() != m {
                    return Err(Error::shape(format!("{} feature rows for {m} candidates", ind.rows())));
                }
                ind.iter_rows().map(|r| self.forward(r)).collect()
            }
            (FeatureMode::PerIndividual, None) => vec![self.forward(&features.pop); m],
            (FeatureMode::Population, _) => vec![self.forward(&features.pop)],
        };
        Ok(match self.kind {
            OptimizerKind::De => {
                let rows = if rows.len() == 1 { vec![rows[0].clone(); m] } else { rows };
                StepConfig::De(DeConfig {
                    f: rows.iter().map(|r| r[0]).collect(),
                    cr: rows.iter().map(|r| r[1]).collect(),
                })
            }
            OptimizerKind::Pso => {
                // per-individual PSO decisions are averaged into one swarm setting
                let n = rows.len() as f64;
                let mean = |k: usize| rows.iter().map(|r| r[k]).sum::<f64>() / n;
                StepConfig::Pso(PsoConfig {
                    w: mean(0),
                    c1: mean(1),
                    c2: mean(2),
                })
            }
        })
    }
}
