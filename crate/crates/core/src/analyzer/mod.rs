//! Neural landscape analyser.
//!
//! An observation (population positions and objective values) is normalized
//! and embedded into a `d x m x h` tensor, passed through `l` two-stage
//! attention layers (attention across candidates within each dimension, then
//! across dimensions within each candidate with sinusoidal position
//! encodings), and mean-pooled into per-candidate features `F_indiv` (`m x h`)
//! and a population feature `F_pop` (`h`).

mod attention;
pub mod checkpoint;
mod codec;
mod pie;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use attention::{attn_block, positional_encoding, AttnParams, LN_EPS};
pub use checkpoint::{AnalyzerCheckpoint, Provenance};
pub use codec::{decode_params, encode_params, layout, param_count_formula, ParamVector, TensorSpec};
pub use pie::{embed, pie_normalize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::Rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzerConfig {
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    #[serde(default = "one")]
    pub num_heads: usize,
    #[serde(default = "one")]
    pub num_layers: usize,
    /// Feed-forward inner width; `None` means `hidden_dim`.
    #[serde(default)]
    pub ff_inner_dim: Option<usize>,
}

fn default_hidden() -> usize {
    16
}

fn one() -> usize {
    1
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 16,
            num_heads: 1,
            num_layers: 1,
            ff_inner_dim: None,
        }
    }
}

impl AnalyzerConfig {
    pub fn new(hidden_dim: usize, num_heads: usize, num_layers: usize) -> Self {
        Self {
            hidden_dim,
            num_heads,
            num_layers,
            ff_inner_dim: None,
        }
    }

    pub fn ff_inner(&self) -> usize {
        self.ff_inner_dim.unwrap_or(self.hidden_dim)
    }

    pub fn param_count(&self) -> usize {
        param_count_formula(self)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden_dim;
        if h == 0 || self.num_heads == 0 || self.num_layers == 0 || self.ff_inner() == 0 {
            return Err(Error::config("analyzer widths, heads and layers must be positive"));
        }
        if !h.is_multiple_of(self.num_heads) {
            return Err(Error::config(format!(
                "hidden_dim {h} is not divisible by num_heads {}",
                self.num_heads
            )));
        }
        if !h.is_multiple_of(2) {
            return Err(Error::config(format!("hidden_dim {h} must be even for the positional encoding")));
        }
        Ok(())
    }
}

/// One optimization step's population.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

impl Observation {
    pub fn new(x: Matrix, y: Vec<f64>, lb: Vec<f64>, ub: Vec<f64>) -> Result<Self> {
        let obs = Self { x, y, lb, ub };
        obs.validate()?;
        Ok(obs)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, d) = (self.x.rows(), self.x.cols());
        if m < 2 {
            return Err(Error::shape(format!("observation needs at least 2 candidates, got {m}")));
        }
        if d == 0 {
            return Err(Error::shape("observation has zero dimensions"));
        }
        if self.y.len() != m {
            return Err(Error::shape(format!("{m} candidates but {} objective values", self.y.len())));
        }
        if self.lb.len() != d || self.ub.len() != d {
            return Err(Error::shape(format!("bounds must have length {d}")));
        }
        if let Some(j) = (0..d).find(|&j| !(self.lb[j] < self.ub[j])) {
            return Err(Error::shape(format!("bound {j}: lower {} not below upper {}", self.lb[j], self.ub[j])));
        }
        Ok(())
    }

    pub fn population(&self) -> usize {
        self.x.rows()
    }

    pub fn dimension(&self) -> usize {
        self.x.cols()
    }
}

/// Dense three-axis tensor, last axis contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    shape: (usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(a: usize, b: usize, c: usize) -> Self {
        Self {
            shape: (a, b, c),
            data: vec![0.0; a * b * c],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    #[inline]
    pub fn cell(&self, a: usize, b: usize) -> &[f64] {
        let (_, nb, nc) = self.shape;
        let start = (a * nb + b) * nc;
        &self.data[start..start + nc]
    }

    #[inline]
    pub fn cell_mut(&mut self, a: usize, b: usize) -> &mut [f64] {
        let (_, nb, nc) = self.shape;
        let start = (a * nb + b) * nc;
        &mut self.data[start..start + nc]
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.cell(a, b)[c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Swaps the first two axes.
    pub fn transpose01(&self) -> Tensor3 {
        let (na, nb, nc) = self.shape;
        let mut out = Tensor3::zeros(nb, na, nc);
        for a in 0..na {
            for b in 0..nb {
                out.cell_mut(b, a).copy_from_slice(self.cell(a, b));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    /// `m x h`
    pub indiv: Matrix,
    /// `h`
    pub pop: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsAttnLayer {
    pub inter: AttnParams,
    pub intra: AttnParams,
}

/// The decoded analyser. Immutable; forward passes can run concurrently.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub(crate) config: AnalyzerConfig,
    pub w_emb: Matrix,
    pub layers: Vec<TsAttnLayer>,
}

// Below this many multiply-adds per attention stage the slices run serially.
const PARALLEL_WORK: usize = 1 << 20;

impl Network {
    pub fn config(&self) -> &AnalyzerConfig {
        &self.config
    }

    pub fn width(&self) -> usize {
        self.config.hidden_dim
    }

    pub fn encode(&self) -> ParamVector {
        encode_params(self)
    }

    pub fn decode(values: &[f64], cfg: &AnalyzerConfig) -> Result<Self> {
        decode_params(values, cfg)
    }

    /// Random network with weights uniform in `[-1, 1]`.
    pub fn random(cfg: &AnalyzerConfig, rng: &mut Rng) -> Result<Self> {
        let values: Vec<f64> = (0..param_count_formula(cfg))
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        decode_params(&values, cfg)
    }

    pub fn forward(&self, obs: &Observation) -> FeatureSet {
        let e = embed(&pie_normalize(obs), &self.w_emb);
        self.ts_attn_forward(&e)
    }

    /// Two-stage attention over an embedded `d x m x h` tensor.
    pub fn ts_attn_forward(&self, e: &Tensor3) -> FeatureSet {
        let (d, m, h) = e.shape();
        let heads = self.config.num_heads;
        let pe = positional_encoding(d, h);
        // d x m x h
        let mut cur = e.clone();
        let mut per_candidate = Tensor3::zeros(m, d, h);
        for (l, layer) in self.layers.iter().enumerate() {
            if l > 0 {
                cur = per_candidate.transpose01();
            }
            run_slices(&mut cur, &layer.inter, heads, d * m * m * h);
            per_candidate = cur.transpose01();
            for i in 0..m {
                for j in 0..d {
                    for (v, p) in per_candidate.cell_mut(i, j).iter_mut().zip(pe.row(j)) {
                        *v += p;
                    }
                }
            }
            run_slices(&mut per_candidate, &layer.intra, heads, m * d * d * h);
        }

        let mut indiv = Matrix::zeros(m, h);
        for i in 0..m {
            let row = indiv.row_mut(i);
            for j in 0..d {
                for (r, v) in row.iter_mut().zip(per_candidate.cell(i, j)) {
                    *r += v;
                }
            }
            row.iter_mut().for_each(|r| *r /= d as f64);
        }
        let pop = indiv.column_means();
        FeatureSet { indiv, pop }
    }
}

/// Applies `block` to every leading-axis slice of `t` in place.
fn run_slices(t: &mut Tensor3, block: &AttnParams, heads: usize, work: usize) {
    let (_, len, h) = t.shape();
    let chunk = len * h;
    if work >= PARALLEL_WORK {
        t.data
            .par_chunks_mut(chunk)
            .for_each(|s| attention::attn_block_in_place(s, len, block, heads));
    } else {
        t.data
            .chunks_mut(chunk)
            .for_each(|s| attention::attn_block_in_place(s, len, block, heads));
    }
}
