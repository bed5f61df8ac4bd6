//! Flat parameter codec.
//!
//! Layout order: `w_emb`, then for each Ts-Attn layer the inter-solution block
//! followed by the intra-solution block, each block as
//! `wq, wk, wv, wo, ln1.gain, ln1.bias, ff1.w, ff1.b, ff2.w, ff2.b, ln2.gain, ln2.bias`.
//! Matrices are stored row-major with shape `(in, out)`.
//!
//! Parameter count: `2h + l * 2 * (4h^2 + 2h + (h*f + f) + (f*h + h) + 2h)`
//! where `f` is the feed-forward inner width. For `h = f = 16, l = 1` this is 3296.

use serde::{Deserialize, Serialize};

use super::{AnalyzerConfig, AttnParams, Network, TsAttnLayer};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    fn new(name: String, shape: &[usize]) -> Self {
        Self {
            name,
            shape: shape.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Flat weight vector plus the layout describing how to cut it up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub layout: Vec<TensorSpec>,
}

impl ParamVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn block_layout(prefix: &str, h: usize, f: usize) -> Vec<TensorSpec> {
    let t = |n: &str, shape: &[usize]| TensorSpec::new(format!("{prefix}.{n}"), shape);
    vec![
        t("wq", &[h, h]),
        t("wk", &[h, h]),
        t("wv", &[h, h]),
        t("wo", &[h, h]),
        t("ln1.gain", &[h]),
        t("ln1.bias", &[h]),
        t("ff1.w", &[h, f]),
        t("ff1.b", &[f]),
        t("ff2.w", &[f, h]),
        t("ff2.b", &[h]),
        t("ln2.gain", &[h]),
        t("ln2.bias", &[h]),
    ]
}

pub fn layout(cfg: &AnalyzerConfig) -> Vec<TensorSpec> {
    let h = cfg.hidden_dim;
    let f = cfg.ff_inner();
    let mut out = vec![TensorSpec::new("w_emb".into(), &[2, h])];
    for l in 0..cfg.num_layers {
        out.extend(block_layout(&format!("layer{l}.inter"), h, f));
        out.extend(block_layout(&format!("layer{l}.intra"), h, f));
    }
    out
}

/// Closed-form parameter count, see the module docs.
pub fn param_count_formula(cfg: &AnalyzerConfig) -> usize {
    let h = cfg.hidden_dim;
    let f = cfg.ff_inner();
    let block = 4 * h * h + 2 * h + (h * f + f) + (f * h + h) + 2 * h;
    2 * h + cfg.num_layers * 2 * block
}

struct Reader<'a> {
    values: &'a [f64],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Vec<f64> {
        let out = self.values[self.pos..self.pos + n].to_vec();
        self.pos += n;
        out
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        Matrix::from_vec(rows, cols, self.take(rows * cols)).expect("length checked up front")
    }

    fn block(&mut self, h: usize, f: usize) -> AttnParams {
        AttnParams {
            wq: self.matrix(h, h),
            wk: self.matrix(h, h),
            wv: self.matrix(h, h),
            wo: self.matrix(h, h),
            ln1_gain: self.take(h),
            ln1_bias: self.take(h),
            ff1_w: self.matrix(h, f),
            ff1_b: self.take(f),
            ff2_w: self.matrix(f, h),
            ff2_b: self.take(h),
            ln2_gain: self.take(h),
            ln2_bias: self.take(h),
        }
    }
}

fn push_block(out: &mut Vec<f64>, b: &AttnParams) {
    for m in [&b.wq, &b.wk, &b.wv, &b.wo] {
        out.extend_from_slice(m.as_slice());
    }
    out.extend_from_slice(&b.ln1_gain);
    out.extend_from_slice(&b.ln1_bias);
    out.extend_from_slice(b.ff1_w.as_slice());
    out.extend_from_slice(&b.ff1_b);
    out.extend_from_slice(b.ff2_w.as_slice());
    out.extend_from_slice(&b.ff2_b);
    out.extend_from_slice(&b.ln2_gain);
    out.extend_from_slice(&b.ln2_bias);
}

pub fn encode_params(net: &Network) -> ParamVector {
    let cfg = net.config();
    let mut values = Vec::with_capacity(param_count_formula(cfg));
    values.extend_from_slice(net.w_emb.as_slice());
    for layer in &net.layers {
        push_block(&mut values, &layer.inter);
        push_block(&mut values, &layer.intra);
    }
    ParamVector {
        values,
        layout: layout(cfg),
    }
}

pub fn decode_params(values: &[f64], cfg: &AnalyzerConfig) -> Result<Network> {
    cfg.validate()?;
    let expected = param_count_formula(cfg);
    if values.len() != expected {
        return Err(Error::ParamLength {
            expected,
            actual: values.len(),
        });
    }
    let h = cfg.hidden_dim;
    let f = cfg.ff_inner();
    let mut r = Reader { values, pos: 0 };
    let w_emb = r.matrix(2, h);
    let layers = (0..cfg.num_layers)
        .map(|_| TsAttnLayer {
            inter: r.block(h, f),
            intra: r.block(h, f),
        })
        .collect();
    debug_assert_eq!(r.pos, expected);
    Ok(Network {
        config: cfg.clone(),
        w_emb,
        layers,
    })
}
