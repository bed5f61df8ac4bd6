//! The attention block and its numeric building blocks.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

pub const LN_EPS: f64 = 1e-5;

/// Weights of one attention block. Projections carry no bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttnParams {
    pub wq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
    pub wo: Matrix,
    pub ln1_gain: Vec<f64>,
    pub ln1_bias: Vec<f64>,
    pub ff1_w: Matrix,
    pub ff1_b: Vec<f64>,
    pub ff2_w: Matrix,
    pub ff2_b: Vec<f64>,
    pub ln2_gain: Vec<f64>,
    pub ln2_bias: Vec<f64>,
}

/// `out[L x n] = x[L x k] * w[k x n] (+ bias)`, written into `out`.
pub(crate) fn matmul_into(x: &[f64], rows: usize, w: &Matrix, bias: Option<&[f64]>, out: &mut [f64]) {
    let k = w.rows();
    let n = w.cols();
    debug_assert_eq!(x.len(), rows * k);
    debug_assert_eq!(out.len(), rows * n);
    let wd = w.as_slice();
    for i in 0..rows {
        let o = &mut out[i * n..(i + 1) * n];
        match bias {
            Some(b) => o.copy_from_slice(b),
            None => o.fill(0.0),
        }
        let xi = &x[i * k..(i + 1) * k];
        for (p, &a) in xi.iter().enumerate() {
            let wr = &wd[p * n..(p + 1) * n];
            for (ov, &wv) in o.iter_mut().zip(wr) {
                *ov += a * wv;
            }
        }
    }
}

/// Dot product with independent partial sums, which keeps the loop from
/// serializing on a single accumulator.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Layer normalization of every length-`h` row in place.
pub(crate) fn layer_norm_rows(x: &mut [f64], h: usize, gain: &[f64], bias: &[f64]) {
    for row in x.chunks_exact_mut(h) {
        let mean = row.iter().sum::<f64>() / h as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / h as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        for ((v, g), b) in row.iter_mut().zip(gain).zip(bias) {
            *v = (*v - mean) * inv * g + b;
        }
    }
}

/// Applies one attention block to `x` (`L x h`, row-major) in place:
/// `g = LN(x + MHSA(x))`, `out = LN(g + FF2(ReLU(FF1(g))))`.
pub(crate) fn attn_block_in_place(x: &mut [f64], len: usize, p: &AttnParams, heads: usize) {
    let h = p.wq.rows();
    let dk = h / heads;
    let scale = 1.0 / (dk as f64).sqrt();

    let mut q = vec![0.0; len * h];
    let mut k = vec![0.0; len * h];
    let mut v = vec![0.0; len * h];
    matmul_into(x, len, &p.wq, None, &mut q);
    matmul_into(x, len, &p.wk, None, &mut k);
    matmul_into(x, len, &p.wv, None, &mut v);

    let mut ctx = vec![0.0; len * h];
    let mut scores = vec![0.0; len];
    // per-head keys and values stored feature-major so the inner loops run
    // over contiguous candidates
    let mut kt = vec![0.0; dk * len];
    let mut vt = vec![0.0; dk * len];
    for head in 0..heads {
        let off = head * dk;
        for j in 0..len {
            for p in 0..dk {
                kt[p * len + j] = k[j * h + off + p];
                vt[p * len + j] = v[j * h + off + p];
            }
        }
        for i in 0..len {
            let qi = &q[i * h + off..i * h + off + dk];
            scores.fill(0.0);
            for (p, &qp) in qi.iter().enumerate() {
                let kr = &kt[p * len..(p + 1) * len];
                for (s, &kv) in scores.iter_mut().zip(kr) {
                    *s += qp * kv;
                }
            }
            let max = scores.iter().fold(f64::NEG_INFINITY, |a, &s| a.max(s)) * scale;
            let mut denom = 0.0;
            for s in scores.iter_mut() {
                *s = (*s * scale - max).exp();
                denom += *s;
            }
            let inv = 1.0 / denom;
            let c = &mut ctx[i * h + off..i * h + off + dk];
            for (p, cv) in c.iter_mut().enumerate() {
                let vr = &vt[p * len..(p + 1) * len];
                *cv = dot(&scores, vr) * inv;
            }
        }
    }

    // residual + LN
    matmul_into(&ctx, len, &p.wo, None, &mut q);
    for (xv, a) in x.iter_mut().zip(&q) {
        *xv += a;
    }
    layer_norm_rows(x, h, &p.ln1_gain, &p.ln1_bias);

    let f = p.ff1_w.cols();
    let mut hidden = vec![0.0; len * f];
    matmul_into(x, len, &p.ff1_w, Some(&p.ff1_b), &mut hidden);
    hidden.iter_mut().for_each(|v| *v = v.max(0.0));
    matmul_into(&hidden, len, &p.ff2_w, Some(&p.ff2_b), &mut k);
    for (xv, a) in x.iter_mut().zip(&k) {
        *xv += a;
    }
    layer_norm_rows(x, h, &p.ln2_gain, &p.ln2_bias);
}

/// Attention block on an `L x h` matrix.
pub fn attn_block(x: &Matrix, params: &AttnParams, num_heads: usize) -> Matrix {
    let mut out = x.clone();
    let len = x.rows();
    attn_block_in_place(out.as_mut_slice(), len, params, num_heads);
    out
}

/// Sinusoidal positional encoding, `d x h`:
/// `PE[pos, 2i] = sin(pos / 10000^(2i/h))`, `PE[pos, 2i+1] = cos(...)`.
pub fn positional_encoding(d: usize, h: usize) -> Matrix {
    let mut pe = Matrix::zeros(d, h);
    for pos in 0..d {
        for i in 0..h / 2 {
            let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / h as f64);
            pe.set(pos, 2 * i, angle.sin());
            pe.set(pos, 2 * i + 1, angle.cos());
        }
    }
    pe
}
