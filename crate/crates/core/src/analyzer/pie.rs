//! Population information embedding: min-max normalization followed by a
//! bias-free linear map to the hidden width.

use super::{Observation, Tensor3};
use crate::matrix::Matrix;

/// Normalizes an observation into a `d x m x 2` tensor holding
/// `(position in box, objective rank in [0, 1])` per dimension and candidate.
/// When all objective values are equal the fitness channel is 0.5.
pub fn pie_normalize(obs: &Observation) -> Tensor3 {
    let m = obs.x.rows();
    let d = obs.x.cols();
    let (ymin, ymax) = obs
        .y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = ymax - ymin;
    let fit: Vec<f64> = obs
        .y
        .iter()
        .map(|&v| {
            if range > 0.0 && range.is_finite() {
                ((v - ymin) / range).clamp(0.0, 1.0)
            } else {
                0.5
            }
        })
        .collect();
    let mut out = Tensor3::zeros(d, m, 2);
    for j in 0..d {
        let width = obs.ub[j] - obs.lb[j];
        for i in 0..m {
            let pos = ((obs.x.get(i, j) - obs.lb[j]) / width).clamp(0.0, 1.0);
            let cell = out.cell_mut(j, i);
            cell[0] = pos;
            cell[1] = fit[i];
        }
    }
    out
}

/// `E[j, i, :] = normalized[j, i, :] * w_emb`.
pub fn embed(normalized: &Tensor3, w_emb: &Matrix) -> Tensor3 {
    let (d, m, c) = normalized.shape();
    debug_assert_eq!(c, w_emb.rows());
    let h = w_emb.cols();
    let mut out = Tensor3::zeros(d, m, h);
    let w = w_emb.as_slice();
    for j in 0..d {
        for i in 0..m {
            let src = normalized.cell(j, i);
            let dst = out.cell_mut(j, i);
            for (k, &s) in src.iter().enumerate() {
                for (o, &wv) in dst.iter_mut().zip(&w[k * h..(k + 1) * h]) {
                    *o += s * wv;
                }
            }
        }
    }
    out
}
