use serde::{Deserialize, Serialize};

use crate::matrix::{dist, Matrix};
use crate::stats;

use super::{best_index, pairwise_distances};

pub const HANDCRAFTED_NAMES: [&str; 8] = [
    "hc.budget_used",
    "hc.best_ratio",
    "hc.y_std",
    "hc.dist_to_best",
    "hc.pairwise_dist",
    "hc.stagnation",
    "hc.last_improvement",
    "hc.centroid_to_best",
];

/// State of a running optimizer as seen by the hand-crafted extractor.
#[derive(Debug, Clone, Copy)]
pub struct RunContext<'a> {
    pub x: &'a Matrix,
    pub y: &'a [f64],
    pub lb: &'a [f64],
    pub ub: &'a [f64],
    /// Completed decision steps.
    pub step: usize,
    pub horizon: usize,
    /// Best-so-far objective after each step; index 0 is the initial
    /// population. Must hold `step + 1` entries.
    pub best_history: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandcraftedState(pub [f64; 8]);

impl HandcraftedState {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Eight population-level features: budget fraction, best objective relative
/// to the initial best, spread of normalized objectives, three distance
/// summaries over the box diagonal, stagnation, and last-step improvement.
pub fn handcrafted_state(ctx: &RunContext<'_>) -> HandcraftedState {
    let (x, y) = (ctx.x, ctx.y);
    let m = x.rows();
    let horizon = ctx.horizon.max(1) as f64;
    let diag = ctx
        .lb
        .iter()
        .zip(ctx.ub)
        .map(|(l, u)| (u - l) * (u - l))
        .sum::<f64>()
        .sqrt();

    let budget = (ctx.step as f64 / horizon).clamp(0.0, 1.0);

    let hist = ctx.best_history;
    let b0 = hist.first().copied().unwrap_or(0.0);
    let bt = hist.last().copied().unwrap_or(0.0);
    let best_ratio = if b0 != 0.0 { (bt / b0).clamp(-1.0, 1.0) } else { 0.0 };

    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y_std = if hi > lo {
        let z: Vec<f64> = y.iter().map(|v| (v - lo) / (hi - lo)).collect();
        stats::std(&z)
    } else {
        0.0
    };

    let best = best_index(y);
    let to_best = (0..m).map(|i| dist(x.row(i), x.row(best))).sum::<f64>() / m as f64 / diag;
    let pairwise = if m >= 2 { stats::mean(&pairwise_distances(x)) / diag } else { 0.0 };
    let centroid = dist(&x.column_means(), x.row(best)) / diag;

    let mut last_improve = 0;
    for k in 1..hist.len() {
        if hist[k] < hist[k - 1] {
            last_improve = k;
        }
    }
    let stagnation = ((hist.len().saturating_sub(1) - last_improve) as f64 / horizon).clamp(0.0, 1.0);

    let improvement = if hist.len() >= 2 {
        let prev = hist[hist.len() - 2];
        if prev != 0.0 {
            ((prev - bt) / prev.abs()).clamp(0.0, 1.0)
        } else {
            0.0
        }
    } else {
        0.0
    };

    HandcraftedState([
        budget,
        finite_or_zero(best_ratio),
        finite_or_zero(y_std),
        finite_or_zero(to_best.min(1.0)),
        finite_or_zero(pairwise.min(1.0)),
        stagnation,
        finite_or_zero(improvement),
        finite_or_zero(centroid.min(1.0)),
    ])
}
