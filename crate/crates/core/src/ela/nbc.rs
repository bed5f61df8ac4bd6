use crate::matrix::{dist, Matrix};
use crate::stats;

pub const NBC_NAMES: [&str; 3] = ["nbc.nb_nn_ratio", "nbc.ratio_std", "nbc.nn_rank_corr"];

/// `true` when sample `j` is better than `i`: lower objective, ties broken by
/// the lower index.
fn better(y: &[f64], j: usize, i: usize) -> bool {
    y[j] < y[i] || (y[j] == y[i] && j < i)
}

/// Nearest-neighbour distance for every sample and nearest-better distance
/// (`None` for the best sample).
pub fn nearest_better_distances(x: &Matrix, y: &[f64]) -> (Vec<f64>, Vec<Option<f64>>) {
    let m = x.rows();
    let mut nn = vec![f64::INFINITY; m];
    let mut nb = vec![None::<f64>; m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let dd = dist(x.row(i), x.row(j));
            nn[i] = nn[i].min(dd);
            if better(y, j, i) && nb[i].is_none_or(|b| dd < b) {
                nb[i] = Some(dd);
            }
        }
    }
    (nn, nb)
}

/// Nearest-better clustering features: mean nb over mean nn, std of the
/// per-sample nb/nn ratios, and correlation of nn with the objective rank.
pub fn nbc_features(x: &Matrix, y: &[f64]) -> Vec<Option<f64>> {
    let m = x.rows();
    assert_eq!(m, y.len(), "nbc: X and y disagree on sample count");
    assert!(m >= 2, "nbc: need at least 2 samples");
    let (nn, nb) = nearest_better_distances(x, y);
    let nb_vals: Vec<f64> = nb.iter().flatten().copied().collect();
    let mean_nn = stats::mean(&nn);
    let ratio = (mean_nn > 0.0).then(|| stats::mean(&nb_vals) / mean_nn);
    let mut ratios = Vec::with_capacity(m);
    let mut ratio_std = None;
    if nn.iter().zip(&nb).all(|(a, b)| b.is_none() || *a > 0.0) {
        for (a, b) in nn.iter().zip(&nb) {
            if let Some(b) = b {
                ratios.push(b / a);
            }
        }
        ratio_std = Some(stats::std(&ratios));
    }
    let rank_corr = stats::pearson(&nn, &stats::ordinal_ranks(y));
    vec![ratio, ratio_std, rank_corr]
}
