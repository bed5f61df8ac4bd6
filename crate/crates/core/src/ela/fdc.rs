use crate::matrix::{dist, Matrix};
use crate::stats;

use super::{best_index, pairwise_distances};

pub const FDC_NAMES: [&str; 6] = [
    "fdc.corr",
    "fdc.dist_mean",
    "fdc.dist_std",
    "fdc.obj_diff_mean",
    "fdc.obj_diff_std",
    "fdc.best_to_centroid",
];

/// Fitness-distance features. `diag` is the length of the box diagonal used to
/// normalize the best-to-centroid distance.
///
/// # Panics
/// If `x.rows() != y.len()` or fewer than 3 samples are given.
pub fn fdc_features(x: &Matrix, y: &[f64], diag: f64) -> Vec<Option<f64>> {
    let m = x.rows();
    assert_eq!(m, y.len(), "fdc: X and y disagree on sample count");
    assert!(m >= 3, "fdc: need at least 3 samples");
    let best = best_index(y);
    let to_best: Vec<f64> = (0..m).map(|i| dist(x.row(i), x.row(best))).collect();
    let corr = stats::pearson(y, &to_best);

    let pd = pairwise_distances(x);
    let mut od = Vec::with_capacity(pd.len());
    for i in 0..m {
        for j in i + 1..m {
            od.push((y[i] - y[j]).abs());
        }
    }
    let centroid = x.column_means();
    let bc = dist(x.row(best), &centroid) / diag;
    vec![
        corr,
        Some(stats::mean(&pd)),
        Some(stats::std(&pd)),
        Some(stats::mean(&od)),
        Some(stats::std(&od)),
        Some(bc),
    ]
}
