use crate::matrix::Matrix;
use crate::stats;

use super::pairwise_distances;

pub const DEFAULT_QUANTILES: [f64; 4] = [0.02, 0.05, 0.1, 0.25];

pub fn dispersion_names(quantiles: &[f64]) -> Vec<String> {
    let mut names = Vec::with_capacity(2 * quantiles.len());
    for q in quantiles {
        let tag = format!("{:02}", (q * 100.0).round() as u32);
        names.push(format!("disp.ratio_{tag}"));
        names.push(format!("disp.diff_{tag}"));
    }
    names
}

/// Size of the best-`q` subset, `ceil(q * m)` with a guard against rounding
/// up exact products.
pub fn subset_size(q: f64, m: usize) -> usize {
    ((q * m as f64) - 1e-9).ceil().max(0.0) as usize
}

/// For each quantile, the ratio and difference between the mean pairwise
/// distance of the best `ceil(q m)` samples and that of the whole sample.
/// Ties in `y` are ordered by index.
pub fn dispersion_features(x: &Matrix, y: &[f64], quantiles: &[f64]) -> Vec<Option<f64>> {
    let m = x.rows();
    assert_eq!(m, y.len(), "dispersion: X and y disagree on sample count");
    let d_all = stats::mean(&pairwise_distances(x));
    let order = stats::argsort(y);
    let mut out = Vec::with_capacity(2 * quantiles.len());
    for &q in quantiles {
        let n = subset_size(q, m).min(m);
        if n < 2 {
            out.extend([None, None]);
            continue;
        }
        let sub = x.select_rows(&order[..n]);
        let d_q = stats::mean(&pairwise_distances(&sub));
        let ratio = (d_all > 0.0).then(|| d_q / d_all);
        out.push(ratio);
        out.push(Some(d_q - d_all));
    }
    out
}
