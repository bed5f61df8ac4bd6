use nalgebra::{DMatrix, DVector};

use crate::matrix::Matrix;

pub const META_NAMES: [&str; 9] = [
    "meta.lin_simple.adj_r2",
    "meta.lin_simple.intercept",
    "meta.lin_simple.coef_min",
    "meta.lin_simple.coef_max",
    "meta.lin_simple.coef_max_by_min",
    "meta.lin_w_interact.adj_r2",
    "meta.quad_simple.adj_r2",
    "meta.quad_simple.cond",
    "meta.quad_w_interact.adj_r2",
];

#[derive(Clone, Copy)]
enum Terms {
    Linear,
    LinearInteract,
    Quadratic,
    QuadraticInteract,
}

fn predictors(d: usize, t: Terms) -> usize {
    match t {
        Terms::Linear => d,
        Terms::LinearInteract => d + d * (d - 1) / 2,
        Terms::Quadratic => 2 * d,
        Terms::QuadraticInteract => d + d * (d + 1) / 2,
    }
}

fn design(x: &Matrix, t: Terms) -> DMatrix<f64> {
    let (m, d) = (x.rows(), x.cols());
    let p = predictors(d, t);
    let mut a = DMatrix::zeros(m, p + 1);
    for i in 0..m {
        let r = x.row(i);
        a[(i, 0)] = 1.0;
        let mut c = 1;
        for &v in r {
            a[(i, c)] = v;
            c += 1;
        }
        match t {
            Terms::Linear => {}
            Terms::Quadratic => {
                for &v in r {
                    a[(i, c)] = v * v;
                    c += 1;
                }
            }
            Terms::LinearInteract | Terms::QuadraticInteract => {
                let diag = matches!(t, Terms::QuadraticInteract);
                for j in 0..d {
                    for k in j..d {
                        if k == j && !diag {
                            continue;
                        }
                        a[(i, c)] = r[j] * r[k];
                        c += 1;
                    }
                }
            }
        }
    }
    a
}

struct Fit {
    coef: DVector<f64>,
    adj_r2: Option<f64>,
}

/// Least-squares fit; `None` when there are not enough samples for an
/// adjusted R^2 (`m - p - 1 <= 0`).
fn fit(x: &Matrix, y: &[f64], t: Terms) -> Option<Fit> {
    let m = x.rows();
    let p = predictors(x.cols(), t);
    if m <= p + 1 {
        return None;
    }
    let a = design(x, t);
    let b = DVector::from_column_slice(y);
    let coef = a.clone().svd(true, true).solve(&b, 1e-12).ok()?;
    let resid = &a * &coef - &b;
    let sse = resid.norm_squared();
    let mu = y.iter().sum::<f64>() / m as f64;
    let sst: f64 = y.iter().map(|v| (v - mu) * (v - mu)).sum();
    let adj_r2 = (sst > 0.0).then(|| {
        let r2 = 1.0 - sse / sst;
        1.0 - (1.0 - r2) * (m as f64 - 1.0) / (m as f64 - p as f64 - 1.0)
    });
    Some(Fit { coef, adj_r2 })
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Regression meta-model features: adjusted R^2 of linear and quadratic
/// models with and without interactions, plus linear coefficient summaries
/// and the quadratic condition ratio.
pub fn meta_model_features(x: &Matrix, y: &[f64]) -> Vec<Option<f64>> {
    let d = x.cols();
    let mut out = vec![None; META_NAMES.len()];
    if let Some(f) = fit(x, y, Terms::Linear) {
        let abs: Vec<f64> = f.coef.iter().skip(1).map(|c| c.abs()).collect();
        let lo = abs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = abs.iter().cloned().fold(0.0, f64::max);
        out[0] = f.adj_r2;
        out[1] = Some(f.coef[0]);
        out[2] = Some(lo);
        out[3] = Some(hi);
        out[4] = ratio(hi, lo);
    }
    if d >= 2 {
        out[5] = fit(x, y, Terms::LinearInteract).and_then(|f| f.adj_r2);
    }
    if let Some(f) = fit(x, y, Terms::Quadratic) {
        let abs: Vec<f64> = f.coef.iter().skip(1 + d).map(|c| c.abs()).collect();
        let lo = abs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = abs.iter().cloned().fold(0.0, f64::max);
        out[6] = f.adj_r2;
        out[7] = ratio(hi, lo);
    }
    out[8] = fit(x, y, Terms::QuadraticInteract).and_then(|f| f.adj_r2);
    out
}
