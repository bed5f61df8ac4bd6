use nalgebra::{DMatrix, DVector};

use crate::matrix::Matrix;
use crate::stats;

pub const LEVEL_QUANTILES: [f64; 3] = [0.1, 0.25, 0.5];
pub const LEVEL_FOLDS: usize = 10;
/// Ridge added to every covariance estimate.
pub const COV_RIDGE: f64 = 1e-6;

pub fn level_set_names() -> Vec<String> {
    let mut names = Vec::new();
    for q in LEVEL_QUANTILES {
        let tag = format!("{:02}", (q * 100.0).round() as u32);
        names.push(format!("level.mmce_lda_{tag}"));
        names.push(format!("level.mmce_qda_{tag}"));
        names.push(format!("level.lda_qda_{tag}"));
    }
    names
}

struct Gaussian {
    mean: DVector<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    log_det: f64,
    log_prior: f64,
}

impl Gaussian {
    fn score(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let sol = self.chol.solve(&diff);
        self.log_prior - 0.5 * self.log_det - 0.5 * diff.dot(&sol)
    }
}

fn mean_of(rows: &[DVector<f64>]) -> DVector<f64> {
    let mut s = DVector::zeros(rows[0].len());
    for r in rows {
        s += r;
    }
    s / rows.len() as f64
}

fn scatter(rows: &[DVector<f64>], mean: &DVector<f64>) -> DMatrix<f64> {
    let d = mean.len();
    let mut s = DMatrix::zeros(d, d);
    for r in rows {
        let c = r - mean;
        s.ger(1.0, &c, &c, 1.0);
    }
    s
}

fn gaussian(mean: DVector<f64>, mut cov: DMatrix<f64>, prior: f64) -> Option<Gaussian> {
    for k in 0..cov.nrows() {
        cov[(k, k)] += COV_RIDGE;
    }
    let chol = cov.cholesky()?;
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Some(Gaussian {
        mean,
        chol,
        log_det,
        log_prior: prior.ln(),
    })
}

/// Train on the given rows and return predicted labels for `test`.
fn classify(
    train: &[(DVector<f64>, bool)],
    test: &[DVector<f64>],
    quadratic: bool,
) -> Option<Vec<bool>> {
    let pos: Vec<DVector<f64>> = train.iter().filter(|r| r.1).map(|r| r.0.clone()).collect();
    let neg: Vec<DVector<f64>> = train.iter().filter(|r| !r.1).map(|r| r.0.clone()).collect();
    if pos.is_empty() || neg.is_empty() {
        let label = !pos.is_empty();
        return Some(vec![label; test.len()]);
    }
    let n = train.len() as f64;
    let (mp, mn) = (mean_of(&pos), mean_of(&neg));
    let (sp, sn) = (scatter(&pos, &mp), scatter(&neg, &mn));
    let (gp, gn) = if quadratic {
        let cp = sp / (pos.len() as f64);
        let cn = sn / (neg.len() as f64);
        (
            gaussian(mp, cp, pos.len() as f64 / n)?,
            gaussian(mn, cn, neg.len() as f64 / n)?,
        )
    } else {
        let pooled = (sp + sn) / n;
        (
            gaussian(mp, pooled.clone(), pos.len() as f64 / n)?,
            gaussian(mn, pooled, neg.len() as f64 / n)?,
        )
    };
    Some(test.iter().map(|x| gp.score(x) > gn.score(x)).collect())
}

/// Cross-validated misclassification rate; sample `i` is in fold `i % 10`.
fn cv_error(x: &[DVector<f64>], labels: &[bool], quadratic: bool) -> Option<f64> {
    let m = x.len();
    let folds = LEVEL_FOLDS.min(m);
    let mut wrong = 0usize;
    for f in 0..folds {
        let train: Vec<(DVector<f64>, bool)> = (0..m)
            .filter(|i| i % folds != f)
            .map(|i| (x[i].clone(), labels[i]))
            .collect();
        let idx: Vec<usize> = (0..m).filter(|i| i % folds == f).collect();
        let test: Vec<DVector<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
        let pred = classify(&train, &test, quadratic)?;
        wrong += idx.iter().zip(&pred).filter(|(i, p)| labels[**i] != **p).count();
    }
    Some(wrong as f64 / m as f64)
}

/// Level-set features: samples are split at the `q`-quantile of `y` and
/// linear and quadratic discriminant classifiers are scored by 10-fold
/// cross-validation.
pub fn level_set_features(x: &Matrix, y: &[f64]) -> Vec<Option<f64>> {
    let rows: Vec<DVector<f64>> = x.iter_rows().map(DVector::from_column_slice).collect();
    let mut out = Vec::with_capacity(3 * LEVEL_QUANTILES.len());
    for q in LEVEL_QUANTILES {
        let thr = stats::quantile(y, q);
        let labels: Vec<bool> = y.iter().map(|v| *v < thr).collect();
        let npos = labels.iter().filter(|b| **b).count();
        if npos == 0 || npos == labels.len() || rows.len() < 2 {
            out.extend([None, None, None]);
            continue;
        }
        let lda = cv_error(&rows, &labels, false);
        let qda = cv_error(&rows, &labels, true);
        let r = match (lda, qda) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        };
        out.extend([lda, qda, r]);
    }
    out
}
