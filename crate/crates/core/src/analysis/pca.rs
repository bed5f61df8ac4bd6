use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Principal-component projection of a data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `n x out_dim` scores.
    pub points: Matrix,
    /// `out_dim x k`, one unit-length loading vector per row.
    pub components: Matrix,
    /// Variance captured by each component, in decreasing order.
    pub variances: Vec<f64>,
    pub mean: Vec<f64>,
}

/// Projects centered `rows` onto their top `out_dim` principal components.
/// Each component is oriented so that its largest-magnitude loading is
/// positive.
pub fn pca_project(rows: &Matrix, out_dim: usize) -> Result<Projection> {
    let (n, k) = (rows.rows(), rows.cols());
    if out_dim == 0 || out_dim > k {
        return Err(Error::config(format!("pca: out_dim {out_dim} must be in 1..={k}")));
    }
    if n <= out_dim {
        return Err(Error::config(format!("pca: need more than {out_dim} rows, got {n}")));
    }
    let mean = rows.column_means();
    let centered = DMatrix::from_fn(n, k, |i, j| rows.get(i, j) - mean[j]);
    let scale = rows.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let spread = centered.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if spread <= 1e-12 * scale.max(1e-300) || spread == 0.0 {
        return Err(Error::Numerical("pca: data has zero variance".into()));
    }
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Matrix::zeros(out_dim, k);
    let mut variances = Vec::with_capacity(out_dim);
    for (c, &idx) in order.iter().take(out_dim).enumerate() {
        let v = eig.eigenvectors.column(idx);
        let mut lead = 0;
        for j in 1..k {
            if v[j].abs() > v[lead].abs() {
                lead = j;
            }
        }
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..k {
            components.set(c, j, sign * v[j]);
        }
        variances.push(eig.eigenvalues[idx].max(0.0));
    }
    let mut points = Matrix::zeros(n, out_dim);
    for i in 0..n {
        for c in 0..out_dim {
            let s: f64 = (0..k).map(|j| centered[(i, j)] * components.get(c, j)).sum();
            points.set(i, c, s);
        }
    }
    Ok(Projection {
        points,
        components,
        variances,
        mean,
    })
}
