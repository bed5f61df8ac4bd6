use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{chi_mean, mu_eff, recombination_weights, standard_normal};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::seed::Rng;

/// Strategy constants of (separable) CMA-ES.
#[derive(Debug, Clone, Copy)]
pub struct CmaParams {
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c1: f64,
    pub c_mu: f64,
    pub chi: f64,
}

impl CmaParams {
    pub fn new(d: usize, n: usize, full: bool) -> Self {
        let w = recombination_weights(n);
        let me = mu_eff(&w);
        let df = d as f64;
        let c_sigma = (me + 2.0) / (df + me + 5.0);
        let d_sigma = 1.0 + 2.0 * (((me - 1.0) / (df + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + me / df) / (df + 4.0 + 2.0 * me / df);
        let mut c1 = 2.0 / ((df + 1.3).powi(2) + me);
        let mut c_mu = (2.0 * (me - 2.0 + 1.0 / me) / ((df + 2.0).powi(2) + me)).min(1.0 - c1);
        if !full {
            // diagonal learning rates are larger by (D + 2) / 3
            let f = (df + 2.0) / 3.0;
            c1 = (c1 * f).min(1.0);
            c_mu = (c_mu * f).min(1.0 - c1);
        }
        Self {
            mu_eff: me,
            c_sigma,
            d_sigma,
            c_c,
            c1,
            c_mu,
            chi: chi_mean(d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaModel {
    pub full: bool,
    pub population: usize,
    pub p_c: Vec<f64>,
    pub p_sigma: Vec<f64>,
    /// Full covariance (full variant) or `None`.
    pub cov: Option<Matrix>,
    /// Eigenvectors as columns (full variant).
    pub basis: Option<Matrix>,
    /// Square roots of the covariance eigenvalues (full) or of the diagonal
    /// entries (separable).
    pub scale: Vec<f64>,
    /// Covariance diagonal (separable variant).
    pub diag: Vec<f64>,
    pub eigen_generation: u64,
}

impl CmaModel {
    pub fn new(d: usize, population: usize, full: bool) -> Self {
        let mut ident = Matrix::zeros(d, d);
        for i in 0..d {
            ident.set(i, i, 1.0);
        }
        Self {
            full,
            population,
            p_c: vec![0.0; d],
            p_sigma: vec![0.0; d],
            cov: full.then(|| ident.clone()),
            basis: full.then_some(ident),
            scale: vec![1.0; d],
            diag: vec![1.0; d],
            eigen_generation: 0,
        }
    }

    /// `B (scale * z)` for full, `scale * z` for separable.
    pub fn sample_direction(&self, rng: &mut Rng) -> Vec<f64> {
        let d = self.scale.len();
        let z: Vec<f64> = (0..d).map(|k| self.scale[k] * standard_normal(rng)).collect();
        match &self.basis {
            Some(b) => (0..d)
                .map(|i| b.row(i).iter().zip(&z).map(|(a, v)| a * v).sum())
                .collect(),
            None => z,
        }
    }

    /// `C^{-1/2} y`.
    fn whiten(&self, y: &[f64]) -> Vec<f64> {
        let d = y.len();
        match &self.basis {
            Some(b) => {
                let mut t = vec![0.0; d];
                for i in 0..d {
                    for k in 0..d {
                        t[k] += b.get(i, k) * y[i];
                    }
                }
                for k in 0..d {
                    t[k] /= self.scale[k];
                }
                (0..d)
                    .map(|i| b.row(i).iter().zip(&t).map(|(a, v)| a * v).sum())
                    .collect()
            }
            None => y.iter().zip(&self.scale).map(|(v, s)| v / s).collect(),
        }
    }

    /// Update paths and covariance from the selected steps `ys` (best first,
    /// in units of sigma). Returns the new step size.
    pub fn update(&mut self, ys: &[Vec<f64>], w: &[f64], sigma: f64, generation: u64) -> Result<f64> {
        let d = self.p_c.len();
        let p = CmaParams::new(d, self.population, self.full);
        let mut yw = vec![0.0; d];
        for (wi, y) in w.iter().zip(ys) {
            for (a, v) in yw.iter_mut().zip(y) {
                *a += wi * v;
            }
        }
        let white = self.whiten(&yw);
        let cs = (p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff).sqrt();
        for (ps, v) in self.p_sigma.iter_mut().zip(&white) {
            *ps = (1.0 - p.c_sigma) * *ps + cs * v;
        }
        let ps_norm = self.p_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        let decay = 1.0 - (1.0 - p.c_sigma).powf(2.0 * (generation as f64 + 1.0));
        let h_sigma = ps_norm / decay.sqrt() < (1.4 + 2.0 / (d as f64 + 1.0)) * p.chi;
        let hs = if h_sigma { 1.0 } else { 0.0 };
        let cc = (p.c_c * (2.0 - p.c_c) * p.mu_eff).sqrt();
        for (pc, v) in self.p_c.iter_mut().zip(&yw) {
            *pc = (1.0 - p.c_c) * *pc + hs * cc * v;
        }
        let keep = 1.0 - p.c1 - p.c_mu + (1.0 - hs) * p.c1 * p.c_c * (2.0 - p.c_c);
        match self.cov.as_mut() {
            Some(c) => {
                for i in 0..d {
                    for j in 0..d {
                        let mut rmu = 0.0;
                        for (wi, y) in w.iter().zip(ys) {
                            rmu += wi * y[i] * y[j];
                        }
                        let v = keep * c.get(i, j) + p.c1 * self.p_c[i] * self.p_c[j] + p.c_mu * rmu;
                        c.set(i, j, v);
                    }
                }
                let lag = (1.0 / (10.0 * d as f64 * (p.c1 + p.c_mu))).floor().max(1.0) as u64;
                if generation + 1 - self.eigen_generation >= lag {
                    self.decompose();
                    self.eigen_generation = generation + 1;
                }
            }
            None => {
                for k in 0..d {
                    let mut rmu = 0.0;
                    for (wi, y) in w.iter().zip(ys) {
                        rmu += wi * y[k] * y[k];
                    }
                    self.diag[k] = keep * self.diag[k] + p.c1 * self.p_c[k] * self.p_c[k] + p.c_mu * rmu;
                    if !(self.diag[k] > 0.0) {
                        log::warn!("sep-cma: non-positive variance {} loaded", self.diag[k]);
                        self.diag[k] = f64::MIN_POSITIVE.max(1e-300);
                    }
                    self.scale[k] = self.diag[k].sqrt();
                }
            }
        }
        Ok(sigma * ((p.c_sigma / p.d_sigma) * (ps_norm / p.chi - 1.0)).exp())
    }

    /// Symmetrize the covariance and refresh basis and scales, loading the
    /// diagonal if an eigenvalue is not positive.
    fn decompose(&mut self) {
        let c = self.cov.as_mut().expect("full covariance");
        let d = c.rows();
        for i in 0..d {
            for j in i + 1..d {
                let v = 0.5 * (c.get(i, j) + c.get(j, i));
                c.set(i, j, v);
                c.set(j, i, v);
            }
        }
        let mut m = DMatrix::from_row_slice(d, d, c.as_slice());
        let mut eig = SymmetricEigen::new(m.clone());
        let min = eig.eigenvalues.min();
        if !(min > 0.0) || eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            let max = eig.eigenvalues.iter().cloned().fold(0.0f64, |a, v| a.max(v.abs()));
            let load = min.abs() + 1e-12 * max.max(1.0);
            log::warn!("cma: covariance not positive definite (min eigenvalue {min}), loading diagonal by {load}");
            for i in 0..d {
                m[(i, i)] += load;
                c.set(i, i, c.get(i, i) + load);
            }
            eig = SymmetricEigen::new(m);
        }
        let mut b = Matrix::zeros(d, d);
        for i in 0..d {
            for k in 0..d {
                b.set(i, k, eig.eigenvectors[(i, k)]);
            }
        }
        self.scale = eig.eigenvalues.iter().map(|v| v.max(f64::MIN_POSITIVE).sqrt()).collect();
        self.basis = Some(b);
    }
}
