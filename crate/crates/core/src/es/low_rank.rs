use serde::{Deserialize, Serialize};

use super::{mu_eff, standard_normal, EsConfig, EsVariant};
use crate::seed::Rng;

/// Rank-success step-size control: the current and previous generations are
/// ranked jointly (best first) and `q` is the normalized rank advantage of
/// the current generation.
pub fn rank_success(current: &[f64], previous: &[Option<f64>]) -> f64 {
    let n = current.len();
    // None sorts below every value, i.e. worst
    let key = |v: f64| v.is_finite().then_some(v);
    let mut all: Vec<(Option<f64>, usize)> = current.iter().map(|&v| key(v)).zip(0..).collect();
    all.extend(previous.iter().cloned().zip(n..));
    all.sort_by(|a, b| match (a.0, b.0) {
        (Some(x), Some(y)) => y.partial_cmp(&x).unwrap(),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let mut rank_cur = 0.0;
    let mut rank_prev = 0.0;
    for (r, (_, src)) in all.iter().enumerate() {
        if *src < n {
            rank_cur += (r + 1) as f64;
        } else {
            rank_prev += (r + 1) as f64;
        }
    }
    (rank_prev - rank_cur) / (n * previous.len()) as f64
}

/// Shared state of the fast CMA-ES, R1ES and RMES. Each keeps an evolution
/// path `p` of the mean shift and a rank-success step-size accumulator `s`.
///
/// * R1ES samples `sqrt(1 - c1) z + sqrt(c1) r p`.
/// * Fast CMA-ES adds a stored snapshot `p_hat` of the path, refreshed every
///   `history_interval` generations: `sqrt(1 - c1) z + sqrt(c1) (r1 p_hat + r2 p)`.
/// * RMES keeps `m = 2` snapshots (oldest first, refreshed first-in
///   first-out every `history_interval` generations) and samples
///   `a^m z + b sum_i a^(m-i) r_i p_i` with `a = sqrt(1 - c1)`, `b = sqrt(c1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankModel {
    pub variant: EsVariant,
    pub c: f64,
    pub c1: f64,
    pub c_s: f64,
    pub q_star: f64,
    pub d_s: f64,
    pub interval: usize,
    pub p: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub s: f64,
    pub previous: Option<Vec<Option<f64>>>,
}

pub const RMES_PATHS: usize = 2;

impl LowRankModel {
    pub fn new(variant: EsVariant, cfg: &EsConfig) -> Self {
        let d = cfg.dim;
        let c1 = 1.0 / (3.0 * (d as f64).sqrt() + 5.0);
        let q_star = if variant == EsVariant::FastCmaes { 0.27 } else { 0.3 };
        let snapshots = match variant {
            EsVariant::Rmes => vec![vec![0.0; d]; RMES_PATHS],
            _ => Vec::new(),
        };
        Self {
            variant,
            c: cfg.path_lr(),
            c1,
            c_s: 0.3,
            q_star,
            d_s: 1.0,
            interval: cfg.history_interval(),
            p: vec![0.0; d],
            snapshots,
            s: 0.0,
            previous: None,
        }
    }

    pub fn sample_direction(&self, rng: &mut Rng) -> Vec<f64> {
        let d = self.p.len();
        let a = (1.0 - self.c1).sqrt();
        let b = self.c1.sqrt();
        let mut y: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
        match self.variant {
            EsVariant::R1es => {
                let r = standard_normal(rng);
                for (v, p) in y.iter_mut().zip(&self.p) {
                    *v = a * *v + b * r * p;
                }
            }
            EsVariant::FastCmaes => {
                let r1 = standard_normal(rng);
                let r2 = standard_normal(rng);
                let hat = self.snapshots.first();
                for (k, v) in y.iter_mut().enumerate() {
                    let h = hat.map_or(0.0, |h| r1 * h[k]);
                    *v = a * *v + b * (h + r2 * self.p[k]);
                }
            }
            EsVariant::Rmes => {
                let m = self.snapshots.len();
                let rs: Vec<f64> = (0..m).map(|_| standard_normal(rng)).collect();
                let am = a.powi(m as i32);
                for (k, v) in y.iter_mut().enumerate() {
                    let mut acc = am * *v;
                    for (i, snap) in self.snapshots.iter().enumerate() {
                        acc += b * a.powi((m - 1 - i) as i32) * rs[i] * snap[k];
                    }
                    *v = acc;
                }
            }
            EsVariant::Cmaes | EsVariant::SepCmaes => unreachable!("not a low-rank variant"),
        }
        y
    }

    /// Update from the mean shift (in units of sigma) and the generation's
    /// fitness. Returns the new step size.
    pub fn update(&mut self, shift: &[f64], w: &[f64], fitness: &[f64], sigma: f64, generation: u64) -> f64 {
        let me = mu_eff(w);
        let k = (self.c * (2.0 - self.c) * me).sqrt();
        for (p, v) in self.p.iter_mut().zip(shift) {
            *p = (1.0 - self.c) * *p + k * v;
        }
        if (generation + 1).is_multiple_of(self.interval as u64) {
            match self.variant {
                EsVariant::FastCmaes => self.snapshots = vec![self.p.clone()],
                EsVariant::Rmes => {
                    self.snapshots.remove(0);
                    self.snapshots.push(self.p.clone());
                }
                _ => {}
            }
        }
        let current: Vec<Option<f64>> = fitness.iter().map(|v| v.is_finite().then_some(*v)).collect();
        let new_sigma = match &self.previous {
            Some(prev) => {
                let q = rank_success(fitness, prev);
                self.s = (1.0 - self.c_s) * self.s + self.c_s * (q - self.q_star);
                sigma * (self.s / self.d_s).exp()
            }
            None => sigma,
        };
        self.previous = Some(current);
        new_sigma
    }
}
