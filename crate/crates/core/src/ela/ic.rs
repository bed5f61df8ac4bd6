use crate::matrix::{dist, Matrix};

use super::best_index;

pub const IC_NAMES: [&str; 5] = [
    "ic.h_max",
    "ic.eps_s",
    "ic.m0",
    "ic.eps_half",
    "ic.neutral_ratio",
];

/// Entropy below this value counts as settled.
pub const SETTLING_THRESHOLD: f64 = 0.05;

/// `{0}` followed by 15 log-spaced thresholds from `1e-5` to `1e5`.
pub fn epsilon_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    for k in 0..15 {
        g.push(10f64.powf(-5.0 + 10.0 * k as f64 / 14.0));
    }
    g
}

/// Greedy nearest-neighbour tour starting at the best sample. Ties go to the
/// lower index.
pub fn nearest_neighbor_tour(x: &Matrix, y: &[f64]) -> Vec<usize> {
    let m = x.rows();
    let mut visited = vec![false; m];
    let mut cur = best_index(y);
    let mut tour = Vec::with_capacity(m);
    tour.push(cur);
    visited[cur] = true;
    for _ in 1..m {
        let mut next = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, v) in visited.iter().enumerate() {
            if *v {
                continue;
            }
            let dd = dist(x.row(cur), x.row(j));
            if dd < best_d {
                best_d = dd;
                next = j;
            }
        }
        visited[next] = true;
        tour.push(next);
        cur = next;
    }
    tour
}

/// Symbol of a slope under threshold `eps`: -1, 0 or 1.
pub fn symbols(slopes: &[f64], eps: f64) -> Vec<i8> {
    slopes
        .iter()
        .map(|&s| {
            if s > eps {
                1
            } else if s < -eps {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Entropy (base 6) of consecutive pairs of differing symbols.
pub fn information_entropy(sym: &[i8]) -> f64 {
    if sym.len() < 2 {
        return 0.0;
    }
    let mut counts = [[0usize; 3]; 3];
    for w in sym.windows(2) {
        counts[(w[0] + 1) as usize][(w[1] + 1) as usize] += 1;
    }
    let n = (sym.len() - 1) as f64;
    let mut h = 0.0;
    for (a, row) in counts.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            if a != b && c > 0 {
                let p = c as f64 / n;
                h -= p * p.log(6.0);
            }
        }
    }
    h
}

/// Partial information: length of the sequence after dropping zeros and
/// collapsing repeats, over the sequence length.
pub fn partial_information(sym: &[i8]) -> f64 {
    if sym.is_empty() {
        return 0.0;
    }
    let mut mu = 0usize;
    let mut last = 0i8;
    for &s in sym {
        if s != 0 && s != last {
            mu += 1;
            last = s;
        }
    }
    mu as f64 / sym.len() as f64
}

/// Information-content features along the nearest-neighbour tour. Slopes are
/// objective changes over step length; any zero-length step (duplicate
/// points) makes every feature missing.
pub fn information_content(x: &Matrix, y: &[f64]) -> Vec<Option<f64>> {
    let m = x.rows();
    assert_eq!(m, y.len(), "ic: X and y disagree on sample count");
    if m < 3 {
        return vec![None; 5];
    }
    let tour = nearest_neighbor_tour(x, y);
    let mut slopes = Vec::with_capacity(m - 1);
    for w in tour.windows(2) {
        let step = dist(x.row(w[0]), x.row(w[1]));
        if step <= 0.0 {
            return vec![None; 5];
        }
        slopes.push((y[w[1]] - y[w[0]]) / step);
    }
    ic_from_slopes(&slopes)
}

/// Features from an explicit slope sequence.
pub fn ic_from_slopes(slopes: &[f64]) -> Vec<Option<f64>> {
    let grid = epsilon_grid();
    let hs: Vec<f64> = grid.iter().map(|&e| information_entropy(&symbols(slopes, e))).collect();
    let ms: Vec<f64> = grid.iter().map(|&e| partial_information(&symbols(slopes, e))).collect();
    let h_max = hs.iter().cloned().fold(0.0, f64::max);
    let eps_s = grid
        .iter()
        .zip(&hs)
        .find(|(_, h)| **h < SETTLING_THRESHOLD)
        .map(|(e, _)| *e);
    let m0 = ms[0];
    let eps_half = if m0 > 0.0 {
        grid.iter().zip(&ms).find(|(_, mm)| **mm < 0.5 * m0).map(|(e, _)| *e)
    } else {
        None
    };
    let sym0 = symbols(slopes, 0.0);
    let neutral = sym0.iter().filter(|s| **s == 0).count() as f64 / sym0.len() as f64;
    vec![Some(h_max), eps_s, Some(m0), eps_half, Some(neutral)]
}
