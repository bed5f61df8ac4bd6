//! Classical exploratory landscape analysis features.
//!
//! Each group function works on a raw sample `(X, y)` and returns one
//! `Option<f64>` per feature; `None` marks a feature that is undefined for the
//! sample (zero variance, too few points, duplicate points). [`ela_features`]
//! normalizes the sample to the unit box and `[0, 1]` objective range before
//! computing the groups, and [`ElaFeatureVector::imputed`] replaces missing
//! entries with 0 for consumers that need fixed-width finite input.

mod dispersion;
mod distribution;
mod fdc;
mod handcrafted;
mod ic;
mod level_set;
mod meta_model;
mod nbc;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use dispersion::{dispersion_features, dispersion_names, subset_size, DEFAULT_QUANTILES};
pub use distribution::{count_peaks, distribution_features, DISTRIBUTION_NAMES};
pub use fdc::{fdc_features, FDC_NAMES};
pub use handcrafted::{handcrafted_state, HandcraftedState, RunContext, HANDCRAFTED_NAMES};
pub use ic::{
    epsilon_grid, ic_from_slopes, information_content, information_entropy, nearest_neighbor_tour,
    partial_information, symbols, IC_NAMES,
};
pub use level_set::{level_set_features, level_set_names, LEVEL_QUANTILES};
pub use meta_model::{meta_model_features, META_NAMES};
pub use nbc::{nbc_features, nearest_better_distances, NBC_NAMES};

use crate::error::Result;
use crate::matrix::{dist, Matrix};

/// Condensed upper-triangle pairwise Euclidean distances.
pub fn pairwise_distances(x: &Matrix) -> Vec<f64> {
    let m = x.rows();
    let mut out = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            out.push(dist(x.row(i), x.row(j)));
        }
    }
    out
}

/// Index of the smallest objective; ties go to the lower index.
pub fn best_index(y: &[f64]) -> usize {
    let mut b = 0;
    for (i, v) in y.iter().enumerate() {
        if *v < y[b] {
            b = i;
        }
    }
    b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElaOptions {
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    /// Add the meta-model and level-set groups.
    #[serde(default)]
    pub full: bool,
}

fn default_quantiles() -> Vec<f64> {
    DEFAULT_QUANTILES.to_vec()
}

impl Default for ElaOptions {
    fn default() -> Self {
        Self {
            quantiles: default_quantiles(),
            full: false,
        }
    }
}

impl ElaOptions {
    pub fn full() -> Self {
        Self {
            full: true,
            ..Self::default()
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = FDC_NAMES.iter().map(|s| s.to_string()).collect();
        names.extend(dispersion_names(&self.quantiles));
        names.extend(IC_NAMES.iter().map(|s| s.to_string()));
        names.extend(NBC_NAMES.iter().map(|s| s.to_string()));
        names.extend(DISTRIBUTION_NAMES.iter().map(|s| s.to_string()));
        if self.full {
            names.extend(META_NAMES.iter().map(|s| s.to_string()));
            names.extend(level_set_names());
        }
        names
    }

    pub fn width(&self) -> usize {
        self.feature_names().len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElaFeatureVector {
    pub names: Vec<String>,
    pub values: Vec<Option<f64>>,
    pub m: usize,
    pub d: usize,
    pub quantiles: Vec<f64>,
}

impl ElaFeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == name)?;
        self.values[i]
    }

    /// Values with missing entries replaced by 0.
    pub fn imputed(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.unwrap_or(0.0)).collect()
    }
}

fn sanitize(v: Vec<Option<f64>>) -> Vec<Option<f64>> {
    v.into_iter().map(|o| o.filter(|x| x.is_finite())).collect()
}

/// Full feature vector for a sample inside the box `[lb, ub]`.
pub fn ela_features(x: &Matrix, y: &[f64], lb: &[f64], ub: &[f64], opts: &ElaOptions) -> ElaFeatureVector {
    let (m, d) = (x.rows(), x.cols());
    assert_eq!(m, y.len(), "ela: X and y disagree on sample count");
    let names = opts.feature_names();
    let mut values = Vec::with_capacity(names.len());
    if m < 3 {
        values.resize(names.len(), None);
    } else {
        let mut xn = x.clone();
        for r in 0..m {
            for (c, v) in xn.row_mut(r).iter_mut().enumerate() {
                *v = (*v - lb[c]) / (ub[c] - lb[c]);
            }
        }
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let yn: Vec<f64> = if hi > lo {
            y.iter().map(|v| (v - lo) / (hi - lo)).collect()
        } else {
            vec![0.0; m]
        };
        let diag = (d as f64).sqrt();
        values.extend(sanitize(fdc_features(&xn, &yn, diag)));
        values.extend(sanitize(dispersion_features(&xn, &yn, &opts.quantiles)));
        values.extend(sanitize(information_content(&xn, &yn)));
        values.extend(sanitize(nbc_features(&xn, &yn)));
        values.extend(sanitize(distribution_features(&yn)));
        if opts.full {
            values.extend(sanitize(meta_model_features(&xn, &yn)));
            values.extend(sanitize(level_set_features(&xn, &yn)));
        }
    }
    debug_assert_eq!(values.len(), names.len());
    ElaFeatureVector {
        names,
        values,
        m,
        d,
        quantiles: opts.quantiles.clone(),
    }
}

/// Write feature vectors as CSV: a header of feature names, one row per
/// vector, missing entries left empty. All vectors must share the header of
/// the first.
pub fn write_csv<W: Write>(out: W, rows: &[ElaFeatureVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = rows.first() {
        w.write_record(&first.names)?;
        for r in rows {
            if r.names != first.names {
                return Err(crate::Error::shape("ela csv: rows with different feature sets"));
            }
            w.write_record(r.values.iter().map(|v| v.map(|x| format!("{x:e}")).unwrap_or_default()))?;
        }
    }
    w.flush()?;
    Ok(())
}
