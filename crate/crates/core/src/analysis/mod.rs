//! Interpretation and efficiency studies over extracted features: PCA point
//! clouds, correlation against classical features and wall-time benchmarks.

mod bench;
mod correlation;
mod pca;
mod rq3;

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use bench::{
    bench_grid, bench_walltime, bench_walltime_with, random_observations, time_extraction, write_timing_long,
    write_timing_table, BenchCell, BenchEvent, Extractor, Timing, MIN_RUNS,
};
pub use correlation::{pearson_matrix, CorrelationMatrix, STRONG_CORRELATION};
pub use pca::{pca_project, Projection};
pub use rq3::{classify, mutation_strength, rq3_pipeline, write_point_cloud, Phase, Rq3Output, EXPLORATION_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    Neurela,
    Ela,
    Handcrafted,
}

/// Time-aligned feature vectors, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeries {
    pub source: FeatureSource,
    pub names: Vec<String>,
    /// Per-row tag, e.g. the exploration/exploitation phase.
    pub labels: Vec<String>,
    /// Trajectory id of every row; correlations are computed per trajectory.
    pub trajectories: Vec<usize>,
    pub rows: Matrix,
    /// Number of missing cells replaced by 0.
    pub imputed: usize,
}

impl FeatureSeries {
    pub fn new(
        source: FeatureSource,
        names: Vec<String>,
        rows: Matrix,
        labels: Vec<String>,
        trajectories: Vec<usize>,
    ) -> Result<Self> {
        let n = rows.rows();
        if names.len() != rows.cols() {
            return Err(Error::shape(format!("{} names for {} feature columns", names.len(), rows.cols())));
        }
        if labels.len() != n || trajectories.len() != n {
            return Err(Error::shape(format!(
                "{n} rows but {} labels and {} trajectory ids",
                labels.len(),
                trajectories.len()
            )));
        }
        if rows.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("feature series contains non-finite values".into()));
        }
        Ok(Self {
            source,
            names,
            labels,
            trajectories,
            rows,
            imputed: 0,
        })
    }

    /// Rows with missing cells; missing and non-finite entries become 0
    /// and are counted in `imputed`.
    pub fn from_optional(
        source: FeatureSource,
        names: Vec<String>,
        rows: &[Vec<Option<f64>>],
        labels: Vec<String>,
        trajectories: Vec<usize>,
    ) -> Result<Self> {
        let k = names.len();
        let mut data = Vec::with_capacity(rows.len() * k);
        let mut imputed = 0;
        for (i, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(Error::shape(format!("row {i} has {} values, expected {k}", r.len())));
            }
            for v in r {
                match v {
                    Some(x) if x.is_finite() => data.push(*x),
                    _ => {
                        data.push(0.0);
                        imputed += 1;
                    }
                }
            }
        }
        let mut s = Self::new(source, names, Matrix::from_vec(rows.len(), k, data)?, labels, trajectories)?;
        s.imputed = imputed;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.rows.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes `obs,trajectory,label,<features>`, readable by [`Self::read_csv`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["obs".to_string(), "trajectory".into(), "label".into()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![i.to_string(), self.trajectories[i].to_string(), self.labels[i].clone()];
            row.extend(self.rows.row(i).iter().map(|v| format!("{v:e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a feature CSV. Columns named `obs`, `label` and `trajectory` are
    /// metadata; every other column is a feature. Empty cells are missing.
    /// `origin` names the source in parse errors.
    pub fn read_csv<R: Read>(reader: R, source: FeatureSource, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
        let header = rdr.headers()?.clone();
        let col = |name: &str| header.iter().position(|h| h == name);
        let (label_col, traj_col) = (col("label"), col("trajectory"));
        let feature_cols: Vec<usize> = (0..header.len())
            .filter(|&i| !matches!(&header[i], "obs" | "label" | "trajectory"))
            .collect();
        let names = feature_cols.iter().map(|&i| header[i].to_string()).collect();
        let (mut rows, mut labels, mut trajectories) = (Vec::new(), Vec::new(), Vec::new());
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map_or(n + 2, |p| p.line() as usize);
            let parse_err = |reason: String| Error::Parse {
                path: origin.to_path_buf(),
                line,
                reason,
            };
            let mut row = Vec::with_capacity(feature_cols.len());
            for &i in &feature_cols {
                let s = rec.get(i).unwrap_or("").trim();
                row.push(if s.is_empty() {
                    None
                } else {
                    Some(s.parse::<f64>().map_err(|e| parse_err(format!("column {}: {e}", &header[i])))?)
                });
            }
            rows.push(row);
            labels.push(label_col.and_then(|i| rec.get(i)).unwrap_or("").to_string());
            trajectories.push(match traj_col.and_then(|i| rec.get(i)) {
                Some(s) => s.trim().parse().map_err(|e| parse_err(format!("trajectory: {e}")))?,
                None => 0,
            });
        }
        Self::from_optional(source, names, &rows, labels, trajectories)
    }
}
