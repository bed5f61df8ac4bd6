use std::collections::BTreeMap;
use std::io::Write;

use super::FeatureSeries;
use crate::error::{Error, Result};
use crate::stats;

/// Absolute correlation at or above which a pair counts as strong.
pub const STRONG_CORRELATION: f64 = 0.6;

/// Pearson correlations between the columns of two feature series.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
    /// `entries[j][i]`: column `j` of the first series against column `i` of
    /// the second; `None` when no trajectory gave a defined coefficient.
    pub entries: Vec<Vec<Option<f64>>>,
    /// Trajectories that contributed to each entry.
    pub samples: Vec<Vec<usize>>,
}

impl CorrelationMatrix {
    /// Columns of the second series whose correlation with every row stays
    /// below [`STRONG_CORRELATION`] in magnitude.
    pub fn weakly_correlated_columns(&self) -> Vec<usize> {
        (0..self.col_names.len())
            .filter(|&i| {
                self.entries
                    .iter()
                    .all(|row| row[i].is_none_or(|r| r.abs() < STRONG_CORRELATION))
            })
            .collect()
    }

    /// CSV with the first series' feature names down the side and the
    /// second's across the top; undefined entries are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["feature".to_string()];
        header.extend(self.col_names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.row_names.iter().zip(&self.entries) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|e| e.map(|v| format!("{v:e}")).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Row indices of each trajectory, in order of first appearance.
fn trajectory_groups(ids: &[usize]) -> Vec<Vec<usize>> {
    let mut slot: BTreeMap<usize, usize> = BTreeMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (row, id) in ids.iter().enumerate() {
        let g = *slot.entry(*id).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(row);
    }
    groups
}

/// Correlates every column of `a` with every column of `b`. With several
/// trajectories the coefficient is computed per trajectory and averaged
/// over those where it is defined.
pub fn pearson_matrix(a: &FeatureSeries, b: &FeatureSeries) -> Result<CorrelationMatrix> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("series lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.trajectories != b.trajectories {
        return Err(Error::shape("series disagree on trajectory ids"));
    }
    let groups = trajectory_groups(&a.trajectories);
    let column = |s: &FeatureSeries, rows: &[usize], c: usize| -> Vec<f64> {
        rows.iter().map(|&r| s.rows.get(r, c)).collect()
    };
    let (ka, kb) = (a.names.len(), b.names.len());
    let mut sums = vec![vec![0.0; kb]; ka];
    let mut samples = vec![vec![0usize; kb]; ka];
    for rows in &groups {
        let cols_b: Vec<Vec<f64>> = (0..kb).map(|i| column(b, rows, i)).collect();
        for j in 0..ka {
            let cj = column(a, rows, j);
            for (i, ci) in cols_b.iter().enumerate() {
                if let Some(r) = stats::pearson(&cj, ci) {
                    sums[j][i] += r;
                    samples[j][i] += 1;
                }
            }
        }
    }
    let entries = sums
        .iter()
        .zip(&samples)
        .map(|(s, n)| {
            s.iter()
                .zip(n)
                .map(|(&v, &c)| (c > 0).then(|| (v / c as f64).clamp(-1.0, 1.0)))
                .collect()
        })
        .collect();
    Ok(CorrelationMatrix {
        row_names: a.names.clone(),
        col_names: b.names.clone(),
        entries,
        samples,
    })
}
