//! Observation files: a metadata comment line followed by CSV rows.
//!
//! ```text
//! # d=2; lb=-5,-5; ub=5,5
//! obs,x_1,x_2,y
//! 0,0.5,-1.25,3.0
//! 0,1.0,2.0,4.5
//! ```
//!
//! Rows sharing an `obs` id form one population and must be contiguous.
//! A single `lb`/`ub` value applies to every dimension.

use std::path::Path;

use neurela::analyzer::Observation;
use neurela::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledObservation {
    pub id: String,
    pub obs: Observation,
}

fn bounds(raw: &str, d: usize) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = raw
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad bound `{s}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v.len() {
        1 => Ok(vec![v[0]; d]),
        n if n == d => Ok(v),
        n => Err(format!("{n} bound values for d={d}")),
    }
}

pub fn parse(text: &str, path: &Path) -> Result<Vec<LabeledObservation>> {
    let err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let first = text.lines().next().unwrap_or("");
    let meta = first
        .strip_prefix('#')
        .ok_or_else(|| err(1, "expected a `# d=..; lb=..; ub=..` header line".into()))?;
    let (mut d, mut lb_raw, mut ub_raw) = (None, None, None);
    for part in meta.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| err(1, format!("expected key=value, got `{part}`")))?;
        match k.trim() {
            "d" => d = Some(v.trim().parse::<usize>().map_err(|e| err(1, format!("bad d: {e}")))?),
            "lb" => lb_raw = Some(v),
            "ub" => ub_raw = Some(v),
            other => return Err(err(1, format!("unknown header key `{other}`"))),
        }
    }
    let d = d.filter(|&d| d > 0).ok_or_else(|| err(1, "header must give a positive d".into()))?;
    let lb = bounds(lb_raw.ok_or_else(|| err(1, "header is missing lb".into()))?, d).map_err(|r| err(1, r))?;
    let ub = bounds(ub_raw.ok_or_else(|| err(1, "header is missing ub".into()))?, d).map_err(|r| err(1, r))?;

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| err(2, e.to_string()))?.clone();
    let expected: Vec<String> = std::iter::once("obs".to_string())
        .chain((1..=d).map(|j| format!("x_{j}")))
        .chain(std::iter::once("y".to_string()))
        .collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(err(2, format!("expected columns {}", expected.join(","))));
    }

    // (id, first line, x rows, y)
    let mut groups: Vec<(String, usize, Vec<f64>, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != d + 2 {
            return Err(err(line, format!("expected {} fields, got {}", d + 2, rec.len())));
        }
        let mut nums = Vec::with_capacity(d + 1);
        for (j, s) in rec.iter().enumerate().skip(1) {
            let v: f64 = s.parse().map_err(|e| err(line, format!("column {}: `{s}`: {e}", expected[j])))?;
            if !v.is_finite() {
                return Err(err(line, format!("column {}: non-finite value", expected[j])));
            }
            nums.push(v);
        }
        let id = &rec[0];
        match groups.last_mut() {
            Some(g) if g.0 == id => {}
            _ => {
                if groups.iter().any(|g| g.0 == id) {
                    return Err(err(line, format!("rows of observation `{id}` are not contiguous")));
                }
                groups.push((id.to_string(), line, Vec::new(), Vec::new()));
            }
        }
        let g = groups.last_mut().expect("pushed above");
        g.2.extend_from_slice(&nums[..d]);
        g.3.push(nums[d]);
    }

    groups
        .into_iter()
        .map(|(id, line, x, y)| {
            let m = y.len();
            let obs = Observation::new(Matrix::from_vec(m, d, x)?, y, lb.clone(), ub.clone())
                .map_err(|e| err(line, format!("observation `{id}`: {e}")))?;
            Ok(LabeledObservation { id, obs })
        })
        .collect()
}
