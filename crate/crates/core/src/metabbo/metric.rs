use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::episode::run_episode;
use super::extractor::{HandcraftedAnalyzer, LandscapeAnalyzer};
use super::policy::MetaPolicy;
use super::task::TaskSpec;
use super::train::meta_train;
use crate::error::{Error, Result};
use crate::seed;
use crate::stats;

/// Magnitude of the z-score when the baseline spread is numerically zero.
pub const Z_CAP: f64 = 10.0;
pub const SIGMA_EPS: f64 = 1e-12;

const TRAIN_STREAM: u64 = 0x7A1;
const TEST_STREAM: u64 = 0x7E57;

/// Z-score of a final objective against baseline statistics; positive when
/// better (lower) than the baseline mean.
pub fn z_score(f_star: f64, mu: f64, sigma: f64) -> f64 {
    if sigma < SIGMA_EPS {
        let diff = f_star - mu;
        if diff.abs() < SIGMA_EPS {
            0.0
        } else if diff < 0.0 {
            Z_CAP
        } else {
            -Z_CAP
        }
    } else {
        -(f_star - mu) / sigma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemStats {
    pub problem: String,
    pub mu: f64,
    pub sigma: f64,
    pub f_stars: Vec<f64>,
}

/// Baseline statistics per test problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineStats {
    pub task_id: String,
    pub task_digest: String,
    pub q: usize,
    pub seed_base: u64,
    pub problems: Vec<ProblemStats>,
    pub fe_used: u64,
}

impl BaselineStats {
    pub fn get(&self, problem: &str) -> Option<&ProblemStats> {
        self.problems.iter().find(|p| p.problem == problem)
    }
}

/// Final objectives of `q` runs on every test problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub f_stars: Vec<(String, Vec<f64>)>,
    pub fe_used: u64,
}

fn task_seed(task: &TaskSpec, seed_v: u64, stream: u64) -> u64 {
    seed::derive(seed_v, &[seed::label(&task.id), stream])
}

/// Run `policy` `q` times on every test problem. Cells are independent and
/// evaluated in parallel; results are collected in problem/run order.
pub fn test_policy(
    task: &TaskSpec,
    analyzer: &dyn LandscapeAnalyzer,
    policy: &MetaPolicy,
    q: usize,
    seed_v: u64,
) -> Result<TestOutcome> {
    let problems = task.test_problems()?;
    let base = task_seed(task, seed_v, TEST_STREAM);
    let cells: Vec<(usize, usize)> = (0..problems.len()).flat_map(|p| (0..q).map(move |r| (p, r))).collect();
    let results: Vec<(f64, u64)> = cells
        .par_iter()
        .map(|&(p, r)| {
            let spec = &problems[p];
            let s = seed::derive(base, &[seed::label(&spec.label()), r as u64]);
            run_episode(task, analyzer, policy, spec, s, false).map(|e| (e.f_star, e.fe_used))
        })
        .collect::<Result<_>>()?;
    let mut f_stars = Vec::with_capacity(problems.len());
    for (p, spec) in problems.iter().enumerate() {
        f_stars.push((spec.label(), results[p * q..(p + 1) * q].iter().map(|r| r.0).collect()));
    }
    Ok(TestOutcome {
        f_stars,
        fe_used: results.iter().map(|r| r.1).sum(),
    })
}

/// Mean and population standard deviation of final objectives.
pub fn summarize(f_stars: &[f64]) -> (f64, f64) {
    (stats::mean(f_stars), stats::std(f_stars))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemZ {
    pub problem: String,
    pub f_stars: Vec<f64>,
    pub z: Vec<f64>,
    pub upsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativePerformance {
    pub task_id: String,
    pub upsilon: f64,
    pub problems: Vec<ProblemZ>,
    pub fe_used: u64,
}

/// Mean z-score of a test outcome against baseline statistics.
///
/// Per problem the mean of `Z_{p,q}` is evaluated as
/// `-(mean_q f* - mu_p) / sigma_p`, which equals the average of the
/// individual scores and is exactly 0 when the outcome reproduces the
/// baseline runs. The capped branch is applied per run when `sigma_p` is
/// numerically zero.
pub fn upsilon(task_id: &str, outcome: &TestOutcome, baseline: &BaselineStats) -> Result<RelativePerformance> {
    let mut problems = Vec::with_capacity(outcome.f_stars.len());
    let mut total = 0.0;
    let mut q_total = 0usize;
    for (label, fs) in &outcome.f_stars {
        let st = baseline.get(label).ok_or_else(|| {
            Error::config(format!("baseline for task '{task_id}' has no entry for problem {label}"))
        })?;
        let z: Vec<f64> = fs.iter().map(|f| z_score(*f, st.mu, st.sigma)).collect();
        let ups = if st.sigma < SIGMA_EPS {
            stats::mean(&z)
        } else {
            -(stats::mean(fs) - st.mu) / st.sigma
        };
        total += ups * fs.len() as f64;
        q_total += fs.len();
        problems.push(ProblemZ {
            problem: label.clone(),
            f_stars: fs.clone(),
            z,
            upsilon: ups,
        });
    }
    let ups = if q_total == 0 { 0.0 } else { total / q_total as f64 };
    Ok(RelativePerformance {
        task_id: task_id.to_string(),
        upsilon: ups,
        problems,
        fe_used: outcome.fe_used,
    })
}

/// Meta-train a policy for `analyzer`, test it and score it against the
/// baseline. The returned FE count covers meta-training and testing.
pub fn relative_performance(
    analyzer: &dyn LandscapeAnalyzer,
    task: &TaskSpec,
    baseline: &BaselineStats,
    q: usize,
    seed_v: u64,
) -> Result<RelativePerformance> {
    let trained = meta_train(task, analyzer, None, task_seed(task, seed_v, TRAIN_STREAM))?;
    let outcome = test_policy(task, analyzer, &trained.policy, q, seed_v)?;
    let mut rp = upsilon(&task.id, &outcome, baseline)?;
    rp.fe_used += trained.fe_used;
    Ok(rp)
}

/// Policy trained with `analyzer` through the same seeds used by
/// [`relative_performance`].
pub fn train_for_evaluation(analyzer: &dyn LandscapeAnalyzer, task: &TaskSpec, seed_v: u64) -> Result<MetaPolicy> {
    Ok(meta_train(task, analyzer, None, task_seed(task, seed_v, TRAIN_STREAM))?.policy)
}

/// Digest identifying a task definition, `q` and seed base.
pub fn baseline_key(task: &TaskSpec, q: usize, seed_v: u64) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(task)?);
    h.update(q.to_le_bytes());
    h.update(seed_v.to_le_bytes());
    Ok(hex::encode(&h.finalize()[..12]))
}

/// Meta-train the hand-crafted baseline once and record its test statistics.
pub fn baseline_stats(task: &TaskSpec, q: usize, seed_v: u64) -> Result<BaselineStats> {
    let a = HandcraftedAnalyzer;
    let trained = meta_train(task, &a, None, task_seed(task, seed_v, TRAIN_STREAM))?;
    let outcome = test_policy(task, &a, &trained.policy, q, seed_v)?;
    let problems = outcome
        .f_stars
        .iter()
        .map(|(label, fs)| {
            let (mu, sigma) = summarize(fs);
            ProblemStats {
                problem: label.clone(),
                mu,
                sigma,
                f_stars: fs.clone(),
            }
        })
        .collect();
    Ok(BaselineStats {
        task_id: task.id.clone(),
        task_digest: baseline_key(task, q, seed_v)?,
        q,
        seed_base: seed_v,
        problems,
        fe_used: trained.fe_used + outcome.fe_used,
    })
}

/// Directory of baseline statistics keyed by task definition, Q and seed.
#[derive(Debug, Clone)]
pub struct BaselineCache {
    dir: PathBuf,
}

impl BaselineCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, task: &TaskSpec, key: &str) -> PathBuf {
        let id: String = task
            .id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        self.dir.join(format!("baseline-{id}-{key}.json"))
    }

    /// Cached statistics, or `None` when absent.
    pub fn load(&self, task: &TaskSpec, q: usize, seed_v: u64) -> Result<Option<BaselineStats>> {
        let key = baseline_key(task, q, seed_v)?;
        let path = self.path(task, &key);
        if !path.exists() {
            return Ok(None);
        }
        let stats: BaselineStats = serde_json::from_slice(&fs::read(&path)?)?;
        if stats.task_digest != key || stats.q != q || stats.seed_base != seed_v {
            return Err(Error::Integrity {
                path: path.clone(),
                reason: "baseline cache entry does not match its key".into(),
            });
        }
        Ok(Some(stats))
    }

    pub fn store(&self, task: &TaskSpec, stats: &BaselineStats) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path(task, &stats.task_digest);
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(stats)?)?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Statistics and the FE spent obtaining them (0 when served from cache).
    pub fn get_or_compute(&self, task: &TaskSpec, q: usize, seed_v: u64) -> Result<(BaselineStats, u64)> {
        if let Some(s) = self.load(task, q, seed_v)? {
            return Ok((s, 0));
        }
        let s = baseline_stats(task, q, seed_v)?;
        self.store(task, &s)?;
        let fe = s.fe_used;
        Ok((s, fe))
    }
}
