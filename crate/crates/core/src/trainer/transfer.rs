//! Reuse of a trained analyser on a new task: frozen (zero-shot) or
//! co-evolved with the task's policy (fine-tune).

use serde::{Deserialize, Serialize};

use crate::analyzer::Network;
use crate::error::Result;
use crate::metabbo::{
    test_policy, train_for_evaluation, train_vector, upsilon, AnalyzerRef, BaselineStats, LandscapeAnalyzer,
    MetaPolicy, NeurelaAnalyzer, RelativePerformance, TaskSpec,
};
use crate::seed;

const FINE_TUNE_STREAM: u64 = 0xF1E;

/// Relative performance with the analyser frozen: only the policy is
/// meta-trained.
pub fn zero_shot(
    network: &Network,
    task: &TaskSpec,
    baseline: &BaselineStats,
    q: usize,
    seed_v: u64,
) -> Result<RelativePerformance> {
    task.check_width(network.width())?;
    let analyzer = NeurelaAnalyzer::new(network.clone());
    let policy = train_for_evaluation(&analyzer, task, seed_v)?;
    score(&analyzer, &policy, task, baseline, q, seed_v)
}

fn score(
    analyzer: &dyn LandscapeAnalyzer,
    policy: &MetaPolicy,
    task: &TaskSpec,
    baseline: &BaselineStats,
    q: usize,
    seed_v: u64,
) -> Result<RelativePerformance> {
    let outcome = test_policy(task, analyzer, policy, q, seed_v)?;
    upsilon(&task.id, &outcome, baseline)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineTuneEpoch {
    pub epoch: usize,
    /// Relative performance of the best joint vector after this epoch.
    pub upsilon: f64,
    pub best_upsilon: f64,
    /// Best training fitness of the joint ES; `None` at epoch 0.
    pub train_fitness: Option<f64>,
    pub problems: Vec<crate::metabbo::ProblemZ>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineTuneReport {
    pub task_id: String,
    pub epochs: Vec<FineTuneEpoch>,
    /// Analyser parameters of the best joint vector.
    pub theta: Vec<f64>,
    pub policy: Vec<f64>,
}

/// Joint evolution of analyser and policy parameters starting from the
/// given analyser and its zero-shot policy. Epoch 0 is the starting point,
/// so its Υ equals the zero-shot result under the same seed; epoch `e` is
/// the best joint vector after `e` epochs of the task's inner ES.
pub fn fine_tune(
    network: &Network,
    task: &TaskSpec,
    baseline: &BaselineStats,
    q: usize,
    seed_v: u64,
) -> Result<FineTuneReport> {
    task.check_width(network.width())?;
    let cfg = network.config().clone();
    let start = NeurelaAnalyzer::new(network.clone());
    let policy0 = train_for_evaluation(&start, task, seed_v)?;
    let first = score(&start, &policy0, task, baseline, q, seed_v)?;

    let mut epochs = vec![FineTuneEpoch {
        epoch: 0,
        upsilon: first.upsilon,
        best_upsilon: first.upsilon,
        train_fitness: None,
        problems: first.problems,
    }];
    let n_theta = cfg.param_count();
    let (kind, mode, width) = (policy0.kind, policy0.mode, policy0.input);
    let split = |v: &[f64]| -> Result<(Network, MetaPolicy)> {
        Ok((
            Network::decode(&v[..n_theta], &cfg)?,
            MetaPolicy::with_params(kind, mode, width, v[n_theta..].to_vec())?,
        ))
    };
    let mut initial = network.encode().values;
    initial.extend_from_slice(&policy0.params);

    let out = train_vector(
        task,
        seed::derive(seed_v, &[FINE_TUNE_STREAM]),
        initial,
        |v| {
            let (net, p) = split(v)?;
            Ok((AnalyzerRef::Owned(Box::new(NeurelaAnalyzer::new(net))), p))
        },
        |epoch, best, train_fitness| {
            let (net, p) = split(best)?;
            let rp = score(&NeurelaAnalyzer::new(net), &p, task, baseline, q, seed_v)?;
            let prev = epochs.last().map_or(f64::NEG_INFINITY, |e| e.best_upsilon);
            epochs.push(FineTuneEpoch {
                epoch: epoch + 1,
                upsilon: rp.upsilon,
                best_upsilon: prev.max(rp.upsilon),
                train_fitness: Some(train_fitness),
                problems: rp.problems,
            });
            Ok(())
        },
    )?;
    let (theta, policy) = (out.best[..n_theta].to_vec(), out.best[n_theta..].to_vec());
    Ok(FineTuneReport {
        task_id: task.id.clone(),
        epochs,
        theta,
        policy,
    })
}
