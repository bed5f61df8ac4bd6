//! MetaBBO tasks: a low-level optimizer whose per-step configuration comes
//! from a small policy network reading landscape features.
//!
//! Policies are meta-trained with an inner evolution strategy on the task's
//! training problems (mean total episode reward). A candidate analyser is
//! scored by the relative-performance metric: its meta-trained policy is run
//! `Q` times on each test problem and the final objectives are z-scored
//! against statistics of the hand-crafted baseline pipeline.

mod episode;
mod extractor;
mod metric;
mod policy;
mod task;
mod train;

pub use episode::{population_digest, run_episode, step_reward, EpisodeResult, StepRecord};
pub use extractor::{ElaAnalyzer, Features, HandcraftedAnalyzer, LandscapeAnalyzer, NeurelaAnalyzer, StepView};
pub use metric::{
    baseline_key, baseline_stats, relative_performance, summarize, test_policy, train_for_evaluation, upsilon,
    z_score, BaselineCache, BaselineStats, ProblemStats, ProblemZ, RelativePerformance, TestOutcome, SIGMA_EPS,
    Z_CAP,
};
pub use policy::{output_ranges, FeatureMode, MetaPolicy, POLICY_HIDDEN};
pub use task::{InnerTraining, ProblemSet, TaskSpec};
pub use train::{
    evolve, meta_train, train_vector, training_fitness, AnalyzerRef, EpochRecord, EvolveOutcome, TrainedPolicy,
};

use serde::{Deserialize, Serialize};

/// Which analyser fills a task's feature slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyzerSlot {
    Neurela,
    Ela,
    Handcrafted,
}
