use std::io::Write;

use rayon::prelude::*;

use super::pca::pca_project;
use super::{FeatureSeries, FeatureSource};
use crate::analyzer::{Network, Observation};
use crate::ela::{ela_features, ElaOptions};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metabbo::{run_episode, MetaPolicy, NeurelaAnalyzer, TaskSpec};
use crate::optimizers::{OptimizerKind, StepConfig};
use crate::problems::ProblemSpec;
use crate::seed;

/// Mutation strengths above this value mark an exploration step.
pub const EXPLORATION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Exploration,
    Exploitation,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Exploration => "exploration",
            Phase::Exploitation => "exploitation",
        }
    }
}

pub fn classify(f: f64) -> Phase {
    if f > EXPLORATION_THRESHOLD {
        Phase::Exploration
    } else {
        Phase::Exploitation
    }
}

/// Population-level mutation strength of a DE step (mean over individuals).
pub fn mutation_strength(cfg: &StepConfig) -> Option<f64> {
    match cfg {
        StepConfig::De(c) if !c.f.is_empty() => Some(c.f.iter().sum::<f64>() / c.f.len() as f64),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rq3Output {
    pub neurela: FeatureSeries,
    pub ela: FeatureSeries,
    pub neurela_2d: Matrix,
    pub ela_2d: Matrix,
    /// Mutation strength of every recorded step.
    pub strength: Vec<f64>,
    /// Step index within its run.
    pub steps: Vec<usize>,
}

impl Rq3Output {
    pub fn count(&self, phase: Phase) -> usize {
        self.neurela.labels.iter().filter(|l| *l == phase.as_str()).count()
    }
}

/// Runs a trained DE task `runs` times on `problem`, labels every step by
/// its mutation strength and extracts NeurELA and full ELA features of the
/// observed populations, each projected to two dimensions.
pub fn rq3_pipeline(
    task: &TaskSpec,
    network: &Network,
    policy: &MetaPolicy,
    problem: &ProblemSpec,
    runs: usize,
    seed_v: u64,
) -> Result<Rq3Output> {
    if task.optimizer != OptimizerKind::De {
        return Err(Error::config(format!("task '{}' is not a DE task", task.id)));
    }
    let analyzer = NeurelaAnalyzer::new(network.clone());
    let (lb, ub) = (problem.lower_bounds(), problem.upper_bounds());
    let ela_opts = ElaOptions::full();
    let per_run: Vec<Vec<(usize, f64, Vec<f64>, Vec<Option<f64>>)>> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let ep = run_episode(task, &analyzer, policy, problem, seed::derive(seed_v, &[r as u64]), true)?;
            ep.steps
                .into_iter()
                .enumerate()
                .map(|(t, s)| {
                    let f = mutation_strength(&s.config).ok_or_else(|| Error::config("step without DE config"))?;
                    let (x, y) = s.population.expect("recording requested");
                    let ela = ela_features(&x, &y, &lb, &ub, &ela_opts).values;
                    let obs = Observation {
                        x,
                        y,
                        lb: lb.clone(),
                        ub: ub.clone(),
                    };
                    Ok((t, f, network.forward(&obs).pop, ela))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let (mut steps, mut strength, mut labels, mut traj) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut neu_rows, mut ela_rows) = (Vec::new(), Vec::new());
    for (r, run) in per_run.into_iter().enumerate() {
        for (t, f, neu, ela) in run {
            steps.push(t);
            strength.push(f);
            labels.push(classify(f).as_str().to_string());
            traj.push(r);
            neu_rows.push(neu.into_iter().map(Some).collect::<Vec<_>>());
            ela_rows.push(ela);
        }
    }
    let h = network.width();
    let neurela = FeatureSeries::from_optional(
        FeatureSource::Neurela,
        (1..=h).map(|i| format!("F{i}")).collect(),
        &neu_rows,
        labels.clone(),
        traj.clone(),
    )?;
    let ela = FeatureSeries::from_optional(FeatureSource::Ela, ela_opts.feature_names(), &ela_rows, labels, traj)?;
    if ela.imputed > 0 {
        log::warn!("{} missing ELA values imputed as 0", ela.imputed);
    }
    let neurela_2d = pca_project(&neurela.rows, 2)?.points;
    let ela_2d = pca_project(&ela.rows, 2)?.points;
    Ok(Rq3Output {
        neurela,
        ela,
        neurela_2d,
        ela_2d,
        strength,
        steps,
    })
}

/// Labelled 2-D point cloud: `run,step,label,pc1,pc2`.
pub fn write_point_cloud<W: Write>(out: W, series: &FeatureSeries, points: &Matrix, steps: &[usize]) -> Result<()> {
    if points.rows() != series.len() || steps.len() != series.len() {
        return Err(Error::shape("point cloud rows disagree with the feature series"));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["run".to_string(), "step".into(), "label".into()];
    header.extend((1..=points.cols()).map(|c| format!("pc{c}")));
    w.write_record(&header)?;
    for i in 0..series.len() {
        let mut row = vec![
            series.trajectories[i].to_string(),
            steps[i].to_string(),
            series.labels[i].clone(),
        ];
        row.extend(points.row(i).iter().map(|v| format!("{v:e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
