use crate::analyzer::{Network, Observation};
use crate::ela::{ela_features, handcrafted_state, ElaOptions, RunContext, HANDCRAFTED_NAMES};
use crate::error::Result;
use crate::matrix::Matrix;

/// What an extractor sees at one optimization step.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub obs: &'a Observation,
    pub step: usize,
    pub horizon: usize,
    /// Best-so-far objective after each completed step, starting with the
    /// initial population.
    pub best_history: &'a [f64],
}

/// Extractor output. Population-level extractors leave `indiv` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub pop: Vec<f64>,
    pub indiv: Option<Matrix>,
}

/// A landscape analyser usable inside an episode.
pub trait LandscapeAnalyzer: Send + Sync {
    fn name(&self) -> &'static str;
    fn width(&self) -> usize;
    fn extract(&self, view: &StepView<'_>) -> Result<Features>;
}

pub struct NeurelaAnalyzer {
    pub network: Network,
}

impl NeurelaAnalyzer {
    pub fn new(network: Network) -> Self {
        Self { network }
    }
}

impl LandscapeAnalyzer for NeurelaAnalyzer {
    fn name(&self) -> &'static str {
        "neurela"
    }

    fn width(&self) -> usize {
        self.network.width()
    }

    fn extract(&self, view: &StepView<'_>) -> Result<Features> {
        let f = self.network.forward(view.obs);
        Ok(Features {
            pop: f.pop,
            indiv: Some(f.indiv),
        })
    }
}

/// Classical feature baseline, missing values imputed as 0.
#[derive(Default)]
pub struct ElaAnalyzer {
    pub options: ElaOptions,
}


impl LandscapeAnalyzer for ElaAnalyzer {
    fn name(&self) -> &'static str {
        "ela"
    }

    fn width(&self) -> usize {
        self.options.width()
    }

    fn extract(&self, view: &StepView<'_>) -> Result<Features> {
        let o = view.obs;
        let v = ela_features(&o.x, &o.y, &o.lb, &o.ub, &self.options);
        Ok(Features {
            pop: v.imputed(),
            indiv: None,
        })
    }
}

/// The hand-crafted optimizer-state features.
#[derive(Debug, Default, Clone, Copy)]
pub struct HandcraftedAnalyzer;

impl LandscapeAnalyzer for HandcraftedAnalyzer {
    fn name(&self) -> &'static str {
        "handcrafted"
    }

    fn width(&self) -> usize {
        HANDCRAFTED_NAMES.len()
    }

    fn extract(&self, view: &StepView<'_>) -> Result<Features> {
        let o = view.obs;
        let s = handcrafted_state(&RunContext {
            x: &o.x,
            y: &o.y,
            lb: &o.lb,
            ub: &o.ub,
            step: view.step,
            horizon: view.horizon,
            best_history: view.best_history,
        });
        Ok(Features {
            pop: s.0.to_vec(),
            indiv: None,
        })
    }
}
