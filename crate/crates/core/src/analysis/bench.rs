use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::analyzer::{AnalyzerConfig, Network, Observation};
use crate::ela::{ela_features, handcrafted_state, ElaOptions, RunContext};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;
use crate::stats;

pub const MIN_RUNS: usize = 10;
/// Distinct observations generated per benchmark cell; runs cycle over them.
const OBSERVATION_POOL: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extractor {
    Neurela,
    Ela,
    Handcrafted,
}

impl Extractor {
    pub const ALL: [Extractor; 3] = [Extractor::Handcrafted, Extractor::Ela, Extractor::Neurela];

    pub fn name(self) -> &'static str {
        match self {
            Extractor::Neurela => "neurela",
            Extractor::Ela => "ela",
            Extractor::Handcrafted => "handcrafted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
    pub runs: usize,
}

/// Instrumentation points of a benchmark, in the order they occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchEvent {
    BuildStart,
    BuildEnd,
    TimedStart,
    TimedEnd,
}

/// Uniform positions in `[-5, 5]^d` with uniform objective values.
pub fn random_observations(m: usize, d: usize, count: usize, seed_v: u64) -> Vec<Observation> {
    (0..count)
        .map(|c| {
            let mut rng = seed::derived_rng(seed_v, &[c as u64]);
            let x: Vec<f64> = (0..m * d).map(|_| rng.random_range(-5.0..5.0)).collect();
            let y = (0..m).map(|_| rng.random_range(0.0..100.0)).collect();
            Observation {
                x: Matrix::from_vec(m, d, x).expect("sized above"),
                y,
                lb: vec![-5.0; d],
                ub: vec![5.0; d],
            }
        })
        .collect()
}

/// Builds an extractor with `build`, then times `runs` calls cycling over
/// `observations`. Only the calls are inside the timed region.
pub fn time_extraction<B, F>(
    build: B,
    observations: &[Observation],
    runs: usize,
    hook: &mut dyn FnMut(BenchEvent),
) -> Result<Timing>
where
    B: FnOnce() -> Result<F>,
    F: FnMut(&Observation),
{
    if runs < MIN_RUNS {
        return Err(Error::config(format!("bench needs at least {MIN_RUNS} runs, got {runs}")));
    }
    if observations.is_empty() {
        return Err(Error::config("bench needs at least one observation"));
    }
    hook(BenchEvent::BuildStart);
    let mut extract = build()?;
    hook(BenchEvent::BuildEnd);
    let mut times = Vec::with_capacity(runs);
    for r in 0..runs {
        let obs = &observations[r % observations.len()];
        hook(BenchEvent::TimedStart);
        let t = Instant::now();
        extract(black_box(obs));
        times.push(t.elapsed().as_secs_f64());
        hook(BenchEvent::TimedEnd);
    }
    Ok(Timing {
        mean: stats::mean(&times),
        p50: stats::quantile(&times, 0.5),
        p95: stats::quantile(&times, 0.95),
        runs,
    })
}

/// Mean wall time of one feature extraction at population `m` and
/// dimension `d`. NeurELA uses `network` or a random default-size one.
pub fn bench_walltime_with(
    extractor: Extractor,
    m: usize,
    d: usize,
    runs: usize,
    seed_v: u64,
    network: Option<&Network>,
    hook: &mut dyn FnMut(BenchEvent),
) -> Result<Timing> {
    let obs = random_observations(m, d, OBSERVATION_POOL.min(runs), seed_v);
    match extractor {
        Extractor::Neurela => time_extraction(
            || {
                let net = match network {
                    Some(n) => n.clone(),
                    None => Network::random(&AnalyzerConfig::default(), &mut seed::rng(seed_v))?,
                };
                Ok(move |o: &Observation| {
                    black_box(net.forward(o));
                })
            },
            &obs,
            runs,
            hook,
        ),
        Extractor::Ela => time_extraction(
            || {
                let opts = ElaOptions::full();
                Ok(move |o: &Observation| {
                    black_box(ela_features(&o.x, &o.y, &o.lb, &o.ub, &opts));
                })
            },
            &obs,
            runs,
            hook,
        ),
        Extractor::Handcrafted => time_extraction(
            || {
                Ok(|o: &Observation| {
                    let best = [o.y.iter().copied().fold(f64::INFINITY, f64::min)];
                    let ctx = RunContext {
                        x: &o.x,
                        y: &o.y,
                        lb: &o.lb,
                        ub: &o.ub,
                        step: 0,
                        horizon: 1,
                        best_history: &best,
                    };
                    black_box(handcrafted_state(&ctx));
                })
            },
            &obs,
            runs,
            hook,
        ),
    }
}

pub fn bench_walltime(extractor: Extractor, m: usize, d: usize, runs: usize, seed_v: u64) -> Result<Timing> {
    bench_walltime_with(extractor, m, d, runs, seed_v, None, &mut |_| {})
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub extractor: Extractor,
    pub m: usize,
    pub d: usize,
    pub timing: Timing,
}

/// Every extractor on every `(m, d)` pair, run serially.
pub fn bench_grid(
    extractors: &[Extractor],
    ms: &[usize],
    ds: &[usize],
    runs: usize,
    seed_v: u64,
    network: Option<&Network>,
) -> Result<Vec<BenchCell>> {
    let mut cells = Vec::new();
    for &e in extractors {
        for &m in ms {
            for &d in ds {
                let timing = bench_walltime_with(e, m, d, runs, seed_v, network, &mut |_| {})?;
                log::info!("bench {} m={m} d={d}: mean {:.3e}s", e.name(), timing.mean);
                cells.push(BenchCell {
                    extractor: e,
                    m,
                    d,
                    timing,
                });
            }
        }
    }
    Ok(cells)
}

/// Mean seconds with extractors as rows and `(m, d)` cells as columns.
pub fn write_timing_table<W: Write>(out: W, cells: &[BenchCell]) -> Result<()> {
    let mut extractors: Vec<Extractor> = Vec::new();
    let mut grid: Vec<(usize, usize)> = Vec::new();
    for c in cells {
        if !extractors.contains(&c.extractor) {
            extractors.push(c.extractor);
        }
        if !grid.contains(&(c.m, c.d)) {
            grid.push((c.m, c.d));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["extractor".to_string()];
    header.extend(grid.iter().map(|(m, d)| format!("m={m};d={d}")));
    w.write_record(&header)?;
    for e in extractors {
        let mut row = vec![e.name().to_string()];
        for &(m, d) in &grid {
            let v = cells.iter().find(|c| c.extractor == e && c.m == m && c.d == d);
            row.push(v.map(|c| format!("{:.3e}", c.timing.mean)).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per cell with the full timing summary.
pub fn write_timing_long<W: Write>(out: W, cells: &[BenchCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["extractor", "m", "d", "runs", "mean", "p50", "p95"])?;
    for c in cells {
        w.write_record([
            c.extractor.name().to_string(),
            c.m.to_string(),
            c.d.to_string(),
            c.timing.runs.to_string(),
            format!("{:e}", c.timing.mean),
            format!("{:e}", c.timing.p50),
            format!("{:e}", c.timing.p95),
        ])?;
    }
    w.flush()?;
    Ok(())
}
