use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use neurela::analysis::{
    bench_grid, pearson_matrix, rq3_pipeline, write_point_cloud, write_timing_long, write_timing_table,
    FeatureSeries, FeatureSource, Phase, MIN_RUNS,
};
use neurela::analyzer::{AnalyzerCheckpoint, Network, Observation, Provenance};
use neurela::ela::{ela_features, handcrafted_state, ElaOptions, RunContext, HANDCRAFTED_NAMES};
use neurela::metabbo::{train_for_evaluation, BaselineCache, NeurelaAnalyzer, ProblemZ};
use neurela::trainer::{self, fine_tune, zero_shot, TrainOptions};
use neurela::{Error, Result};
use serde::Serialize;

use crate::config::{self, EvalConfig, GridConfig, Rq3Config, RunConfig, SNAPSHOT_FILE};
use crate::obsfile;
use crate::{AnalysisKind, Mode};

/// Fresh `<root>/<kind>-<UTC timestamp>[-n]` directory.
fn new_run_dir(root: &Path, kind: &str) -> Result<PathBuf> {
    fs::create_dir_all(root)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let base = root.join(format!("{kind}-{stamp}"));
    let mut dir = base.clone();
    let mut n = 1;
    while dir.exists() {
        dir = PathBuf::from(format!("{}-{n}", base.display()));
        n += 1;
    }
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn out_dir(explicit: Option<PathBuf>, root: &Path, kind: &str) -> Result<PathBuf> {
    match explicit {
        Some(d) => {
            fs::create_dir_all(&d)?;
            Ok(d)
        }
        None => new_run_dir(root, kind),
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::config(format!("cannot build a work pool of width {j}: {e}")))?
            .install(f),
        None => f(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn train(config: Option<PathBuf>, resume: Option<PathBuf>, jobs: Option<usize>, halt_after: Option<usize>) -> Result<()> {
    let cfg: RunConfig = match (&config, &resume) {
        (Some(p), _) => config::load(p)?,
        (None, Some(dir)) => config::load(&dir.join(SNAPSHOT_FILE))?,
        (None, None) => return Err(Error::config("train needs --config or --resume")),
    };
    let run = cfg.training_run();
    run.validate()?;
    let dir = match resume {
        Some(d) => d,
        None => {
            let d = new_run_dir(&cfg.output.root(), "train")?;
            config::snapshot(&cfg, &d)?;
            d
        }
    };
    let opts = TrainOptions {
        output_dir: dir.clone(),
        baseline_dir: cfg.output.baseline_cache.clone(),
        resume: opts_resume(&dir),
        halt_after,
        jobs: jobs.or(cfg.jobs),
    };
    let out = trainer::train(&run, &opts)?;
    println!("run directory: {}", dir.display());
    println!("generations: {}", out.history.len());
    match out.best_fitness {
        Some(f) => println!("best fitness: {f:.6}"),
        None => println!("best fitness: none"),
    }
    if !out.completed {
        println!("stopped early; continue with --resume {}", dir.display());
    }
    Ok(())
}

/// A directory holding trainer state is resumed, a fresh one started.
fn opts_resume(dir: &Path) -> bool {
    dir.join(trainer::STATE_FILE).exists()
}

#[derive(Serialize)]
struct ZRow<'a> {
    epoch: usize,
    problem: &'a str,
    run: usize,
    f_star: f64,
    z: f64,
}

fn write_z_table(path: &Path, epochs: &[(usize, &[ProblemZ])]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for (epoch, problems) in epochs {
        for p in *problems {
            for (run, (f, z)) in p.f_stars.iter().zip(&p.z).enumerate() {
                w.serialize(ZRow {
                    epoch: *epoch,
                    problem: &p.problem,
                    run,
                    f_star: *f,
                    z: *z,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn evaluate(
    checkpoint: &Path,
    task_file: &Path,
    mode: Mode,
    jobs: Option<usize>,
    output: Option<PathBuf>,
) -> Result<()> {
    let cfg: EvalConfig = config::load(task_file)?;
    cfg.task.validate()?;
    if cfg.q == 0 {
        return Err(Error::config("q must be positive"));
    }
    let ckpt = AnalyzerCheckpoint::load(checkpoint)?;
    let net = ckpt.network()?;
    cfg.task.check_width(net.width())?;
    let root = cfg.output.root();
    let dir = out_dir(output, &root, "evaluate")?;
    config::snapshot(&cfg, &dir)?;
    let cache = BaselineCache::new(cfg.output.baseline_cache_or(root.join("baselines")));

    with_jobs(jobs, || {
        let (baseline, _) = cache.get_or_compute(&cfg.task, cfg.q, cfg.seed)?;
        match mode {
            Mode::ZeroShot => {
                let rp = zero_shot(&net, &cfg.task, &baseline, cfg.q, cfg.seed)?;
                fs::write(dir.join("report.json"), serde_json::to_vec_pretty(&rp)?)?;
                write_z_table(&dir.join("z_table.csv"), &[(0, &rp.problems)])?;
                println!("task: {}", rp.task_id);
                println!("upsilon: {:.6}", rp.upsilon);
                for p in &rp.problems {
                    println!("  {}: {:.6}", p.problem, p.upsilon);
                }
            }
            Mode::FineTune => {
                let rep = fine_tune(&net, &cfg.task, &baseline, cfg.q, cfg.seed)?;
                fs::write(dir.join("report.json"), serde_json::to_vec_pretty(&rep)?)?;
                let tables: Vec<(usize, &[ProblemZ])> =
                    rep.epochs.iter().map(|e| (e.epoch, e.problems.as_slice())).collect();
                write_z_table(&dir.join("z_table.csv"), &tables)?;
                let mut w = csv::Writer::from_writer(create(&dir.join("fine_tune.csv"))?);
                w.write_record(["epoch", "upsilon", "best_upsilon", "train_fitness"])?;
                for e in &rep.epochs {
                    w.write_record([
                        e.epoch.to_string(),
                        format!("{:e}", e.upsilon),
                        format!("{:e}", e.best_upsilon),
                        e.train_fitness.map(|f| format!("{f:e}")).unwrap_or_default(),
                    ])?;
                }
                w.flush()?;
                let prov = Provenance {
                    generation: None,
                    seed: Some(cfg.seed),
                    fitness: rep.epochs.last().map(|e| e.best_upsilon),
                    note: format!("fine-tuned on task {}", rep.task_id),
                };
                AnalyzerCheckpoint::new(net.config(), &rep.theta, prov)?.save(&dir.join("fine_tuned_analyzer.json"))?;
                println!("task: {}", rep.task_id);
                for e in &rep.epochs {
                    println!("epoch {}: upsilon {:.6}, best {:.6}", e.epoch, e.upsilon, e.best_upsilon);
                }
            }
        }
        println!("report directory: {}", dir.display());
        Ok(())
    })
}

type ExtractFn = Box<dyn Fn(&Observation) -> Vec<Option<f64>>>;

fn extractor_for(spec: &str) -> Result<(Vec<String>, ExtractFn)> {
    match spec {
        "ela" => {
            let opts = ElaOptions::full();
            Ok((
                opts.feature_names(),
                Box::new(move |o| ela_features(&o.x, &o.y, &o.lb, &o.ub, &opts).values),
            ))
        }
        "handcrafted" => Ok((
            HANDCRAFTED_NAMES.iter().map(|s| s.to_string()).collect(),
            Box::new(|o| {
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
                handcrafted_state(&ctx).0.iter().map(|v| Some(*v)).collect()
            }),
        )),
        path => {
            let net: Network = AnalyzerCheckpoint::load(Path::new(path))?.network()?;
            Ok((
                (1..=net.width()).map(|i| format!("F{i}")).collect(),
                Box::new(move |o| net.forward(o).pop.into_iter().map(Some).collect()),
            ))
        }
    }
}

pub fn extract(extractor: &str, input: &Path, output: Option<&Path>) -> Result<()> {
    let text = fs::read_to_string(input).map_err(|e| Error::config(format!("cannot read {}: {e}", input.display())))?;
    let observations = obsfile::parse(&text, input)?;
    let (names, f) = extractor_for(extractor)?;
    let sink: Box<dyn Write> = match output {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["obs".to_string()];
    header.extend(names);
    w.write_record(&header)?;
    for lo in &observations {
        let mut row = vec![lo.id.clone()];
        row.extend(f(&lo.obs).into_iter().map(|v| v.map(|x| format!("{x:e}")).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn bench(grid: &Path, output: Option<PathBuf>) -> Result<()> {
    let cfg: GridConfig = config::load(grid)?;
    if cfg.runs < MIN_RUNS {
        return Err(Error::config(format!("runs must be at least {MIN_RUNS}, got {}", cfg.runs)));
    }
    if cfg.m.is_empty() || cfg.d.is_empty() || cfg.extractors.is_empty() {
        return Err(Error::config("grid needs extractors, m and d values"));
    }
    if cfg.m.iter().any(|&m| m < 3) || cfg.d.contains(&0) {
        return Err(Error::config("grid sizes need m >= 3 and d >= 1"));
    }
    let network = match &cfg.checkpoint {
        Some(p) => Some(AnalyzerCheckpoint::load(&config::relative_to(grid, p))?.network()?),
        None => None,
    };
    let dir = out_dir(output, &cfg.output.root(), "bench")?;
    config::snapshot(&cfg, &dir)?;
    let cells = bench_grid(&cfg.extractors, &cfg.m, &cfg.d, cfg.runs, cfg.seed, network.as_ref())?;
    write_timing_table(create(&dir.join("timing_table.csv"))?, &cells)?;
    write_timing_long(create(&dir.join("timing_long.csv"))?, &cells)?;
    write_timing_table(io::stdout().lock(), &cells)?;
    println!("report directory: {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct CorrelationSnapshot<'a> {
    kind: &'a str,
    ela: &'a Path,
    neurela: &'a Path,
}

fn read_series(path: &Path, source: FeatureSource) -> Result<FeatureSeries> {
    let file = File::open(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    FeatureSeries::read_csv(file, source, path)
}

pub fn analyze(kind: AnalysisKind, inputs: &[PathBuf], jobs: Option<usize>, output: Option<PathBuf>) -> Result<()> {
    match kind {
        AnalysisKind::Correlation => {
            let [ela_path, neu_path] = inputs else {
                return Err(Error::config("correlation takes two inputs: ELA features, then NeurELA features"));
            };
            let ela = read_series(ela_path, FeatureSource::Ela)?;
            let neu = read_series(neu_path, FeatureSource::Neurela)?;
            if ela.imputed + neu.imputed > 0 {
                eprintln!("note: {} missing values imputed as 0", ela.imputed + neu.imputed);
            }
            let corr = pearson_matrix(&ela, &neu)?;
            let dir = out_dir(output, &config::OutputConfig::default().root(), "analyze")?;
            config::snapshot(
                &CorrelationSnapshot {
                    kind: "correlation",
                    ela: ela_path,
                    neurela: neu_path,
                },
                &dir,
            )?;
            corr.write_csv(create(&dir.join("correlation.csv"))?)?;
            let weak: Vec<&str> = corr
                .weakly_correlated_columns()
                .into_iter()
                .map(|i| corr.col_names[i].as_str())
                .collect();
            println!("{} x {} correlation matrix", corr.row_names.len(), corr.col_names.len());
            println!("weakly correlated NeurELA features: {}", weak.join(" "));
            println!("report directory: {}", dir.display());
            Ok(())
        }
        AnalysisKind::Rq3 => {
            let [study] = inputs else {
                return Err(Error::config("rq3 takes one study file"));
            };
            let cfg: Rq3Config = config::load(study)?;
            cfg.task.validate()?;
            if cfg.runs == 0 {
                return Err(Error::config("runs must be positive"));
            }
            let net = AnalyzerCheckpoint::load(&config::relative_to(study, &cfg.checkpoint))?.network()?;
            cfg.task.check_width(net.width())?;
            let problem = cfg
                .task
                .test_problems()?
                .into_iter()
                .find(|p| p.function.id() == cfg.function)
                .ok_or_else(|| Error::config(format!("function {} is not in the task's test set", cfg.function)))?;
            let dir = out_dir(output, &cfg.output.root(), "analyze")?;
            config::snapshot(&cfg, &dir)?;
            let out = with_jobs(jobs, || {
                let policy = train_for_evaluation(&NeurelaAnalyzer::new(net.clone()), &cfg.task, cfg.seed)?;
                rq3_pipeline(&cfg.task, &net, &policy, &problem, cfg.runs, cfg.seed)
            })?;
            write_point_cloud(create(&dir.join("rq3_neurela.csv"))?, &out.neurela, &out.neurela_2d, &out.steps)?;
            write_point_cloud(create(&dir.join("rq3_ela.csv"))?, &out.ela, &out.ela_2d, &out.steps)?;
            out.neurela.write_csv(create(&dir.join("features_neurela.csv"))?)?;
            out.ela.write_csv(create(&dir.join("features_ela.csv"))?)?;
            println!(
                "steps: {} exploration, {} exploitation",
                out.count(Phase::Exploration),
                out.count(Phase::Exploitation)
            );
            println!("report directory: {}", dir.display());
            Ok(())
        }
    }
}
