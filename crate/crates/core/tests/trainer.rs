use std::fs;

use neurela::analyzer::{AnalyzerCheckpoint, AnalyzerConfig, Network, Provenance};
use neurela::es::EsVariant;
use neurela::metabbo::{relative_performance, BaselineCache, InnerTraining, NeurelaAnalyzer, ProblemSet, RelativePerformance, TaskSpec};
use neurela::optimizers::OptimizerKind;
use neurela::trainer::{
    combine, compute_baselines, fine_tune, fitness, train, zero_shot, OuterEs, TrainOptions, TrainerState,
    TrainingRun, BEST_FILE, HISTORY_FILE, STATE_FILE, TIMINGS_FILE,
};
use neurela::{seed, Error};

const M: usize = 6;
const BUDGET: u64 = 24;

fn task(id: &str, kind: OptimizerKind, fns: (Vec<u32>, Vec<u32>)) -> TaskSpec {
    TaskSpec {
        id: id.into(),
        optimizer: kind,
        population: M,
        budget: BUDGET,
        feature_mode: None,
        train: ProblemSet { functions: fns.0, dimension: 3, instances: 1, seed: 11, noise: None },
        test: ProblemSet { functions: fns.1, dimension: 3, instances: 1, seed: 12, noise: None },
        inner: InnerTraining { variant: EsVariant::SepCmaes, population: 4, epochs: 2, problems_per_eval: 1, sigma: 0.3 },
        feature_width: None,
    }
}

fn small_cfg() -> AnalyzerConfig {
    AnalyzerConfig::new(4, 1, 1)
}

fn run(max_gen: usize, n: usize) -> TrainingRun {
    TrainingRun {
        analyzer: small_cfg(),
        tasks: vec![
            task("de", OptimizerKind::De, (vec![1, 2], vec![3, 6])),
            task("pso", OptimizerKind::Pso, (vec![1, 8], vec![2, 10])),
        ],
        es: OuterEs { variant: EsVariant::FastCmaes, population: n, sigma: 0.3, path_lr: None, history_interval: None },
        max_gen,
        q: 2,
        seed: 99,
    }
}

fn opts(dir: &std::path::Path) -> TrainOptions {
    TrainOptions { output_dir: dir.to_path_buf(), ..Default::default() }
}

fn random_network(cfg: &AnalyzerConfig, s: u64) -> Network {
    Network::random(cfg, &mut seed::rng(s)).unwrap()
}

fn rp(upsilon: f64) -> RelativePerformance {
    RelativePerformance { task_id: "t".into(), upsilon, problems: vec![], fe_used: 1 }
}

#[test]
fn combine_averages_task_scores() {
    assert_eq!(combine(vec![rp(0.7)]).fitness, 0.7);
    assert_eq!(combine(vec![rp(0.4), rp(-0.4)]).fitness, 0.0);
    let c = combine(vec![rp(0.25), rp(0.25), rp(0.25)]);
    assert_eq!(c.fitness, 0.25);
    assert_eq!(c.fe_used, 3);
}

#[test]
fn single_task_fitness_equals_its_upsilon() {
    let r = run(1, 4);
    let t = &r.tasks[..1];
    let cache_dir = tempfile::tempdir().unwrap();
    let (bl, _) = compute_baselines(t, 2, 5, &BaselineCache::new(cache_dir.path())).unwrap();
    let net = random_network(&r.analyzer, 3);
    let f = fitness(&net.encode().values, &r.analyzer, t, &bl, 2, 8).unwrap();
    let direct = relative_performance(&NeurelaAnalyzer::new(net), &t[0], &bl[0], 2, 8).unwrap();
    assert_eq!(f.fitness, direct.upsilon);
    assert_eq!(f.fe_used, direct.fe_used);
}

#[test]
fn fitness_rejects_mismatched_baselines_and_tags_task_errors() {
    let r = run(1, 4);
    let cache_dir = tempfile::tempdir().unwrap();
    let (bl, _) = compute_baselines(&r.tasks, 1, 5, &BaselineCache::new(cache_dir.path())).unwrap();
    let theta = random_network(&r.analyzer, 3).encode().values;
    assert!(matches!(fitness(&theta, &r.analyzer, &r.tasks, &bl[..1], 1, 0), Err(Error::Config(_))));

    let mut tasks = r.tasks.clone();
    tasks[1].feature_width = Some(9);
    let err = fitness(&theta, &r.analyzer, &tasks, &bl, 1, 0).unwrap_err();
    assert!(matches!(&err, Error::Task { task, .. } if task == "pso"), "{err}");
}

#[test]
fn baselines_cached_and_idempotent() {
    let r = run(1, 4);
    let dir = tempfile::tempdir().unwrap();
    let (first, fe) = compute_baselines(&r.tasks, 1, 5, &BaselineCache::new(dir.path())).unwrap();
    assert!(fe > 0);
    // fresh cache object simulates a restart
    let (second, fe2) = compute_baselines(&r.tasks, 1, 5, &BaselineCache::new(dir.path())).unwrap();
    assert_eq!(fe2, 0);
    for (a, b) in first.iter().zip(&second) {
        for (pa, pb) in a.problems.iter().zip(&b.problems) {
            assert_eq!(pa.mu.to_bits(), pb.mu.to_bits());
            assert_eq!(pa.sigma.to_bits(), pb.sigma.to_bits());
            // Q = 1 has no spread
            assert_eq!(pa.sigma, 0.0);
        }
    }
}

#[test]
fn one_generation_loop_accounting() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(&run(1, 4), &opts(dir.path())).unwrap();
    assert_eq!(out.evaluations, 4);
    assert_eq!(out.checkpoints_written, 1);
    assert_eq!(out.history.len(), 1);
    assert_eq!(out.history[0].fitness.len(), 4);
    assert!(out.completed);
    let st = TrainerState::load(&dir.path().join(STATE_FILE)).unwrap();
    assert_eq!(st.es.generation, 1, "exactly one ES update");
    for f in [HISTORY_FILE, TIMINGS_FILE, BEST_FILE] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let best = AnalyzerCheckpoint::load(&dir.path().join(BEST_FILE)).unwrap();
    assert_eq!(best.values(), out.best.unwrap());
}

#[test]
fn fe_accounting_per_generation() {
    let r = run(1, 4);
    let dir = tempfile::tempdir().unwrap();
    let out = train(&r, &opts(dir.path())).unwrap();
    // budget divisible by m: every episode spends exactly the budget
    let per_task: u64 = r
        .tasks
        .iter()
        .map(|t| {
            let meta = (t.inner.population * t.inner.epochs * t.inner.problems_per_eval) as u64 * t.budget;
            let test = (t.test.functions.len() * t.test.instances * r.q) as u64 * t.budget;
            meta + test
        })
        .sum();
    assert_eq!(out.history[0].fe_used, 4 * per_task);
    assert!(out.baseline_fe > 0);
}

#[test]
fn best_so_far_is_monotone_and_reproducible() {
    let r = run(3, 4);
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let a = train(&r, &opts(d1.path())).unwrap();
    let b = train(&r, &TrainOptions { jobs: Some(2), ..opts(d2.path()) }).unwrap();
    let bests: Vec<f64> = a.history.iter().map(|h| h.best_fitness.unwrap()).collect();
    assert!(bests.windows(2).all(|w| w[1] >= w[0]), "{bests:?}");
    assert!(a.best_fitness.unwrap() >= a.history[0].generation_best);
    assert_eq!(
        fs::read(d1.path().join(HISTORY_FILE)).unwrap(),
        fs::read(d2.path().join(HISTORY_FILE)).unwrap()
    );
    assert_eq!(a.best, b.best);
}

#[test]
fn interrupt_and_resume_matches_uninterrupted_run() {
    let r = run(3, 4);
    let (full, split) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let whole = train(&r, &opts(full.path())).unwrap();

    let first = train(&r, &TrainOptions { halt_after: Some(1), ..opts(split.path()) }).unwrap();
    assert!(!first.completed);
    assert_eq!(first.history.len(), 1);
    let rest = train(&r, &TrainOptions { resume: true, ..opts(split.path()) }).unwrap();
    assert!(rest.completed);
    assert_eq!(rest.evaluations, 8);
    assert_eq!(
        fs::read(full.path().join(HISTORY_FILE)).unwrap(),
        fs::read(split.path().join(HISTORY_FILE)).unwrap()
    );
    assert_eq!(whole.best, rest.best);
    let sa = TrainerState::load(&full.path().join(STATE_FILE)).unwrap();
    let sb = TrainerState::load(&split.path().join(STATE_FILE)).unwrap();
    assert_eq!(serde_json::to_string(&sa.es).unwrap(), serde_json::to_string(&sb.es).unwrap());
}

#[test]
fn corrupt_or_foreign_state_is_rejected() {
    let r = run(1, 4);
    let dir = tempfile::tempdir().unwrap();
    train(&r, &opts(dir.path())).unwrap();

    // refusing to clobber an existing run
    assert!(matches!(train(&r, &opts(dir.path())), Err(Error::Config(_))));

    let mut other = r.clone();
    other.seed += 1;
    other.max_gen = 2;
    let resume = TrainOptions { resume: true, ..opts(dir.path()) };
    assert!(matches!(train(&other, &resume), Err(Error::Config(_))));

    let path = dir.path().join(STATE_FILE);
    let mut bytes = fs::read(&path).unwrap();
    let pos = bytes.iter().position(|&b| b == b'"').unwrap() + 3;
    bytes[pos] ^= 0x01;
    fs::write(&path, &bytes).unwrap();
    let mut longer = r.clone();
    longer.max_gen = 2;
    assert!(matches!(train(&longer, &resume), Err(Error::Integrity { .. })));

    // well-formed but tampered content fails the digest
    train(&r, &opts(&dir.path().join("again"))).unwrap();
    let path = dir.path().join("again").join(STATE_FILE);
    let mut v: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    v["state"]["baseline_fe"] = serde_json::json!(1);
    fs::write(&path, serde_json::to_vec(&v).unwrap()).unwrap();
    let err = TrainerState::load(&path).unwrap_err();
    assert!(err.to_string().contains("digest"), "{err}");

    fs::write(&path, b"{ not json").unwrap();
    assert!(matches!(TrainerState::load(&path), Err(Error::Integrity { .. })));
}

#[test]
fn resume_extends_a_finished_run() {
    let dir = tempfile::tempdir().unwrap();
    train(&run(1, 4), &opts(dir.path())).unwrap();
    let out = train(&run(2, 4), &TrainOptions { resume: true, ..opts(dir.path()) }).unwrap();
    assert_eq!(out.history.len(), 2);
    assert_eq!(out.evaluations, 4);
}

#[test]
fn invalid_runs_are_rejected() {
    let mut r = run(1, 4);
    r.tasks.clear();
    assert!(r.validate().is_err());
    let mut r = run(1, 4);
    r.tasks[1].id = "de".into();
    assert!(r.validate().unwrap_err().to_string().contains("duplicate"));
    let mut r = run(1, 4);
    r.tasks[0].feature_width = Some(16);
    assert!(r.validate().is_err());
}

#[test]
fn zero_shot_and_fine_tune_contract() {
    let r = run(1, 4);
    let t = &r.tasks[0];
    let dir = tempfile::tempdir().unwrap();
    let (bl, _) = compute_baselines(&r.tasks[..1], 2, 5, &BaselineCache::new(dir.path().join("b"))).unwrap();

    let net = random_network(&r.analyzer, 17);
    let path = dir.path().join("theta.json");
    AnalyzerCheckpoint::from_network(&net, Provenance::default()).unwrap().save(&path).unwrap();
    let before = fs::read(&path).unwrap();
    let loaded = AnalyzerCheckpoint::load(&path).unwrap().network().unwrap();
    let zs = zero_shot(&loaded, t, &bl[0], 2, 31).unwrap();
    assert_eq!(fs::read(&path).unwrap(), before);
    assert_eq!(loaded, net, "frozen analyser untouched");
    assert_eq!(zs.problems.len(), 2);
    assert!(zs.problems.iter().all(|p| p.z.len() == 2));

    let ft = fine_tune(&loaded, t, &bl[0], 2, 31).unwrap();
    assert_eq!(ft.epochs[0].upsilon, zs.upsilon);
    assert_eq!(ft.epochs.len(), t.inner.epochs + 1);
    assert!(ft.epochs.windows(2).all(|w| w[1].best_upsilon >= w[0].best_upsilon));
    assert_eq!(ft.theta.len(), r.analyzer.param_count());

    let mut wrong = t.clone();
    wrong.feature_width = Some(8);
    let err = zero_shot(&loaded, &wrong, &bl[0], 2, 31).unwrap_err();
    assert!(err.to_string().contains("feature width 8"), "{err}");
    assert!(fine_tune(&loaded, &wrong, &bl[0], 2, 31).is_err());
}
