//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::reference::{ref_attn, ref_forward, RefNet};
use common::{random_observation, rows};
use neurela::analysis::{bench_walltime, classify, pca_project, pearson_matrix, Extractor, FeatureSeries, FeatureSource, Phase, MIN_RUNS};
use neurela::analyzer::{
    attn_block, decode_params, embed, encode_params, param_count_formula, pie_normalize, AnalyzerConfig, Network,
    Observation,
};
use neurela::ela::{dispersion_features, fdc_features, information_content, nbc_features};
use neurela::es::{EsConfig, EsState, EsVariant};
use neurela::metabbo::{
    baseline_stats, relative_performance, z_score, BaselineCache, HandcraftedAnalyzer, InnerTraining, ProblemSet, TaskSpec,
};
use neurela::optimizers::OptimizerKind;
use neurela::trainer::{
    compute_baselines, fine_tune, train, zero_shot, GenerationRecord, OuterEs, TrainOptions, TrainingRun, HISTORY_FILE,
};
use neurela::{seed, Matrix};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

fn check(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn task(id: &str, kind: OptimizerKind, m: usize, budget: u64, d: usize, fns: (Vec<u32>, Vec<u32>)) -> TaskSpec {
    TaskSpec {
        id: id.into(),
        optimizer: kind,
        population: m,
        budget,
        feature_mode: None,
        train: ProblemSet { functions: fns.0, dimension: d, instances: 1, seed: 11, noise: None },
        test: ProblemSet { functions: fns.1, dimension: d, instances: 1, seed: 12, noise: None },
        inner: InnerTraining { variant: EsVariant::SepCmaes, population: 4, epochs: 2, problems_per_eval: 1, sigma: 0.3 },
        feature_width: None,
    }
}

fn metric_exactness() -> Outcome {
    let (mu, sigma) = (3.5, 0.25);
    check(z_score(mu, mu, sigma) == 0.0, "f* = mu")?;
    check(z_score(mu - sigma, mu, sigma) == 1.0, "f* = mu - sigma")?;
    check(z_score(mu + 2.0 * sigma, mu, sigma) == -2.0, "f* = mu + 2 sigma")?;
    let t = task("de", OptimizerKind::De, 6, 60, 3, (vec![1, 2], vec![3, 6]));
    for q in [1, 3] {
        let base = baseline_stats(&t, q, 17).map_err(|e| e.to_string())?;
        let rp = relative_performance(&HandcraftedAnalyzer, &t, &base, q, 17).map_err(|e| e.to_string())?;
        check(rp.upsilon == 0.0, format!("self-comparison at Q={q} gave {}", rp.upsilon))?;
    }
    Ok("z substitutions exact; baseline self-comparison 0".into())
}

fn analyzer_oracle() -> Outcome {
    let mut rng = seed::rng(2);
    let cfg = AnalyzerConfig::new(16, 1, 1);
    let mut worst_ts: f64 = 0.0;
    let mut worst_attn: f64 = 0.0;
    for _ in 0..20 {
        let values: Vec<f64> = (0..cfg.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let net = decode_params(&values, &cfg).map_err(|e| e.to_string())?;
        let reference = RefNet::from_flat(&values, 16, 16, 1, 1);
        let d = rng.random_range(1..=5);
        let m = rng.random_range(2..=6);
        let obs = random_observation(m, d, &mut rng);
        let got = net.ts_attn_forward(&embed(&pie_normalize(&obs), &net.w_emb));
        let (indiv, pop) = ref_forward(&reference, &rows(&obs.x), &obs.y, &obs.lb, &obs.ub);
        worst_ts = worst_ts.max(max_abs_diff(got.indiv.as_slice(), &indiv.concat())).max(max_abs_diff(&got.pop, &pop));

        let x: Vec<Vec<f64>> = (0..m).map(|_| (0..16).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let block = attn_block(&Matrix::from_rows(&x).map_err(|e| e.to_string())?, &net.layers[0].inter, 1);
        worst_attn = worst_attn.max(max_abs_diff(block.as_slice(), &ref_attn(&x, &reference.layers[0].0, 1).concat()));
    }
    check(worst_ts < 1e-9, format!("ts_attn_forward deviates by {worst_ts:e}"))?;
    check(worst_attn < 1e-9, format!("attn_block deviates by {worst_attn:e}"))?;
    Ok(format!("max deviation {:e} (ts_attn), {:e} (attn_block)", worst_ts, worst_attn))
}

fn build(x: &[f64], y: &[f64], m: usize, d: usize, lb: f64, ub: f64) -> Observation {
    Observation::new(Matrix::from_vec(m, d, x.to_vec()).unwrap(), y.to_vec(), vec![lb; d], vec![ub; d]).unwrap()
}

fn invariants() -> Outcome {
    let mut rng = seed::rng(3);
    let cfg = AnalyzerConfig::new(16, 1, 1);
    for case in 0..30 {
        let m = rng.random_range(2..=8);
        let d = rng.random_range(1..=5);
        let x: Vec<f64> = (0..m * d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1e3..1e3)).collect();
        let obs = build(&x, &y, m, d, -5.0, 5.0);
        check(pie_normalize(&obs).as_slice().iter().all(|v| (0.0..=1.0).contains(v)), "PIE outside [0, 1]")?;

        let net = Network::random(&cfg, &mut seed::rng(case)).map_err(|e| e.to_string())?;
        let base = net.forward(&obs);
        let (a, b) = (rng.random_range(0.01..100.0), rng.random_range(-1e3..1e3));
        let y2: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        let moved = net.forward(&build(&x, &y2, m, d, -5.0, 5.0));
        let dev = max_abs_diff(base.indiv.as_slice(), moved.indiv.as_slice()).max(max_abs_diff(&base.pop, &moved.pop));
        check(dev < 1e-6, format!("objective-scale deviation {dev:e}"))?;

        let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let moved = net.forward(&build(&x2, &y, m, d, -5.0 * a + b, 5.0 * a + b));
        let dev = max_abs_diff(base.indiv.as_slice(), moved.indiv.as_slice()).max(max_abs_diff(&base.pop, &moved.pop));
        check(dev < 1e-6, format!("search-box deviation {dev:e}"))?;

        let perm: Vec<usize> = (0..m).rev().collect();
        let px: Vec<f64> = perm.iter().flat_map(|&i| x[i * d..(i + 1) * d].to_vec()).collect();
        let py: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let moved = net.forward(&build(&px, &py, m, d, -5.0, 5.0));
        for (new_i, &old_i) in perm.iter().enumerate() {
            check(max_abs_diff(moved.indiv.row(new_i), base.indiv.row(old_i)) < 1e-9, "F_indiv not equivariant")?;
        }
        check(max_abs_diff(&base.pop, &moved.pop) < 1e-9, "F_pop not invariant")?;

        let v = encode_params(&net);
        let back = decode_params(&v.values, &cfg).map_err(|e| e.to_string())?;
        let bits = |p: &[f64]| p.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        check(bits(&encode_params(&back).values) == bits(&v.values), "codec round trip not bit-exact")?;
    }
    let count = cfg.param_count();
    check((3000..=3500).contains(&count), format!("parameter count {count} outside [3000, 3500]"))?;
    check(count == param_count_formula(&cfg), "parameter count disagrees with the layout formula")?;
    Ok(format!("30 random cases; parameter count {count}"))
}

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2).map(|p| 100.0 * (p[0] * p[0] - p[1]).powi(2) + (p[0] - 1.0).powi(2)).sum()
}

fn reaches(cfg: EsConfig, f: fn(&[f64]) -> f64, target: f64, max_evals: u64) -> bool {
    let mut es = EsState::init(cfg).unwrap();
    while es.evaluations < max_evals {
        let xs = es.sample();
        let ys: Vec<f64> = xs.iter().map(|x| f(x)).collect();
        let room = (max_evals - es.evaluations) as usize;
        if ys.iter().take(room).any(|y| *y < target) {
            return true;
        }
        let fit: Vec<f64> = ys.iter().map(|y| -y).collect();
        es.update(&xs, &fit).unwrap();
    }
    false
}

fn es_oracles() -> Outcome {
    let sphere_ok = (0..10).filter(|&s| reaches(EsConfig::new(EsVariant::Cmaes, 2, 8, s), sphere, 1e-10, 5000)).count();
    check(sphere_ok == 10, format!("2-D sphere solved by {sphere_ok}/10 seeds"))?;
    let rosen_ok =
        (0..10).filter(|&s| reaches(EsConfig::new(EsVariant::Cmaes, 10, 10, s), rosenbrock, 1e-6, 100_000)).count();
    check(rosen_ok >= 8, format!("10-D Rosenbrock solved by {rosen_ok}/10 seeds"))?;
    for v in EsVariant::ALL {
        for s in 0..3 {
            let cfg = EsConfig::new(v, 5, 8, s);
            let (mut a, mut b) = (EsState::init(cfg.clone()).unwrap(), EsState::init(cfg).unwrap());
            for _ in 0..15 {
                let (xa, xb) = (a.sample(), b.sample());
                check(xa == xb, format!("{} samples diverged", v.name()))?;
                let f: Vec<f64> = xa.iter().map(|x| -rosenbrock(x)).collect();
                let g: Vec<f64> = f.iter().map(|v| 3.0 * v.signum() * v.abs().cbrt() - 7.0).collect();
                a.update(&xa, &f).unwrap();
                b.update(&xb, &g).unwrap();
                check(a.mean == b.mean && a.sigma.to_bits() == b.sigma.to_bits(), format!("{} not rank invariant", v.name()))?;
            }
        }
    }
    Ok(format!("sphere {sphere_ok}/10, Rosenbrock {rosen_ok}/10, five variants rank invariant"))
}

/// History with wall times cleared; everything else must reproduce exactly.
fn timeless(history: &[GenerationRecord]) -> Vec<GenerationRecord> {
    history.iter().cloned().map(|g| GenerationRecord { wall_seconds: 0.0, ..g }).collect()
}

fn algorithm_smoke() -> Outcome {
    let run = TrainingRun {
        analyzer: AnalyzerConfig::default(),
        tasks: vec![
            task("de", OptimizerKind::De, 50, 2000, 10, (vec![1, 8], vec![3, 6])),
            task("pso", OptimizerKind::Pso, 50, 2000, 10, (vec![2, 10], vec![7, 15])),
        ],
        es: OuterEs { variant: EsVariant::FastCmaes, population: 6, sigma: 0.3, path_lr: None, history_interval: None },
        max_gen: 10,
        q: 3,
        seed: 2024,
    };
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let opts = |name: &str| TrainOptions { output_dir: tmp.path().join(name), ..Default::default() };
    let start = Instant::now();
    let first = train(&run, &opts("a")).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(first.completed && first.history.len() == 10, "run did not complete ten generations")?;
    let best: Vec<f64> = first.history.iter().filter_map(|g| g.best_fitness).collect();
    check(best.len() == 10, "missing best-so-far values")?;
    check(best.windows(2).all(|w| w[1] >= w[0]), "best-so-far decreased")?;
    check(elapsed < Duration::from_secs(30 * 60), format!("took {elapsed:?}"))?;

    let again = train(&run, &opts("b")).map_err(|e| e.to_string())?;
    check(timeless(&again.history) == timeless(&first.history), "re-run history differs")?;
    let read = |n: &str| std::fs::read(tmp.path().join(n).join(HISTORY_FILE)).map_err(|e| e.to_string());
    check(read("a")? == read("b")?, "re-run history file differs")?;

    let halted = train(&run, &TrainOptions { halt_after: Some(4), ..opts("c") }).map_err(|e| e.to_string())?;
    check(!halted.completed && halted.history.len() == 4, "halt did not stop after four generations")?;
    let resumed = train(&run, &TrainOptions { resume: true, ..opts("c") }).map_err(|e| e.to_string())?;
    check(timeless(&resumed.history) == timeless(&first.history), "resumed history differs")?;
    check(read("c")? == read("a")?, "resumed history file differs")?;
    Ok(format!(
        "first run {:.1} s on {} thread(s); best fitness {:.4}",
        elapsed.as_secs_f64(),
        rayon::current_num_threads(),
        best[9]
    ))
}

fn walltime() -> Outcome {
    let t = |e: Extractor, m: usize, d: usize| bench_walltime(e, m, d, MIN_RUNS, 7).map(|t| t.mean).map_err(|e| e.to_string());
    let (neu_big, ela_big) = (t(Extractor::Neurela, 1000, 10)?, t(Extractor::Ela, 1000, 10)?);
    let (neu_10, neu_100) = (t(Extractor::Neurela, 100, 10)?, t(Extractor::Neurela, 100, 100)?);
    let (ela_10, ela_100) = (t(Extractor::Ela, 100, 10)?, t(Extractor::Ela, 100, 100)?);
    let speedup = ela_big / neu_big;
    let (ela_growth, neu_growth) = (ela_100 / ela_10, neu_100 / neu_10);
    let detail = format!(
        "m=1000,d=10: NeurELA {neu_big:.3e} s, ELA {ela_big:.3e} s (speedup {speedup:.2}); \
         m=100, d 10->100: ELA x{ela_growth:.1}, NeurELA x{neu_growth:.1}"
    );
    check(speedup >= 5.0 && ela_growth >= 50.0 && neu_growth <= 3.0, detail.clone())?;
    Ok(detail)
}

fn ela_oracles() -> Outcome {
    let mut rng = seed::rng(9);
    let sample = |rng: &mut seed::Rng, m: usize, d: usize| {
        let x = Matrix::from_vec(m, d, (0..m * d).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap();
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
        (x, y)
    };

    let (x, _) = sample(&mut rng, 12, 3);
    let r = rows(&x);
    let y: Vec<f64> = r.iter().map(|p| 2.5 * euclid(p, &r[0]) - 4.0).collect();
    let fdc = fdc_features(&x, &y, 1.0)[0].ok_or("FDC missing")?;
    check((fdc - 1.0).abs() < 1e-9, format!("FDC {fdc}"))?;

    let (x, y) = sample(&mut rng, 10, 3);
    let r = rows(&x);
    let mut nn = vec![];
    let mut nb = vec![];
    for i in 0..10 {
        let mut a = f64::MAX;
        let mut b = f64::MAX;
        for j in 0..10 {
            if j != i {
                a = a.min(euclid(&r[i], &r[j]));
                if y[j] < y[i] {
                    b = b.min(euclid(&r[i], &r[j]));
                }
            }
        }
        nn.push(a);
        if b < f64::MAX {
            nb.push(b);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let nbc = nbc_features(&x, &y)[0].ok_or("NBC missing")?;
    check((nbc - mean(&nb) / mean(&nn)).abs() < 1e-9, "NBC ratio differs from the double loop")?;

    let mut order: Vec<usize> = (0..10).collect();
    order.sort_by(|a, b| y[*a].total_cmp(&y[*b]));
    let pair_mean = |idx: &[usize]| {
        let (mut s, mut n) = (0.0, 0.0);
        for a in 0..idx.len() {
            for b in a + 1..idx.len() {
                s += euclid(&r[idx[a]], &r[idx[b]]);
                n += 1.0;
            }
        }
        s / n
    };
    let disp = dispersion_features(&x, &y, &[0.3]);
    let (dq, da) = (pair_mean(&order[..3]), pair_mean(&order));
    check((disp[0].ok_or("dispersion missing")? - dq / da).abs() < 1e-9, "dispersion ratio differs")?;
    check((disp[1].ok_or("dispersion missing")? - (dq - da)).abs() < 1e-9, "dispersion difference differs")?;

    let (x, _) = sample(&mut rng, 10, 2);
    let neutrality = information_content(&x, &[3.0; 10])[4];
    check(neutrality == Some(1.0), format!("constant-sequence neutrality {neutrality:?}"))?;
    Ok("FDC, NBC, dispersion and information content match".into())
}

fn series(cols: &[Vec<f64>]) -> FeatureSeries {
    let n = cols[0].len();
    let data = (0..n).flat_map(|i| cols.iter().map(move |c| c[i])).collect();
    let names = (0..cols.len()).map(|j| format!("c{j}")).collect();
    FeatureSeries::new(FeatureSource::Ela, names, Matrix::from_vec(n, cols.len(), data).unwrap(), vec![String::new(); n], vec![0; n])
        .unwrap()
}

fn analysis_correctness() -> Outcome {
    let mut rng = seed::rng(4);
    let a: Vec<f64> = (0..10_000).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..10_000).map(|_| rng.random_range(-1.0..1.0)).collect();
    let neg: Vec<f64> = a.iter().map(|v| -v).collect();
    let c = pearson_matrix(&series(&[a.clone(), neg]), &series(&[a, b])).map_err(|e| e.to_string())?;
    let get = |i: usize, j: usize| c.entries[i][j].ok_or("missing correlation");
    check((get(0, 0)? - 1.0).abs() < 1e-12, "self-correlation")?;
    check((get(1, 0)? + 1.0).abs() < 1e-12, "negation")?;
    let indep = get(0, 1)?.abs();
    check(indep < 0.05, format!("independent pair |r| = {indep}"))?;

    let n = 5000;
    let data: Vec<f64> = (0..2 * n)
        .map(|i| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * if i % 2 == 0 { 3.0 } else { 1.0 }
        })
        .collect();
    let x = Matrix::from_vec(n, 2, data).unwrap();
    let p = pca_project(&x, 2).map_err(|e| e.to_string())?;
    let mx = x.column_means();
    let cov = |a: usize, b: usize| (0..n).map(|i| (x.get(i, a) - mx[a]) * (x.get(i, b) - mx[b])).sum::<f64>() / n as f64;
    let (s00, s11, s01) = (cov(0, 0), cov(1, 1), cov(0, 1));
    let (mid, rad) = ((s00 + s11) / 2.0, (((s00 - s11) / 2.0).powi(2) + s01 * s01).sqrt());
    let oracle = (mid + rad) / (mid - rad);
    let var = |c: usize| {
        let m = (0..n).map(|i| p.points.get(i, c)).sum::<f64>() / n as f64;
        (0..n).map(|i| (p.points.get(i, c) - m).powi(2)).sum::<f64>() / n as f64
    };
    let ratio = var(0) / var(1);
    check((ratio - oracle).abs() < 1e-6 * oracle, format!("PCA ratio {ratio} vs {oracle}"))?;

    check(classify(0.5) == Phase::Exploitation, "F = 0.5 not labelled exploitation")?;
    check(classify(0.5 + 1e-12) == Phase::Exploration, "F above 0.5 not labelled exploration")?;
    Ok(format!("independent |r| = {indep:.4}; PCA ratio {ratio:.4}"))
}

fn transfer_contract() -> Outcome {
    let t = task("de", OptimizerKind::De, 6, 24, 3, (vec![1, 2], vec![3, 6]));
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (bl, _) = compute_baselines(std::slice::from_ref(&t), 2, 5, &BaselineCache::new(tmp.path()))
        .map_err(|e| e.to_string())?;
    let net = Network::random(&AnalyzerConfig::new(4, 1, 1), &mut seed::rng(17)).map_err(|e| e.to_string())?;
    let before = net.clone();
    let zs = zero_shot(&net, &t, &bl[0], 2, 31).map_err(|e| e.to_string())?;
    check(net == before, "zero_shot changed the analyser")?;
    let ft = fine_tune(&net, &t, &bl[0], 2, 31).map_err(|e| e.to_string())?;
    check(net == before, "fine_tune changed the input analyser")?;
    check(ft.epochs[0].upsilon == zs.upsilon, format!("epoch 0 {} vs zero-shot {}", ft.epochs[0].upsilon, zs.upsilon))?;
    check(ft.epochs.windows(2).all(|w| w[1].best_upsilon >= w[0].best_upsilon), "best-so-far decreased")?;
    Ok(format!("zero-shot {:.4}; fine-tune best {:.4}", zs.upsilon, ft.epochs.last().unwrap().best_upsilon))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("metric exactness", metric_exactness),
        ("analyser oracle equivalence", analyzer_oracle),
        ("invariant suite", invariants),
        ("ES convergence oracles", es_oracles),
        ("meta-training smoke run", algorithm_smoke),
        ("wall-time scaling", walltime),
        ("ELA feature oracles", ela_oracles),
        ("analysis correctness", analysis_correctness),
        ("zero-shot/fine-tune contract", transfer_contract),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.1} s): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
