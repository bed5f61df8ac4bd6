use neurela::optimizers::{de_step, initialize, pso_step, step, DeConfig, OptimizerKind, PsoConfig, StepConfig};
use neurela::problems::{make_problem, FunctionId, Problem, ProblemSpec};
use neurela::seed;
use proptest::prelude::*;
use rand::Rng as _;

fn sphere(d: usize) -> Problem {
    make_problem(ProblemSpec {
        function: FunctionId::Sphere,
        dimension: d,
        offset: vec![0.0; d],
        noise: None,
        seed: 0,
    })
    .unwrap()
}

fn sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[test]
fn de_rejects_small_population() {
    let mut p = sphere(2);
    let mut rng = seed::rng(0);
    assert!(initialize(OptimizerKind::De, &mut p, 3, &mut rng).is_err());
    let mut st = initialize(OptimizerKind::Pso, &mut p, 3, &mut rng).unwrap();
    st.swarm = None;
    let err = de_step(&mut st, &DeConfig::uniform(3, 0.5, 0.5), &mut p, &mut rng).unwrap_err();
    assert!(err.to_string().contains('4'));
}

#[test]
fn de_zero_f_full_crossover_copies_donor() {
    // with F = 0 and Cr = 1 every trial is a copy of some other member, so
    // the new population is a subset of the old one
    let mut p = sphere(3);
    let mut rng = seed::rng(1);
    let mut st = initialize(OptimizerKind::De, &mut p, 8, &mut rng).unwrap();
    let before: Vec<Vec<f64>> = st.x.iter_rows().map(|r| r.to_vec()).collect();
    de_step(&mut st, &DeConfig::uniform(8, 0.0, 1.0), &mut p, &mut rng).unwrap();
    for r in st.x.iter_rows() {
        assert!(before.iter().any(|b| b.as_slice() == r));
    }
}

#[test]
fn de_hand_trace_sphere() {
    let (m, d) = (6, 2);
    let mut p = sphere(d);
    let mut rng = seed::rng(42);
    let mut st = initialize(OptimizerKind::De, &mut p, m, &mut rng).unwrap();
    let x0: Vec<Vec<f64>> = st.x.iter_rows().map(|r| r.to_vec()).collect();
    let y0 = st.y.clone();
    let f = [0.1, 0.3, 0.5, 0.7, 0.9, 0.5];
    let cr = [0.0, 0.2, 0.5, 0.8, 1.0, 0.5];
    let cfg = DeConfig { f: f.to_vec(), cr: cr.to_vec() };

    // hand-stepped reference sharing the RNG stream
    let mut r = rng.clone();
    let mut expect = x0.clone();
    let mut trial_crossed = vec![];
    let mut trials = vec![];
    for i in 0..m {
        let pick = |ex: &[usize], r: &mut seed::Rng| loop {
            let k = r.random_range(0..m);
            if !ex.contains(&k) {
                break k;
            }
        };
        let r1 = pick(&[i], &mut r);
        let r2 = pick(&[i, r1], &mut r);
        let r3 = pick(&[i, r1, r2], &mut r);
        let jr = r.random_range(0..d);
        let mut t = x0[i].clone();
        let mut crossed = 0;
        for j in 0..d {
            let u: f64 = r.random();
            if u < cr[i] || j == jr {
                t[j] = (x0[r1][j] + f[i] * (x0[r2][j] - x0[r3][j])).clamp(-5.0, 5.0);
                crossed += 1;
            }
        }
        trial_crossed.push(crossed);
        trials.push(t);
    }
    for i in 0..m {
        if sq(&trials[i]) <= y0[i] {
            expect[i] = trials[i].clone();
        }
    }
    assert_eq!(trial_crossed[0], 1);

    de_step(&mut st, &cfg, &mut p, &mut rng).unwrap();
    for i in 0..m {
        assert_eq!(st.x.row(i), expect[i].as_slice());
        assert_eq!(st.y[i], sq(&expect[i]));
    }
    assert_eq!(p.fe_count(), 12);
}

#[test]
fn de_zero_crossover_changes_one_dimension() {
    let mut p = sphere(5);
    let mut rng = seed::rng(3);
    let mut st = initialize(OptimizerKind::De, &mut p, 10, &mut rng).unwrap();
    let before = st.x.clone();
    let y_before = st.y.clone();
    de_step(&mut st, &DeConfig::uniform(10, 0.5, 0.0), &mut p, &mut rng).unwrap();
    let mut accepted = 0;
    for i in 0..10 {
        let diff = (0..5).filter(|&j| st.x.get(i, j) != before.get(i, j)).count();
        if st.y[i] != y_before[i] {
            assert_eq!(diff, 1);
            accepted += 1;
        } else {
            assert!(diff <= 1);
        }
    }
    assert!(accepted > 0);
}

#[test]
fn pso_zero_controls_freeze_positions() {
    let mut p = sphere(3);
    let mut rng = seed::rng(4);
    let mut st = initialize(OptimizerKind::Pso, &mut p, 5, &mut rng).unwrap();
    let before = st.x.clone();
    pso_step(&mut st, &PsoConfig { w: 0.0, c1: 0.0, c2: 0.0 }, &mut p, &mut rng).unwrap();
    assert_eq!(st.x, before);
    assert_eq!(p.fe_count(), 10);
}

#[test]
fn pso_hand_trace() {
    let (m, d) = (4, 2);
    let mut p = sphere(d);
    let mut rng = seed::rng(7);
    let mut st = initialize(OptimizerKind::Pso, &mut p, m, &mut rng).unwrap();
    let sw = st.swarm.clone().unwrap();
    let x0 = st.x.clone();
    let cfg = PsoConfig { w: 0.7, c1: 1.5, c2: 1.5 };
    let mut r = rng.clone();
    let mut ex = vec![vec![0.0; d]; m];
    let mut ev = vec![vec![0.0; d]; m];
    for i in 0..m {
        for j in 0..d {
            let u1: f64 = r.random();
            let u2: f64 = r.random();
            let x = x0.get(i, j);
            let v = 0.7 * sw.velocity.get(i, j) + 1.5 * u1 * (sw.pbest_x.get(i, j) - x) + 1.5 * u2 * (sw.gbest_x[j] - x);
            let v = v.clamp(-2.0, 2.0);
            ev[i][j] = v;
            ex[i][j] = (x + v).clamp(-5.0, 5.0);
        }
    }
    pso_step(&mut st, &cfg, &mut p, &mut rng).unwrap();
    let sw1 = st.swarm.unwrap();
    for i in 0..m {
        assert_eq!(st.x.row(i), ex[i].as_slice());
        assert_eq!(sw1.velocity.row(i), ev[i].as_slice());
        assert_eq!(sw1.pbest_y[i], sw.pbest_y[i].min(sq(&ex[i])));
    }
    let g = (0..m).map(|i| sw1.pbest_y[i]).fold(f64::INFINITY, f64::min);
    assert_eq!(sw1.gbest_y, g);
}

#[test]
fn pso_particle_at_bests_moves_by_inertia() {
    let mut p = sphere(2);
    let mut rng = seed::rng(5);
    let mut st = initialize(OptimizerKind::Pso, &mut p, 3, &mut rng).unwrap();
    let sw = st.swarm.as_mut().unwrap();
    let g = sw.gbest_x.clone();
    // put particle 0 at the global best, with pbest equal to it
    st.x.row_mut(0).copy_from_slice(&g);
    sw.pbest_x.row_mut(0).copy_from_slice(&g);
    sw.velocity.row_mut(0).copy_from_slice(&[0.3, -0.2]);
    let expect = [(g[0] + 0.15).clamp(-5.0, 5.0), (g[1] - 0.1).clamp(-5.0, 5.0)];
    pso_step(&mut st, &PsoConfig { w: 0.5, c1: 2.0, c2: 2.0 }, &mut p, &mut rng).unwrap();
    assert!((st.x.get(0, 0) - expect[0]).abs() < 1e-15);
    assert!((st.x.get(0, 1) - expect[1]).abs() < 1e-15);
}

fn run(kind: OptimizerKind, seed_v: u64, cfgs: &[(f64, f64, f64)], fid: FunctionId) -> Vec<(Vec<f64>, Vec<f64>, f64)> {
    let mut p = make_problem(ProblemSpec::sampled(fid, 4, seed_v, None)).unwrap();
    let mut rng = seed::rng(seed_v);
    let m = 8;
    let mut st = initialize(kind, &mut p, m, &mut rng).unwrap();
    let mut out = vec![];
    for &(a, b, c) in cfgs {
        let cfg = match kind {
            OptimizerKind::De => StepConfig::De(DeConfig::uniform(m, a, b)),
            OptimizerKind::Pso => StepConfig::Pso(PsoConfig { w: a, c1: b * 3.0, c2: c * 3.0 }),
        };
        let prev_y = st.y.clone();
        let prev_best = st.best_so_far;
        step(&mut st, &cfg, &mut p, &mut rng).unwrap();
        assert!(st.best_so_far <= prev_best);
        if kind == OptimizerKind::De {
            assert!(st.y.iter().zip(&prev_y).all(|(a, b)| a <= b));
        }
        assert!(st.x.as_slice().iter().all(|v| (-5.0..=5.0).contains(v)));
        out.push((st.x.as_slice().to_vec(), st.y.clone(), st.best_so_far));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn elitism_feasibility_reproducibility(
        seed_v in any::<u64>(),
        fid in 1u32..=24,
        pso in any::<bool>(),
        cfgs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..6),
    ) {
        let kind = if pso { OptimizerKind::Pso } else { OptimizerKind::De };
        let fid = FunctionId::from_id(fid).unwrap();
        let a = run(kind, seed_v, &cfgs, fid);
        let b = run(kind, seed_v, &cfgs, fid);
        prop_assert_eq!(a, b);
    }
}
