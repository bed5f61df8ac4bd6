#![allow(dead_code)]

pub mod reference;

use neurela::analyzer::Observation;
use neurela::seed;
use neurela::Matrix;
use rand::Rng as _;

pub fn random_observation(m: usize, d: usize, rng: &mut seed::Rng) -> Observation {
    let x = Matrix::from_vec(m, d, (0..m * d).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap();
    let y = (0..m).map(|_| rng.random_range(-50.0..50.0)).collect();
    Observation::new(x, y, vec![-5.0; d], vec![5.0; d]).unwrap()
}

pub fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.iter_rows().map(|r| r.to_vec()).collect()
}
