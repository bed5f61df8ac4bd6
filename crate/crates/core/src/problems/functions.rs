//! Closed forms of the 24 BBOB functions, evaluated in offset coordinates
//! `u = x - O` so that the optimum sits at `u = 0` (except Linear Slope, whose
//! optimum is the `u = +5` corner).
//!
//! COCO's rotations and asymmetry transforms are not applied. As a result the
//! non-separable counterparts coincide with their separable siblings up to
//! conditioning: F9 is F8 with reversed coupling order, F10 is F2 without the
//! oscillation transform, F15 is F3 with conditioning.

use std::f64::consts::PI;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum FunctionId {
    Sphere = 1,
    Ellipsoidal = 2,
    Rastrigin = 3,
    BucheRastrigin = 4,
    LinearSlope = 5,
    AttractiveSector = 6,
    StepEllipsoidal = 7,
    Rosenbrock = 8,
    RosenbrockRotated = 9,
    EllipsoidalHighCond = 10,
    Discus = 11,
    BentCigar = 12,
    SharpRidge = 13,
    DifferentPowers = 14,
    RastriginConditioned = 15,
    Weierstrass = 16,
    SchaffersF7 = 17,
    SchaffersF7IllCond = 18,
    GriewankRosenbrock = 19,
    Schwefel = 20,
    Gallagher101 = 21,
    Gallagher21 = 22,
    Katsuura = 23,
    LunacekBiRastrigin = 24,
}

impl FunctionId {
    pub const ALL: [FunctionId; 24] = [
        FunctionId::Sphere,
        FunctionId::Ellipsoidal,
        FunctionId::Rastrigin,
        FunctionId::BucheRastrigin,
        FunctionId::LinearSlope,
        FunctionId::AttractiveSector,
        FunctionId::StepEllipsoidal,
        FunctionId::Rosenbrock,
        FunctionId::RosenbrockRotated,
        FunctionId::EllipsoidalHighCond,
        FunctionId::Discus,
        FunctionId::BentCigar,
        FunctionId::SharpRidge,
        FunctionId::DifferentPowers,
        FunctionId::RastriginConditioned,
        FunctionId::Weierstrass,
        FunctionId::SchaffersF7,
        FunctionId::SchaffersF7IllCond,
        FunctionId::GriewankRosenbrock,
        FunctionId::Schwefel,
        FunctionId::Gallagher101,
        FunctionId::Gallagher21,
        FunctionId::Katsuura,
        FunctionId::LunacekBiRastrigin,
    ];

    pub fn id(self) -> u32 {
        self as u32
    }

    pub fn from_id(id: u32) -> Result<Self, Error> {
        id.checked_sub(1)
            .and_then(|i| Self::ALL.get(i as usize).copied())
            .ok_or_else(|| Error::config(format!("unknown function id {id} (valid ids are 1..=24)")))
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionId::Sphere => "sphere",
            FunctionId::Ellipsoidal => "ellipsoidal",
            FunctionId::Rastrigin => "rastrigin",
            FunctionId::BucheRastrigin => "buche_rastrigin",
            FunctionId::LinearSlope => "linear_slope",
            FunctionId::AttractiveSector => "attractive_sector",
            FunctionId::StepEllipsoidal => "step_ellipsoidal",
            FunctionId::Rosenbrock => "rosenbrock",
            FunctionId::RosenbrockRotated => "rosenbrock_rotated",
            FunctionId::EllipsoidalHighCond => "ellipsoidal_high_cond",
            FunctionId::Discus => "discus",
            FunctionId::BentCigar => "bent_cigar",
            FunctionId::SharpRidge => "sharp_ridge",
            FunctionId::DifferentPowers => "different_powers",
            FunctionId::RastriginConditioned => "rastrigin_conditioned",
            FunctionId::Weierstrass => "weierstrass",
            FunctionId::SchaffersF7 => "schaffers_f7",
            FunctionId::SchaffersF7IllCond => "schaffers_f7_ill",
            FunctionId::GriewankRosenbrock => "griewank_rosenbrock",
            FunctionId::Schwefel => "schwefel",
            FunctionId::Gallagher101 => "gallagher_101",
            FunctionId::Gallagher21 => "gallagher_21",
            FunctionId::Katsuura => "katsuura",
            FunctionId::LunacekBiRastrigin => "lunacek_bi_rastrigin",
        }
    }
}

impl TryFrom<u32> for FunctionId {
    type Error = Error;
    fn try_from(id: u32) -> Result<Self, Error> {
        Self::from_id(id)
    }
}

impl From<FunctionId> for u32 {
    fn from(f: FunctionId) -> u32 {
        f.id()
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{} ({})", self.id(), self.name())
    }
}

#[derive(Debug, Clone)]
struct Peak {
    centre: Vec<f64>,
    weight: f64,
    // diagonal of the (unrotated) peak conditioning matrix
    scales: Vec<f64>,
}

/// A function together with any per-instance data it needs (Gallagher peaks).
#[derive(Debug, Clone)]
pub struct Landscape {
    function: FunctionId,
    dim: usize,
    peaks: Vec<Peak>,
}

const SCHWEFEL_OPT: f64 = 420.968_746_227_503_6;
const SCHWEFEL_CONST: f64 = 418.982_887_272_433_9;

impl Landscape {
    pub fn new(function: FunctionId, dim: usize, rng: &mut Rng) -> Self {
        let peaks = match function {
            FunctionId::Gallagher101 => gallagher_peaks(dim, 101, 1000.0, 4.9, rng),
            FunctionId::Gallagher21 => gallagher_peaks(dim, 21, 1000.0 * 1000.0, 3.92, rng),
            _ => Vec::new(),
        };
        Self {
            function,
            dim,
            peaks,
        }
    }

    pub fn function(&self) -> FunctionId {
        self.function
    }

    /// Evaluates the function at offset coordinates `u`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim);
        let d = u.len();
        match self.function {
            FunctionId::Sphere => u.iter().map(|z| z * z).sum(),
            FunctionId::Ellipsoidal => (0..d)
                .map(|i| {
                    let z = t_osz(u[i]);
                    pow10_ratio(6.0, i, d) * z * z
                })
                .sum(),
            FunctionId::Rastrigin => rastrigin(u),
            FunctionId::BucheRastrigin => {
                let z: Vec<f64> = (0..d)
                    .map(|i| {
                        let t = t_osz(u[i]);
                        let mut s = pow10_ratio(0.5, i, d);
                        if t > 0.0 && i % 2 == 0 {
                            s *= 10.0;
                        }
                        s * t
                    })
                    .collect();
                rastrigin(&z)
            }
            FunctionId::LinearSlope => (0..d)
                .map(|i| {
                    let s = pow10_ratio(1.0, i, d);
                    let z = u[i].min(5.0);
                    5.0 * s - s * z
                })
                .sum(),
            FunctionId::AttractiveSector => {
                let sum: f64 = (0..d)
                    .map(|i| {
                        let z = pow10_ratio(0.5, i, d) * u[i];
                        // the optimum direction is the origin of u; the sector
                        // towards positive coordinates is penalised
                        let s = if z > 0.0 { 100.0 } else { 1.0 };
                        (s * z) * (s * z)
                    })
                    .sum();
                t_osz(sum).powf(0.9)
            }
            FunctionId::StepEllipsoidal => {
                let zhat: Vec<f64> = (0..d).map(|i| pow10_ratio(0.5, i, d) * u[i]).collect();
                let sum: f64 = (0..d)
                    .map(|i| {
                        let zt = if zhat[i].abs() > 0.5 {
                            (0.5 + zhat[i]).floor()
                        } else {
                            (0.5 + 10.0 * zhat[i]).floor() / 10.0
                        };
                        pow10_ratio(2.0, i, d) * zt * zt
                    })
                    .sum();
                0.1 * (zhat[0].abs() / 1e4).max(sum)
            }
            FunctionId::Rosenbrock => {
                let c = rosen_scale(d);
                let z: Vec<f64> = u.iter().map(|v| c * v + 1.0).collect();
                rosenbrock(&z)
            }
            FunctionId::RosenbrockRotated => {
                let c = rosen_scale(d);
                let z: Vec<f64> = u.iter().rev().map(|v| c * v + 1.0).collect();
                rosenbrock(&z)
            }
            FunctionId::EllipsoidalHighCond => (0..d)
                .map(|i| pow10_ratio(6.0, i, d) * u[i] * u[i])
                .sum(),
            FunctionId::Discus => 1e6 * u[0] * u[0] + u[1..].iter().map(|z| z * z).sum::<f64>(),
            FunctionId::BentCigar => u[0] * u[0] + 1e6 * u[1..].iter().map(|z| z * z).sum::<f64>(),
            FunctionId::SharpRidge => {
                u[0] * u[0] + 100.0 * u[1..].iter().map(|z| z * z).sum::<f64>().sqrt()
            }
            FunctionId::DifferentPowers => {
                let ratio = |i: usize| if d > 1 { i as f64 / (d - 1) as f64 } else { 0.0 };
                (0..d)
                    .map(|i| u[i].abs().powf(2.0 + 4.0 * ratio(i)))
                    .sum::<f64>()
                    .sqrt()
            }
            FunctionId::RastriginConditioned => {
                let z: Vec<f64> = (0..d).map(|i| pow10_ratio(0.5, i, d) * u[i]).collect();
                rastrigin(&z)
            }
            FunctionId::Weierstrass => {
                let f0: f64 = (0..12)
                    .map(|k| 0.5f64.powi(k) * (PI * 3f64.powi(k)).cos())
                    .sum();
                let inner: f64 = (0..d)
                    .map(|i| {
                        let z = pow10_ratio(-1.0, i, d) * u[i];
                        (0..12)
                            .map(|k| 0.5f64.powi(k) * (2.0 * PI * 3f64.powi(k) * (z + 0.5)).cos())
                            .sum::<f64>()
                    })
                    .sum();
                10.0 * (inner / d as f64 - f0).powi(3)
            }
            FunctionId::SchaffersF7 => schaffers(u, 1.0),
            FunctionId::SchaffersF7IllCond => schaffers(u, 3.0),
            FunctionId::GriewankRosenbrock => {
                if d < 2 {
                    return 0.0;
                }
                let c = rosen_scale(d);
                let z: Vec<f64> = u.iter().map(|v| c * v + 1.0).collect();
                let sum: f64 = z
                    .windows(2)
                    .map(|w| {
                        let s = 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2);
                        s / 4000.0 - s.cos()
                    })
                    .sum();
                10.0 * sum / (d - 1) as f64 + 10.0
            }
            FunctionId::Schwefel => {
                let z: Vec<f64> = u.iter().map(|v| 100.0 * v + SCHWEFEL_OPT).collect();
                let s: f64 = z.iter().map(|v| v * v.abs().sqrt().sin()).sum();
                let pen: f64 = z.iter().map(|v| (v.abs() / 100.0 - 5.0).max(0.0).powi(2)).sum();
                SCHWEFEL_CONST - s / d as f64 + 100.0 * pen
            }
            FunctionId::Gallagher101 | FunctionId::Gallagher21 => {
                let best = self
                    .peaks
                    .iter()
                    .map(|p| {
                        let q: f64 = u
                            .iter()
                            .zip(&p.centre)
                            .zip(&p.scales)
                            .map(|((x, c), s)| s * (x - c) * (x - c))
                            .sum();
                        p.weight * (-q / (2.0 * d as f64)).exp()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                t_osz(10.0 - best).powi(2)
            }
            FunctionId::Katsuura => {
                let df = d as f64;
                let expo = 10.0 / df.powf(1.2);
                let prod: f64 = (0..d)
                    .map(|i| {
                        let z = pow10_ratio(1.0, i, d) * u[i];
                        let s: f64 = (1..=32)
                            .map(|j| {
                                let p = 2f64.powi(j);
                                (p * z - (p * z).round()).abs() / p
                            })
                            .sum();
                        (1.0 + (i + 1) as f64 * s).powf(expo)
                    })
                    .product();
                10.0 / (df * df) * prod - 10.0 / (df * df)
            }
            FunctionId::LunacekBiRastrigin => {
                let df = d as f64;
                let mu0 = 2.5;
                let s = 1.0 - 1.0 / (2.0 * (df + 20.0).sqrt() - 8.2);
                let mu1 = -((mu0 * mu0 - 1.0) / s).sqrt();
                let xhat: Vec<f64> = u.iter().map(|v| v + mu0).collect();
                let a: f64 = xhat.iter().map(|x| (x - mu0).powi(2)).sum();
                let b: f64 = df + s * xhat.iter().map(|x| (x - mu1).powi(2)).sum::<f64>();
                let c: f64 = (0..d)
                    .map(|i| (2.0 * PI * pow10_ratio(1.0, i, d) * u[i]).cos())
                    .sum();
                a.min(b) + 10.0 * (df - c)
            }
        }
    }
}

/// `10^(e * i / (d - 1))`, the usual BBOB conditioning profile.
#[inline]
fn pow10_ratio(e: f64, i: usize, d: usize) -> f64 {
    if d > 1 {
        10f64.powf(e * i as f64 / (d - 1) as f64)
    } else {
        1.0
    }
}

#[inline]
fn rosen_scale(d: usize) -> f64 {
    ((d as f64).sqrt() / 8.0).max(1.0)
}

fn rastrigin(z: &[f64]) -> f64 {
    let d = z.len() as f64;
    10.0 * (d - z.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>())
        + z.iter().map(|v| v * v).sum::<f64>()
}

fn rosenbrock(z: &[f64]) -> f64 {
    z.windows(2)
        .map(|w| 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2))
        .sum()
}

fn schaffers(u: &[f64], cond_exp: f64) -> f64 {
    let d = u.len();
    if d < 2 {
        return 0.0;
    }
    let z: Vec<f64> = (0..d).map(|i| pow10_ratio(0.5 * cond_exp, i, d) * u[i]).collect();
    let mean: f64 = z
        .windows(2)
        .map(|w| {
            let s = (w[0] * w[0] + w[1] * w[1]).sqrt();
            s.sqrt() + s.sqrt() * (50.0 * s.powf(0.2)).sin().powi(2)
        })
        .sum::<f64>()
        / (d - 1) as f64;
    mean * mean
}

/// Oscillation transform T_osz.
pub fn t_osz(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let xh = x.abs().ln();
    let (c1, c2) = if x > 0.0 { (10.0, 7.9) } else { (5.5, 3.1) };
    x.signum() * (xh + 0.049 * ((c1 * xh).sin() + (c2 * xh).sin())).exp()
}

fn gallagher_peaks(dim: usize, count: usize, global_cond: f64, spread: f64, rng: &mut Rng) -> Vec<Peak> {
    let mut conds: Vec<f64> = (0..count - 1)
        .map(|j| 1000f64.powf(2.0 * j as f64 / (count - 2) as f64))
        .collect();
    conds.shuffle(rng);
    let mut peaks = Vec::with_capacity(count);
    for p in 0..count {
        let (centre, weight, alpha) = if p == 0 {
            (vec![0.0; dim], 10.0, global_cond)
        } else {
            let c = (0..dim).map(|_| rng.random_range(-spread..spread)).collect();
            let w = 1.1 + 8.0 * (p - 1) as f64 / (count - 2) as f64;
            (c, w, conds[p - 1])
        };
        let mut scales: Vec<f64> = (0..dim)
            .map(|i| alpha.powf(if dim > 1 { i as f64 / (dim - 1) as f64 } else { 0.0 } * 0.5))
            .map(|s| s / alpha.powf(0.25))
            .collect();
        scales.shuffle(rng);
        peaks.push(Peak {
            centre,
            weight,
            scales,
        });
    }
    peaks
}
