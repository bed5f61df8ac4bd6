pub mod error;
pub mod matrix;
pub mod problems;
pub mod seed;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub mod analysis;
pub mod analyzer;
pub mod ela;
pub mod es;
pub mod metabbo;
pub mod optimizers;
pub mod stats;
pub mod trainer;
