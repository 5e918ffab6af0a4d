//! Dense matrices, seeded randomness and summary statistics.

mod matrix;
mod rng;
mod stats;

pub use matrix::Matrix;
pub(crate) use matrix::matmul_into;
pub use rng::{seed_for, seed_from_str, Rng};
pub use stats::{apply_standardize, least_squares, mean, mean_std, minmax, standardize};
