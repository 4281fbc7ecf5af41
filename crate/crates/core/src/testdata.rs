//! Fixtures shared by the unit tests.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{standardize, RawDataset, StandardizedModel};
pub use crate::datasets::*;

/// Random raw data with correlated regressors, standardized.
pub fn random_raw(seed: u64, n: usize, m: usize) -> RawDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let common: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut obs = DMatrix::zeros(n, m + 1);
    for j in 0..m {
        let weight: f64 = rng.gen_range(0.0..2.0);
        for i in 0..n {
            obs[(i, j)] = weight * common[i] + rng.gen_range(-1.0..1.0);
        }
    }
    for i in 0..n {
        let signal: f64 = (0..m).map(|j| obs[(i, j)] * (j as f64 + 1.0)).sum();
        obs[(i, m)] = signal + rng.gen_range(-1.0..1.0);
    }
    let mut names: Vec<String> = (0..m).map(|j| alloc::format!("x{}", j + 1)).collect();
    names.push("y".into());
    RawDataset::new(obs, names, m).unwrap()
}

pub fn random_model(seed: u64, n: usize, m: usize) -> StandardizedModel {
    standardize(&random_raw(seed, n, m)).unwrap()
}
