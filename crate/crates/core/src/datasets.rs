//! Reference datasets: the Longley macroeconomic data and the published
//! summary statistics of the 15-company example (correlation matrix, OLS
//! coefficients and residual variance; the raw observations were never
//! released).

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::dataset::RawDataset;

pub const LONGLEY_CSV: &str = include_str!("../data/longley.csv");

/// Longley regressors without `Year`, response `Employed`.
pub fn longley() -> RawDataset {
    let mut lines = LONGLEY_CSV.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let keep: Vec<usize> = (0..header.len()).filter(|&j| header[j] != "Year").collect();
    let rows: Vec<Vec<f64>> =
        lines.filter(|l| !l.trim().is_empty()).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    let obs = DMatrix::from_fn(rows.len(), keep.len(), |i, j| rows[i][keep[j]]);
    let names = keep.iter().map(|&j| header[j].to_string()).collect();
    RawDataset::new(obs, names, keep.len() - 1).unwrap()
}

pub fn example_one_correlation() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[1.0, 0.7264656, 0.7225473, 0.7264656, 1.0, 0.9998871, 0.7225473, 0.9998871, 1.0])
}

pub fn example_one_beta() -> DVector<f64> {
    DVector::from_vec(alloc::vec![-0.6076545, -18.4692986, 19.5023718])
}

pub const EXAMPLE_ONE_SIGMA2: f64 = 0.0251165;
pub const EXAMPLE_ONE_N: usize = 15;

pub fn example_one_names() -> Vec<String> {
    ["FA", "OI", "S"].iter().map(|s| s.to_string()).collect()
}
