//! Raw observations and the standardization transform.
//!
//! Every column (regressors and response) is centered and divided by
//! `sqrt(n * var)` with the population variance, so `x^t x` is the
//! correlation matrix of the regressors, `x^t y` holds their correlations
//! with the response and `y^t y = 1`. The intercept vanishes under this
//! transform and the resulting model has `m = p - 1` regressors.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Columns whose population variance does not exceed this are treated as constant.
pub const ZERO_VARIANCE_THRESHOLD: f64 = 1e-14;

/// Observations as read from disk, before any transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    observations: DMatrix<f64>,
    column_names: Vec<String>,
    dependent_index: usize,
}

impl RawDataset {
    pub fn new(observations: DMatrix<f64>, column_names: Vec<String>, dependent_index: usize) -> Result<Self> {
        let (n, cols) = observations.shape();
        if n < 3 {
            return Err(Error::TooFewObservations { found: n, min: 3 });
        }
        if cols < 2 {
            return Err(Error::TooFewColumns(cols));
        }
        if column_names.len() != cols {
            return Err(Error::NameCountMismatch { names: column_names.len(), columns: cols });
        }
        if dependent_index >= cols {
            return Err(Error::DependentOutOfRange { index: dependent_index, columns: cols });
        }
        for j in 0..cols {
            for i in 0..n {
                if !observations[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, column: column_names[j].clone() });
                }
            }
        }
        Ok(Self { observations, column_names, dependent_index })
    }

    pub fn n_obs(&self) -> usize {
        self.observations.nrows()
    }

    /// Number of variables of the original model counting the intercept,
    /// which equals the number of stored columns (regressors plus response).
    pub fn p(&self) -> usize {
        self.observations.ncols()
    }

    pub fn observations(&self) -> &DMatrix<f64> {
        &self.observations
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn dependent_index(&self) -> usize {
        self.dependent_index
    }

    pub fn dependent_name(&self) -> &str {
        &self.column_names[self.dependent_index]
    }

    pub fn regressor_names(&self) -> Vec<String> {
        self.column_names
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != self.dependent_index)
            .map(|(_, s)| s.clone())
            .collect()
    }

    /// New dataset built from the given rows (repeats allowed). Used by the
    /// bootstrap, which needs resampled copies with the same layout.
    pub fn with_rows(&self, rows: &[usize]) -> Self {
        let cols = self.p();
        let observations = DMatrix::from_fn(rows.len(), cols, |i, j| self.observations[(rows[i], j)]);
        Self { observations, column_names: self.column_names.clone(), dependent_index: self.dependent_index }
    }
}

/// The noncentered model without intercept obtained by standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedModel {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub names: Vec<String>,
}

impl StandardizedModel {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    pub fn cross_products(&self) -> CrossProducts {
        CrossProducts {
            n: self.n(),
            gram: correlation_matrix(self),
            xty: self.x.tr_mul(&self.y),
            yty: self.y.dot(&self.y),
            names: self.names.clone(),
        }
    }
}

/// Sufficient statistics of a standardized model: everything the estimator
/// and diagnostics need. It can come from data or be reconstructed from a
/// published correlation matrix and OLS coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossProducts {
    pub n: usize,
    /// `x^t x`, the correlation matrix `R`.
    pub gram: DMatrix<f64>,
    /// `x^t y`, written `alpha` in the estimator.
    pub xty: DVector<f64>,
    pub yty: f64,
    pub names: Vec<String>,
}

impl CrossProducts {
    /// Rebuilds the cross products from a correlation matrix and the OLS
    /// coefficients, using `alpha = R * beta` (the normal equations) and
    /// `y^t y = 1`.
    pub fn from_correlation(
        correlation: DMatrix<f64>,
        beta_ols: &DVector<f64>,
        n: usize,
        names: Vec<String>,
    ) -> Result<Self> {
        let (rows, cols) = correlation.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if beta_ols.len() != rows {
            return Err(Error::DimensionMismatch { expected: rows, found: beta_ols.len() });
        }
        if names.len() != rows {
            return Err(Error::NameCountMismatch { names: names.len(), columns: rows });
        }
        if n <= rows {
            return Err(Error::TooFewObservations { found: n, min: rows + 1 });
        }
        for i in 0..rows {
            if (correlation[(i, i)] - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidCorrelation(alloc::format!(
                    "diagonal entry {} is {}, expected 1",
                    i + 1,
                    correlation[(i, i)]
                )));
            }
            for j in 0..rows {
                let r = correlation[(i, j)];
                if !r.is_finite() || r.abs() > 1.0 + 1e-12 {
                    return Err(Error::InvalidCorrelation(alloc::format!(
                        "entry ({}, {}) = {} is outside [-1, 1]",
                        i + 1,
                        j + 1,
                        r
                    )));
                }
                if (r - correlation[(j, i)]).abs() > 1e-12 {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        let xty = &correlation * beta_ols;
        Ok(Self { n, gram: correlation, xty, yty: 1.0, names })
    }

    pub fn m(&self) -> usize {
        self.gram.nrows()
    }
}

fn mean_and_population_variance(column: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = column.clone().sum::<f64>() / nf;
    let var = column.map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
    (mean, var)
}

/// Standardizes every column of `raw` and splits off the response.
///
/// A constant column (the intercept, or any other) has zero variance and is
/// rejected, since it disappears under the transform.
pub fn standardize(raw: &RawDataset) -> Result<StandardizedModel> {
    let n = raw.n_obs();
    let obs = raw.observations();
    let mut scaled: Vec<DVector<f64>> = Vec::with_capacity(raw.p());
    for j in 0..raw.p() {
        let col = obs.column(j);
        let (mean, var) = mean_and_population_variance(col.iter().copied(), n);
        if !(var > ZERO_VARIANCE_THRESHOLD) {
            return Err(Error::DegenerateColumn(raw.column_names()[j].to_string()));
        }
        let scale = (n as f64 * var).sqrt();
        scaled.push(DVector::from_iterator(n, col.iter().map(|v| (v - mean) / scale)));
    }
    let y = scaled[raw.dependent_index()].clone();
    let regressors: Vec<_> =
        scaled.into_iter().enumerate().filter(|(j, _)| *j != raw.dependent_index()).map(|(_, c)| c).collect();
    let x = DMatrix::from_columns(&regressors);
    Ok(StandardizedModel { x, y, names: raw.regressor_names() })
}

/// `x^t x` of a standardized model, symmetrized exactly.
pub fn correlation_matrix(model: &StandardizedModel) -> DMatrix<f64> {
    let m = model.m();
    let mut r = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = model.x.column(i).dot(&model.x.column(j));
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    r
}

pub fn determinant(matrix: &DMatrix<f64>) -> Result<f64> {
    let (rows, cols) = matrix.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    Ok(matrix.clone().lu().determinant())
}
