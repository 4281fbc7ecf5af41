//! Eigendecomposition of `x^t x`, the diagonal penalty `K`, and the
//! augmented design `x_a = [x; K^{1/2} Γ^t]` whose OLS fit reproduces the
//! generalized ridge estimator.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::dataset::StandardizedModel;
use crate::error::{Error, Result};

/// Eigenvalues at or below this mean the design is rank deficient.
pub const RANK_THRESHOLD: f64 = 1e-14;

const SYMMETRY_TOLERANCE: f64 = 1e-10;
const SIGN_TIE_TOLERANCE: f64 = 1e-12;

/// `x^t x = Γ Λ Γ^t` with eigenvalues in descending order.
///
/// Each eigenvector is oriented so that its entry of largest magnitude is
/// positive (the lowest row wins a tie). Quantities of the form `Γ D Γ^t`
/// do not depend on this choice, but sums like `Σ_j sqrt(k_j) γ_lj` do.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    ascending: Vec<usize>,
}

impl SpectralDecomposition {
    /// Builds a decomposition from explicit parts, applying the ordering and
    /// sign conventions. `eigenvectors` must be orthonormal with column `j`
    /// paired to `eigenvalues[j]`.
    pub fn from_parts(eigenvalues: DVector<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let m = eigenvalues.len();
        let (rows, cols) = eigenvectors.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows != m {
            return Err(Error::DimensionMismatch { expected: m, found: rows });
        }
        let mut order: Vec<usize> = (0..m).collect();
        // stable: equal eigenvalues keep their incoming order
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
        let values = DVector::from_iterator(m, order.iter().map(|&j| eigenvalues[j]));
        let mut vectors = DMatrix::from_fn(m, m, |i, j| eigenvectors[(i, order[j])]);
        for j in 0..m {
            orient(&mut vectors, j);
        }
        if let Some(min) = values.iter().copied().reduce(f64::min) {
            if !(min > RANK_THRESHOLD) {
                return Err(Error::RankDeficient(min));
            }
        }
        let mut ascending: Vec<usize> = (0..m).collect();
        ascending.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        Ok(Self { eigenvalues: values, eigenvectors: vectors, ascending })
    }

    pub fn m(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Γ, eigenvectors as columns.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Permutation listing eigenvalue indices from smallest to largest.
    pub fn ascending(&self) -> &[usize] {
        &self.ascending
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.ascending[self.m() - 1]]
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[self.ascending[0]]
    }

    /// Index of the smallest eigenvalue.
    pub fn min_index(&self) -> usize {
        self.ascending[0]
    }

    /// `Γ^t v`.
    pub fn rotate(&self, v: &DVector<f64>) -> DVector<f64> {
        self.eigenvectors.tr_mul(v)
    }

    /// `Γ diag(d) Γ^t`.
    pub fn compose(&self, diagonal: &[f64]) -> DMatrix<f64> {
        let m = self.m();
        let g = &self.eigenvectors;
        DMatrix::from_fn(m, m, |i, j| (0..m).map(|l| g[(i, l)] * diagonal[l] * g[(j, l)]).sum())
    }

    /// Flips the sign of selected eigenvectors, bypassing the sign convention.
    /// Used to probe which quantities depend on the orientation of Γ.
    pub fn with_flipped_signs(&self, flip: &[bool]) -> Self {
        let mut out = self.clone();
        for (j, &f) in flip.iter().enumerate() {
            if f {
                out.eigenvectors.column_mut(j).neg_mut();
            }
        }
        out
    }
}

fn orient(vectors: &mut DMatrix<f64>, column: usize) {
    let col = vectors.column(column);
    let largest = col.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if let Some(lead) = col.iter().position(|v| v.abs() >= largest - SIGN_TIE_TOLERANCE) {
        if col[lead] < 0.0 {
            vectors.column_mut(column).neg_mut();
        }
    }
}

/// Decomposes a symmetric positive definite matrix.
pub fn eigendecompose(matrix: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    let (rows, cols) = matrix.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let scale = matrix.amax().max(1.0);
    for i in 0..rows {
        for j in (i + 1)..cols {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let eigen = matrix.clone().symmetric_eigen();
    SpectralDecomposition::from_parts(eigen.eigenvalues, eigen.eigenvectors)
}

/// What shape of penalty a [`PenaltyMatrix`] has.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyKind {
    /// OLS.
    Zero,
    /// Regular ridge, `K = k I`.
    Uniform(f64),
    /// `K = diag(0, …, k_l, …, 0)`, index into the descending eigenvalue order.
    Single {
        index: usize,
        k: f64,
    },
    General,
}

/// Diagonal penalty `K`, expressed in the eigenbasis of `x^t x`: entry `j`
/// shifts eigenvalue `j` (descending order).
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyMatrix {
    kind: PenaltyKind,
    values: Vec<f64>,
}

fn check_entry(index: usize, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidPenalty { index, value })
    }
}

impl PenaltyMatrix {
    pub fn zero(m: usize) -> Self {
        Self { kind: PenaltyKind::Zero, values: alloc::vec![0.0; m] }
    }

    pub fn uniform(m: usize, k: f64) -> Result<Self> {
        check_entry(0, k)?;
        Ok(Self { kind: PenaltyKind::Uniform(k), values: alloc::vec![k; m] })
    }

    pub fn single(m: usize, index: usize, k: f64) -> Result<Self> {
        if index >= m {
            return Err(Error::PenaltyIndexOutOfRange { index, m });
        }
        check_entry(index, k)?;
        let mut values = alloc::vec![0.0; m];
        values[index] = k;
        Ok(Self { kind: PenaltyKind::Single { index, k }, values })
    }

    pub fn general(values: Vec<f64>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            check_entry(i, v)?;
        }
        Ok(Self { kind: PenaltyKind::General, values })
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&k| k == 0.0)
    }

    /// Whether diagnostics built on signed eigenvector sums (coefficient of
    /// variation, augmented correlations) depend on the orientation of Γ.
    /// Only a single nonzero entry is orientation free.
    pub fn convention_sensitive(&self) -> bool {
        match self.kind {
            PenaltyKind::Zero | PenaltyKind::Single { .. } => false,
            PenaltyKind::Uniform(k) => k != 0.0,
            PenaltyKind::General => self.values.iter().filter(|&&k| k != 0.0).count() > 1,
        }
    }

    pub(crate) fn check_dimension(&self, m: usize) -> Result<()> {
        if self.m() == m {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: m, found: self.m() })
        }
    }
}

/// Stacks `x` over `K^{1/2} Γ^t` and pads the response with `m` zeros.
pub fn augmented_design(
    model: &StandardizedModel,
    spectral: &SpectralDecomposition,
    penalty: &PenaltyMatrix,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (n, m) = model.x.shape();
    if spectral.m() != m {
        return Err(Error::DimensionMismatch { expected: m, found: spectral.m() });
    }
    penalty.check_dimension(m)?;
    let g = spectral.eigenvectors();
    let mut xa = DMatrix::zeros(n + m, m);
    xa.rows_mut(0, n).copy_from(&model.x);
    for j in 0..m {
        let root = penalty.values()[j].sqrt();
        for l in 0..m {
            xa[(n + j, l)] = root * g[(l, j)];
        }
    }
    let mut ya = DVector::zeros(n + m);
    ya.rows_mut(0, n).copy_from(&model.y);
    Ok((xa, ya))
}
