//! Multicollinearity measures of the augmented design `x_a`.
//!
//! All sample moments of `x_a` use `n + m` rows (population convention).
//! Since the standardized columns of `x` sum to zero, the mean of column `i`
//! comes only from the penalty rows: `Σ_j sqrt(k_j) γ_ij / (n + m)`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::dataset::{determinant, CrossProducts};
use crate::error::{Error, Result};
use crate::spectral::{PenaltyKind, PenaltyMatrix, SpectralDecomposition};

/// Coefficients of variation below this flag troubling nonessential
/// multicollinearity.
pub const CV_TROUBLING_THRESHOLD: f64 = 0.1002506;

/// Column means below this magnitude count as exactly zero.
const ZERO_MEAN: f64 = 1e-300;

/// Coefficient of variation of one augmented column. At zero mean (always
/// the case without penalty) the quantity is infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientOfVariation {
    Finite(f64),
    Infinite,
}

impl CoefficientOfVariation {
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn is_troubling(self) -> bool {
        matches!(self, Self::Finite(v) if v < CV_TROUBLING_THRESHOLD)
    }
}

/// Means and covariance matrix of the columns of `x_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedMoments {
    pub rows: usize,
    pub means: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

/// `x_a^t x_a = x^t x + Γ K Γ^t`.
pub fn augmented_gram(
    cross: &CrossProducts,
    spectral: &SpectralDecomposition,
    penalty: &PenaltyMatrix,
) -> Result<DMatrix<f64>> {
    check(cross, spectral, penalty)?;
    Ok(&cross.gram + spectral.compose(penalty.values()))
}

fn check(cross: &CrossProducts, spectral: &SpectralDecomposition, penalty: &PenaltyMatrix) -> Result<()> {
    let m = cross.m();
    if spectral.m() != m {
        return Err(Error::DimensionMismatch { expected: m, found: spectral.m() });
    }
    penalty.check_dimension(m)
}

pub fn augmented_moments(
    cross: &CrossProducts,
    spectral: &SpectralDecomposition,
    penalty: &PenaltyMatrix,
) -> Result<AugmentedMoments> {
    let gram = augmented_gram(cross, spectral, penalty)?;
    let m = cross.m();
    let rows = cross.n + m;
    let total = rows as f64;
    let g = spectral.eigenvectors();
    let roots: Vec<f64> = penalty.values().iter().map(|k| k.sqrt()).collect();
    let means = DVector::from_iterator(m, (0..m).map(|i| (0..m).map(|j| roots[j] * g[(i, j)]).sum::<f64>() / total));
    let covariance = DMatrix::from_fn(m, m, |i, j| gram[(i, j)] / total - means[i] * means[j]);
    Ok(AugmentedMoments { rows, means, covariance })
}

pub fn coefficient_of_variation(
    cross: &CrossProducts,
    spectral: &SpectralDecomposition,
    penalty: &PenaltyMatrix,
    column: usize,
) -> Result<CoefficientOfVariation> {
    let moments = augmented_moments(cross, spectral, penalty)?;
    column_cv(&moments, column)
}

fn column_cv(moments: &AugmentedMoments, column: usize) -> Result<CoefficientOfVariation> {
    let m = moments.means.len();
    if column >= m {
        return Err(Error::DimensionMismatch { expected: m, found: column });
    }
    let mean = moments.means[column];
    if mean.abs() < ZERO_MEAN {
        return Ok(CoefficientOfVariation::Infinite);
    }
    let var = moments.covariance[(column, column)].max(0.0);
    Ok(CoefficientOfVariation::Finite(var.sqrt() / mean.abs()))
}

/// Pairwise correlations of the augmented columns and their determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedCorrelation {
    pub matrix: DMatrix<f64>,
    pub determinant: f64,
}

pub fn augmented_correlation(
    cross: &CrossProducts,
    spectral: &SpectralDecomposition,
    penalty: &PenaltyMatrix,
) -> Result<AugmentedCorrelation> {
    let moments = augmented_moments(cross, spectral, penalty)?;
    Ok(correlation_from_moments(&moments))
}

fn correlation_from_moments(moments: &AugmentedMoments) -> AugmentedCorrelation {
    let cov = &moments.covariance;
    let m = cov.nrows();
    let matrix =
        DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt() });
    let determinant = matrix.clone().lu().determinant();
    AugmentedCorrelation { matrix, determinant }
}

/// `d / (d - a^t A^{-1} a)`, the VIF written through the blocks of the
/// cross-product matrix of the auxiliary regression.
fn vif_from_blocks(column: usize, diagonal: f64, a: &DVector<f64>, block: DMatrix<f64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(1.0);
    }
    let chol = block.cholesky().ok_or(Error::SingularAuxiliary(column))?;
    let explained = a.dot(&chol.solve(a));
    let residual = diagonal - explained;
    if !(residual > 0.0) {
        return Err(Error::SingularAuxiliary(column));
    }
    Ok(diagonal / residual)
}

fn without(m: usize, skip: usize) -> Vec<usize> {
    (0..m).filter(|&i| i != skip).collect()
}

/// VIF of `column` from an arbitrary augmented cross-product matrix
/// `x_a^t x_a`, using the noncentered auxiliary regression.
pub fn vif_from_gram(gram: &DMatrix<f64>, column: usize) -> Result<f64> {
    let m = gram.nrows();
    let rest = without(m, column);
    let a = DVector::from_iterator(rest.len(), rest.iter().map(|&i| gram[(i, column)]));
    let block = DMatrix::from_fn(rest.len(), rest.len(), |i, j| gram[(rest[i], rest[j])]);
    vif_from_blocks(column, gram[(column, column)], &a, block)
}

/// Regular ridge: `(1 + k) / (1 + k - r^t (R_{-l} + k I)^{-1} r)` with the
/// standardized diagonal `x_l^t x_l`.
pub fn vif_uniform(correlation: &DMatrix<f64>, k: f64, column: usize) -> Result<f64> {
    let m = correlation.nrows();
    let rest = without(m, column);
    let a = DVector::from_iterator(rest.len(), rest.iter().map(|&i| correlation[(i, column)]));
    let block =
        DMatrix::from_fn(rest.len(), rest.len(), |i, j| correlation[(rest[i], rest[j])] + if i == j { k } else { 0.0 });
    vif_from_blocks(column, correlation[(column, column)] + k, &a, block)
}

/// Single-direction penalty `k` on eigenvector `index`: the penalty rows add
/// the rank-one term `k γ γ^t` with `γ` the `index`-th eigenvector.
pub fn vif_single(
    correlation: &DMatrix<f64>,
    spectral: &SpectralDecomposition,
    index: usize,
    k: f64,
    column: usize,
) -> Result<f64> {
    let m = correlation.nrows();
    let g = spectral.eigenvectors().column(index);
    let rest = without(m, column);
    let a = DVector::from_iterator(rest.len(), rest.iter().map(|&i| correlation[(i, column)] + k * g[i] * g[column]));
    let block =
        DMatrix::from_fn(rest.len(), rest.len(), |i, j| correlation[(rest[i], rest[j])] + k * g[rest[i]] * g[rest[j]]);
    vif_from_blocks(column, correlation[(column, column)] + k * g[column] * g[column], &a, block)
}

/// Variance inflation factor of regressor `column` under `penalty`, using the
/// closed form for the regular and single-direction cases.
pub fn vif(
    cross: &CrossProducts,
    spectral: &SpectralDecomposition,
    penalty: &PenaltyMatrix,
    column: usize,
) -> Result<f64> {
    check(cross, spectral, penalty)?;
    if column >= cross.m() {
        return Err(Error::DimensionMismatch { expected: cross.m(), found: column });
    }
    match penalty.kind() {
        PenaltyKind::Zero => vif_uniform(&cross.gram, 0.0, column),
        PenaltyKind::Uniform(k) => vif_uniform(&cross.gram, k, column),
        PenaltyKind::Single { index, k } => vif_single(&cross.gram, spectral, index, k, column),
        PenaltyKind::General => vif_from_gram(&augmented_gram(cross, spectral, penalty)?, column),
    }
}

/// `sqrt(μ_max / μ_min)` with `μ_j = λ_j + k_j`.
pub fn condition_number(spectral: &SpectralDecomposition, penalty: &PenaltyMatrix) -> Result<f64> {
    penalty.check_dimension(spectral.m())?;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for (j, (l, k)) in spectral.eigenvalues().iter().zip(penalty.values()).enumerate() {
        let mu = l + k;
        if !(mu > 0.0) {
            return Err(Error::NonPositiveShift { index: j });
        }
        max = max.max(mu);
        min = min.min(mu);
    }
    Ok((max / min).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub cv: Vec<CoefficientOfVariation>,
    pub cv_troubling: Vec<bool>,
    pub corr: DMatrix<f64>,
    pub corr_det: f64,
    pub vif: Vec<f64>,
    pub cn: f64,
    pub k_used: PenaltyMatrix,
    /// Set when `cv`/`corr` depend on the eigenvector sign convention.
    pub convention_sensitive: bool,
}

pub fn diagnose(
    cross: &CrossProducts,
    spectral: &SpectralDecomposition,
    penalty: &PenaltyMatrix,
) -> Result<DiagnosticsReport> {
    let moments = augmented_moments(cross, spectral, penalty)?;
    let m = cross.m();
    let cv = (0..m).map(|l| column_cv(&moments, l)).collect::<Result<Vec<_>>>()?;
    let corr = correlation_from_moments(&moments);
    let vif = (0..m).map(|l| vif(cross, spectral, penalty, l)).collect::<Result<Vec<_>>>()?;
    Ok(DiagnosticsReport {
        cv_troubling: cv.iter().map(|c| c.is_troubling()).collect(),
        cv,
        corr: corr.matrix,
        corr_det: corr.determinant,
        vif,
        cn: condition_number(spectral, penalty)?,
        k_used: penalty.clone(),
        convention_sensitive: penalty.convention_sensitive(),
    })
}

/// Determinant of the plain correlation matrix of the regressors.
pub fn correlation_determinant(cross: &CrossProducts) -> Result<f64> {
    determinant(&cross.gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{standardize, StandardizedModel};
    use crate::spectral::{augmented_design, eigendecompose};
    use crate::testdata;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn example_one() -> (CrossProducts, SpectralDecomposition) {
        let cp = CrossProducts::from_correlation(
            testdata::example_one_correlation(),
            &testdata::example_one_beta(),
            testdata::EXAMPLE_ONE_N,
            testdata::example_one_names(),
        )
        .unwrap();
        let s = eigendecompose(&cp.gram).unwrap();
        (cp, s)
    }

    fn setup(model: &StandardizedModel) -> (CrossProducts, SpectralDecomposition) {
        let cp = model.cross_products();
        let s = eigendecompose(&cp.gram).unwrap();
        (cp, s)
    }

    /// Noncentered auxiliary regression on the explicit augmented matrix.
    fn brute_force_vif(xa: &DMatrix<f64>, column: usize) -> f64 {
        let rest = without(xa.ncols(), column);
        let others = xa.select_columns(&rest);
        let target = xa.column(column).clone_owned();
        let qr = others.clone().qr();
        let nu = qr.r().solve_upper_triangular(&qr.q().tr_mul(&target)).unwrap();
        let fitted = others * nu;
        let r2 = fitted.norm_squared() / target.norm_squared();
        1.0 / (1.0 - r2)
    }

    #[test]
    fn example_one_vifs() {
        let (cp, s) = example_one();
        let cases: [(PenaltyMatrix, [f64; 3]); 3] = [
            (PenaltyMatrix::zero(3), [2.45664, 5200.31530, 5138.53548]),
            (PenaltyMatrix::uniform(3, 0.01).unwrap(), [2.074291, 50.824611, 50.245183]),
            (PenaltyMatrix::single(3, 2, 100.0).unwrap(), [2.111976, 26.772112, 27.413986]),
        ];
        for (penalty, want) in cases {
            for (l, want) in want.iter().enumerate() {
                assert_relative_eq!(vif(&cp, &s, &penalty, l).unwrap(), *want, max_relative = 1e-3);
            }
        }
    }

    #[test]
    fn zero_penalty_vif_is_inverse_diagonal() {
        let (cp, s) = setup(&standardize(&testdata::longley()).unwrap());
        let inv = cp.gram.clone().try_inverse().unwrap();
        for l in 0..5 {
            assert_relative_eq!(vif(&cp, &s, &PenaltyMatrix::zero(5), l).unwrap(), inv[(l, l)], max_relative = 1e-8);
        }
    }

    #[test]
    fn condition_numbers() {
        let (_, s) = example_one();
        assert_relative_eq!(condition_number(&s, &PenaltyMatrix::zero(3)).unwrap(), 165.2056, max_relative = 1e-3);
        let (_, s) = setup(&standardize(&testdata::longley()).unwrap());
        let cn = condition_number(&s, &PenaltyMatrix::zero(5)).unwrap();
        assert!((cn - 61.5302).abs() <= 0.5e-4);
        let cn = condition_number(&s, &PenaltyMatrix::single(5, 4, 0.01392881).unwrap()).unwrap();
        assert!((cn - 15.574).abs() <= 0.5e-3);
    }

    #[test]
    fn cv_is_infinite_without_penalty() {
        let (cp, s) = example_one();
        for l in 0..3 {
            assert_eq!(
                coefficient_of_variation(&cp, &s, &PenaltyMatrix::zero(3), l).unwrap(),
                CoefficientOfVariation::Infinite
            );
        }
    }

    #[test]
    fn cv_single_closed_form() {
        for seed in 0..30 {
            let model = testdata::random_model(seed, 14, 4);
            let (cp, s) = setup(&model);
            let (n, m) = (cp.n as f64, 4.0);
            for l in 0..4 {
                let k = 0.01 + seed as f64 * 0.37;
                let penalty = PenaltyMatrix::single(4, l, k).unwrap();
                let general = coefficient_of_variation(&cp, &s, &penalty, l).unwrap().value().powi(2);
                let g = s.eigenvectors()[(l, l)];
                let sum_sq: f64 = model.x.column(l).norm_squared();
                let closed = (n + m) / (k * g * g) * sum_sq + n + m - 1.0;
                assert_relative_eq!(general, closed, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn cv_single_limit() {
        let (cp, s) = example_one();
        let bound = ((cp.n + 3 - 1) as f64).sqrt();
        for l in 0..3 {
            let cv = coefficient_of_variation(&cp, &s, &PenaltyMatrix::single(3, l, 1e9).unwrap(), l).unwrap();
            assert_relative_eq!(cv.value(), bound, max_relative = 1e-4);
        }
    }

    #[test]
    fn cv_uniform_limit_depends_on_row_sums() {
        // CV² → (n+m)/T² - 1 with T the l-th row sum of Γ; √(n+m-1) needs |T| = 1.
        let (cp, s) = example_one();
        let total = (cp.n + 3) as f64;
        for l in 0..3 {
            let t: f64 = s.eigenvectors().row(l).sum();
            let cv = coefficient_of_variation(&cp, &s, &PenaltyMatrix::uniform(3, 1e9).unwrap(), l).unwrap();
            assert_relative_eq!(cv.value(), (total / (t * t) - 1.0).sqrt(), max_relative = 1e-4);
        }
        let cp_orth = CrossProducts::from_correlation(
            DMatrix::identity(3, 3),
            &DVector::from_element(3, 0.1),
            15,
            testdata::example_one_names(),
        )
        .unwrap();
        let s_orth = eigendecompose(&cp_orth.gram).unwrap();
        let cv = coefficient_of_variation(&cp_orth, &s_orth, &PenaltyMatrix::uniform(3, 1e9).unwrap(), 0).unwrap();
        assert_relative_eq!(cv.value(), (total - 1.0).sqrt(), max_relative = 1e-4);
    }

    #[test]
    fn correlation_continuity_and_limits() {
        let (cp, s) = example_one();
        let at_zero = augmented_correlation(&cp, &s, &PenaltyMatrix::zero(3)).unwrap();
        assert!((&at_zero.matrix - &cp.gram).amax() < 1e-12);
        assert_relative_eq!(at_zero.determinant, 0.00009190317, max_relative = 1e-4);

        let far = augmented_correlation(&cp, &s, &PenaltyMatrix::single(3, 2, 1e9).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(far.matrix[(i, j)].abs() >= 0.999);
            }
        }

        let k = 1e9;
        let total = (cp.n + 3) as f64;
        let rows: Vec<f64> = (0..3).map(|i| s.eigenvectors().row(i).sum()).collect();
        let far = augmented_correlation(&cp, &s, &PenaltyMatrix::uniform(3, k).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let limit = -(rows[i] * rows[j])
                    / total
                    / ((1.0 - rows[i] * rows[i] / total).sqrt() * (1.0 - rows[j] * rows[j] / total).sqrt());
                assert!((far.matrix[(i, j)] - limit).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn report_flags_convention_sensitivity() {
        let (cp, s) = example_one();
        assert!(!diagnose(&cp, &s, &PenaltyMatrix::single(3, 2, 0.2).unwrap()).unwrap().convention_sensitive);
        let report = diagnose(&cp, &s, &PenaltyMatrix::uniform(3, 0.2).unwrap()).unwrap();
        assert!(report.convention_sensitive);
        assert!(report.vif.iter().all(|&v| v >= 1.0));
        assert!(report.cn >= 1.0);
        assert!(report.corr_det > 0.0 && report.corr_det <= 1.0);
    }

    #[test]
    fn single_index_diagnostics_ignore_eigenvector_signs() {
        let (cp, s) = example_one();
        let flipped = s.with_flipped_signs(&[true, true, true]);
        let p = PenaltyMatrix::single(3, 2, 0.4).unwrap();
        let a = diagnose(&cp, &s, &p).unwrap();
        let b = diagnose(&cp, &flipped, &p).unwrap();
        assert!((a.corr - b.corr).amax() < 1e-12);
        for (x, y) in a.cv.iter().zip(&b.cv) {
            assert!((x.value() - y.value()).abs() < 1e-9 * x.value());
        }
    }

    #[test]
    fn single_direction_cn_scenarios() {
        let lam = [4.0, 2.0, 1.0, 0.5];
        let s = SpectralDecomposition::from_parts(DVector::from_column_slice(&lam), DMatrix::identity(4, 4)).unwrap();
        let cn = |l: usize, k: f64| condition_number(&s, &PenaltyMatrix::single(4, l, k).unwrap()).unwrap();
        let base = (4.0f64 / 0.5).sqrt();
        let ks: Vec<f64> = (0..=800).map(|i| i as f64 * 0.01).collect();
        for w in ks.windows(2) {
            assert!(cn(0, w[1]) >= cn(0, w[0]));
        }
        for &k in &ks {
            if k <= 2.0 {
                assert_eq!(cn(1, k), base);
            } else {
                assert!(cn(1, k) > base);
            }
            let c = cn(3, k);
            if k < 0.5 {
                assert!(c > 2.0 && (k == 0.0 || c < cn(3, k - 0.01)));
            } else if k <= 3.5 {
                assert!((c - 2.0).abs() <= 1e-10);
            } else {
                assert!(c > 2.0 && c > cn(3, k - 0.01));
            }
        }
    }

    #[test]
    fn cv_threshold_flag() {
        assert!(CoefficientOfVariation::Finite(0.05).is_troubling());
        assert!(!CoefficientOfVariation::Finite(0.2).is_troubling());
        assert!(!CoefficientOfVariation::Infinite.is_troubling());
    }

    proptest! {
        #[test]
        fn closed_form_vifs_match_explicit_augmented_regression(seed in any::<u64>(), k in 0.0f64..10.0, index in 0usize..4) {
            let model = testdata::random_model(seed, 16, 4);
            let (cp, s) = setup(&model);
            for penalty in [PenaltyMatrix::uniform(4, k).unwrap(), PenaltyMatrix::single(4, index, k).unwrap()] {
                let (xa, _) = augmented_design(&model, &s, &penalty).unwrap();
                let gram = augmented_gram(&cp, &s, &penalty).unwrap();
                for l in 0..4 {
                    let closed = vif(&cp, &s, &penalty, l).unwrap();
                    let blocks = vif_from_gram(&gram, l).unwrap();
                    let brute = brute_force_vif(&xa, l);
                    prop_assert!((closed - blocks).abs() <= 1e-9 * blocks.max(1.0));
                    prop_assert!((closed - brute).abs() <= 1e-9 * brute.max(1.0));
                    prop_assert!(closed >= 1.0 - 1e-12);
                }
            }
        }

        #[test]
        fn moments_match_direct_sample_moments(seed in any::<u64>(), ks in proptest::collection::vec(0.0f64..4.0, 3)) {
            let model = testdata::random_model(seed, 12, 3);
            let (cp, s) = setup(&model);
            let penalty = PenaltyMatrix::general(ks).unwrap();
            let moments = augmented_moments(&cp, &s, &penalty).unwrap();
            let (xa, _) = augmented_design(&model, &s, &penalty).unwrap();
            let rows = xa.nrows() as f64;
            for i in 0..3 {
                let mean_i = xa.column(i).sum() / rows;
                prop_assert!((mean_i - moments.means[i]).abs() <= 1e-10);
                for j in 0..3 {
                    let mean_j = xa.column(j).sum() / rows;
                    let cov: f64 = xa.column(i).iter().zip(xa.column(j).iter())
                        .map(|(a, b)| (a - mean_i) * (b - mean_j)).sum::<f64>() / rows;
                    prop_assert!((cov - moments.covariance[(i, j)]).abs() <= 1e-10);
                }
            }
        }
    }
}
