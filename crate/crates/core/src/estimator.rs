//! OLS and generalized ridge estimation in the eigenbasis.
//!
//! With `x^t x = Γ Λ Γ^t`, `Ω = (Λ + K)^{-1}`, `δ = Γ^t x^t y` and
//! `ξ = Γ^t β`:
//!
//! * `β(K) = Γ Ω δ`
//! * `var β(K) = σ² Γ Ψ Γ^t` with `Ψ = Ω Λ Ω`
//! * `MSE = σ² tr(Ψ) + ξ^t Θ ξ` with `Θ = (ΩΛ - I)²`
//! * `GoF = β(K)^t (x^t x + 2 Γ K Γ^t) β(K) / y^t y`
//!
//! Every inverse goes through the spectrum; `x^t x` is never inverted directly.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::dataset::CrossProducts;
use crate::error::{Error, Result};
use crate::spectral::{PenaltyMatrix, SpectralDecomposition};

/// σ² and β used inside MSE and the selection rules, normally the OLS fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Plugins {
    pub sigma2: f64,
    pub beta: DVector<f64>,
}

impl Plugins {
    pub fn new(sigma2: f64, beta: DVector<f64>) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(Error::InvalidVariance(sigma2));
        }
        Ok(Self { sigma2, beta })
    }
}

/// Eigenbasis quantities for one `(model, K, plug-ins)` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct GrContext {
    pub alpha: DVector<f64>,
    pub delta: DVector<f64>,
    pub xi: DVector<f64>,
    /// `1 / (λ_j + k_j)`
    pub omega: Vec<f64>,
    /// `λ_j / (λ_j + k_j)²`
    pub psi: Vec<f64>,
    /// `k_j² / (λ_j + k_j)²`
    pub theta: Vec<f64>,
    pub sigma2_plugin: f64,
    pub beta_plugin: DVector<f64>,
}

fn check_shifted(spectral: &SpectralDecomposition, penalty: &PenaltyMatrix) -> Result<()> {
    penalty.check_dimension(spectral.m())?;
    for (j, (l, k)) in spectral.eigenvalues().iter().zip(penalty.values()).enumerate() {
        if !(l + k > 0.0) {
            return Err(Error::NonPositiveShift { index: j });
        }
    }
    Ok(())
}

impl GrContext {
    pub fn new(
        cross: &CrossProducts,
        spectral: &SpectralDecomposition,
        penalty: &PenaltyMatrix,
        plugins: &Plugins,
    ) -> Result<Self> {
        let m = spectral.m();
        if cross.m() != m {
            return Err(Error::DimensionMismatch { expected: m, found: cross.m() });
        }
        if plugins.beta.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: plugins.beta.len() });
        }
        check_shifted(spectral, penalty)?;
        let lam = spectral.eigenvalues();
        let k = penalty.values();
        let omega: Vec<f64> = (0..m).map(|j| 1.0 / (lam[j] + k[j])).collect();
        let psi = (0..m).map(|j| lam[j] * omega[j] * omega[j]).collect();
        let theta = (0..m).map(|j| (k[j] * omega[j]).powi(2)).collect();
        Ok(Self {
            alpha: cross.xty.clone(),
            delta: spectral.rotate(&cross.xty),
            xi: spectral.rotate(&plugins.beta),
            omega,
            psi,
            theta,
            sigma2_plugin: plugins.sigma2,
            beta_plugin: plugins.beta.clone(),
        })
    }
}

/// One column of estimation results.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub coefficients: DVector<f64>,
    pub std_errors: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub mse: f64,
    pub gof: f64,
    /// `δ^t Ω² δ`, the squared Euclidean norm of `β(K)`.
    pub norm: f64,
    pub cn: f64,
    pub k_used: PenaltyMatrix,
}

/// OLS fit of a standardized model, with the t statistics needed for
/// significance tests (`df = n - m`).
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub report: EstimateReport,
    pub sigma2: f64,
    pub r_squared: f64,
    pub t_statistics: DVector<f64>,
    pub df: usize,
}

impl OlsFit {
    pub fn plugins(&self) -> Plugins {
        Plugins { sigma2: self.sigma2, beta: self.report.coefficients.clone() }
    }
}

/// `Γ Ω δ` without building a full context.
pub fn gr_coefficients(
    cross: &CrossProducts,
    spectral: &SpectralDecomposition,
    penalty: &PenaltyMatrix,
) -> Result<DVector<f64>> {
    check_shifted(spectral, penalty)?;
    let mut scaled = spectral.rotate(&cross.xty);
    for (j, v) in scaled.iter_mut().enumerate() {
        *v /= spectral.eigenvalues()[j] + penalty.values()[j];
    }
    Ok(spectral.eigenvectors() * scaled)
}

/// Ordinary least squares on the standardized model.
///
/// The residual sum of squares is `y^t y - β^t x^t y`, and
/// `σ² = RSS / (n - m)` since the standardized model has no intercept.
pub fn ols(cross: &CrossProducts, spectral: &SpectralDecomposition) -> Result<OlsFit> {
    let (n, m) = (cross.n, cross.m());
    if n <= m {
        return Err(Error::NoResidualDegreesOfFreedom { n, m });
    }
    let zero = PenaltyMatrix::zero(m);
    let beta = gr_coefficients(cross, spectral, &zero)?;
    let explained = beta.dot(&cross.xty);
    let rss = (cross.yty - explained).max(0.0);
    let df = n - m;
    let sigma2 = rss / df as f64;
    let plugins = Plugins::new(sigma2, beta)?;
    let report = gr_estimate(cross, spectral, &zero, &plugins)?;
    let t_statistics = DVector::from_iterator(
        m,
        (0..m).map(|j| {
            let se = report.std_errors[j];
            if se > 0.0 {
                report.coefficients[j] / se
            } else {
                f64::INFINITY.copysign(report.coefficients[j])
            }
        }),
    );
    Ok(OlsFit { r_squared: report.gof, report, sigma2, t_statistics, df })
}

pub fn gr_estimate(
    cross: &CrossProducts,
    spectral: &SpectralDecomposition,
    penalty: &PenaltyMatrix,
    plugins: &Plugins,
) -> Result<EstimateReport> {
    let ctx = GrContext::new(cross, spectral, penalty, plugins)?;
    let m = spectral.m();
    let weighted = DVector::from_iterator(m, (0..m).map(|j| ctx.omega[j] * ctx.delta[j]));
    let coefficients = spectral.eigenvectors() * weighted;
    let variance: Vec<f64> = ctx.psi.iter().map(|p| p * ctx.sigma2_plugin).collect();
    let covariance = spectral.compose(&variance);
    let std_errors = DVector::from_iterator(m, (0..m).map(|j| covariance[(j, j)].max(0.0).sqrt()));
    let norm = (0..m).map(|j| (ctx.delta[j] * ctx.omega[j]).powi(2)).sum();
    let gof = gof(cross, spectral, penalty, &coefficients)?;
    Ok(EstimateReport {
        coefficients,
        std_errors,
        covariance,
        mse: mse_from_context(&ctx),
        gof,
        norm,
        cn: crate::diagnostics::condition_number(spectral, penalty)?,
        k_used: penalty.clone(),
    })
}

fn mse_from_context(ctx: &GrContext) -> f64 {
    let variance: f64 = ctx.psi.iter().sum::<f64>() * ctx.sigma2_plugin;
    let bias: f64 = ctx.theta.iter().zip(ctx.xi.iter()).map(|(t, x)| t * x * x).sum();
    variance + bias
}

/// Scalar mean squared error: trace of the variance matrix plus the squared
/// bias `ξ^t Θ ξ`.
pub fn scalar_mse(spectral: &SpectralDecomposition, penalty: &PenaltyMatrix, plugins: &Plugins) -> Result<f64> {
    check_shifted(spectral, penalty)?;
    if plugins.beta.len() != spectral.m() {
        return Err(Error::DimensionMismatch { expected: spectral.m(), found: plugins.beta.len() });
    }
    let xi = spectral.rotate(&plugins.beta);
    let mut total = 0.0;
    for (j, (&lam, &k)) in spectral.eigenvalues().iter().zip(penalty.values()).enumerate() {
        let shifted = lam + k;
        total += plugins.sigma2 * lam / (shifted * shifted) + (xi[j] * k / shifted).powi(2);
    }
    Ok(total)
}

/// Noncentered goodness of fit of `estimate`; `R²` when `K = 0`.
pub fn gof(
    cross: &CrossProducts,
    spectral: &SpectralDecomposition,
    penalty: &PenaltyMatrix,
    estimate: &DVector<f64>,
) -> Result<f64> {
    penalty.check_dimension(spectral.m())?;
    let doubled: Vec<f64> = penalty.values().iter().map(|k| 2.0 * k).collect();
    let form = &cross.gram + spectral.compose(&doubled);
    Ok((form * estimate).dot(estimate) / cross.yty)
}

/// `var β(K) - var β = σ² Γ (Ψ - Λ^{-1}) Γ^t`, negative definite whenever
/// every `k_j > 0`.
pub fn variance_gap(spectral: &SpectralDecomposition, penalty: &PenaltyMatrix, sigma2: f64) -> Result<DMatrix<f64>> {
    check_shifted(spectral, penalty)?;
    let diag: Vec<f64> = spectral
        .eigenvalues()
        .iter()
        .zip(penalty.values())
        .map(|(&l, &k)| -sigma2 * (k * k + 2.0 * l * k) / ((l + k) * (l + k) * l))
        .collect();
    Ok(spectral.compose(&diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::standardize;
    use crate::spectral::{augmented_design, eigendecompose};
    use crate::testdata;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn longley() -> (CrossProducts, SpectralDecomposition) {
        let cp = standardize(&testdata::longley()).unwrap().cross_products();
        let s = eigendecompose(&cp.gram).unwrap();
        (cp, s)
    }

    fn example_one() -> (CrossProducts, SpectralDecomposition, Plugins) {
        let cp = CrossProducts::from_correlation(
            testdata::example_one_correlation(),
            &testdata::example_one_beta(),
            testdata::EXAMPLE_ONE_N,
            testdata::example_one_names(),
        )
        .unwrap();
        let s = eigendecompose(&cp.gram).unwrap();
        let plugins = Plugins::new(testdata::EXAMPLE_ONE_SIGMA2, testdata::example_one_beta()).unwrap();
        (cp, s, plugins)
    }

    #[test]
    fn longley_ols() {
        let (cp, s) = longley();
        let fit = ols(&cp, &s).unwrap();
        let want = [-0.14892, 2.03784, -0.10746, -0.11107, -0.79922];
        for (got, want) in fit.report.coefficients.iter().zip(want) {
            assert!((got - want).abs() <= 0.5e-5 + 1e-12, "{got} vs {want}");
        }
        assert_relative_eq!(fit.sigma2, 0.001147482, max_relative = 1e-6);
        assert!((fit.r_squared - 0.9874).abs() <= 0.5e-4);
        assert_eq!(fit.df, 11);
    }

    #[test]
    fn perfect_fit_on_one_column() {
        let model = testdata::random_model(11, 20, 3);
        let mut cp = model.cross_products();
        cp.xty = cp.gram.column(1).clone_owned();
        let s = eigendecompose(&cp.gram).unwrap();
        let fit = ols(&cp, &s).unwrap();
        assert!((fit.report.coefficients[1] - 1.0).abs() < 1e-10);
        assert!(fit.report.coefficients[0].abs() < 1e-10);
        assert!(fit.report.coefficients[2].abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_penalty_matches_ols() {
        let (cp, s) = longley();
        let fit = ols(&cp, &s).unwrap();
        let gr = gr_estimate(&cp, &s, &PenaltyMatrix::zero(5), &fit.plugins()).unwrap();
        assert!((&gr.coefficients - &fit.report.coefficients).amax() <= 1e-10);
    }

    #[test]
    fn example_one_uniform_column() {
        let (cp, s, plugins) = example_one();
        let k = PenaltyMatrix::uniform(3, 0.00652).unwrap();
        let est = gr_estimate(&cp, &s, &k, &plugins).unwrap();
        for (got, want) in est.coefficients.iter().zip([-0.7460679, 0.2825805, 0.8470968]) {
            assert_relative_eq!(*got, want, max_relative = 1e-3);
        }
        for (got, want) in est.std_errors.iter().zip([0.2260173, 0.2013429, 0.2016539]) {
            assert_relative_eq!(*got, want, max_relative = 1e-3);
        }
        assert_relative_eq!(est.gof, 0.6307898, max_relative = 1e-3);
    }

    #[test]
    fn longley_single_penalty_column() {
        let (cp, s) = longley();
        let plugins = ols(&cp, &s).unwrap().plugins();
        let k = PenaltyMatrix::single(5, 4, 0.01392881).unwrap();
        let est = gr_estimate(&cp, &s, &k, &plugins).unwrap();
        for (got, want) in est.coefficients.iter().zip([0.4157, 0.5354, -0.2749, -0.1166, 0.2549]) {
            assert!((got - want).abs() <= 0.5e-4 + 1e-9, "{got} vs {want}");
        }
        let far = PenaltyMatrix::single(5, 4, 3.60871565).unwrap();
        let est = gr_estimate(&cp, &s, &far, &plugins).unwrap();
        assert!((est.gof - 0.9833).abs() <= 0.5e-4);
    }

    #[test]
    fn mse_reference_values() {
        let (_, s, plugins) = example_one();
        let ols_mse = scalar_mse(&s, &PenaltyMatrix::zero(3), &plugins).unwrap();
        assert_relative_eq!(ols_mse, 259.7374, max_relative = 1e-3);
        // K = 0 reduces to σ² tr(Λ^{-1})
        let trace: f64 = s.eigenvalues().iter().map(|l| 1.0 / l).sum();
        assert_relative_eq!(ols_mse, plugins.sigma2 * trace, max_relative = 1e-14);
        let single = scalar_mse(&s, &PenaltyMatrix::single(3, 2, 0.00003485569).unwrap(), &plugins).unwrap();
        assert_relative_eq!(single, 190.9562, max_relative = 1e-3);

        let (cp, s) = longley();
        let plugins = ols(&cp, &s).unwrap().plugins();
        let k_hk = crate::selection::k_hk(plugins.sigma2, &s.rotate(&plugins.beta)).unwrap();
        let mse = scalar_mse(&s, &PenaltyMatrix::uniform(5, k_hk).unwrap(), &plugins).unwrap();
        assert!((mse - 1.0189).abs() <= 0.5e-4);
    }

    #[test]
    fn longley_gof_at_zero_is_r_squared() {
        let (cp, s) = longley();
        let fit = ols(&cp, &s).unwrap();
        let g = gof(&cp, &s, &PenaltyMatrix::zero(5), &fit.report.coefficients).unwrap();
        assert!((g - 0.9874).abs() <= 0.5e-4);
    }

    #[test]
    fn variance_gap_cases() {
        let (_, s) = longley();
        assert_eq!(variance_gap(&s, &PenaltyMatrix::zero(5), 0.3).unwrap().amax(), 0.0);
        let one =
            SpectralDecomposition::from_parts(DVector::from_vec(alloc::vec![1.0]), DMatrix::identity(1, 1)).unwrap();
        let gap = variance_gap(&one, &PenaltyMatrix::uniform(1, 1.0).unwrap(), 1.0).unwrap();
        assert_relative_eq!(gap[(0, 0)], -0.75, max_relative = 1e-15);
    }

    #[test]
    fn norm_decreases_with_uniform_k() {
        let (cp, s) = longley();
        let plugins = ols(&cp, &s).unwrap().plugins();
        let mut last = f64::INFINITY;
        for i in 0..200 {
            let k = i as f64 * 0.005;
            let est = gr_estimate(&cp, &s, &PenaltyMatrix::uniform(5, k).unwrap(), &plugins).unwrap();
            assert!(est.norm < last);
            assert!((est.norm - est.coefficients.norm_squared()).abs() <= 1e-10 * est.norm.max(1.0));
            last = est.norm;
        }
    }

    #[test]
    fn continuity_at_zero() {
        let (cp, s) = longley();
        let plugins = ols(&cp, &s).unwrap().plugins();
        let base = gr_estimate(&cp, &s, &PenaltyMatrix::zero(5), &plugins).unwrap();
        let tiny = gr_estimate(&cp, &s, &PenaltyMatrix::uniform(5, 1e-12).unwrap(), &plugins).unwrap();
        assert!((&tiny.coefficients - &base.coefficients).amax() <= 1e-7);
        assert!((tiny.mse - base.mse).abs() <= 1e-7);
        assert!((tiny.gof - base.gof).abs() <= 1e-9);
    }

    #[test]
    fn context_invariants() {
        let (cp, s, plugins) = example_one();
        let ctx =
            GrContext::new(&cp, &s, &PenaltyMatrix::general(alloc::vec![0.1, 0.0, 2.0]).unwrap(), &plugins).unwrap();
        assert!((s.eigenvectors().tr_mul(&ctx.alpha) - &ctx.delta).amax() <= 1e-12);
        assert!((s.eigenvectors().tr_mul(&ctx.beta_plugin) - &ctx.xi).amax() <= 1e-12);
        assert!(ctx.omega.iter().chain(&ctx.psi).all(|&v| v > 0.0));
        assert!(ctx.theta.iter().all(|&t| (0.0..1.0).contains(&t)));
    }

    proptest! {
        #[test]
        fn augmented_ols_reproduces_gr(seed in any::<u64>(), ks in proptest::collection::vec(0.0f64..2.0, 4)) {
            let model = testdata::random_model(seed, 25, 4);
            let cp = model.cross_products();
            let s = eigendecompose(&cp.gram).unwrap();
            let penalty = PenaltyMatrix::general(ks).unwrap();
            let direct = gr_coefficients(&cp, &s, &penalty).unwrap();
            let (xa, ya) = augmented_design(&model, &s, &penalty).unwrap();
            let qr = xa.qr();
            let rhs = qr.q().tr_mul(&ya);
            let via_augmented = qr.r().solve_upper_triangular(&rhs).unwrap();
            prop_assert!((via_augmented - direct).amax() <= 1e-9);
        }

        #[test]
        fn variance_gap_is_negative_definite(seed in any::<u64>(), ks in proptest::collection::vec(1e-6f64..5.0, 4), a in proptest::collection::vec(-1.0f64..1.0, 4)) {
            let model = testdata::random_model(seed, 25, 4);
            let s = eigendecompose(&model.cross_products().gram).unwrap();
            let gap = variance_gap(&s, &PenaltyMatrix::general(ks).unwrap(), 0.5).unwrap();
            let a = DVector::from_vec(a);
            prop_assume!(a.norm() > 1e-3);
            prop_assert!((&gap * &a).dot(&a) < 0.0);
        }
    }
}
