//! Rules for choosing the penalty: closed-form estimators and grid searches.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DVector;
#[allow(unused_imports)]
use num_traits::Float;

use crate::diagnostics::condition_number;
use crate::error::{Error, Result};
use crate::estimator::{scalar_mse, Plugins};
use crate::spectral::{PenaltyKind, PenaltyMatrix, SpectralDecomposition};

/// Upper bound on the number of points a grid may contain.
pub const MAX_GRID_POINTS: f64 = 1e8;

/// Each refinement pass of the MSE minimizer divides the step by this.
const REFINEMENT_FACTOR: f64 = 100.0;
const REFINEMENT_PASSES: usize = 6;

/// Evenly spaced values `lower, lower + step, …` not exceeding `upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    lower: f64,
    upper: f64,
    step: f64,
    count: usize,
}

impl GridSpec {
    pub fn new(lower: f64, upper: f64, step: f64) -> Result<Self> {
        if !(lower.is_finite() && lower >= 0.0) {
            return Err(Error::InvalidGrid(alloc::format!("lower bound {lower} must be finite and >= 0")));
        }
        if !(upper.is_finite() && upper > lower) {
            return Err(Error::InvalidGrid(alloc::format!("upper bound {upper} must exceed lower bound {lower}")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidGrid(alloc::format!("step {step} must be positive")));
        }
        let span = (upper - lower) / step;
        if span > MAX_GRID_POINTS {
            return Err(Error::InvalidGrid(alloc::format!("{span:.3e} points exceed the limit of 1e8")));
        }
        // tolerate representation error in (upper - lower) / step
        let count = (span + 1e-9).floor() as usize + 1;
        Ok(Self { lower, upper, step, count })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.point(i))
    }
}

impl Default for GridSpec {
    /// `[0, 1]` in steps of `1e-5`.
    fn default() -> Self {
        Self::new(0.0, 1.0, 1e-5).unwrap()
    }
}

/// Which family of penalties a search ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyShape {
    Uniform,
    /// Only eigen-direction `l` (0-based, descending eigenvalue order).
    Single(usize),
}

impl PenaltyShape {
    pub fn penalty(self, m: usize, k: f64) -> Result<PenaltyMatrix> {
        match self {
            Self::Uniform => PenaltyMatrix::uniform(m, k),
            Self::Single(l) => PenaltyMatrix::single(m, l, k),
        }
    }
}

impl fmt::Display for PenaltyShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform => f.write_str("uniform"),
            Self::Single(l) => write!(f, "single:{}", l + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    /// `m σ² / β^t β`, uniform.
    Hkb,
    /// `σ² / max ξ²`, uniform.
    Hk,
    /// Grid minimizer of the MSE over `shape`.
    MinMse(PenaltyShape),
    /// First grid point whose condition number drops below `threshold`.
    CnThreshold { shape: PenaltyShape, threshold: f64 },
    /// Last grid point before the MSE first exceeds the OLS MSE.
    MseCrossing(PenaltyShape),
    /// Start of the minimum condition-number plateau for the smallest
    /// eigenvalue.
    Plateau,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Hkb => f.write_str("hkb"),
            Self::Hk => f.write_str("hk"),
            Self::MinMse(PenaltyShape::Uniform) => f.write_str("min-uniform"),
            Self::MinMse(PenaltyShape::Single(l)) => write!(f, "min-single:{}", l + 1),
            Self::CnThreshold { shape, threshold } => write!(f, "cn-threshold:{shape}:{threshold}"),
            Self::MseCrossing(shape) => write!(f, "mse-crossing:{shape}"),
            Self::Plateau => f.write_str("plateau"),
        }
    }
}

/// Range of `k_l` over which the single-direction condition number stays at
/// its minimum `cn`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub lower: f64,
    pub upper: f64,
    pub cn: f64,
}

/// Outcome of a rule. `k` is `None` when a search finds no qualifying grid
/// point. `objective_value` is the condition number for the CN-based rules
/// and the MSE otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub rule: String,
    pub k: Option<PenaltyMatrix>,
    pub objective_value: Option<f64>,
    pub achieved_cn: Option<f64>,
    pub achieved_mse: Option<f64>,
    pub plateau: Option<Plateau>,
}

impl SelectionResult {
    fn found(rule: Rule, penalty: PenaltyMatrix, spectral: &SpectralDecomposition, plugins: &Plugins) -> Result<Self> {
        let cn = condition_number(spectral, &penalty)?;
        let mse = scalar_mse(spectral, &penalty, plugins)?;
        let objective = match rule {
            Rule::CnThreshold { .. } | Rule::Plateau => cn,
            _ => mse,
        };
        Ok(Self {
            rule: alloc::format!("{rule}"),
            k: Some(penalty),
            objective_value: Some(objective),
            achieved_cn: Some(cn),
            achieved_mse: Some(mse),
            plateau: None,
        })
    }

    fn not_found(rule: Rule) -> Self {
        Self {
            rule: alloc::format!("{rule}"),
            k: None,
            objective_value: None,
            achieved_cn: None,
            achieved_mse: None,
            plateau: None,
        }
    }

    /// The scalar `k` of a uniform or single-direction result.
    pub fn scalar_k(&self) -> Option<f64> {
        match self.k.as_ref()?.kind() {
            PenaltyKind::Zero => Some(0.0),
            PenaltyKind::Uniform(k) | PenaltyKind::Single { k, .. } => Some(k),
            PenaltyKind::General => None,
        }
    }
}

pub fn k_hkb(m: usize, sigma2: f64, beta: &DVector<f64>) -> Result<f64> {
    let norm = beta.norm_squared();
    if norm == 0.0 {
        return Err(Error::ZeroVector("beta"));
    }
    Ok(m as f64 * sigma2 / norm)
}

pub fn k_hk(sigma2: f64, xi: &DVector<f64>) -> Result<f64> {
    let max = xi.iter().map(|v| v * v).fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::ZeroVector("xi"));
    }
    Ok(sigma2 / max)
}

fn check_shape(shape: PenaltyShape, m: usize) -> Result<()> {
    match shape {
        PenaltyShape::Single(index) if index >= m => Err(Error::PenaltyIndexOutOfRange { index, m }),
        _ => Ok(()),
    }
}

/// Index of the smallest value; the first one wins ties.
fn argmin(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best
}

/// Minimizes the MSE on the grid, then refines around the winner with
/// successively finer sub-grids clipped to the grid bounds.
pub fn k_min(
    spectral: &SpectralDecomposition,
    plugins: &Plugins,
    shape: PenaltyShape,
    grid: &GridSpec,
) -> Result<SelectionResult> {
    let m = spectral.m();
    check_shape(shape, m)?;
    let xi = spectral.rotate(&plugins.beta);
    // for a single direction only its own MSE term moves; comparing that term
    // alone keeps the flat region around the minimum resolvable
    let mse = |k: f64| -> Result<f64> {
        match shape {
            PenaltyShape::Single(l) => {
                let lam = spectral.eigenvalues()[l];
                let d = lam + k;
                if !(d > 0.0) {
                    return Err(Error::NonPositiveShift { index: l });
                }
                Ok((plugins.sigma2 * lam + xi[l] * xi[l] * k * k) / (d * d))
            }
            PenaltyShape::Uniform => scalar_mse(spectral, &shape.penalty(m, k)?, plugins),
        }
    };
    let values = grid.points().map(&mse).collect::<Result<Vec<_>>>()?;
    let (i, _) = argmin(values.into_iter()).ok_or_else(|| Error::InvalidGrid("empty grid".into()))?;
    let mut best = grid.point(i);
    let mut step = grid.step();
    for _ in 0..REFINEMENT_PASSES {
        let lo = (best - step).max(grid.lower());
        let hi = (best + step).min(grid.upper());
        step /= REFINEMENT_FACTOR;
        if step <= f64::EPSILON * best.abs().max(f64::MIN_POSITIVE) || hi <= lo {
            break;
        }
        let fine = GridSpec::new(lo, hi, step)?;
        let values = fine.points().map(&mse).collect::<Result<Vec<_>>>()?;
        let candidates = fine.points().zip(values).chain(core::iter::once((best, mse(best)?)));
        let mut winner = (best, mse(best)?);
        for (k, v) in candidates {
            if v < winner.1 || (v == winner.1 && k < winner.0) {
                winner = (k, v);
            }
        }
        best = winner.0;
    }
    SelectionResult::found(Rule::MinMse(shape), shape.penalty(m, best)?, spectral, plugins)
}

/// `k_{l,min}`: MSE minimizer over penalties on direction `l` only.
pub fn k_min_single(
    spectral: &SpectralDecomposition,
    plugins: &Plugins,
    l: usize,
    grid: &GridSpec,
) -> Result<SelectionResult> {
    k_min(spectral, plugins, PenaltyShape::Single(l), grid)
}

/// First grid point whose condition number is below `threshold`.
pub fn cn_threshold_search(
    spectral: &SpectralDecomposition,
    plugins: &Plugins,
    shape: PenaltyShape,
    grid: &GridSpec,
    threshold: f64,
) -> Result<SelectionResult> {
    let rule = Rule::CnThreshold { shape, threshold };
    let m = spectral.m();
    check_shape(shape, m)?;
    if threshold.is_nan() {
        return Err(Error::InvalidGrid("threshold is NaN".into()));
    }
    if threshold <= 1.0 {
        return Ok(SelectionResult::not_found(rule));
    }
    for k in grid.points() {
        let penalty = shape.penalty(m, k)?;
        if condition_number(spectral, &penalty)? < threshold {
            return SelectionResult::found(rule, penalty, spectral, plugins);
        }
    }
    Ok(SelectionResult::not_found(rule))
}

/// Largest grid point before the MSE first exceeds the OLS MSE. When it never
/// does, the last grid point is returned.
pub fn mse_crossing_search(
    spectral: &SpectralDecomposition,
    plugins: &Plugins,
    shape: PenaltyShape,
    grid: &GridSpec,
) -> Result<SelectionResult> {
    let m = spectral.m();
    check_shape(shape, m)?;
    if grid.lower() != 0.0 {
        return Err(Error::InvalidGrid("the MSE crossing search needs a grid starting at 0".into()));
    }
    let ols = scalar_mse(spectral, &PenaltyMatrix::zero(m), plugins)?;
    let mut last = 0.0;
    for k in grid.points().skip(1) {
        if scalar_mse(spectral, &shape.penalty(m, k)?, plugins)? > ols {
            break;
        }
        last = k;
    }
    SelectionResult::found(Rule::MseCrossing(shape), shape.penalty(m, last)?, spectral, plugins)
}

/// Penalizing only the smallest eigenvalue, the condition number falls to
/// `sqrt(λ_max / λ_(2))` at `k = λ_(2) - λ_min` and stays there until
/// `k = λ_max - λ_min`. Reports the start of that range.
pub fn min_cn_plateau(spectral: &SpectralDecomposition, plugins: &Plugins) -> Result<SelectionResult> {
    let m = spectral.m();
    if m < 2 {
        return Err(Error::TooFewRegressors(m));
    }
    let l = spectral.min_index();
    let lam = spectral.eigenvalues();
    let lambda_min = lam[l];
    let second = lam[spectral.ascending()[1]];
    let plateau = Plateau {
        lower: second - lambda_min,
        upper: spectral.lambda_max() - lambda_min,
        cn: (spectral.lambda_max() / second).sqrt(),
    };
    let mut result =
        SelectionResult::found(Rule::Plateau, PenaltyMatrix::single(m, l, plateau.lower)?, spectral, plugins)?;
    result.objective_value = Some(plateau.cn);
    result.plateau = Some(plateau);
    Ok(result)
}

/// Evaluates `rule`; `grid` is used by the search rules only.
pub fn select(
    rule: Rule,
    spectral: &SpectralDecomposition,
    plugins: &Plugins,
    grid: &GridSpec,
) -> Result<SelectionResult> {
    let m = spectral.m();
    match rule {
        Rule::Hkb => {
            let k = k_hkb(m, plugins.sigma2, &plugins.beta)?;
            SelectionResult::found(rule, PenaltyMatrix::uniform(m, k)?, spectral, plugins)
        }
        Rule::Hk => {
            let k = k_hk(plugins.sigma2, &spectral.rotate(&plugins.beta))?;
            SelectionResult::found(rule, PenaltyMatrix::uniform(m, k)?, spectral, plugins)
        }
        Rule::MinMse(shape) => k_min(spectral, plugins, shape, grid),
        Rule::CnThreshold { shape, threshold } => cn_threshold_search(spectral, plugins, shape, grid, threshold),
        Rule::MseCrossing(shape) => mse_crossing_search(spectral, plugins, shape, grid),
        Rule::Plateau => min_cn_plateau(spectral, plugins),
    }
}
