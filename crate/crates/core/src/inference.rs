//! Pairs bootstrap for the coefficients and goodness of fit of a fixed
//! penalty.
//!
//! Replicate `r` resamples the raw rows with replacement using the ChaCha8
//! stream `r` of the configured seed, re-standardizes, re-decomposes and
//! re-estimates with the same penalty values. Replicates are independent, so
//! they can be evaluated in any order (or concurrently) and handed to
//! [`Bootstrap::summarize`].

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DVector;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{standardize, RawDataset};
use crate::error::{Error, Result};
use crate::estimator::{gof, gr_coefficients};
use crate::spectral::{eigendecompose, PenaltyMatrix};

pub const MIN_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    pub level: f64,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64, level: f64) -> Result<Self> {
        if replicates < MIN_REPLICATES {
            return Err(Error::InvalidBootstrap(alloc::format!(
                "{replicates} replicates requested, at least {MIN_REPLICATES} are required"
            )));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidBootstrap(alloc::format!("level {level} must lie in (0, 1)")));
        }
        Ok(Self { replicates, seed, level })
    }

    /// Redraws allowed over the whole run.
    pub fn redraw_budget(&self) -> usize {
        10 * self.replicates
    }
}

impl Default for BootstrapConfig {
    /// 1000 replicates, seed 0, 95% intervals.
    fn default() -> Self {
        Self { replicates: 1000, seed: 0, level: 0.95 }
    }
}

/// Estimates from one resampled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub coefficients: DVector<f64>,
    pub gof: f64,
    /// Resamples discarded (constant column or singular design) before this
    /// one succeeded.
    pub redraws: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapReport {
    pub level: f64,
    pub replicates: usize,
    pub seed: u64,
    pub names: Vec<String>,
    /// Full-sample estimates.
    pub estimates: DVector<f64>,
    pub intervals: Vec<(f64, f64)>,
    pub gof_interval: (f64, f64),
    pub redraws: usize,
    pub k_used: PenaltyMatrix,
}

#[derive(Debug, Clone)]
pub struct Bootstrap<'a> {
    raw: &'a RawDataset,
    penalty: PenaltyMatrix,
    config: BootstrapConfig,
}

impl<'a> Bootstrap<'a> {
    pub fn new(raw: &'a RawDataset, penalty: PenaltyMatrix, config: BootstrapConfig) -> Result<Self> {
        let m = raw.p() - 1;
        if penalty.m() != m {
            return Err(Error::DimensionMismatch { expected: m, found: penalty.m() });
        }
        Ok(Self { raw, penalty, config })
    }

    pub fn config(&self) -> &BootstrapConfig {
        &self.config
    }

    /// Estimates on the full sample.
    pub fn point_estimate(&self) -> Result<(DVector<f64>, f64)> {
        let cross = standardize(self.raw)?.cross_products();
        let spectral = eigendecompose(&cross.gram)?;
        let beta = gr_coefficients(&cross, &spectral, &self.penalty)?;
        let fit = gof(&cross, &spectral, &self.penalty, &beta)?;
        Ok((beta, fit))
    }

    /// Replicate `r`, a pure function of `(seed, r)` and the data.
    pub fn replicate(&self, r: usize) -> Result<Replicate> {
        let n = self.raw.n_obs();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(r as u64);
        let budget = self.config.redraw_budget();
        let mut rows = alloc::vec![0usize; n];
        for redraws in 0..=budget {
            for row in rows.iter_mut() {
                *row = rng.gen_range(0..n);
            }
            let sample = self.raw.with_rows(&rows);
            let cross = match standardize(&sample) {
                Ok(model) => model.cross_products(),
                Err(Error::DegenerateColumn(_)) => continue,
                Err(e) => return Err(e),
            };
            let spectral = match eigendecompose(&cross.gram) {
                Ok(s) => s,
                Err(Error::RankDeficient(_)) => continue,
                Err(e) => return Err(e),
            };
            let coefficients = gr_coefficients(&cross, &spectral, &self.penalty)?;
            let fit = gof(&cross, &spectral, &self.penalty, &coefficients)?;
            return Ok(Replicate { coefficients, gof: fit, redraws });
        }
        Err(Error::BootstrapExhausted(budget))
    }

    /// Percentile intervals from exactly `replicates` replicates, given in
    /// replicate order.
    pub fn summarize(&self, replicates: &[Replicate]) -> Result<BootstrapReport> {
        let b = self.config.replicates;
        if replicates.len() != b {
            return Err(Error::InvalidBootstrap(alloc::format!("expected {b} replicates, got {}", replicates.len())));
        }
        let redraws: usize = replicates.iter().map(|r| r.redraws).sum();
        if redraws > self.config.redraw_budget() {
            return Err(Error::BootstrapExhausted(self.config.redraw_budget()));
        }
        let tail = (1.0 - self.config.level) / 2.0;
        let interval = |mut values: Vec<f64>| {
            values.sort_by(f64::total_cmp);
            (quantile(&values, tail), quantile(&values, 1.0 - tail))
        };
        let m = self.penalty.m();
        let intervals = (0..m).map(|j| interval(replicates.iter().map(|r| r.coefficients[j]).collect())).collect();
        let gof_interval = interval(replicates.iter().map(|r| r.gof).collect());
        let (estimates, _) = self.point_estimate()?;
        Ok(BootstrapReport {
            level: self.config.level,
            replicates: b,
            seed: self.config.seed,
            names: self.raw.regressor_names(),
            estimates,
            intervals,
            gof_interval,
            redraws,
            k_used: self.penalty.clone(),
        })
    }

    /// Sequential run over all replicates.
    pub fn run(&self) -> Result<BootstrapReport> {
        let replicates = (0..self.config.replicates).map(|r| self.replicate(r)).collect::<Result<Vec<_>>>()?;
        self.summarize(&replicates)
    }
}

/// Linear-interpolation quantile of sorted data (the usual "type 7").
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn bootstrap(raw: &RawDataset, penalty: PenaltyMatrix, config: BootstrapConfig) -> Result<BootstrapReport> {
    Bootstrap::new(raw, penalty, config)?.run()
}
