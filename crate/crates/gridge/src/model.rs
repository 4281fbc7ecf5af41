//! A loaded model with its decomposition and plug-ins, and the textual
//! penalty and rule specifications used on the command line.
//!
//! Regressor indices in specifications are 1-based and refer to the
//! eigenvalues in descending order, so `single:5:0.01` penalizes the fifth
//! largest eigenvalue.

use std::str::FromStr;

use gridge_core::dataset::{determinant, standardize, CrossProducts, RawDataset};
use gridge_core::diagnostics::{diagnose, DiagnosticsReport};
use gridge_core::estimator::{gr_estimate, ols, EstimateReport, OlsFit, Plugins};
use gridge_core::selection::{select, GridSpec, PenaltyShape, Rule, SelectionResult};
use gridge_core::spectral::{eigendecompose, PenaltyMatrix, SpectralDecomposition};
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Analysis {
    pub cross: CrossProducts,
    pub spectral: SpectralDecomposition,
    pub plugins: Plugins,
    /// `det(x^t x)`.
    pub correlation_det: f64,
    /// Present when the model came from raw observations.
    pub ols: Option<OlsFit>,
    pub raw: Option<RawDataset>,
}

impl Analysis {
    /// Standardizes `raw` and uses its OLS fit as plug-ins.
    pub fn from_raw(raw: RawDataset) -> Result<Self> {
        let cross = standardize(&raw)?.cross_products();
        let spectral = eigendecompose(&cross.gram)?;
        let fit = ols(&cross, &spectral)?;
        Ok(Self {
            correlation_det: determinant(&cross.gram)?,
            plugins: fit.plugins(),
            cross,
            spectral,
            ols: Some(fit),
            raw: Some(raw),
        })
    }

    /// Works from published summaries: the regressor correlation matrix, the
    /// OLS coefficients and residual variance of the standardized model, and
    /// the sample size.
    pub fn from_correlation(
        names: Vec<String>,
        correlation: DMatrix<f64>,
        beta: DVector<f64>,
        sigma2: f64,
        n: usize,
    ) -> Result<Self> {
        let cross = CrossProducts::from_correlation(correlation, &beta, n, names)?;
        let spectral = eigendecompose(&cross.gram)?;
        Ok(Self {
            correlation_det: determinant(&cross.gram)?,
            plugins: Plugins::new(sigma2, beta)?,
            cross,
            spectral,
            ols: None,
            raw: None,
        })
    }

    pub fn m(&self) -> usize {
        self.cross.m()
    }

    pub fn names(&self) -> &[String] {
        &self.cross.names
    }

    pub fn penalty(&self, spec: &PenaltySpec, grid: &GridSpec) -> Result<PenaltyMatrix> {
        let m = self.m();
        let check = |l: usize| {
            if l < m {
                Ok(l)
            } else {
                Err(Error::Core(gridge_core::Error::PenaltyIndexOutOfRange { index: l, m }))
            }
        };
        Ok(match spec {
            PenaltySpec::Zero => PenaltyMatrix::zero(m),
            PenaltySpec::Uniform(k) => PenaltyMatrix::uniform(m, *k)?,
            PenaltySpec::Single { index, k } => PenaltyMatrix::single(m, check(*index)?, *k)?,
            PenaltySpec::General(values) => {
                if values.len() != m {
                    return Err(Error::Usage(format!(
                        "general penalty has {} entries for {m} regressors",
                        values.len()
                    )));
                }
                PenaltyMatrix::general(values.clone())?
            }
            PenaltySpec::Rule(rule) => {
                if let Rule::MinMse(PenaltyShape::Single(l)) = rule {
                    check(*l)?;
                }
                self.select(*rule, grid)?
                    .k
                    .ok_or_else(|| Error::Usage(format!("rule `{rule}` found no penalty on the grid")))?
            }
        })
    }

    pub fn estimate(&self, penalty: &PenaltyMatrix) -> Result<EstimateReport> {
        Ok(gr_estimate(&self.cross, &self.spectral, penalty, &self.plugins)?)
    }

    pub fn diagnose(&self, penalty: &PenaltyMatrix) -> Result<DiagnosticsReport> {
        Ok(diagnose(&self.cross, &self.spectral, penalty)?)
    }

    pub fn select(&self, rule: Rule, grid: &GridSpec) -> Result<SelectionResult> {
        Ok(select(rule, &self.spectral, &self.plugins, grid)?)
    }
}

/// Two-sided p-values of t statistics with `df` degrees of freedom.
pub fn p_values(t: &DVector<f64>, df: usize) -> Result<Vec<f64>> {
    let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::Report(e.to_string()))?;
    Ok(t.iter().map(|v| if v.is_finite() { 2.0 * dist.sf(v.abs()) } else { 0.0 }).collect())
}

fn parse_number(text: &str) -> Result<f64> {
    text.trim().parse().map_err(|_| Error::Usage(format!("cannot parse `{text}` as a number")))
}

fn parse_index(text: &str) -> Result<usize> {
    match text.trim().parse::<usize>() {
        Ok(l) if l >= 1 => Ok(l - 1),
        _ => Err(Error::Usage(format!("`{text}` is not a 1-based regressor index"))),
    }
}

/// `uniform` or `single:L`.
pub fn parse_shape(text: &str) -> Result<PenaltyShape> {
    match text.split_once(':') {
        None if text == "uniform" => Ok(PenaltyShape::Uniform),
        Some(("single", l)) => Ok(PenaltyShape::Single(parse_index(l)?)),
        _ => Err(Error::Usage(format!("unknown penalty kind `{text}` (expected uniform or single:L)"))),
    }
}

/// `lower:upper:step`.
pub fn parse_grid(text: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lower, upper, step] = parts[..] else {
        return Err(Error::Usage(format!("grid `{text}` must look like lower:upper:step")));
    };
    Ok(GridSpec::new(parse_number(lower)?, parse_number(upper)?, parse_number(step)?)?)
}

/// Penalty given either explicitly or through a selection rule.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltySpec {
    Zero,
    Uniform(f64),
    /// 0-based index.
    Single {
        index: usize,
        k: f64,
    },
    General(Vec<f64>),
    Rule(Rule),
}

impl FromStr for PenaltySpec {
    type Err = Error;

    /// `zero`, `uniform:K`, `single:L:K`, `general:K1,…,Km`, `hkb`, `hk`,
    /// `min-uniform`, `min-single:L` or `plateau`.
    fn from_str(text: &str) -> Result<Self> {
        let mut parts = text.splitn(3, ':');
        let head = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let spec = match (head, rest.as_slice()) {
            ("zero", []) => Self::Zero,
            ("uniform", [k]) => Self::Uniform(parse_number(k)?),
            ("single", [l, k]) => Self::Single { index: parse_index(l)?, k: parse_number(k)? },
            ("general", [values]) => Self::General(crate::io::parse_list(values)?),
            ("hkb", []) => Self::Rule(Rule::Hkb),
            ("hk", []) => Self::Rule(Rule::Hk),
            ("min-uniform", []) => Self::Rule(Rule::MinMse(PenaltyShape::Uniform)),
            ("min-single", [l]) => Self::Rule(Rule::MinMse(PenaltyShape::Single(parse_index(l)?))),
            ("plateau", []) => Self::Rule(Rule::Plateau),
            _ => return Err(Error::Usage(format!("unknown penalty `{text}`"))),
        };
        Ok(spec)
    }
}

/// A rule name for `select`; `kind` and `threshold` complete the searches.
pub fn parse_rule(text: &str, kind: PenaltyShape, threshold: f64) -> Result<Rule> {
    Ok(match text {
        "hkb" => Rule::Hkb,
        "hk" => Rule::Hk,
        "min-uniform" => Rule::MinMse(PenaltyShape::Uniform),
        "min" => Rule::MinMse(kind),
        "cn-threshold" => Rule::CnThreshold { shape: kind, threshold },
        "mse-crossing" => Rule::MseCrossing(kind),
        "plateau" => Rule::Plateau,
        _ => match text.split_once(':') {
            Some(("min-single", l)) => Rule::MinMse(PenaltyShape::Single(parse_index(l)?)),
            _ => return Err(Error::Usage(format!("unknown rule `{text}`"))),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_specs() {
        assert_eq!("zero".parse::<PenaltySpec>().unwrap(), PenaltySpec::Zero);
        assert_eq!("uniform:0.01".parse::<PenaltySpec>().unwrap(), PenaltySpec::Uniform(0.01));
        assert_eq!("single:3:100".parse::<PenaltySpec>().unwrap(), PenaltySpec::Single { index: 2, k: 100.0 });
        assert_eq!("general:0,1,2".parse::<PenaltySpec>().unwrap(), PenaltySpec::General(vec![0.0, 1.0, 2.0]));
        assert_eq!(
            "min-single:5".parse::<PenaltySpec>().unwrap(),
            PenaltySpec::Rule(Rule::MinMse(PenaltyShape::Single(4)))
        );
        for bad in ["single:0:1", "uniform", "uniform:x", "ridge", "single:2"] {
            assert!(bad.parse::<PenaltySpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn shapes_grids_rules() {
        assert_eq!(parse_shape("single:3").unwrap(), PenaltyShape::Single(2));
        assert!(parse_shape("single").is_err());
        let g = parse_grid("0:0.03:1e-5").unwrap();
        assert_eq!(g.len(), 3001);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert_eq!(
            parse_rule("cn-threshold", PenaltyShape::Uniform, 20.0).unwrap(),
            Rule::CnThreshold { shape: PenaltyShape::Uniform, threshold: 20.0 }
        );
        assert!(parse_rule("best", PenaltyShape::Uniform, 20.0).is_err());
    }

    #[test]
    fn longley_p_values() {
        let a = Analysis::from_raw(gridge_core::datasets::longley()).unwrap();
        let fit = a.ols.as_ref().unwrap();
        let p = p_values(&fit.t_statistics, fit.df).unwrap();
        // two-sided Student t tail probabilities, df = 11
        let want =
            [0.708051833997352, 0.03651803340094728, 0.3548478168798518, 0.06263551585177461, 0.2264030873160116];
        for (got, want) in p.iter().zip(want) {
            assert!((got - want).abs() < 1e-10);
        }
    }
}
