//! Multi-threaded drivers for the bootstrap and for grid traces.

use gridge_core::dataset::RawDataset;
use gridge_core::diagnostics::diagnose;
use gridge_core::estimator::{gof, gr_coefficients, scalar_mse};
use gridge_core::inference::{Bootstrap, BootstrapConfig, BootstrapReport};
use gridge_core::selection::{GridSpec, PenaltyShape};
use gridge_core::spectral::PenaltyMatrix;
use rayon::prelude::*;

use crate::error::Result;
use crate::model::Analysis;
use crate::report::Table;

/// Same output as [`Bootstrap::run`], with replicates spread over the rayon
/// pool.
pub fn bootstrap(raw: &RawDataset, penalty: PenaltyMatrix, config: BootstrapConfig) -> Result<BootstrapReport> {
    let boot = Bootstrap::new(raw, penalty, config)?;
    let replicates =
        (0..config.replicates).into_par_iter().map(|r| boot.replicate(r)).collect::<gridge_core::Result<Vec<_>>>()?;
    Ok(boot.summarize(&replicates)?)
}

/// One row per grid point: `k, cn, mse, gof, det`, the upper-triangle
/// augmented correlations `corr_i_j`, then `vif_l` and `cv_l` (1-based).
pub fn trace(analysis: &Analysis, shape: PenaltyShape, grid: &GridSpec) -> Result<Table> {
    let m = analysis.m();
    let mut columns: Vec<String> = ["k", "cn", "mse", "gof", "det"].iter().map(|s| s.to_string()).collect();
    for i in 0..m {
        for j in i + 1..m {
            columns.push(format!("corr_{}_{}", i + 1, j + 1));
        }
    }
    columns.extend((1..=m).map(|l| format!("vif_{l}")));
    columns.extend((1..=m).map(|l| format!("cv_{l}")));
    let rows = (0..grid.len())
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let k = grid.point(i);
            let penalty = shape.penalty(m, k)?;
            let d = diagnose(&analysis.cross, &analysis.spectral, &penalty)?;
            let beta = gr_coefficients(&analysis.cross, &analysis.spectral, &penalty)?;
            let mut row = vec![
                k,
                d.cn,
                scalar_mse(&analysis.spectral, &penalty, &analysis.plugins)?,
                gof(&analysis.cross, &analysis.spectral, &penalty, &beta)?,
                d.corr_det,
            ];
            for a in 0..m {
                for b in a + 1..m {
                    row.push(d.corr[(a, b)]);
                }
            }
            row.extend(&d.vif);
            row.extend(d.cv.iter().map(|c| c.value()));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { columns, rows })
}
