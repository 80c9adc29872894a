use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::{
    draw_arrivals, draw_catalog, fixed_row, lot_rng, CatalogMoments, SynthError, TruthSpec,
};
use crate::auction_data::CovariateVector;
use crate::curve_prep::Grid;
use crate::funcreg::{
    coefficient_curves, column_names, CurveSamples, RegressionUnit, ResponseComponent,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub covariate: String,
    pub covered: usize,
    pub cells: usize,
    pub coverage: f64,
    /// Monte Carlo standard error from the spread of per-replicate coverage.
    pub mc_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub reps: usize,
    pub alpha: f64,
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn row(&self, covariate: &str) -> Option<&CoverageRow> {
        self.rows.iter().find(|r| r.covariate == covariate)
    }
}

/// Simulates `reps` datasets whose responses are exactly `x(t)ᵀβ(t)` plus
/// independent `N(0, noise_sd²)` errors at each grid point, runs the pointwise
/// regression and counts how often each band contains the true coefficient.
/// Grid points where a column was dropped are not counted for it.
pub fn coverage_experiment(
    spec: &TruthSpec,
    reps: usize,
    alpha: f64,
    grid: &Grid,
) -> Result<CoverageReport, SynthError> {
    spec.validate()?;
    if reps < 100 {
        return Err(SynthError::InvalidSpec(format!(
            "coverage needs at least 100 replicates, got {reps}"
        )));
    }
    let names = column_names();
    let truth: Vec<Vec<f64>> = grid.points().iter().map(|&t| spec.beta_at(t)).collect();

    let per_rep: Vec<Vec<(usize, usize)>> = (0..reps)
        .into_par_iter()
        .map(|rep| one_replicate(spec, rep, alpha, grid, &truth))
        .collect::<Result<_, _>>()?;

    let rows = names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let covered: usize = per_rep.iter().map(|r| r[c].0).sum();
            let cells: usize = per_rep.iter().map(|r| r[c].1).sum();
            let fractions: Vec<f64> = per_rep
                .iter()
                .filter(|r| r[c].1 > 0)
                .map(|r| r[c].0 as f64 / r[c].1 as f64)
                .collect();
            let m = fractions.len() as f64;
            let mean = fractions.iter().sum::<f64>() / m;
            let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (m - 1.0);
            CoverageRow {
                covariate: name.to_string(),
                covered,
                cells,
                coverage: if cells > 0 {
                    covered as f64 / cells as f64
                } else {
                    f64::NAN
                },
                mc_se: (var / m).sqrt(),
            }
        })
        .collect();
    Ok(CoverageReport { reps, alpha, rows })
}

fn one_replicate(
    spec: &TruthSpec,
    rep: usize,
    alpha: f64,
    grid: &Grid,
    truth: &[Vec<f64>],
) -> Result<Vec<(usize, usize)>, SynthError> {
    let base = (rep as u64 + 1) << 32;
    let mut rng = lot_rng(spec.seed, base);
    let lots = draw_catalog(&mut rng, spec.n_lots, &CatalogMoments::default());
    let noise = Normal::new(0.0, spec.noise_sd).expect("validated sd");

    let mut units = Vec::with_capacity(lots.len());
    for (j, lot) in lots.iter().enumerate() {
        let mut lot_stream = lot_rng(spec.seed, base | (j as u64 + 1));
        let arrivals = draw_arrivals(&mut lot_stream, &spec.intensity, lot)?;
        let bidders = arrivals.bidder_covariate(lot, grid);
        let fixed = fixed_row(lot);
        let values: Vec<f64> = bidders
            .iter()
            .zip(truth)
            .map(|(x8, beta)| {
                let mean: f64 =
                    fixed.iter().zip(beta).map(|(x, b)| x * b).sum::<f64>() + beta[8] * x8;
                mean + noise.sample(&mut lot_stream)
            })
            .collect();
        let mut fixed7 = [0.0; 7];
        fixed7.copy_from_slice(&fixed[1..]);
        units.push(RegressionUnit {
            lot_id: lot.lot_id.clone(),
            covariates: CovariateVector {
                fixed: fixed7,
                bid_count: bidders.clone(),
                bidders,
            },
            curve: CurveSamples {
                lot_id: lot.lot_id.clone(),
                velocity: vec![0.0; values.len()],
                acceleration: vec![0.0; values.len()],
                values,
            },
        });
    }

    let result = coefficient_curves(&units, ResponseComponent::Level, alpha)
        .map_err(|e| SynthError::Coverage(format!("replicate {rep}: {e}")))?;
    Ok(result
        .curves
        .iter()
        .enumerate()
        .map(|(c, curve)| {
            let mut covered = 0;
            let mut cells = 0;
            for (i, beta) in truth.iter().enumerate() {
                let (lo, hi) = (curve.ci_lo[i], curve.ci_hi[i]);
                if lo.is_nan() || hi.is_nan() {
                    continue;
                }
                let tol = 1e-9 * (1.0 + beta[c].abs());
                cells += 1;
                if lo - tol <= beta[c] && beta[c] <= hi + tol {
                    covered += 1;
                }
            }
            (covered, cells)
        })
        .collect())
}
