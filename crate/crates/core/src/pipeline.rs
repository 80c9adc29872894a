//! Lot-level orchestration shared by the command line and tests: bids to
//! smoothed curves, curves plus catalog to regression units.

use rayon::prelude::*;

use crate::auction_data::{build_covariates, BidHistory, CovariateOptions, DataError, Lot};
use crate::curve_prep::{prepare_response, Grid, PrepOptions};
use crate::funcreg::{CurveSamples, RegressionUnit};
use crate::pspline::{
    fit_monotone, MonotoneOptions, PriceCurve, SplineConfig, SplineError, SplineSmoother,
};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalysisOptions {
    pub grid: Grid,
    pub prep: PrepOptions,
    pub spline: SplineConfig,
    pub monotone: bool,
    pub covariates: CovariateOptions,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LotFailure {
    pub lot_id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct SmoothOutput {
    /// In catalog order.
    pub curves: Vec<PriceCurve>,
    pub failures: Vec<LotFailure>,
    /// Catalog lots without any bids.
    pub skipped: Vec<String>,
}

/// Smooths every catalog lot that has bids. Lots fail individually; the
/// shared smoother is built once and errors there abort the run.
pub fn smooth_lots(
    lots: &[Lot],
    bids: &BidHistory,
    opts: &AnalysisOptions,
) -> Result<SmoothOutput, SplineError> {
    let smoother = SplineSmoother::new(&opts.grid, &opts.spline)?;
    let mono = MonotoneOptions::default();

    let results: Vec<Option<Result<PriceCurve, LotFailure>>> = lots
        .par_iter()
        .map(|lot| {
            let lot_bids = bids.lot(&lot.lot_id);
            if lot_bids.is_empty() {
                return None;
            }
            let fail = |reason: String| LotFailure {
                lot_id: lot.lot_id.clone(),
                reason,
            };
            let response = prepare_response(
                &lot.lot_id,
                lot_bids,
                lot.auction_open,
                lot.auction_close,
                &opts.grid,
                &opts.prep,
            )
            .map_err(|e| fail(e.to_string()));
            let fitted = response.and_then(|r| {
                let fit = if opts.monotone {
                    fit_monotone(&smoother, &r.values, &mono)
                } else {
                    smoother.fit(&r.values)
                };
                fit.map_err(|e| fail(e.to_string()))
            });
            Some(fitted.map(|fit| PriceCurve::new(&lot.lot_id, fit, &opts.grid)))
        })
        .collect();

    let mut out = SmoothOutput {
        curves: Vec::new(),
        failures: Vec::new(),
        skipped: Vec::new(),
    };
    for (lot, r) in lots.iter().zip(results) {
        match r {
            None => {
                log::warn!("lot {} has no bids; skipped", lot.lot_id);
                out.skipped.push(lot.lot_id.clone());
            }
            Some(Ok(c)) => out.curves.push(c),
            Some(Err(f)) => {
                log::warn!("lot {} could not be smoothed: {}", f.lot_id, f.reason);
                out.failures.push(f);
            }
        }
    }
    Ok(out)
}

/// Pairs curves with their lots' covariates, keeping the order of `curves`.
pub fn regression_units(
    lots: &[Lot],
    bids: &BidHistory,
    curves: &[CurveSamples],
    opts: &AnalysisOptions,
) -> Result<Vec<RegressionUnit>, DataError> {
    curves
        .iter()
        .map(|c| {
            let lot =
                lots.iter()
                    .find(|l| l.lot_id == c.lot_id)
                    .ok_or_else(|| DataError::Covariate {
                        lot_id: c.lot_id.clone(),
                        reason: "curve has no matching catalog lot".into(),
                    })?;
            if c.len() != opts.grid.len() {
                return Err(DataError::Covariate {
                    lot_id: c.lot_id.clone(),
                    reason: format!(
                        "curve has {} grid points but the grid has {}",
                        c.len(),
                        opts.grid.len()
                    ),
                });
            }
            let covariates =
                build_covariates(lot, bids.lot(&lot.lot_id), &opts.grid, &opts.covariates)?;
            Ok(RegressionUnit {
                lot_id: c.lot_id.clone(),
                covariates,
                curve: c.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{gen_dataset, TruthSpec};

    #[test]
    fn smooths_every_synthetic_lot() {
        let ds = gen_dataset(&TruthSpec {
            n_lots: 15,
            ..TruthSpec::default()
        })
        .unwrap();
        let out = smooth_lots(&ds.lots, &ds.bids, &AnalysisOptions::default()).unwrap();
        assert_eq!(out.curves.len(), 15);
        assert!(out.failures.is_empty() && out.skipped.is_empty());
        let ids: Vec<&str> = out.curves.iter().map(|c| c.lot_id.as_str()).collect();
        let expected: Vec<&str> = ds.lots.iter().map(|l| l.lot_id.as_str()).collect();
        assert_eq!(ids, expected);

        let samples: Vec<CurveSamples> = out.curves.iter().map(CurveSamples::from).collect();
        let units =
            regression_units(&ds.lots, &ds.bids, &samples, &AnalysisOptions::default()).unwrap();
        assert_eq!(units.len(), 15);
        assert_eq!(units[3].covariates.bidders.len(), 100);
    }

    #[test]
    fn lots_without_bids_are_skipped() {
        let ds = gen_dataset(&TruthSpec {
            n_lots: 12,
            ..TruthSpec::default()
        })
        .unwrap();
        let records: Vec<_> = ds
            .bids
            .iter()
            .filter(|(id, _)| *id != "3")
            .flat_map(|(_, b)| b.to_vec())
            .collect();
        let bids = BidHistory::from_records(records, ds.bids.time_format());
        let out = smooth_lots(&ds.lots, &bids, &AnalysisOptions::default()).unwrap();
        assert_eq!(out.skipped, vec!["3".to_string()]);
        assert_eq!(out.curves.len(), 11);
    }
}
