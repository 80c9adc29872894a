use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::types::{ArtistType, BidRecord, Lot, Medium};
use super::DataError;
use crate::curve_prep::{normalize_times, Grid};

/// Regressor names in design-matrix order (after the intercept).
pub const COVARIATE_NAMES: [&str; 8] = [
    "prev_price",
    "established",
    "emerging",
    "opening_bid",
    "position",
    "area",
    "canvas",
    "bidders",
];

/// How the prior-year price per square inch enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PrevPriceTransform {
    /// `log(x)`; missing or zero history is an error.
    #[default]
    Log,
    /// `log(1 + x)`; missing history is taken as zero.
    Log1p,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovariateOptions {
    pub prev_price: PrevPriceTransform,
}

/// Static regressors x1..x7 plus the dynamic bidder count x8 on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateVector {
    /// x1..x7 in order.
    pub fixed: [f64; 7],
    /// x8: log of cumulative unique bidders, floored at one.
    pub bidders: Vec<f64>,
    /// Log of cumulative bid count, floored at one. Exported but not a
    /// default regressor (it is nearly collinear with `bidders`).
    pub bid_count: Vec<f64>,
}

impl CovariateVector {
    pub fn prev_price(&self) -> f64 {
        self.fixed[0]
    }
    pub fn established(&self) -> f64 {
        self.fixed[1]
    }
    pub fn emerging(&self) -> f64 {
        self.fixed[2]
    }
    pub fn opening_bid(&self) -> f64 {
        self.fixed[3]
    }
    pub fn position(&self) -> f64 {
        self.fixed[4]
    }
    pub fn area(&self) -> f64 {
        self.fixed[5]
    }
    pub fn canvas(&self) -> f64 {
        self.fixed[6]
    }

    /// x1..x8 at grid index `i` (zero-based).
    pub fn row_at(&self, i: usize) -> [f64; 8] {
        let mut row = [0.0; 8];
        row[..7].copy_from_slice(&self.fixed);
        row[7] = self.bidders[i];
        row
    }
}

/// Builds x1..x8 for one lot. `bids` must be this lot's bids, sorted.
pub fn build_covariates(
    lot: &Lot,
    bids: &[BidRecord],
    grid: &Grid,
    options: &CovariateOptions,
) -> Result<CovariateVector, DataError> {
    let prev = lot.prev_price_per_sqin.map(|m| m.major()).unwrap_or(0.0);
    let x1 = match options.prev_price {
        PrevPriceTransform::Log => {
            if prev <= 0.0 {
                return Err(DataError::MissingPrevPrice {
                    lot_id: lot.lot_id.clone(),
                });
            }
            prev.ln()
        }
        PrevPriceTransform::Log1p => prev.ln_1p(),
    };
    let (x2, x3) = match lot.artist_type {
        ArtistType::Established => (1.0, 0.0),
        ArtistType::Emerging => (0.0, 1.0),
        ArtistType::Other => (0.0, 0.0),
    };
    let x4 = lot.opening_bid.major().ln();
    let x5 = f64::from(lot.position_group).ln();
    let x6 = lot.area_sqin().ln();
    let x7 = match lot.medium {
        Medium::Canvas => 1.0,
        Medium::Paper => 0.0,
    };

    let times = normalize_times(bids, lot.auction_open, lot.auction_close).map_err(|e| {
        DataError::Covariate {
            lot_id: lot.lot_id.clone(),
            reason: e.to_string(),
        }
    })?;

    let mut bidders = Vec::with_capacity(grid.len());
    let mut bid_count = Vec::with_capacity(grid.len());
    let mut seen: HashSet<&str> = HashSet::new();
    let mut next = 0;
    for &t in grid.points() {
        while next < bids.len() && times[next].0 <= t {
            seen.insert(bids[next].bidder_id.as_str());
            next += 1;
        }
        bidders.push((seen.len().max(1) as f64).ln());
        bid_count.push((next.max(1) as f64).ln());
    }

    Ok(CovariateVector {
        fixed: [x1, x2, x3, x4, x5, x6, x7],
        bidders,
        bid_count,
    })
}
