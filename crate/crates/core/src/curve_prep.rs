//! Raw bids to grid-sampled response vectors.
//!
//! The canonical order is normalize time, log, resample, then optionally
//! divide by the terminal value. [`InterpolationSpace::Raw`] swaps the middle
//! two steps (resample raw amounts, then log).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auction_data::{BidRecord, Timestamp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrepError {
    #[error("grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error("auction window is empty or inverted")]
    InvalidWindow,
    #[error("bid at {0} ms lies outside the auction window")]
    OutsideWindow(i64),
    #[error("cannot take the log of non-positive value {0}")]
    NonPositive(f64),
    #[error("no observations to resample")]
    EmptyInput,
    #[error("non-finite value in curve")]
    NonFinite,
    #[error("terminal value {0} cannot be used to scale a curve")]
    BadFinal(f64),
}

/// Evenly spaced points on [0, 1], both endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn uniform(n: usize) -> Result<Self, PrepError> {
        if n < 2 {
            return Err(PrepError::GridTooSmall(n));
        }
        let last = (n - 1) as f64;
        Ok(Grid {
            points: (0..n).map(|i| i as f64 / last).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::uniform(100).expect("100 >= 2")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ResponseKind {
    LogPrice,
    /// Log curve divided by its terminal value.
    #[default]
    FractionOfFinal,
}

impl ResponseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ResponseKind::LogPrice => "logprice",
            ResponseKind::FractionOfFinal => "fraction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InterpolationSpace {
    /// Log the bids, then interpolate.
    #[default]
    Log,
    /// Interpolate raw amounts, then log.
    Raw,
}

impl InterpolationSpace {
    pub fn as_str(self) -> &'static str {
        match self {
            InterpolationSpace::Log => "log",
            InterpolationSpace::Raw => "raw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PrepOptions {
    pub response: ResponseKind,
    pub interpolation: InterpolationSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseVector {
    pub lot_id: String,
    pub values: Vec<f64>,
    pub response_kind: ResponseKind,
    pub final_log_price: f64,
}

/// Maps bid timestamps onto [0, 1]; amounts come back in major units.
pub fn normalize_times(
    bids: &[BidRecord],
    open: Timestamp,
    close: Timestamp,
) -> Result<Vec<(f64, f64)>, PrepError> {
    if open >= close {
        return Err(PrepError::InvalidWindow);
    }
    let span = (close.millis() - open.millis()) as f64;
    bids.iter()
        .map(|b| {
            if b.timestamp < open || b.timestamp > close {
                return Err(PrepError::OutsideWindow(b.timestamp.millis()));
            }
            let t = (b.timestamp.millis() - open.millis()) as f64 / span;
            Ok((t, b.amount.major()))
        })
        .collect()
}

pub fn log_transform(amounts: &[f64]) -> Result<Vec<f64>, PrepError> {
    amounts
        .iter()
        .map(|&a| {
            if a > 0.0 && a.is_finite() {
                Ok(a.ln())
            } else {
                Err(PrepError::NonPositive(a))
            }
        })
        .collect()
}

/// Piecewise-linear interpolation of sorted `(t, v)` pairs onto the grid,
/// held constant before the first and after the last observation.
///
/// At tied times the last pair of the tie wins to the right of it.
pub fn resample_to_grid(pairs: &[(f64, f64)], grid: &Grid) -> Result<Vec<f64>, PrepError> {
    if pairs.is_empty() {
        return Err(PrepError::EmptyInput);
    }
    if pairs.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
        return Err(PrepError::NonFinite);
    }
    let first = pairs[0];
    let last = pairs[pairs.len() - 1];
    Ok(grid
        .points()
        .iter()
        .map(|&x| {
            // number of pairs with t <= x
            let k = pairs.partition_point(|&(t, _)| t <= x);
            if k == 0 {
                first.1
            } else if k == pairs.len() {
                last.1
            } else {
                let (t0, v0) = pairs[k - 1];
                let (t1, v1) = pairs[k];
                let w = (x - t0) / (t1 - t0);
                v0 + w * (v1 - v0)
            }
        })
        .collect())
}

pub fn scale_to_fraction(curve: &[f64], final_value: f64) -> Result<Vec<f64>, PrepError> {
    if !(final_value.is_finite() && final_value > 0.0) {
        return Err(PrepError::BadFinal(final_value));
    }
    if curve.iter().any(|v| !v.is_finite()) {
        return Err(PrepError::NonFinite);
    }
    Ok(curve.iter().map(|v| v / final_value).collect())
}

/// Runs the full preparation pipeline for one lot's sorted bids.
pub fn prepare_response(
    lot_id: &str,
    bids: &[BidRecord],
    open: Timestamp,
    close: Timestamp,
    grid: &Grid,
    options: &PrepOptions,
) -> Result<ResponseVector, PrepError> {
    let pairs = normalize_times(bids, open, close)?;
    if pairs.is_empty() {
        return Err(PrepError::EmptyInput);
    }
    let (times, amounts): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let log_curve = match options.interpolation {
        InterpolationSpace::Log => {
            let logs = log_transform(&amounts)?;
            let pairs: Vec<(f64, f64)> = times.into_iter().zip(logs).collect();
            resample_to_grid(&pairs, grid)?
        }
        InterpolationSpace::Raw => {
            let pairs: Vec<(f64, f64)> = times.into_iter().zip(amounts).collect();
            log_transform(&resample_to_grid(&pairs, grid)?)?
        }
    };
    let final_log_price = *log_curve.last().expect("grid has >= 2 points");
    let values = match options.response {
        ResponseKind::LogPrice => log_curve,
        ResponseKind::FractionOfFinal => scale_to_fraction(&log_curve, final_log_price)?,
    };
    Ok(ResponseVector {
        lot_id: lot_id.to_string(),
        values,
        response_kind: options.response,
        final_log_price,
    })
}
