//! Bid histories, lot catalogs, covariates and the outlier screen.

mod bids;
mod catalog;
mod covariates;
mod outliers;
mod summary;
mod types;

use std::path::PathBuf;

use thiserror::Error;

pub use bids::{parse_bid_history, parse_bids_from_reader, write_bids, BidHistory};
pub use catalog::{parse_lot_catalog, parse_lots_from_reader, write_lot_catalog, LOTS_HEADER};
pub use covariates::{
    build_covariates, CovariateOptions, CovariateVector, PrevPriceTransform, COVARIATE_NAMES,
};
pub use outliers::{filter_outliers, OutlierReport};
pub use summary::{summarize, Summary};
pub use types::{
    ArtistType, BidRecord, Lot, Medium, Money, ParseMoneyError, TimeFormat, Timestamp,
};

/// Header of `bids.csv`.
pub const BIDS_HEADER: [&str; 4] = ["lot_id", "bidder_id", "timestamp", "amount"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed row: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("line {line}: expected header {expected:?}, found {found:?}")]
    BadHeader {
        line: u64,
        expected: String,
        found: String,
    },
    #[error("line {line}: bid amount {amount} for lot {lot_id} is not positive")]
    NonPositiveAmount {
        line: u64,
        lot_id: String,
        amount: Money,
    },
    #[error("line {line}: timestamp {timestamp} for lot {lot_id} is outside the auction window")]
    OutsideWindow {
        line: u64,
        lot_id: String,
        timestamp: String,
    },
    #[error("line {line}: duplicate bid by {bidder_id} on lot {lot_id} at {timestamp}")]
    DuplicateBid {
        line: u64,
        lot_id: String,
        bidder_id: String,
        timestamp: String,
    },
    #[error("line {line}: bid on lot {lot_id} is lower than an earlier bid")]
    NotAscending { line: u64, lot_id: String },
    #[error("line {line}: lot {lot_id} is not in the catalog")]
    UnknownLot { line: u64, lot_id: String },
    #[error("line {line}: unknown {field} token {token:?}")]
    UnknownToken {
        line: u64,
        field: &'static str,
        token: String,
    },
    #[error("line {line}: lot {lot_id}: {reason}")]
    InvalidLot {
        line: u64,
        lot_id: String,
        reason: String,
    },
    #[error("line {line}: duplicate lot_id {lot_id}")]
    DuplicateLot { line: u64, lot_id: String },
    #[error(
        "lot {lot_id}: previous price per square inch is missing or zero; \
         enable the log1p transform to include it"
    )]
    MissingPrevPrice { lot_id: String },
    #[error("lot {lot_id}: {reason}")]
    Covariate { lot_id: String, reason: String },
    #[error("csv output error: {0}")]
    Write(String),
}

impl From<csv::Error> for DataError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        DataError::MalformedRow {
            line,
            message: e.to_string(),
        }
    }
}
