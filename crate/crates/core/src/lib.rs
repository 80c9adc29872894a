//! Price-curve recovery and functional regression for online auction bid histories.
//!
//! The pipeline turns irregular bid sequences into smooth log-price curves on a
//! common grid, fits penalized truncated-power splines to them (which gives
//! velocity and acceleration analytically), and regresses the curves on lot
//! covariates one grid point at a time.
//!
//! ```text
//! bids.csv + lots.csv
//!   -> auction_data   (parse, validate, covariates, outlier screen)
//!   -> curve_prep     (normalize time, log, resample, scale)
//!   -> pspline        (penalized fit, derivatives, sensitivity sweep)
//!   -> funcreg        (per-grid-point OLS, coefficient curves, bands)
//! ```
//!
//! `synthgen` produces synthetic auctions with known coefficient curves along
//! with brute-force oracles used for validation. `report` and `cli` hold the
//! command-line front end.

pub mod auction_data;
pub mod cli;
pub mod curve_prep;
pub mod funcreg;
mod linalg;
pub mod pipeline;
pub mod pspline;
pub mod report;
pub mod synthgen;

pub use auction_data::{
    build_covariates, filter_outliers, parse_bid_history, parse_lot_catalog, ArtistType,
    BidHistory, BidRecord, CovariateOptions, CovariateVector, DataError, Lot, Medium, Money,
    Timestamp,
};
pub use curve_prep::{
    prepare_response, Grid, InterpolationSpace, PrepError, PrepOptions, ResponseKind,
    ResponseVector,
};
pub use funcreg::{
    coefficient_curves, CoefficientCurve, CurveSamples, RegressionError, RegressionUnit,
    ResponseComponent,
};
pub use pspline::{PriceCurve, SplineConfig, SplineError, SplineFit, SplineSmoother};

/// Tool version string embedded in report headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
