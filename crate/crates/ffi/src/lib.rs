//! C ABI over `auctionfda`.
//!
//! Datasets, smoothed curves and regression results live behind opaque
//! handles that the caller frees with the matching `*_free` function. Every
//! fallible call returns an `AfdaStatus`; on failure
//! `afda_last_error` describes what went wrong on the calling thread.
//! Array results are copied into caller-provided buffers.
//!
//! Pointers passed in must be null or valid for the access the function
//! documents; handles must come from this library and not be used after
//! they are freed. Handles may be shared across threads for reading.

#![allow(clippy::missing_safety_doc)]

mod error;

use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;

use auctionfda::auction_data::PrevPriceTransform;
use auctionfda::funcreg::{column_names, RegressionResult};
use auctionfda::pipeline::{regression_units, smooth_lots, AnalysisOptions, SmoothOutput};
use auctionfda::pspline::{fit_monotone, MonotoneOptions, PriceCurve};
use auctionfda::synthgen::{gen_dataset, TruthSpec};
use auctionfda::{
    coefficient_curves, parse_bid_history, parse_lot_catalog, BidHistory, CurveSamples, Grid, Lot,
    ResponseComponent, ResponseKind, SplineConfig, SplineSmoother,
};

pub use error::AfdaStatus;
use error::{guard, FfiError};

/// Which transform of the bid path is smoothed.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfdaResponse {
    /// Log price divided by the final log price.
    Fraction = 0,
    LogPrice = 1,
}

/// A fitted curve or one of its derivatives.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfdaComponent {
    Level = 0,
    Velocity = 1,
    Acceleration = 2,
}

/// A row of a coefficient curve table.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfdaBandField {
    Beta = 0,
    StdError = 1,
    Lower = 2,
    Upper = 3,
}

/// Smoothing settings. Start from `afda_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfdaOptions {
    pub grid_points: usize,
    pub degree: usize,
    pub n_knots: usize,
    pub penalty_order: usize,
    pub lambda: f64,
    pub response: AfdaResponse,
    pub monotone: bool,
    /// Use `ln(1 + x)` for the prior price covariate instead of `ln(x)`.
    pub prev_price_log1p: bool,
}

/// Lot catalog plus bid histories.
pub struct AfdaDataset {
    lots: Vec<Lot>,
    bids: BidHistory,
}

/// Smoothed curves of the lots that could be fitted, in catalog order.
pub struct AfdaCurves {
    options: AnalysisOptions,
    curves: Vec<PriceCurve>,
    ids: Vec<CString>,
    failed: usize,
    skipped: usize,
}

/// Coefficient curves with pointwise confidence bands.
pub struct AfdaRegression {
    result: RegressionResult,
    names: Vec<CString>,
}

static VERSION: &CStr =
    match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains a nul byte"),
    };

impl From<AfdaComponent> for ResponseComponent {
    fn from(c: AfdaComponent) -> Self {
        match c {
            AfdaComponent::Level => ResponseComponent::Level,
            AfdaComponent::Velocity => ResponseComponent::Velocity,
            AfdaComponent::Acceleration => ResponseComponent::Acceleration,
        }
    }
}

impl AfdaOptions {
    fn to_analysis(self) -> Result<AnalysisOptions, FfiError> {
        let grid = Grid::uniform(self.grid_points)?;
        let spline = SplineConfig::new(self.degree, self.n_knots, self.penalty_order, self.lambda)?;
        let mut opts = AnalysisOptions {
            grid,
            spline,
            monotone: self.monotone,
            ..AnalysisOptions::default()
        };
        opts.prep.response = match self.response {
            AfdaResponse::Fraction => ResponseKind::FractionOfFinal,
            AfdaResponse::LogPrice => ResponseKind::LogPrice,
        };
        if self.prev_price_log1p {
            opts.covariates.prev_price = PrevPriceTransform::Log1p;
        }
        Ok(opts)
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, FfiError> {
    if p.is_null() {
        return Err(FfiError::null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| FfiError::new(AfdaStatus::InvalidArgument, format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, FfiError> {
    p.as_ref().ok_or_else(|| FfiError::null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), FfiError> {
    if out.is_null() {
        return Err(FfiError::null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), FfiError> {
    if buf.is_null() {
        return Err(FfiError::null("buffer"));
    }
    if len < src.len() {
        return Err(FfiError::new(
            AfdaStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

fn out_of_range(i: usize, n: usize) -> FfiError {
    FfiError::new(
        AfdaStatus::IndexOutOfRange,
        format!("index {i} out of range 0..{n}"),
    )
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn afda_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn afda_last_error() -> *const c_char {
    error::last_error_ptr()
}

/// Defaults: 100 grid points, degree 4, 10 knots, penalty order 2,
/// lambda 0.1, fraction-of-final response.
#[no_mangle]
pub extern "C" fn afda_options_default() -> AfdaOptions {
    AfdaOptions {
        grid_points: 100,
        degree: 4,
        n_knots: 10,
        penalty_order: 2,
        lambda: 0.1,
        response: AfdaResponse::Fraction,
        monotone: false,
        prev_price_log1p: false,
    }
}

/// Reads `lots.csv` and `bids.csv`. Paths are nul-terminated UTF-8.
#[no_mangle]
pub unsafe extern "C" fn afda_dataset_load(
    lots_path: *const c_char,
    bids_path: *const c_char,
    out: *mut *mut AfdaDataset,
) -> AfdaStatus {
    guard(|| {
        let lots_path = path_arg(lots_path, "lots path")?;
        let bids_path = path_arg(bids_path, "bids path")?;
        let lots = parse_lot_catalog(&lots_path)?;
        let bids = parse_bid_history(&bids_path, Some(&lots))?;
        put(out, AfdaDataset { lots, bids })
    })
}

/// Generates `n_lots` synthetic auctions from the default truth with the
/// given seed.
#[no_mangle]
pub unsafe extern "C" fn afda_dataset_simulate(
    seed: u64,
    n_lots: usize,
    out: *mut *mut AfdaDataset,
) -> AfdaStatus {
    guard(|| {
        let spec = TruthSpec {
            seed,
            n_lots,
            ..TruthSpec::default()
        };
        let ds = gen_dataset(&spec)?;
        put(
            out,
            AfdaDataset {
                lots: ds.lots,
                bids: ds.bids,
            },
        )
    })
}

/// Number of catalog lots, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn afda_dataset_lot_count(ds: *const AfdaDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.lots.len())
}

#[no_mangle]
pub unsafe extern "C" fn afda_dataset_free(ds: *mut AfdaDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Smooths every lot with bids. `options` may be null for the defaults.
/// Lots that cannot be fitted are counted in
/// `afda_curves_failure_count` rather than failing the call.
#[no_mangle]
pub unsafe extern "C" fn afda_smooth(
    ds: *const AfdaDataset,
    options: *const AfdaOptions,
    out: *mut *mut AfdaCurves,
) -> AfdaStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        let opts = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| afda_options_default());
        let opts = opts.to_analysis()?;
        let SmoothOutput {
            curves,
            failures,
            skipped,
        } = smooth_lots(&ds.lots, &ds.bids, &opts)?;
        let ids = curves
            .iter()
            .map(|c| CString::new(c.lot_id.replace('\0', " ")).unwrap_or_default())
            .collect();
        put(
            out,
            AfdaCurves {
                options: opts,
                curves,
                ids,
                failed: failures.len(),
                skipped: skipped.len(),
            },
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn afda_curves_count(c: *const AfdaCurves) -> usize {
    c.as_ref().map_or(0, |c| c.curves.len())
}

#[no_mangle]
pub unsafe extern "C" fn afda_curves_grid_len(c: *const AfdaCurves) -> usize {
    c.as_ref().map_or(0, |c| c.options.grid.len())
}

/// Lots whose bids could not be smoothed.
#[no_mangle]
pub unsafe extern "C" fn afda_curves_failure_count(c: *const AfdaCurves) -> usize {
    c.as_ref().map_or(0, |c| c.failed)
}

/// Catalog lots without any bids.
#[no_mangle]
pub unsafe extern "C" fn afda_curves_skipped_count(c: *const AfdaCurves) -> usize {
    c.as_ref().map_or(0, |c| c.skipped)
}

/// Lot id of curve `index`, owned by the handle. Null when out of range.
#[no_mangle]
pub unsafe extern "C" fn afda_curves_lot_id(c: *const AfdaCurves, index: usize) -> *const c_char {
    c.as_ref()
        .and_then(|c| c.ids.get(index))
        .map_or(std::ptr::null(), |s| s.as_ptr())
}

/// Copies one component of curve `index` on the grid into `buf`, which must
/// hold at least `afda_curves_grid_len` values.
#[no_mangle]
pub unsafe extern "C" fn afda_curves_copy(
    c: *const AfdaCurves,
    index: usize,
    component: AfdaComponent,
    buf: *mut f64,
    len: usize,
) -> AfdaStatus {
    guard(|| {
        let c = handle(c, "curves")?;
        let curve = c
            .curves
            .get(index)
            .ok_or_else(|| out_of_range(index, c.curves.len()))?;
        let src = match component {
            AfdaComponent::Level => &curve.values,
            AfdaComponent::Velocity => &curve.velocity,
            AfdaComponent::Acceleration => &curve.acceleration,
        };
        copy_out(src, buf, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn afda_curves_free(c: *mut AfdaCurves) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Regresses one curve component on the lot covariates at every grid point
/// with `1 - alpha` pointwise bands.
#[no_mangle]
pub unsafe extern "C" fn afda_regress(
    ds: *const AfdaDataset,
    curves: *const AfdaCurves,
    component: AfdaComponent,
    alpha: f64,
    out: *mut *mut AfdaRegression,
) -> AfdaStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        let c = handle(curves, "curves")?;
        let samples: Vec<CurveSamples> = c.curves.iter().map(CurveSamples::from).collect();
        let units = regression_units(&ds.lots, &ds.bids, &samples, &c.options)?;
        let result = coefficient_curves(&units, component.into(), alpha)?;
        let names = column_names()
            .into_iter()
            .map(|n| CString::new(n).expect("column names have no nul"))
            .collect();
        put(out, AfdaRegression { result, names })
    })
}

/// Number of coefficient curves, one per regression column.
#[no_mangle]
pub unsafe extern "C" fn afda_regression_covariate_count(r: *const AfdaRegression) -> usize {
    r.as_ref().map_or(0, |r| r.result.curves.len())
}

/// Lots that entered the regression.
#[no_mangle]
pub unsafe extern "C" fn afda_regression_n_lots(r: *const AfdaRegression) -> usize {
    r.as_ref().map_or(0, |r| r.result.n_lots)
}

/// Column name of coefficient curve `index`, owned by the handle.
#[no_mangle]
pub unsafe extern "C" fn afda_regression_covariate_name(
    r: *const AfdaRegression,
    index: usize,
) -> *const c_char {
    r.as_ref()
        .and_then(|r| r.names.get(index))
        .map_or(std::ptr::null(), |s| s.as_ptr())
}

/// Copies one field of coefficient curve `index` into `buf`. Grid points
/// where the column was dropped hold NaN.
#[no_mangle]
pub unsafe extern "C" fn afda_regression_copy(
    r: *const AfdaRegression,
    index: usize,
    field: AfdaBandField,
    buf: *mut f64,
    len: usize,
) -> AfdaStatus {
    guard(|| {
        let r = handle(r, "regression")?;
        let n = r.result.curves.len();
        let curve = r
            .result
            .curves
            .get(index)
            .ok_or_else(|| out_of_range(index, n))?;
        let src = match field {
            AfdaBandField::Beta => &curve.beta,
            AfdaBandField::StdError => &curve.se,
            AfdaBandField::Lower => &curve.ci_lo,
            AfdaBandField::Upper => &curve.ci_hi,
        };
        copy_out(src, buf, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn afda_regression_free(r: *mut AfdaRegression) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Fits a penalized spline to `n` samples on the uniform grid of `n`
/// points in [0, 1] and writes the fitted values and first two derivatives.
/// `options` may be null; its grid size and response fields are ignored.
/// Any of the three output buffers may be null to skip it.
#[no_mangle]
pub unsafe extern "C" fn afda_spline_smooth(
    y: *const f64,
    n: usize,
    options: *const AfdaOptions,
    values: *mut f64,
    velocity: *mut f64,
    acceleration: *mut f64,
) -> AfdaStatus {
    guard(|| {
        if y.is_null() {
            return Err(FfiError::null("y"));
        }
        let y = std::slice::from_raw_parts(y, n);
        let o = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| afda_options_default());
        let grid = Grid::uniform(n)?;
        let config = SplineConfig::new(o.degree, o.n_knots, o.penalty_order, o.lambda)?;
        let smoother = SplineSmoother::new(&grid, &config)?;
        let fit = if o.monotone {
            fit_monotone(&smoother, y, &MonotoneOptions::default())?
        } else {
            smoother.fit(y)?
        };
        let curve = PriceCurve::new("", fit, &grid);
        for (src, dst) in [
            (&curve.values, values),
            (&curve.velocity, velocity),
            (&curve.acceleration, acceleration),
        ] {
            if !dst.is_null() {
                copy_out(src, dst, n)?;
            }
        }
        Ok(())
    })
}
