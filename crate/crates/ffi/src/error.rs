use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use auctionfda::auction_data::DataError;
use auctionfda::synthgen::SynthError;
use auctionfda::{PrepError, RegressionError, SplineError};

/// Result code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfdaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Input files could not be parsed or failed validation.
    InvalidInput = 3,
    Io = 4,
    /// A fit or regression could not be computed.
    Numerical = 5,
    IndexOutOfRange = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

pub(crate) struct FfiError {
    pub status: AfdaStatus,
    pub message: String,
}

impl FfiError {
    pub fn new(status: AfdaStatus, message: impl Into<String>) -> Self {
        FfiError {
            status,
            message: message.into(),
        }
    }

    pub fn null(what: &str) -> Self {
        FfiError::new(AfdaStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<DataError> for FfiError {
    fn from(e: DataError) -> Self {
        let status = match e {
            DataError::Io { .. } => AfdaStatus::Io,
            _ => AfdaStatus::InvalidInput,
        };
        FfiError::new(status, e.to_string())
    }
}

impl From<SynthError> for FfiError {
    fn from(e: SynthError) -> Self {
        let status = match e {
            SynthError::Io(_) => AfdaStatus::Io,
            SynthError::Data(_) => AfdaStatus::InvalidInput,
            _ => AfdaStatus::InvalidArgument,
        };
        FfiError::new(status, e.to_string())
    }
}

impl From<SplineError> for FfiError {
    fn from(e: SplineError) -> Self {
        let status = match e {
            SplineError::InvalidConfig(_) | SplineError::LengthMismatch { .. } => {
                AfdaStatus::InvalidArgument
            }
            SplineError::NonFinite => AfdaStatus::InvalidInput,
            _ => AfdaStatus::Numerical,
        };
        FfiError::new(status, e.to_string())
    }
}

impl From<PrepError> for FfiError {
    fn from(e: PrepError) -> Self {
        FfiError::new(AfdaStatus::InvalidArgument, e.to_string())
    }
}

impl From<RegressionError> for FfiError {
    fn from(e: RegressionError) -> Self {
        let status = match e {
            RegressionError::BadAlpha(_) => AfdaStatus::InvalidArgument,
            _ => AfdaStatus::Numerical,
        };
        FfiError::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

pub(crate) fn last_error_ptr() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Runs `f`, turning errors and panics into a status plus a thread-local
/// message.
pub(crate) fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> AfdaStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AfdaStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(&e.message);
            e.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            AfdaStatus::Panic
        }
    }
}
