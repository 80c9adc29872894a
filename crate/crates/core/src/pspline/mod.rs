//! Penalized truncated-power splines.
//!
//! A degree-`p` spline with interior knots `τ_1 < … < τ_L` is
//!
//! ```text
//! f(t) = Σ_{j=0..p} β_j t^j + Σ_{l=1..L} β_{p,l} (t - τ_l)_+^p
//! ```
//!
//! and is fitted to grid samples `y_i` by minimizing the penalized residual
//! sum of squares `Σ (y_i - f(t_i))² + λ ∫_0^1 (D^m f)² dt`. The minimizer
//! solves `(BᵀB + λP) β = Bᵀy`, where `B` is the basis matrix and `P` the
//! Gram matrix of the `m`-th derivatives. It is computed as the least-squares
//! solution of the stacked system `[B; √λ R] β ≈ [y; 0]` with `RᵀR = P`.

mod basis;
mod monotone;
mod penalty;
mod qp;
mod sensitivity;

use nalgebra::{DMatrix, DVector, Dyn, QR};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve_prep::Grid;
use crate::linalg::{quadratic_form, ScaledCholesky};

pub use basis::{basis_matrix, derivative_matrix};
pub use monotone::{fit_monotone, MonotoneOptions};
pub use penalty::penalty_gram;
pub use sensitivity::{
    default_lambda_values, lambda_sensitivity, SensitivityCell, SensitivityTable,
    DEFAULT_SENSITIVITY_DEGREES,
};

/// Squared-pivot ratio below which an unpenalized system is treated as
/// rank deficient.
const RANK_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Error, Clone)]
pub enum SplineError {
    #[error("invalid spline configuration: {0}")]
    InvalidConfig(String),
    #[error("response has {found} values but the grid has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("response contains non-finite values")]
    NonFinite,
    #[error("spline system is singular with lambda = 0 ({0}); use lambda > 0 or fewer knots")]
    Singular(String),
    #[error("spline system could not be factorized: {0}")]
    Factorization(String),
    #[error("derivative order {order} exceeds spline degree {degree}")]
    DerivativeOrder { order: usize, degree: usize },
    #[error("evaluation point {0} is outside [0, 1]")]
    OutOfDomain(f64),
    #[error("monotone fit failed: {reason}")]
    Monotone {
        reason: String,
        unconstrained: Box<SplineFit>,
    },
}

/// Degree, knots, penalty order and smoothing parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineConfig {
    pub degree: usize,
    pub knots: Vec<f64>,
    pub penalty_order: usize,
    pub lambda: f64,
}

impl Default for SplineConfig {
    fn default() -> Self {
        SplineConfig::new(4, 10, 2, 0.1).expect("default spline config is valid")
    }
}

impl SplineConfig {
    /// `n_knots` equally spaced interior knots `l / (n_knots + 1)`.
    pub fn new(
        degree: usize,
        n_knots: usize,
        penalty_order: usize,
        lambda: f64,
    ) -> Result<Self, SplineError> {
        let knots = (1..=n_knots)
            .map(|l| l as f64 / (n_knots + 1) as f64)
            .collect();
        Self::with_knots(degree, knots, penalty_order, lambda)
    }

    pub fn with_knots(
        degree: usize,
        knots: Vec<f64>,
        penalty_order: usize,
        lambda: f64,
    ) -> Result<Self, SplineError> {
        let cfg = SplineConfig {
            degree,
            knots,
            penalty_order,
            lambda,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SplineError> {
        let bad = |m: String| Err(SplineError::InvalidConfig(m));
        if self.degree < 1 {
            return bad("degree must be at least 1".into());
        }
        if self.penalty_order < 1 || self.penalty_order > self.degree {
            return bad(format!(
                "penalty order {} must lie in 1..={}",
                self.penalty_order, self.degree
            ));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!(
                "lambda {} must be finite and non-negative",
                self.lambda
            ));
        }
        if self.knots.iter().any(|&k| !(k > 0.0 && k < 1.0)) {
            return bad("knots must lie strictly inside (0, 1)".into());
        }
        if self.knots.windows(2).any(|w| w[0] >= w[1]) {
            return bad("knots must be strictly increasing".into());
        }
        Ok(())
    }

    pub fn n_coeffs(&self) -> usize {
        self.degree + 1 + self.knots.len()
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        SplineConfig {
            lambda,
            ..self.clone()
        }
    }
}

/// Fitted coefficients plus the pieces of the objective at the optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineFit {
    pub config: SplineConfig,
    pub coeffs: Vec<f64>,
    pub residual_ss: f64,
    pub penalty_value: f64,
    pub penss: f64,
    /// True when a tiny ridge had to be added to factorize the system.
    pub ridge_applied: bool,
}

impl SplineFit {
    /// Exact `D^order f(t)` from the differentiated basis.
    pub fn evaluate(&self, t: f64, order: usize) -> Result<f64, SplineError> {
        if order > self.config.degree {
            return Err(SplineError::DerivativeOrder {
                order,
                degree: self.config.degree,
            });
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(SplineError::OutOfDomain(t));
        }
        let row = basis::basis_row(t, &self.config, order);
        Ok(row.iter().zip(&self.coeffs).map(|(b, c)| b * c).sum())
    }
}

/// Basis and penalty for one (grid, config) pair, reusable across lots.
#[derive(Debug, Clone)]
pub struct SplineSmoother {
    grid: Grid,
    config: SplineConfig,
    basis: DMatrix<f64>,
    gram: DMatrix<f64>,
    normal: DMatrix<f64>,
    stacked: Option<StackedQr>,
}

/// QR factor of the column-scaled stacked matrix `[B; √λ R] S`.
#[derive(Debug, Clone)]
struct StackedQr {
    qr: QR<f64, Dyn, Dyn>,
    rows: usize,
    scale: DVector<f64>,
    /// Squared ratio of the smallest to largest diagonal entry of the
    /// triangular factor, comparable to a Cholesky pivot ratio.
    pivot_ratio: f64,
}

impl StackedQr {
    fn new(basis: &DMatrix<f64>, gram: &DMatrix<f64>, lambda: f64) -> Option<Self> {
        let (n, k) = basis.shape();
        let mut rows = n;
        let mut penalty_rows = DMatrix::zeros(0, k);
        if lambda > 0.0 {
            let eig = gram.clone().symmetric_eigen();
            let keep: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
            penalty_rows = DMatrix::from_fn(keep.len(), k, |r, c| {
                let i = keep[r];
                (lambda * eig.eigenvalues[i]).sqrt() * eig.eigenvectors[(c, i)]
            });
            rows += keep.len();
        }
        if rows < k {
            return None;
        }
        let mut m = DMatrix::zeros(rows, k);
        m.rows_mut(0, n).copy_from(basis);
        m.rows_mut(n, rows - n).copy_from(&penalty_rows);
        let mut scale = DVector::zeros(k);
        for (j, mut col) in m.column_iter_mut().enumerate() {
            let norm = col.norm();
            if !(norm.is_finite() && norm > 0.0) {
                return None;
            }
            scale[j] = 1.0 / norm;
            col /= norm;
        }
        let qr = m.qr();
        let (lo, hi) = qr
            .r()
            .diagonal()
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
                (lo.min(v * v), hi.max(v * v))
            });
        Some(StackedQr {
            qr,
            rows,
            scale,
            pivot_ratio: if hi > 0.0 { lo / hi } else { 0.0 },
        })
    }

    fn solve(&self, y: &DVector<f64>) -> Option<DVector<f64>> {
        let k = self.scale.len();
        let mut rhs = DVector::zeros(self.rows);
        rhs.rows_mut(0, y.len()).copy_from(y);
        self.qr.q_tr_mul(&mut rhs);
        let z = self
            .qr
            .r()
            .solve_upper_triangular(&rhs.rows(0, k).into_owned())?;
        Some(z.component_mul(&self.scale))
    }
}

impl SplineSmoother {
    pub fn new(grid: &Grid, config: &SplineConfig) -> Result<Self, SplineError> {
        config.validate()?;
        let basis = basis_matrix(grid.points(), config);
        let gram = penalty_gram(config);
        let normal = basis.transpose() * &basis;
        let stacked = StackedQr::new(&basis, &gram, config.lambda);
        Ok(SplineSmoother {
            grid: grid.clone(),
            config: config.clone(),
            basis,
            gram,
            normal,
            stacked,
        })
    }

    pub fn config(&self) -> &SplineConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    fn check_response(&self, y: &[f64]) -> Result<DVector<f64>, SplineError> {
        if y.len() != self.grid.len() {
            return Err(SplineError::LengthMismatch {
                expected: self.grid.len(),
                found: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(SplineError::NonFinite);
        }
        Ok(DVector::from_column_slice(y))
    }

    /// Penalized objective `(rss, penalty, penss)` at arbitrary coefficients.
    pub fn objective(&self, y: &[f64], coeffs: &[f64]) -> Result<(f64, f64, f64), SplineError> {
        let y = self.check_response(y)?;
        let beta = DVector::from_column_slice(coeffs);
        Ok(self.objective_parts(&y, &beta))
    }

    fn objective_parts(&self, y: &DVector<f64>, beta: &DVector<f64>) -> (f64, f64, f64) {
        let resid = y - &self.basis * beta;
        let rss = resid.norm_squared();
        let pen = quadratic_form(&self.gram, beta);
        (rss, pen, rss + self.config.lambda * pen)
    }

    /// `BᵀB + λP` and `Bᵀy`.
    pub(crate) fn system(&self, y: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let a = &self.normal + &self.gram * self.config.lambda;
        let rhs = self.basis.transpose() * y;
        (a, rhs)
    }

    pub fn fit(&self, y: &[f64]) -> Result<SplineFit, SplineError> {
        let yv = self.check_response(y)?;
        let (mut a, rhs) = self.system(&yv);
        let lambda = self.config.lambda;
        let k = self.config.n_coeffs();

        if lambda == 0.0 && self.grid.len() < k {
            return Err(SplineError::Singular(format!(
                "{} grid points for {k} coefficients",
                self.grid.len()
            )));
        }

        let mut ridge_applied = false;
        let stacked = self.stacked.as_ref();
        let beta = match stacked {
            Some(q) if q.pivot_ratio >= RANK_TOLERANCE => q.solve(&yv),
            _ => None,
        };
        let beta = match beta {
            Some(b) => b,
            None if lambda == 0.0 => {
                return Err(SplineError::Singular(match stacked {
                    Some(q) => format!("pivot ratio {:.3e}", q.pivot_ratio),
                    None => "factorization failed".into(),
                }));
            }
            None => {
                let chol = match ScaledCholesky::new(&a) {
                    Some(c) => c,
                    None => {
                        let ridge = 1e-12 * a.trace();
                        log::warn!(
                            "adding ridge {ridge:.3e} to factorize the penalized normal equations"
                        );
                        for i in 0..k {
                            a[(i, i)] += ridge;
                        }
                        ridge_applied = true;
                        ScaledCholesky::new(&a).ok_or_else(|| {
                            SplineError::Factorization(
                                "system is singular even with a ridge".into(),
                            )
                        })?
                    }
                };
                chol.solve(&rhs)
            }
        };
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(SplineError::Factorization("non-finite coefficients".into()));
        }
        let (residual_ss, penalty_value, penss) = self.objective_parts(&yv, &beta);
        Ok(SplineFit {
            config: self.config.clone(),
            coeffs: beta.iter().copied().collect(),
            residual_ss,
            penalty_value,
            penss,
            ridge_applied,
        })
    }
}

/// Fits one response vector; see [`SplineSmoother`] to share work across lots.
pub fn fit(y: &[f64], grid: &Grid, config: &SplineConfig) -> Result<SplineFit, SplineError> {
    SplineSmoother::new(grid, config)?.fit(y)
}

/// A fitted curve sampled on the grid with its first two derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceCurve {
    pub lot_id: String,
    pub fit: SplineFit,
    pub grid: Grid,
    pub values: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
}

impl PriceCurve {
    /// Samples the fit through [`SplineFit::evaluate`]. Derivatives above the
    /// degree are zero away from the knots and are stored as zero.
    pub fn new(lot_id: &str, fit: SplineFit, grid: &Grid) -> Self {
        let sample = |order: usize| -> Vec<f64> {
            grid.points()
                .iter()
                .map(|&t| fit.evaluate(t, order).unwrap_or(0.0))
                .collect()
        };
        let values = sample(0);
        let velocity = sample(1);
        let acceleration = sample(2);
        PriceCurve {
            lot_id: lot_id.to_string(),
            grid: grid.clone(),
            fit,
            values,
            velocity,
            acceleration,
        }
    }
}
