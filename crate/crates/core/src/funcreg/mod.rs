//! Pointwise functional regression.
//!
//! For each grid index the lots' curve values (or velocities) are regressed
//! on the intercept, the seven static covariates and the bidder count at that
//! time. The coefficient estimates, read across the grid, form coefficient
//! curves with pointwise t-bands.

mod design;
mod ols;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::auction_data::{CovariateVector, COVARIATE_NAMES};
use crate::pspline::PriceCurve;

pub use design::{assemble_design, DesignMatrix};
pub use ols::{pointwise_ols, OlsFit};

/// Condition number of `XᵀX` above which a warning is logged.
pub const CONDITION_WARNING: f64 = 1e8;

/// Column names of the design matrix, intercept first.
pub fn column_names() -> Vec<&'static str> {
    std::iter::once("intercept")
        .chain(COVARIATE_NAMES)
        .collect()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error("need more lots than columns: {lots} lots for {columns} columns")]
    NotEstimable { lots: usize, columns: usize },
    #[error("lot {lot_id}: {reason}")]
    MissingData { lot_id: String, reason: String },
    #[error("design is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("t_index {t_index}: {source}")]
    AtTime {
        t_index: usize,
        #[source]
        source: Box<RegressionError>,
    },
    #[error("alpha must lie in (0, 1], got {0}")]
    BadAlpha(f64),
    #[error("grid index {t_index} out of range 1..={n}")]
    BadIndex { t_index: usize, n: usize },
}

/// Which curve feature is the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResponseComponent {
    Level,
    Velocity,
    Acceleration,
}

impl ResponseComponent {
    pub fn as_str(self) -> &'static str {
        match self {
            ResponseComponent::Level => "level",
            ResponseComponent::Velocity => "velocity",
            ResponseComponent::Acceleration => "acceleration",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "level" => Some(ResponseComponent::Level),
            "velocity" => Some(ResponseComponent::Velocity),
            "acceleration" => Some(ResponseComponent::Acceleration),
            _ => None,
        }
    }
}

/// Grid samples of one lot's fitted curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSamples {
    pub lot_id: String,
    pub values: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
}

impl CurveSamples {
    pub fn component(&self, kind: ResponseComponent) -> &[f64] {
        match kind {
            ResponseComponent::Level => &self.values,
            ResponseComponent::Velocity => &self.velocity,
            ResponseComponent::Acceleration => &self.acceleration,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl From<&PriceCurve> for CurveSamples {
    fn from(c: &PriceCurve) -> Self {
        CurveSamples {
            lot_id: c.lot_id.clone(),
            values: c.values.clone(),
            velocity: c.velocity.clone(),
            acceleration: c.acceleration.clone(),
        }
    }
}

/// One lot's covariates paired with its curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionUnit {
    pub lot_id: String,
    pub covariates: CovariateVector,
    pub curve: CurveSamples,
}

/// A coefficient curve across the grid with its pointwise band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientCurve {
    pub covariate: String,
    pub response: ResponseComponent,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub significant: Vec<bool>,
}

/// Per-grid-point diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub t_index: usize,
    pub condition_number: f64,
    pub dof: usize,
    /// Columns left out at this point because they were constant across lots.
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub response: ResponseComponent,
    pub alpha: f64,
    pub n_lots: usize,
    pub curves: Vec<CoefficientCurve>,
    pub diagnostics: Vec<PointDiagnostics>,
}

impl RegressionResult {
    pub fn curve(&self, covariate: &str) -> Option<&CoefficientCurve> {
        self.curves.iter().find(|c| c.covariate == covariate)
    }
}

/// Two-sided critical value `t_{1-α/2, dof}`.
pub fn critical_value(alpha: f64, dof: usize) -> f64 {
    if alpha >= 1.0 {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("dof >= 1");
    dist.inverse_cdf(1.0 - alpha / 2.0)
}

/// Runs [`pointwise_ols`] at every grid index and stitches the estimates
/// into coefficient curves. Regressions at different grid indices run in
/// parallel; results are merged by index.
pub fn coefficient_curves(
    units: &[RegressionUnit],
    response: ResponseComponent,
    alpha: f64,
) -> Result<RegressionResult, RegressionError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(RegressionError::BadAlpha(alpha));
    }
    let names = column_names();
    let k = names.len();
    if units.len() <= k {
        return Err(RegressionError::NotEstimable {
            lots: units.len(),
            columns: k,
        });
    }
    let n = units[0].curve.len();

    let per_point: Vec<(Vec<f64>, Vec<f64>, PointDiagnostics)> = (1..=n)
        .into_par_iter()
        .map(|t_index| {
            let wrap = |e: RegressionError| RegressionError::AtTime {
                t_index,
                source: Box::new(e),
            };
            let design = assemble_design(units, t_index, response).map_err(wrap)?;
            let fit = pointwise_ols(&design).map_err(wrap)?;
            if fit.condition_number > CONDITION_WARNING {
                log::warn!(
                    "t_index {t_index}: condition number of XᵀX is {:.3e}",
                    fit.condition_number
                );
            }
            let (mut beta, mut se) = (vec![f64::NAN; k], vec![f64::NAN; k]);
            for (col, name) in design.columns.iter().enumerate() {
                let full = names.iter().position(|n| n == name).expect("known column");
                beta[full] = fit.beta[col];
                se[full] = fit.se[col];
            }
            let diag = PointDiagnostics {
                t_index,
                condition_number: fit.condition_number,
                dof: fit.dof,
                dropped: design.dropped.clone(),
            };
            Ok((beta, se, diag))
        })
        .collect::<Result<_, RegressionError>>()?;

    let mut curves: Vec<CoefficientCurve> = names
        .iter()
        .map(|name| CoefficientCurve {
            covariate: name.to_string(),
            response,
            beta: Vec::with_capacity(n),
            se: Vec::with_capacity(n),
            ci_lo: Vec::with_capacity(n),
            ci_hi: Vec::with_capacity(n),
            significant: Vec::with_capacity(n),
        })
        .collect();
    let mut diagnostics = Vec::with_capacity(n);
    for (beta, se, diag) in per_point {
        let q = critical_value(alpha, diag.dof);
        for (c, curve) in curves.iter_mut().enumerate() {
            let (b, s) = (beta[c], se[c]);
            let (lo, hi) = if q == 0.0 {
                (b, b)
            } else {
                (b - q * s, b + q * s)
            };
            curve.beta.push(b);
            curve.se.push(s);
            curve.ci_lo.push(lo);
            curve.ci_hi.push(hi);
            curve.significant.push(lo > 0.0 || hi < 0.0);
        }
        diagnostics.push(diag);
    }
    Ok(RegressionResult {
        response,
        alpha,
        n_lots: units.len(),
        curves,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    pub(crate) fn synthetic_units(n_lots: usize, n_grid: usize, seed: u64) -> Vec<RegressionUnit> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n_lots)
            .map(|j| {
                let kind = j % 3;
                let fixed = [
                    rng.random_range(0.0..5.0),
                    (kind == 0) as u8 as f64,
                    (kind == 1) as u8 as f64,
                    rng.random_range(6.0..11.0),
                    rng.random_range(0.0..1.6),
                    rng.random_range(4.0..8.0),
                    rng.random_bool(0.6) as u8 as f64,
                ];
                let mut count = 1.0f64;
                let bidders: Vec<f64> = (0..n_grid)
                    .map(|_| {
                        if rng.random_bool(0.1) {
                            count += 1.0;
                        }
                        count.ln()
                    })
                    .collect();
                let values: Vec<f64> = (0..n_grid)
                    .map(|i| {
                        let t = i as f64 / (n_grid - 1) as f64;
                        0.5 + (1.0 - t) * fixed[3] * 0.1
                            + 0.2 * fixed[1]
                            + 0.05 * bidders[i]
                            + 0.05 * rng.sample::<f64, _>(StandardNormal)
                    })
                    .collect();
                RegressionUnit {
                    lot_id: j.to_string(),
                    covariates: CovariateVector {
                        fixed,
                        bid_count: bidders.clone(),
                        bidders,
                    },
                    curve: CurveSamples {
                        lot_id: j.to_string(),
                        velocity: values.iter().map(|v| v * 0.5).collect(),
                        acceleration: vec![0.0; n_grid],
                        values,
                    },
                }
            })
            .collect()
    }

    #[test]
    fn curves_cover_all_columns() {
        let units = synthetic_units(60, 20, 1);
        let r = coefficient_curves(&units, ResponseComponent::Level, 0.05).unwrap();
        assert_eq!(r.curves.len(), 9);
        for c in &r.curves {
            assert_eq!(c.beta.len(), 20);
            for i in 0..20 {
                if c.beta[i].is_nan() {
                    continue;
                }
                assert!(c.ci_lo[i] <= c.beta[i] && c.beta[i] <= c.ci_hi[i]);
                assert!(c.se[i] >= 0.0);
            }
        }
    }

    #[test]
    fn alpha_one_collapses_bands() {
        let units = synthetic_units(40, 10, 2);
        let r = coefficient_curves(&units, ResponseComponent::Level, 1.0).unwrap();
        for c in &r.curves {
            for i in 0..10 {
                assert_eq!(c.ci_lo[i].to_bits(), c.beta[i].to_bits());
                assert_eq!(c.ci_hi[i].to_bits(), c.beta[i].to_bits());
            }
        }
        assert!(coefficient_curves(&units, ResponseComponent::Level, 0.0).is_err());
    }

    #[test]
    fn too_few_lots() {
        let units = synthetic_units(9, 5, 3);
        assert!(matches!(
            coefficient_curves(&units, ResponseComponent::Level, 0.05),
            Err(RegressionError::NotEstimable { .. })
        ));
    }

    #[test]
    fn permutation_invariance() {
        let units = synthetic_units(50, 15, 4);
        let mut shuffled = units.clone();
        shuffled.reverse();
        shuffled.swap(3, 17);
        let a = coefficient_curves(&units, ResponseComponent::Level, 0.05).unwrap();
        let b = coefficient_curves(&shuffled, ResponseComponent::Level, 0.05).unwrap();
        for (ca, cb) in a.curves.iter().zip(&b.curves) {
            for i in 0..15 {
                if ca.beta[i].is_nan() {
                    assert!(cb.beta[i].is_nan());
                    continue;
                }
                assert!((ca.beta[i] - cb.beta[i]).abs() <= 1e-12 * (1.0 + ca.beta[i].abs()));
                assert!((ca.se[i] - cb.se[i]).abs() <= 1e-12 * (1.0 + ca.se[i].abs()));
            }
        }
    }

    #[test]
    fn constant_shift_moves_only_intercept() {
        let units = synthetic_units(50, 12, 5);
        let c = 3.25;
        let shifted: Vec<RegressionUnit> = units
            .iter()
            .cloned()
            .map(|mut u| {
                u.curve.values.iter_mut().for_each(|v| *v += c);
                u
            })
            .collect();
        let a = coefficient_curves(&units, ResponseComponent::Level, 0.05).unwrap();
        let b = coefficient_curves(&shifted, ResponseComponent::Level, 0.05).unwrap();
        for (ca, cb) in a.curves.iter().zip(&b.curves) {
            for i in 0..12 {
                if ca.beta[i].is_nan() {
                    continue;
                }
                let expected = if ca.covariate == "intercept" {
                    ca.beta[i] + c
                } else {
                    ca.beta[i]
                };
                assert!(
                    (cb.beta[i] - expected).abs() <= 1e-10,
                    "{} {i}",
                    ca.covariate
                );
            }
        }
    }

    #[test]
    fn rescaling_a_covariate() {
        let units = synthetic_units(50, 12, 6);
        let s = 2.5;
        let scaled: Vec<RegressionUnit> = units
            .iter()
            .cloned()
            .map(|mut u| {
                u.covariates.fixed[3] *= s;
                u
            })
            .collect();
        let a = coefficient_curves(&units, ResponseComponent::Level, 0.05).unwrap();
        let b = coefficient_curves(&scaled, ResponseComponent::Level, 0.05).unwrap();
        let (ca, cb) = (
            a.curve("opening_bid").unwrap(),
            b.curve("opening_bid").unwrap(),
        );
        for i in 0..12 {
            assert!((cb.beta[i] - ca.beta[i] / s).abs() <= 1e-10 * (1.0 + ca.beta[i].abs()));
            assert!((cb.se[i] - ca.se[i] / s).abs() <= 1e-10 * (1.0 + ca.se[i]));
            assert_eq!(ca.significant[i], cb.significant[i]);
        }
    }

    #[test]
    fn constant_dynamic_column_is_dropped() {
        // bidder counts all start at one, so x8 = 0 for every lot at t_index 1
        let mut units = synthetic_units(40, 6, 7);
        for u in &mut units {
            u.covariates.bidders[0] = 0.0;
        }
        let r = coefficient_curves(&units, ResponseComponent::Level, 0.05).unwrap();
        assert_eq!(r.diagnostics[0].dropped, vec!["bidders".to_string()]);
        let bidders = r.curve("bidders").unwrap();
        assert!(bidders.beta[0].is_nan() && !bidders.significant[0]);
        assert_eq!(r.diagnostics[0].dof, 40 - 8);
    }

    #[test]
    fn critical_values() {
        assert_eq!(critical_value(1.0, 10), 0.0);
        // t_{0.975, 10} = 2.228139
        assert!((critical_value(0.05, 10) - 2.228_138_851_986_27).abs() < 1e-8);
        assert!((critical_value(0.05, 100_000) - 1.959_99).abs() < 1e-3);
    }
}
