use nalgebra::{DMatrix, DVector};

use super::basis::derivative_matrix;
use super::qp::{self, QpError};
use super::{SplineError, SplineFit, SplineSmoother};

/// Settings for the monotone (non-decreasing) fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneOptions {
    /// Points of the uniform check grid where `f' ≥ 0` is imposed.
    pub check_points: usize,
    /// Largest tolerated negative slope in the reported fit.
    pub tolerance: f64,
}

impl Default for MonotoneOptions {
    fn default() -> Self {
        MonotoneOptions {
            check_points: 201,
            tolerance: 1e-8,
        }
    }
}

/// Minimizes the penalized objective subject to `f'(g_k) ≥ 0` on a uniform
/// check grid. Returns the unconstrained fit untouched when it is already
/// monotone there.
pub fn fit_monotone(
    smoother: &SplineSmoother,
    y: &[f64],
    options: &MonotoneOptions,
) -> Result<SplineFit, SplineError> {
    let unconstrained = smoother.fit(y)?;
    let cfg = smoother.config();
    let n_check = options.check_points.max(2);
    let check: Vec<f64> = (0..n_check)
        .map(|i| i as f64 / (n_check - 1) as f64)
        .collect();
    let slopes = derivative_matrix(&check, cfg, 1);

    let min_slope = |coeffs: &[f64]| -> f64 {
        let beta = DVector::from_column_slice(coeffs);
        (&slopes * beta).min()
    };
    if min_slope(&unconstrained.coeffs) >= 0.0 {
        return Ok(unconstrained);
    }

    let fail = |reason: String, unconstrained: &SplineFit| SplineError::Monotone {
        reason,
        unconstrained: Box::new(unconstrained.clone()),
    };

    let yv = DVector::from_column_slice(y);
    let (a, rhs) = smoother.system(&yv);
    let k = cfg.n_coeffs();

    // Jacobi scaling x = D⁻¹β keeps the QP well conditioned.
    let mut scale = DVector::zeros(k);
    for i in 0..k {
        scale[i] = 1.0 / a[(i, i)].sqrt();
    }
    let d = DMatrix::from_diagonal(&scale);
    let h = &d * &a * &d;
    let g = -(&d * &rhs);
    let mut c = &slopes * &d;
    for mut row in c.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }

    let sol = qp::solve(&h, &g, &c).map_err(|e| {
        let reason = match e {
            QpError::NoConvergence(it) => format!("no convergence after {it} iterations"),
            QpError::NotPositiveDefinite => "penalized system is not positive definite".into(),
        };
        fail(reason, &unconstrained)
    })?;
    let beta = sol.x.component_mul(&scale);
    let coeffs: Vec<f64> = beta.iter().copied().collect();
    let worst = min_slope(&coeffs);
    if worst < -options.tolerance {
        return Err(fail(
            format!("constrained solution still has slope {worst:.3e}"),
            &unconstrained,
        ));
    }
    let (residual_ss, penalty_value, penss) = smoother.objective(y, &coeffs)?;
    log::debug!(
        "monotone fit converged in {} NNLS iterations",
        sol.iterations
    );
    Ok(SplineFit {
        config: cfg.clone(),
        coeffs,
        residual_ss,
        penalty_value,
        penss,
        ridge_applied: unconstrained.ridge_applied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_prep::Grid;
    use crate::pspline::SplineConfig;

    #[test]
    fn monotone_data_keeps_unconstrained_fit() {
        let grid = Grid::uniform(50).unwrap();
        let y: Vec<f64> = grid.points().iter().map(|t| t * t + 0.5 * t).collect();
        let s = SplineSmoother::new(&grid, &SplineConfig::default()).unwrap();
        let free = s.fit(&y).unwrap();
        let mono = fit_monotone(&s, &y, &MonotoneOptions::default()).unwrap();
        assert_eq!(free, mono);
    }

    #[test]
    fn decreasing_data_yields_non_decreasing_fit() {
        let grid = Grid::uniform(100).unwrap();
        let y: Vec<f64> = grid
            .points()
            .iter()
            .map(|t| 1.0 - t + 0.2 * (9.0 * t).sin())
            .collect();
        let s = SplineSmoother::new(&grid, &SplineConfig::default()).unwrap();
        let mono = fit_monotone(&s, &y, &MonotoneOptions::default()).unwrap();
        let free = s.fit(&y).unwrap();
        assert!(mono.penss >= free.penss);
        for i in 0..=400 {
            let t = i as f64 / 400.0;
            assert!(mono.evaluate(t, 1).unwrap() >= -1e-6, "t={t}");
        }
        for i in 0..201 {
            let t = i as f64 / 200.0;
            assert!(mono.evaluate(t, 1).unwrap() >= -1e-8);
        }
    }
}
