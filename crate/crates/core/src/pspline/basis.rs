use nalgebra::DMatrix;

use super::SplineConfig;

/// `j! / (j - k)!`, zero when `k > j`.
pub(crate) fn falling_factorial(j: usize, k: usize) -> f64 {
    if k > j {
        return 0.0;
    }
    ((j - k + 1)..=j).map(|v| v as f64).product()
}

/// Writes `D^order` of every basis function at `t` into `out`.
///
/// Layout: `1, t, ..., t^p`, then `(t - tau_l)_+^p` for each knot.
pub(crate) fn basis_row_into(t: f64, config: &SplineConfig, order: usize, out: &mut [f64]) {
    let p = config.degree;
    debug_assert_eq!(out.len(), config.n_coeffs());
    for (j, slot) in out.iter_mut().take(p + 1).enumerate() {
        *slot = if j < order {
            0.0
        } else {
            falling_factorial(j, order) * t.powi((j - order) as i32)
        };
    }
    let trunc_scale = falling_factorial(p, order);
    let trunc_pow = p.saturating_sub(order) as i32;
    for (slot, &tau) in out[p + 1..].iter_mut().zip(&config.knots) {
        let u = t - tau;
        *slot = if order > p || u < 0.0 {
            0.0
        } else {
            trunc_scale * u.powi(trunc_pow)
        };
    }
}

pub(crate) fn basis_row(t: f64, config: &SplineConfig, order: usize) -> Vec<f64> {
    let mut row = vec![0.0; config.n_coeffs()];
    basis_row_into(t, config, order, &mut row);
    row
}

/// Design matrix of basis functions (or their `order`-th derivatives) at the
/// given points, one row per point.
pub fn derivative_matrix(points: &[f64], config: &SplineConfig, order: usize) -> DMatrix<f64> {
    let k = config.n_coeffs();
    let mut m = DMatrix::zeros(points.len(), k);
    let mut row = vec![0.0; k];
    for (i, &t) in points.iter().enumerate() {
        basis_row_into(t, config, order, &mut row);
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    m
}

/// Truncated-power basis evaluated at the grid points.
pub fn basis_matrix(points: &[f64], config: &SplineConfig) -> DMatrix<f64> {
    derivative_matrix(points, config, 0)
}
