//! Small dense helpers shared by the spline and regression solvers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Cholesky factor of `D A D` where `D = diag(1 / sqrt(A_ii))`.
///
/// Symmetric diagonal scaling leaves the solution unchanged (after undoing
/// `D`) but removes most of the conditioning damage caused by columns of
/// very different magnitude, which the truncated-power basis has plenty of.
pub(crate) struct ScaledCholesky {
    factor: Cholesky<f64, Dyn>,
    scale: DVector<f64>,
}

impl ScaledCholesky {
    pub fn new(a: &DMatrix<f64>) -> Option<Self> {
        let n = a.nrows();
        let mut scale = DVector::zeros(n);
        for i in 0..n {
            let d = a[(i, i)];
            if !(d.is_finite() && d > 0.0) {
                return None;
            }
            scale[i] = 1.0 / d.sqrt();
        }
        let mut scaled = a.clone();
        for i in 0..n {
            for j in 0..n {
                scaled[(i, j)] *= scale[i] * scale[j];
            }
        }
        let factor = Cholesky::new(scaled)?;
        Some(ScaledCholesky { factor, scale })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let scaled_rhs = rhs.component_mul(&self.scale);
        self.factor.solve(&scaled_rhs).component_mul(&self.scale)
    }

    /// Diagonal of `A^{-1}`.
    pub fn inverse_diagonal(&self) -> DVector<f64> {
        let inv = self.factor.inverse();
        DVector::from_iterator(
            self.scale.len(),
            (0..self.scale.len()).map(|i| inv[(i, i)] * self.scale[i] * self.scale[i]),
        )
    }
}

/// `xᵀ A x` for symmetric `A`.
pub(crate) fn quadratic_form(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(a * x))
}
