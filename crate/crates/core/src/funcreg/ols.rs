use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{DesignMatrix, RegressionError};
use crate::linalg::ScaledCholesky;

/// Relative eigenvalue floor of the scaled `XᵀX` below which the design is
/// declared rank deficient.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub dof: usize,
    pub rss: f64,
    pub residuals: Vec<f64>,
    /// Condition number of the unscaled `XᵀX`.
    pub condition_number: f64,
}

/// Ordinary least squares with classical homoskedastic standard errors.
pub fn pointwise_ols(d: &DesignMatrix) -> Result<OlsFit, RegressionError> {
    let (n, k) = d.x.shape();
    if n <= k {
        return Err(RegressionError::NotEstimable {
            lots: n,
            columns: k,
        });
    }
    let xtx = d.x.transpose() * &d.x;

    let eig = xtx.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    let condition_number = if lo > 0.0 { hi / lo } else { f64::INFINITY };

    // rank test on the unit-diagonal version, which ignores column scale
    let diag: Vec<f64> = (0..k).map(|i| xtx[(i, i)]).collect();
    if let Some(c) = diag.iter().position(|&v| v <= 0.0) {
        return Err(RegressionError::RankDeficient {
            columns: vec![d.columns[c].clone()],
        });
    }
    let scaled =
        nalgebra::DMatrix::from_fn(k, k, |i, j| xtx[(i, j)] / (diag[i].sqrt() * diag[j].sqrt()));
    let se_eig = scaled.symmetric_eigen();
    let top = se_eig.eigenvalues.max();
    let mut collinear: Vec<usize> = Vec::new();
    for (idx, &ev) in se_eig.eigenvalues.iter().enumerate() {
        if ev < RANK_TOLERANCE * top {
            let v = se_eig.eigenvectors.column(idx);
            collinear.extend((0..k).filter(|&c| v[c].abs() > 0.01));
        }
    }
    if !collinear.is_empty() {
        collinear.sort_unstable();
        collinear.dedup();
        return Err(RegressionError::RankDeficient {
            columns: collinear
                .into_iter()
                .map(|c| d.columns[c].clone())
                .collect(),
        });
    }

    let chol = ScaledCholesky::new(&xtx).ok_or_else(|| RegressionError::RankDeficient {
        columns: d.columns.clone(),
    })?;
    let xty = d.x.transpose() * &d.y;
    let beta = chol.solve(&xty);
    let residuals: DVector<f64> = &d.y - &d.x * &beta;
    let rss = residuals.norm_squared();
    let dof = n - k;
    let sigma2 = rss / dof as f64;
    let se = chol
        .inverse_diagonal()
        .iter()
        .map(|v| (sigma2 * v.max(0.0)).sqrt())
        .collect();
    Ok(OlsFit {
        beta: beta.iter().copied().collect(),
        se,
        dof,
        rss,
        residuals: residuals.iter().copied().collect(),
        condition_number,
    })
}
