//! Small strictly convex QPs `min ½ xᵀHx + gᵀx  s.t.  Cx ≥ 0`.
//!
//! With `H = LLᵀ`, `A = L⁻¹Cᵀ` and `d = L⁻¹g`, the dual is the non-negative
//! least squares problem `min ‖Aμ − d‖, μ ≥ 0`, solved by Lawson–Hanson.
//! The primal solution is `x = L⁻ᵀ(Aμ − d)`, and `Cx = Aᵀ(Aμ − d)` is the
//! negated NNLS gradient, so dual optimality is primal feasibility.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum QpError {
    NotPositiveDefinite,
    NoConvergence(usize),
}

pub(crate) struct QpSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
}

pub(crate) fn solve(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    c: &DMatrix<f64>,
) -> Result<QpSolution, QpError> {
    let chol = h.clone().cholesky().ok_or(QpError::NotPositiveDefinite)?;
    let l = chol.l();
    let a = l
        .solve_lower_triangular(&c.transpose())
        .ok_or(QpError::NotPositiveDefinite)?;
    let d = l
        .solve_lower_triangular(g)
        .ok_or(QpError::NotPositiveDefinite)?;
    let (mu, iterations) = nnls(&a, &d)?;
    let r = &a * &mu - &d;
    let x = l
        .transpose()
        .solve_upper_triangular(&r)
        .ok_or(QpError::NotPositiveDefinite)?;
    Ok(QpSolution { x, iterations })
}

/// Lawson–Hanson active-set NNLS.
fn nnls(a: &DMatrix<f64>, d: &DVector<f64>) -> Result<(DVector<f64>, usize), QpError> {
    let m = a.ncols();
    let tol = 1e-13 * (1.0 + a.amax() * d.amax()) * (a.nrows().max(m) as f64);
    let mut mu = DVector::zeros(m);
    let mut passive = vec![false; m];
    let max_iter = 3 * m + 50;

    for iter in 0..max_iter {
        let w = a.transpose() * (d - a * &mu);
        let candidate = (0..m)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let j = match candidate {
            Some(j) if w[j] > tol => j,
            _ => return Ok((mu, iter + 1)),
        };
        passive[j] = true;

        loop {
            let idx: Vec<usize> = (0..m).filter(|&k| passive[k]).collect();
            let z = passive_solution(a, d, &idx);
            if idx.iter().zip(z.iter()).all(|(_, &v)| v > 0.0) {
                mu.fill(0.0);
                for (&k, &v) in idx.iter().zip(z.iter()) {
                    mu[k] = v;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&k, &v) in idx.iter().zip(z.iter()) {
                if v <= 0.0 {
                    let denom = mu[k] - v;
                    if denom > 0.0 {
                        alpha = alpha.min(mu[k] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            let alpha = if alpha.is_finite() { alpha } else { 0.0 };
            for (&k, &v) in idx.iter().zip(z.iter()) {
                mu[k] += alpha * (v - mu[k]);
            }
            let floor = 1e-14 * mu.amax();
            for &k in &idx {
                if mu[k] <= floor {
                    mu[k] = 0.0;
                    passive[k] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        if iter + 1 == max_iter {
            break;
        }
    }
    Err(QpError::NoConvergence(max_iter))
}

fn passive_solution(a: &DMatrix<f64>, d: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    let ap = a.select_columns(idx);
    let svd = ap.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    svd.solve(d, eps)
        .unwrap_or_else(|_| DVector::zeros(idx.len()))
}
