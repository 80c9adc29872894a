//! Brute-force reference computations. Nothing here calls into `pspline`,
//! `funcreg` or `linalg`; only plain configuration types cross the boundary.

use nalgebra::{DMatrix, DVector};

use crate::pspline::SplineConfig;

/// Largest basis size the PENSS oracle accepts.
pub const ORACLE_MAX_COEFFS: usize = 10;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes by Newton iteration on
/// the Legendre three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn pow_term(u: f64, e: usize) -> f64 {
    let mut r = 1.0;
    for _ in 0..e {
        r *= u;
    }
    r
}

/// `d^order/dt^order` of basis column `j` at `t`, written out term by term.
/// Truncated terms of exponent zero are taken as the right-continuous step.
fn basis_value(cfg: &SplineConfig, j: usize, t: f64, order: usize) -> f64 {
    let p = cfg.degree;
    let (exponent, shift, active) = if j <= p {
        (j, 0.0, true)
    } else {
        let tau = cfg.knots[j - p - 1];
        (p, tau, t >= tau)
    };
    if !active || order > exponent {
        return 0.0;
    }
    let mut coef = 1.0;
    for k in 0..order {
        coef *= (exponent - k) as f64;
    }
    coef * pow_term(t - shift, exponent - order)
}

/// Design matrix on `points` from the explicit basis definition.
pub fn oracle_basis(cfg: &SplineConfig, points: &[f64]) -> DMatrix<f64> {
    let k = cfg.degree + 1 + cfg.knots.len();
    DMatrix::from_fn(points.len(), k, |r, c| basis_value(cfg, c, points[r], 0))
}

/// `∫₀¹ D^m φ_i D^m φ_j dt` by composite Gauss–Legendre quadrature with the
/// knots as panel boundaries (each panel integrand is a polynomial).
pub fn oracle_penalty_gram(cfg: &SplineConfig) -> DMatrix<f64> {
    let k = cfg.degree + 1 + cfg.knots.len();
    let m = cfg.penalty_order;
    let (nodes, weights) = gauss_legendre(cfg.degree + 8);
    let mut edges = vec![0.0];
    edges.extend(cfg.knots.iter().copied());
    edges.push(1.0);
    let mut gram = DMatrix::zeros(k, k);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, wt) in nodes.iter().zip(&weights) {
            let t = mid + half * x;
            let d: Vec<f64> = (0..k).map(|j| basis_value(cfg, j, t, m)).collect();
            for i in 0..k {
                for j in 0..k {
                    gram[(i, j)] += half * wt * d[i] * d[j];
                }
            }
        }
    }
    gram
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleFit {
    pub coeffs: Vec<f64>,
    pub rss: f64,
    pub penalty: f64,
    pub objective: f64,
}

/// Minimizes `‖y − Bc‖² + λ cᵀPc` through the SVD pseudo-inverse of the
/// normal equations. Returns `None` above [`ORACLE_MAX_COEFFS`] coefficients.
pub fn oracle_penss(y: &[f64], points: &[f64], cfg: &SplineConfig) -> Option<OracleFit> {
    let k = cfg.degree + 1 + cfg.knots.len();
    if k > ORACLE_MAX_COEFFS || y.len() != points.len() {
        return None;
    }
    let b = oracle_basis(cfg, points);
    let p = oracle_penalty_gram(cfg);
    let yv = DVector::from_column_slice(y);
    let a = b.transpose() * &b + &p * cfg.lambda;
    let rhs = b.transpose() * &yv;
    let svd = a.svd(true, true);
    let tol = 1e-14 * svd.singular_values.max();
    let c = svd.solve(&rhs, tol).ok()?;
    let coeffs: Vec<f64> = c.iter().copied().collect();
    let (rss, penalty) = oracle_objective(y, points, cfg, &coeffs);
    Some(OracleFit {
        coeffs,
        rss,
        penalty,
        objective: rss + cfg.lambda * penalty,
    })
}

/// `(RSS, cᵀPc)` for arbitrary coefficients, using the oracle's own basis and
/// quadrature.
pub fn oracle_objective(y: &[f64], points: &[f64], cfg: &SplineConfig, c: &[f64]) -> (f64, f64) {
    let b = oracle_basis(cfg, points);
    let p = oracle_penalty_gram(cfg);
    let cv = DVector::from_column_slice(c);
    let r = DVector::from_column_slice(y) - &b * &cv;
    (r.norm_squared(), (cv.transpose() * p * &cv)[(0, 0)])
}

/// Closed-form least squares line `(intercept, slope)`.
pub fn ols_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    (ym - slope * xm, slope)
}
