use nalgebra::DMatrix;

use super::basis::falling_factorial;
use super::SplineConfig;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients in `s` of `(s + shift)^e`.
fn shifted_power(shift: f64, e: usize) -> Vec<f64> {
    (0..=e)
        .map(|r| binomial(e, r) * shift.powi((e - r) as i32))
        .collect()
}

/// Gram matrix of the `m`-th derivatives of the basis over [0, 1]:
/// `G[a][b] = ∫ D^m φ_a · D^m φ_b dt`.
///
/// Between consecutive breakpoints (0, the knots, 1) every `D^m φ` is a single
/// polynomial, so each piece is integrated in closed form in the local
/// variable `s = t - left`.
pub fn penalty_gram(config: &SplineConfig) -> DMatrix<f64> {
    let p = config.degree;
    let m = config.penalty_order;
    let k = config.n_coeffs();
    let mut gram = DMatrix::zeros(k, k);
    if m > p {
        return gram;
    }

    let mut breaks = Vec::with_capacity(config.knots.len() + 2);
    breaks.push(0.0);
    breaks.extend_from_slice(&config.knots);
    breaks.push(1.0);

    let mut pieces: Vec<Option<Vec<f64>>> = vec![None; k];
    for seg in breaks.windows(2) {
        let (left, right) = (seg[0], seg[1]);
        let width = right - left;
        if width <= 0.0 {
            continue;
        }
        for (j, piece) in pieces.iter_mut().enumerate().take(p + 1) {
            *piece = (j >= m).then(|| {
                let scale = falling_factorial(j, m);
                shifted_power(left, j - m)
                    .into_iter()
                    .map(|c| c * scale)
                    .collect()
            });
        }
        let scale = falling_factorial(p, m);
        for (l, &tau) in config.knots.iter().enumerate() {
            pieces[p + 1 + l] = (tau <= left).then(|| {
                shifted_power(left - tau, p - m)
                    .into_iter()
                    .map(|c| c * scale)
                    .collect()
            });
        }

        // ∫_0^width s^e ds
        let max_e = 2 * (p - m) + 1;
        let moments: Vec<f64> = (0..=max_e)
            .map(|e| width.powi(e as i32 + 1) / (e + 1) as f64)
            .collect();
        for a in 0..k {
            let Some(pa) = &pieces[a] else { continue };
            for b in a..k {
                let Some(pb) = &pieces[b] else { continue };
                let mut acc = 0.0;
                for (r, ca) in pa.iter().enumerate() {
                    for (q, cb) in pb.iter().enumerate() {
                        acc += ca * cb * moments[r + q];
                    }
                }
                gram[(a, b)] += acc;
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    gram
}
