use rayon::prelude::*;
use serde::Serialize;

use super::{SplineConfig, SplineError, SplineSmoother};
use crate::curve_prep::Grid;

pub const DEFAULT_SENSITIVITY_DEGREES: [usize; 3] = [4, 5, 6];

/// Fourteen log-spaced values from 0.001 to 100.
pub fn default_lambda_values() -> Vec<f64> {
    (0..14)
        .map(|i| 10f64.powf(-3.0 + 5.0 * i as f64 / 13.0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityCell {
    pub degree: usize,
    pub lambda: f64,
    /// Pooled root mean squared residual over all lots and grid points;
    /// `None` when any fit in the cell failed.
    pub rmse: Option<f64>,
    pub note: String,
    pub is_min: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityTable {
    /// Sorted by degree, then lambda.
    pub cells: Vec<SensitivityCell>,
    pub min_index: Option<usize>,
}

impl SensitivityTable {
    pub fn minimum(&self) -> Option<&SensitivityCell> {
        self.min_index.map(|i| &self.cells[i])
    }
}

/// Refits every response for each `(degree, lambda)` pair and records the
/// pooled RMSE. The minimum is flagged; ties go to the smaller lambda, then
/// the smaller degree.
pub fn lambda_sensitivity(
    responses: &[Vec<f64>],
    grid: &Grid,
    degrees: &[usize],
    lambdas: &[f64],
    n_knots: usize,
    penalty_order: usize,
) -> Result<SensitivityTable, SplineError> {
    if degrees.is_empty() || lambdas.is_empty() {
        return Err(SplineError::InvalidConfig(
            "sensitivity sweep needs at least one degree and one lambda".into(),
        ));
    }
    let mut pairs: Vec<(usize, f64)> = degrees
        .iter()
        .flat_map(|&p| lambdas.iter().map(move |&l| (p, l)))
        .collect();
    pairs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs.dedup();

    let mut cells: Vec<SensitivityCell> = pairs
        .par_iter()
        .map(|&(degree, lambda)| {
            let (rmse, note) =
                match cell_rmse(responses, grid, degree, lambda, n_knots, penalty_order) {
                    Ok(r) => (Some(r), String::new()),
                    Err(e) => (None, e.to_string()),
                };
            SensitivityCell {
                degree,
                lambda,
                rmse,
                note,
                is_min: false,
            }
        })
        .collect();

    let min_index = cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.rmse.map(|r| (i, r, c.lambda, c.degree)))
        .min_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(a.2.total_cmp(&b.2))
                .then(a.3.cmp(&b.3))
        })
        .map(|(i, ..)| i);
    if let Some(i) = min_index {
        cells[i].is_min = true;
    }
    Ok(SensitivityTable { cells, min_index })
}

fn cell_rmse(
    responses: &[Vec<f64>],
    grid: &Grid,
    degree: usize,
    lambda: f64,
    n_knots: usize,
    penalty_order: usize,
) -> Result<f64, SplineError> {
    if responses.is_empty() {
        return Err(SplineError::InvalidConfig("no responses to fit".into()));
    }
    let cfg = SplineConfig::new(degree, n_knots, penalty_order, lambda)?;
    let smoother = SplineSmoother::new(grid, &cfg)?;
    let mut rss = 0.0;
    for y in responses {
        rss += smoother.fit(y)?.residual_ss;
    }
    Ok((rss / (responses.len() * grid.len()) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wiggly(grid: &Grid, phase: f64) -> Vec<f64> {
        grid.points()
            .iter()
            .map(|t| (7.0 * t + phase).sin() + t)
            .collect()
    }

    #[test]
    fn default_grid_of_lambdas() {
        let l = default_lambda_values();
        assert_eq!(l.len(), 14);
        assert!((l[0] - 1e-3).abs() < 1e-15);
        assert!((l[13] - 100.0).abs() < 1e-10);
    }

    #[test]
    fn full_table_and_unique_minimum() {
        let grid = Grid::uniform(100).unwrap();
        let ys = vec![wiggly(&grid, 0.0), wiggly(&grid, 1.0)];
        let t =
            lambda_sensitivity(&ys, &grid, &[4, 5, 6], &default_lambda_values(), 10, 2).unwrap();
        assert_eq!(t.cells.len(), 42);
        assert_eq!(t.cells.iter().filter(|c| c.is_min).count(), 1);
        let min = t.minimum().unwrap();
        assert!(t.cells.iter().all(|c| c.rmse.unwrap() >= min.rmse.unwrap()));
    }

    #[test]
    fn penalization_never_lowers_rss() {
        let grid = Grid::uniform(100).unwrap();
        let ys = vec![wiggly(&grid, 0.3)];
        let mut lambdas = default_lambda_values();
        lambdas.push(0.0);
        let t = lambda_sensitivity(&ys, &grid, &[4, 5, 6], &lambdas, 10, 2).unwrap();
        for p in [4, 5, 6] {
            let base = t
                .cells
                .iter()
                .find(|c| c.degree == p && c.lambda == 0.0)
                .unwrap()
                .rmse
                .unwrap();
            for c in t.cells.iter().filter(|c| c.degree == p) {
                assert!(c.rmse.unwrap() >= base * (1.0 - 1e-9));
            }
        }
    }

    #[test]
    fn linear_data_is_exact_everywhere() {
        let grid = Grid::uniform(100).unwrap();
        let ys = vec![grid.points().iter().map(|t| 2.0 - t).collect::<Vec<_>>()];
        let t =
            lambda_sensitivity(&ys, &grid, &[4, 5, 6], &default_lambda_values(), 10, 2).unwrap();
        assert!(t.cells.iter().all(|c| c.rmse.unwrap() < 1e-8));
        assert!(t.minimum().is_some());
    }

    #[test]
    fn failures_stay_in_their_cell() {
        let grid = Grid::uniform(100).unwrap();
        let ys = vec![wiggly(&grid, 0.0)];
        // degree 1 cannot carry a second-order penalty
        let t = lambda_sensitivity(&ys, &grid, &[1, 4], &[0.1], 10, 2).unwrap();
        assert_eq!(t.cells.len(), 2);
        assert!(t.cells[0].rmse.is_none() && !t.cells[0].note.is_empty());
        assert!(t.cells[1].rmse.is_some() && t.cells[1].is_min);
    }
}
