use nalgebra::{DMatrix, DVector};

use super::{column_names, RegressionError, RegressionUnit, ResponseComponent};

/// Cross-sectional regression problem at one grid index.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    /// One-based grid index.
    pub t_index: usize,
    pub columns: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub lot_ids: Vec<String>,
    /// Dynamic columns omitted because they were constant across lots.
    pub dropped: Vec<String>,
}

/// Builds `[1, x1..x7, x8(t)]` rows and the response at `t_index`
/// (one-based). The bidder column is omitted when it takes the same value
/// for every lot, which happens before the first bids arrive.
///
/// Any cross-section of two or more lots is assembled; whether it can be
/// fitted is checked by [`super::pointwise_ols`].
pub fn assemble_design(
    units: &[RegressionUnit],
    t_index: usize,
    response: ResponseComponent,
) -> Result<DesignMatrix, RegressionError> {
    let names = column_names();
    if units.len() < 2 {
        return Err(RegressionError::NotEstimable {
            lots: units.len(),
            columns: names.len(),
        });
    }
    let n = units[0].curve.len();
    if t_index == 0 || t_index > n {
        return Err(RegressionError::BadIndex { t_index, n });
    }
    let i = t_index - 1;

    let mut rows: Vec<[f64; 9]> = Vec::with_capacity(units.len());
    let mut y = Vec::with_capacity(units.len());
    for u in units {
        let missing = |reason: String| RegressionError::MissingData {
            lot_id: u.lot_id.clone(),
            reason,
        };
        if u.curve.len() != n {
            return Err(missing(format!(
                "curve has {} points, expected {n}",
                u.curve.len()
            )));
        }
        let component = u.curve.component(response);
        if component.len() != n || u.covariates.bidders.len() != n {
            return Err(missing(
                "curve or bidder covariate has the wrong length".into(),
            ));
        }
        let mut row = [1.0; 9];
        row[1..].copy_from_slice(&u.covariates.row_at(i));
        if row.iter().any(|v| !v.is_finite()) {
            return Err(missing("non-finite covariate".into()));
        }
        if !component[i].is_finite() {
            return Err(missing("non-finite response".into()));
        }
        rows.push(row);
        y.push(component[i]);
    }

    let dynamic = names.len() - 1;
    let first = rows[0][dynamic];
    let drop_dynamic = rows.iter().all(|r| r[dynamic] == first);
    let keep: Vec<usize> = (0..names.len())
        .filter(|&c| !(drop_dynamic && c == dynamic))
        .collect();

    let x = DMatrix::from_fn(rows.len(), keep.len(), |r, c| rows[r][keep[c]]);
    Ok(DesignMatrix {
        t_index,
        columns: keep.iter().map(|&c| names[c].to_string()).collect(),
        x,
        y: DVector::from_vec(y),
        lot_ids: units.iter().map(|u| u.lot_id.clone()).collect(),
        dropped: if drop_dynamic {
            vec![names[dynamic].to_string()]
        } else {
            Vec::new()
        },
    })
}
