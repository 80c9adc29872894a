use std::io::{Read, Write};

use super::RunHeader;
use crate::auction_data::DataError;
use crate::funcreg::{CurveSamples, RegressionResult};
use crate::pspline::{PriceCurve, SensitivityTable};

pub const CURVES_HEADER: [&str; 6] = [
    "lot_id",
    "t_index",
    "t",
    "value",
    "velocity",
    "acceleration",
];
pub const COEFFICIENTS_HEADER: [&str; 8] = [
    "covariate",
    "response",
    "t_index",
    "beta",
    "se",
    "ci_lo",
    "ci_hi",
    "significant",
];
pub const SENSITIVITY_HEADER: [&str; 5] = ["p", "lambda", "rmse", "is_min", "notes"];

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn csv_writer<W: Write>(mut out: W, header: &RunHeader) -> Result<csv::Writer<W>, DataError> {
    header
        .write_to(&mut out)
        .map_err(|e| DataError::Write(e.to_string()))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out))
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<(), DataError> {
    w.flush().map_err(|e| DataError::Write(e.to_string()))
}

/// One row per lot and grid point, `t_index` starting at 1.
pub fn write_curves_csv<W: Write>(
    out: W,
    header: &RunHeader,
    curves: &[PriceCurve],
) -> Result<(), DataError> {
    let mut w = csv_writer(out, header)?;
    w.write_record(CURVES_HEADER)?;
    for c in curves {
        for (i, t) in c.grid.points().iter().enumerate() {
            w.write_record([
                c.lot_id.clone(),
                (i + 1).to_string(),
                t.to_string(),
                num(c.values[i]),
                num(c.velocity[i]),
                num(c.acceleration[i]),
            ])?;
        }
    }
    finish(w)
}

/// Reads a `curves.csv`, lots in order of first appearance.
pub fn read_curves_csv<R: Read>(reader: R) -> Result<Vec<CurveSamples>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != CURVES_HEADER {
        return Err(DataError::BadHeader {
            line: headers.position().map_or(1, |p| p.line()),
            expected: CURVES_HEADER.join(","),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out: Vec<CurveSamples> = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |message: String| DataError::MalformedRow { line, message };
        let field = |i: usize| -> Result<f64, DataError> {
            row[i].parse::<f64>().map_err(|_| {
                bad(format!(
                    "{} is not a number: {:?}",
                    CURVES_HEADER[i], &row[i]
                ))
            })
        };
        let lot_id = row[0].to_string();
        let t_index: usize = row[1]
            .parse()
            .map_err(|_| bad(format!("bad t_index {:?}", &row[1])))?;
        if out.last().is_none_or(|c| c.lot_id != lot_id) {
            if out.iter().any(|c| c.lot_id == lot_id) {
                return Err(bad(format!("rows of lot {lot_id} are not contiguous")));
            }
            out.push(CurveSamples {
                lot_id: lot_id.clone(),
                values: Vec::new(),
                velocity: Vec::new(),
                acceleration: Vec::new(),
            });
        }
        let c = out.last_mut().expect("just pushed");
        if t_index != c.values.len() + 1 {
            return Err(bad(format!(
                "lot {lot_id}: expected t_index {}, found {t_index}",
                c.values.len() + 1
            )));
        }
        c.values.push(field(3)?);
        c.velocity.push(field(4)?);
        c.acceleration.push(field(5)?);
    }
    if let Some(c) = out.iter().find(|c| c.len() != out[0].len()) {
        return Err(DataError::MalformedRow {
            line: 0,
            message: format!(
                "lot {} has {} grid points, others {}",
                c.lot_id,
                c.len(),
                out[0].len()
            ),
        });
    }
    Ok(out)
}

/// Rows grouped by response, then covariate, then grid index. Columns
/// dropped at a grid point are written with empty estimates.
pub fn write_coefficients_csv<W: Write>(
    out: W,
    header: &RunHeader,
    results: &[RegressionResult],
) -> Result<(), DataError> {
    let mut w = csv_writer(out, header)?;
    w.write_record(COEFFICIENTS_HEADER)?;
    for r in results {
        for c in &r.curves {
            for i in 0..c.beta.len() {
                w.write_record([
                    c.covariate.clone(),
                    c.response.as_str().to_string(),
                    (i + 1).to_string(),
                    num(c.beta[i]),
                    num(c.se[i]),
                    num(c.ci_lo[i]),
                    num(c.ci_hi[i]),
                    c.significant[i].to_string(),
                ])?;
            }
        }
    }
    finish(w)
}

pub fn write_sensitivity_csv<W: Write>(
    out: W,
    header: &RunHeader,
    table: &SensitivityTable,
) -> Result<(), DataError> {
    let mut w = csv_writer(out, header)?;
    w.write_record(SENSITIVITY_HEADER)?;
    for c in &table.cells {
        w.write_record([
            c.degree.to_string(),
            c.lambda.to_string(),
            c.rmse.map(num).unwrap_or_default(),
            c.is_min.to_string(),
            c.note.clone(),
        ])?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_prep::Grid;
    use crate::pspline::{fit, SplineConfig};

    fn curve(id: &str, shift: f64) -> PriceCurve {
        let grid = Grid::uniform(5).unwrap();
        let y: Vec<f64> = grid.points().iter().map(|t| shift + t * t).collect();
        let f = fit(&y, &grid, &SplineConfig::new(2, 1, 1, 0.01).unwrap()).unwrap();
        PriceCurve::new(id, f, &grid)
    }

    #[test]
    fn curves_round_trip_through_csv() {
        let curves = vec![curve("a", 0.0), curve("b", 1.0)];
        let mut buf = Vec::new();
        write_curves_csv(&mut buf, &RunHeader::new("smooth"), &curves).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 11);
        let back = read_curves_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for (c, b) in curves.iter().zip(&back) {
            assert_eq!(c.values, b.values);
            assert_eq!(c.velocity, b.velocity);
            assert_eq!(c.acceleration, b.acceleration);
        }
    }

    #[test]
    fn rejects_gaps_and_bad_headers() {
        let gap = "lot_id,t_index,t,value,velocity,acceleration\na,1,0,1,0,0\na,3,1,1,0,0\n";
        assert!(read_curves_csv(gap.as_bytes()).is_err());
        assert!(read_curves_csv("lot,t\n".as_bytes()).is_err());
    }

    #[test]
    fn nan_is_written_as_empty() {
        assert_eq!(num(f64::NAN), "");
        assert_eq!(num(0.1), "0.1");
    }
}
