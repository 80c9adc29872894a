use super::types::Lot;
use super::DataError;

/// Result of the outlier screen.
#[derive(Debug, Clone)]
pub struct OutlierReport {
    pub retained: Vec<Lot>,
    /// Removed lot ids with the screened variables that flagged them.
    pub removed: Vec<(String, Vec<&'static str>)>,
}

impl OutlierReport {
    pub fn removed_ids(&self) -> Vec<&str> {
        self.removed.iter().map(|(id, _)| id.as_str()).collect()
    }
}

type Screen = (&'static str, fn(&Lot) -> Option<f64>);

const SCREENED: [Screen; 3] = [
    ("opening_bid", |l| log_positive(l.opening_bid.major())),
    ("area", |l| log_positive(l.area_sqin())),
    ("prev_price", |l| {
        l.prev_price_per_sqin.and_then(|p| log_positive(p.major()))
    }),
];

fn log_positive(v: f64) -> Option<f64> {
    (v > 0.0).then(|| v.ln())
}

/// Drops lots lying more than `k_sd` sample standard deviations from the
/// mean of log opening bid, log area or log prior price per square inch.
///
/// Lots without a positive prior price are not screened on that variable.
/// A variable with zero variance removes nothing.
pub fn filter_outliers(lots: &[Lot], k_sd: f64) -> Result<OutlierReport, DataError> {
    if !(k_sd.is_finite() && k_sd > 0.0) {
        return Err(DataError::Covariate {
            lot_id: String::new(),
            reason: format!("outlier threshold must be positive, got {k_sd}"),
        });
    }
    let mut flags: Vec<Vec<&'static str>> = vec![Vec::new(); lots.len()];
    for (name, extract) in SCREENED {
        let values: Vec<(usize, f64)> = lots
            .iter()
            .enumerate()
            .filter_map(|(i, l)| extract(l).map(|v| (i, v)))
            .collect();
        if values.len() < 2 {
            continue;
        }
        let n = values.len() as f64;
        let mean = values.iter().map(|(_, v)| v).sum::<f64>() / n;
        let var = values.iter().map(|(_, v)| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        if sd <= 0.0 {
            continue;
        }
        for (i, v) in values {
            if (v - mean).abs() > k_sd * sd {
                flags[i].push(name);
            }
        }
    }

    let mut retained = Vec::new();
    let mut removed = Vec::new();
    for (lot, f) in lots.iter().zip(flags) {
        if f.is_empty() {
            retained.push(lot.clone());
        } else {
            removed.push((lot.lot_id.clone(), f));
        }
    }
    Ok(OutlierReport { retained, removed })
}
