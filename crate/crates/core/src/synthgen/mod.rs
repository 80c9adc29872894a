//! Synthetic auctions with known coefficient curves, plus independent oracles
//! used to check the numerical modules.

mod arrivals;
mod catalog;
mod coverage;
pub mod oracle;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auction_data::{
    write_bids, write_lot_catalog, BidHistory, BidRecord, DataError, Lot, Money, TimeFormat,
    Timestamp,
};
use crate::funcreg::column_names;

pub use arrivals::{draw_arrivals, Arrivals, Intensity};
pub use catalog::{draw_catalog, CatalogMoments, BIDDER_COUNT_PMF};
pub use coverage::{coverage_experiment, CoverageReport, CoverageRow};

/// Name of the generator recorded in output metadata.
pub const RNG_NAME: &str = "ChaCha20 (rand_chacha), seed_from_u64, one stream per lot";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid truth spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("coverage experiment failed: {0}")]
    Coverage(String),
}

/// Piecewise-linear function through `(t, value)` control points, held
/// constant outside the first and last point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PiecewiseLinear(pub Vec<(f64, f64)>);

impl PiecewiseLinear {
    pub fn constant(v: f64) -> Self {
        PiecewiseLinear(vec![(0.0, v)])
    }

    pub fn linear(start: f64, end: f64) -> Self {
        PiecewiseLinear(vec![(0.0, start), (1.0, end)])
    }

    pub fn eval(&self, t: f64) -> f64 {
        let pts = &self.0;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        let last = pts[pts.len() - 1];
        if t >= last.0 {
            return last.1;
        }
        let k = pts.partition_point(|p| p.0 <= t);
        let (t0, v0) = pts[k - 1];
        let (t1, v1) = pts[k];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    fn validate(&self, name: &str) -> Result<(), SynthError> {
        let bad = |msg: &str| SynthError::InvalidSpec(format!("beta curve {name}: {msg}"));
        if self.0.is_empty() {
            return Err(bad("needs at least one control point"));
        }
        if self.0.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(bad("non-finite control point"));
        }
        if self.0.iter().any(|(t, _)| !(0.0..=1.0).contains(t)) {
            return Err(bad("control times must lie in [0, 1]"));
        }
        if self.0.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(bad("control times must be strictly increasing"));
        }
        Ok(())
    }
}

/// Everything needed to regenerate a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthSpec {
    /// Coefficient curves keyed by regression column name; absent columns
    /// have a zero coefficient.
    pub beta_curves: BTreeMap<String, PiecewiseLinear>,
    pub noise_sd: f64,
    pub n_lots: usize,
    pub intensity: Intensity,
    pub seed: u64,
}

impl Default for TruthSpec {
    fn default() -> Self {
        let mut beta_curves = BTreeMap::new();
        beta_curves.insert("intercept".into(), PiecewiseLinear::linear(0.0, 11.5));
        beta_curves.insert("opening_bid".into(), PiecewiseLinear::linear(1.0, 0.0));
        beta_curves.insert("established".into(), PiecewiseLinear::linear(0.0, 0.3));
        beta_curves.insert("canvas".into(), PiecewiseLinear::linear(0.0, 0.1));
        beta_curves.insert("bidders".into(), PiecewiseLinear::linear(0.0, 0.15));
        TruthSpec {
            beta_curves,
            noise_sd: 0.05,
            n_lots: 107,
            intensity: Intensity::default(),
            seed: 42,
        }
    }
}

impl TruthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let names = column_names();
        let min_lots = names.len() + 1;
        if self.n_lots < min_lots {
            return Err(SynthError::InvalidSpec(format!(
                "n_lots must be at least {min_lots}, got {}",
                self.n_lots
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(SynthError::InvalidSpec(format!(
                "noise_sd must be finite and >= 0, got {}",
                self.noise_sd
            )));
        }
        for (name, curve) in &self.beta_curves {
            if !names.contains(&name.as_str()) {
                return Err(SynthError::InvalidSpec(format!(
                    "unknown covariate {name:?}; expected one of {names:?}"
                )));
            }
            curve.validate(name)?;
        }
        self.intensity.validate()
    }

    /// True coefficients in regression column order at normalized time `t`.
    pub fn beta_at(&self, t: f64) -> Vec<f64> {
        column_names()
            .iter()
            .map(|n| self.beta_curves.get(*n).map_or(0.0, |c| c.eval(t)))
            .collect()
    }
}

/// Metadata written next to a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub tool_version: String,
    pub rng: String,
    pub seed: u64,
    pub columns: Vec<String>,
    pub spec: TruthSpec,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub lots: Vec<Lot>,
    pub bids: BidHistory,
    pub truth: TruthRecord,
}

/// Fixed regressors `[1, x1..x7]` of a lot as the analysis computes them.
pub(crate) fn fixed_row(lot: &Lot) -> [f64; 8] {
    use crate::auction_data::{ArtistType, Medium};
    let prev = lot.prev_price_per_sqin.map_or(0.0, |m| m.major());
    [
        1.0,
        prev.ln(),
        (lot.artist_type == ArtistType::Established) as u8 as f64,
        (lot.artist_type == ArtistType::Emerging) as u8 as f64,
        lot.opening_bid.major().ln(),
        f64::from(lot.position_group).ln(),
        lot.area_sqin().ln(),
        (lot.medium == Medium::Canvas) as u8 as f64,
    ]
}

pub(crate) fn lot_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generates lots and bid histories from `spec`.
///
/// Each lot's log price follows `x(t)ᵀβ(t) + a + b·t`, with `a, b ~ N(0, σ²)`
/// per lot, where `x(t)` includes the running log count of distinct bidders.
/// Bids are that curve at the arrival times plus `N(0, σ²)` noise,
/// exponentiated, made non-decreasing by a running maximum and rounded to
/// cents.
pub fn gen_dataset(spec: &TruthSpec) -> Result<SyntheticDataset, SynthError> {
    spec.validate()?;
    let mut catalog_rng = lot_rng(spec.seed, 0);
    let mut lots = draw_catalog(&mut catalog_rng, spec.n_lots, &CatalogMoments::default());
    let noise = Normal::new(0.0, spec.noise_sd).expect("validated sd");

    let mut records = Vec::new();
    for (j, lot) in lots.iter_mut().enumerate() {
        let mut rng = lot_rng(spec.seed, j as u64 + 1);
        let arrivals = draw_arrivals(&mut rng, &spec.intensity, lot)?;
        let a = noise.sample(&mut rng);
        let b = noise.sample(&mut rng);
        let fixed = fixed_row(lot);
        let span = (lot.auction_close.0 - lot.auction_open.0) as f64;

        let mut running = f64::NEG_INFINITY;
        let mut seen: Vec<&str> = Vec::new();
        for (ms, bidder) in arrivals.timestamps.iter().zip(&arrivals.bidders) {
            if !seen.contains(&bidder.as_str()) {
                seen.push(bidder);
            }
            let t = (ms - lot.auction_open.0) as f64 / span;
            let beta = spec.beta_at(t);
            let mut latent: f64 = fixed.iter().zip(&beta).map(|(x, b)| x * b).sum();
            latent += beta[8] * (seen.len() as f64).ln();
            latent += a + b * t + noise.sample(&mut rng);
            running = running.max(latent);
            let cents = ((running.exp() * 100.0).round() as i64).max(1);
            records.push(BidRecord {
                lot_id: lot.lot_id.clone(),
                bidder_id: bidder.clone(),
                timestamp: Timestamp(*ms),
                amount: Money(cents),
            });
        }
        lot.realized_price = records.last().map(|r| r.amount);
    }

    let bids = BidHistory::from_records(records, TimeFormat::Iso8601);
    let truth = TruthRecord {
        tool_version: crate::VERSION.to_string(),
        rng: RNG_NAME.to_string(),
        seed: spec.seed,
        columns: column_names().iter().map(|s| s.to_string()).collect(),
        spec: spec.clone(),
    };
    Ok(SyntheticDataset { lots, bids, truth })
}

/// Writes `lots.csv`, `bids.csv` and `truth.json` into `dir`. `preamble` is
/// copied verbatim to the top of both CSV files and should consist of `#`
/// comment lines.
pub fn write_dataset(ds: &SyntheticDataset, dir: &Path, preamble: &str) -> Result<(), SynthError> {
    std::fs::create_dir_all(dir)?;
    let open = |name: &str| -> Result<BufWriter<File>, SynthError> {
        let mut w = BufWriter::new(File::create(dir.join(name))?);
        w.write_all(preamble.as_bytes())?;
        Ok(w)
    };
    write_lot_catalog(open("lots.csv")?, &ds.lots, TimeFormat::Iso8601)?;
    write_bids(open("bids.csv")?, &ds.bids, TimeFormat::Iso8601)?;
    let mut json = serde_json::to_string_pretty(&ds.truth)?;
    json.push('\n');
    std::fs::write(dir.join("truth.json"), json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_prep::{prepare_response, Grid, PrepOptions, ResponseKind};

    fn small_spec(seed: u64) -> TruthSpec {
        TruthSpec {
            n_lots: 30,
            seed,
            ..TruthSpec::default()
        }
    }

    #[test]
    fn piecewise_linear_evaluation() {
        let f = PiecewiseLinear(vec![(0.2, 1.0), (0.6, 3.0), (1.0, 2.0)]);
        assert_eq!(f.eval(0.0), 1.0);
        assert_eq!(f.eval(0.4), 2.0);
        assert_eq!(f.eval(0.6), 3.0);
        assert_eq!(f.eval(0.8), 2.5);
        assert_eq!(f.eval(1.0), 2.0);
        assert_eq!(PiecewiseLinear::constant(4.0).eval(0.7), 4.0);
    }

    #[test]
    fn spec_validation() {
        let mut s = TruthSpec::default();
        assert!(s.validate().is_ok());
        s.n_lots = 0;
        assert!(s.validate().is_err());
        let mut s = TruthSpec::default();
        s.beta_curves
            .insert("colour".into(), PiecewiseLinear::constant(1.0));
        assert!(s.validate().is_err());
        let mut s = TruthSpec::default();
        s.beta_curves
            .insert("area".into(), PiecewiseLinear(vec![(0.5, 1.0), (0.5, 2.0)]));
        assert!(s.validate().is_err());
        let s = TruthSpec {
            noise_sd: -1.0,
            ..TruthSpec::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn spec_json_round_trip_and_defaults() {
        let s: TruthSpec = serde_json::from_str(r#"{"n_lots": 12, "seed": 7}"#).unwrap();
        assert_eq!(s.n_lots, 12);
        assert_eq!(s.beta_curves, TruthSpec::default().beta_curves);
        let text = serde_json::to_string(&TruthSpec::default()).unwrap();
        assert_eq!(
            serde_json::from_str::<TruthSpec>(&text).unwrap(),
            TruthSpec::default()
        );
        assert!(serde_json::from_str::<TruthSpec>(r#"{"lots": 3}"#).is_err());
    }

    #[test]
    fn same_seed_same_data() {
        let a = gen_dataset(&small_spec(9)).unwrap();
        let b = gen_dataset(&small_spec(9)).unwrap();
        assert_eq!(a.lots, b.lots);
        assert_eq!(
            a.bids.iter().collect::<Vec<_>>(),
            b.bids.iter().collect::<Vec<_>>()
        );
        let c = gen_dataset(&small_spec(10)).unwrap();
        assert_ne!(a.lots, c.lots);
    }

    #[test]
    fn bids_positive_ascending_and_inside_window() {
        let ds = gen_dataset(&small_spec(3)).unwrap();
        for lot in &ds.lots {
            let bids = ds.bids.lot(&lot.lot_id);
            assert!(bids.len() >= 2);
            assert!(bids
                .iter()
                .all(|b| b.amount.is_positive() && lot.contains(b.timestamp)));
            assert!(bids
                .windows(2)
                .all(|w| w[0].amount <= w[1].amount && w[0].timestamp < w[1].timestamp));
            assert!(bids.windows(2).all(|w| w[0].bidder_id != w[1].bidder_id));
            assert_eq!(lot.realized_price, Some(bids.last().unwrap().amount));
            lot.check_invariants().unwrap();
        }
    }

    #[test]
    fn noise_free_constant_beta_is_recovered_exactly() {
        let mut beta_curves = BTreeMap::new();
        beta_curves.insert("opening_bid".to_string(), PiecewiseLinear::constant(1.0));
        let spec = TruthSpec {
            beta_curves,
            noise_sd: 0.0,
            n_lots: 20,
            ..TruthSpec::default()
        };
        let ds = gen_dataset(&spec).unwrap();
        let grid = Grid::uniform(100).unwrap();
        let opts = PrepOptions {
            response: ResponseKind::LogPrice,
            ..PrepOptions::default()
        };
        for lot in &ds.lots {
            let r = prepare_response(
                &lot.lot_id,
                ds.bids.lot(&lot.lot_id),
                lot.auction_open,
                lot.auction_close,
                &grid,
                &opts,
            )
            .unwrap();
            let expected = lot.opening_bid.major().ln();
            assert!(
                r.values.iter().all(|&v| v == expected),
                "lot {}",
                lot.lot_id
            );
        }
    }

    #[test]
    fn default_spec_bid_counts_look_like_the_real_auction() {
        let ds = gen_dataset(&TruthSpec::default()).unwrap();
        let mean = ds.bids.total_bids() as f64 / ds.lots.len() as f64;
        assert!((5.0..=15.0).contains(&mean), "mean bids per lot {mean}");
    }
}
