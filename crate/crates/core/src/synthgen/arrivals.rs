use rand::distr::weighted::WeightedIndex;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use super::catalog::BIDDER_COUNT_PMF;
use super::SynthError;
use crate::auction_data::Lot;
use crate::curve_prep::Grid;

/// Size of the shared pool bidders are drawn from.
pub const BIDDER_POOL: usize = 127;

/// U-shaped bid arrival rate `rate·g·((1 − w) + w(2t − 1)²)` on normalized
/// time, where `g ~ Gamma(dispersion, 1/dispersion)` varies per lot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Intensity {
    pub rate: f64,
    pub u_weight: f64,
    /// Gamma shape of the per-lot rate multiplier; larger is less dispersed.
    pub dispersion: f64,
}

impl Default for Intensity {
    fn default() -> Self {
        Intensity {
            rate: 20.0,
            u_weight: 0.8,
            dispersion: 5.3,
        }
    }
}

impl Intensity {
    pub fn at(&self, t: f64) -> f64 {
        let u = 2.0 * t - 1.0;
        self.rate * ((1.0 - self.u_weight) + self.u_weight * u * u)
    }

    /// Expected bids per lot before the two-bid minimum is applied.
    pub fn expected_count(&self) -> f64 {
        self.rate * ((1.0 - self.u_weight) + self.u_weight / 3.0)
    }

    pub(crate) fn validate(&self) -> Result<(), SynthError> {
        let ok = self.rate > 0.0
            && self.rate.is_finite()
            && (0.0..=1.0).contains(&self.u_weight)
            && self.dispersion > 0.0
            && self.dispersion.is_finite();
        if ok {
            Ok(())
        } else {
            Err(SynthError::InvalidSpec(format!("bad intensity {self:?}")))
        }
    }
}

/// Bid times (ms since epoch, strictly increasing inside the lot window) and
/// the bidder behind each one.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrivals {
    pub timestamps: Vec<i64>,
    pub bidders: Vec<String>,
}

impl Arrivals {
    /// Log running count of distinct bidders on `grid`, floored at one bidder.
    pub fn bidder_covariate(&self, lot: &Lot, grid: &Grid) -> Vec<f64> {
        let open = lot.auction_open.0;
        let span = (lot.auction_close.0 - open) as f64;
        let mut seen: Vec<&str> = Vec::new();
        let mut next = 0;
        grid.points()
            .iter()
            .map(|&t| {
                while next < self.timestamps.len()
                    && (self.timestamps[next] - open) as f64 / span <= t
                {
                    let b = self.bidders[next].as_str();
                    if !seen.contains(&b) {
                        seen.push(b);
                    }
                    next += 1;
                }
                (seen.len().max(1) as f64).ln()
            })
            .collect()
    }
}

/// Thinned Poisson arrivals, redrawn until at least two bids land in the
/// window. Consecutive bids always come from different bidders.
pub fn draw_arrivals<R: Rng>(
    rng: &mut R,
    intensity: &Intensity,
    lot: &Lot,
) -> Result<Arrivals, SynthError> {
    intensity.validate()?;
    let open = lot.auction_open.0;
    let close = lot.auction_close.0;
    let span = close - open;
    if span < 4 {
        return Err(SynthError::InvalidSpec(format!(
            "lot {} window too short",
            lot.lot_id
        )));
    }

    let multiplier = Gamma::new(intensity.dispersion, 1.0 / intensity.dispersion)
        .expect("validated shape")
        .sample(rng);
    let peak = intensity.rate * multiplier.max(1e-6);
    let gap = Exp::new(peak).expect("positive rate");
    let mut times: Vec<f64> = Vec::new();
    for _ in 0..1000 {
        times.clear();
        let mut t = gap.sample(rng);
        while t < 1.0 {
            if rng.random::<f64>() * intensity.rate <= intensity.at(t) {
                times.push(t);
            }
            t += gap.sample(rng);
        }
        if times.len() >= 2 {
            break;
        }
    }
    if times.len() < 2 {
        times = vec![rng.random::<f64>(), rng.random::<f64>()];
        times.sort_by(f64::total_cmp);
    }

    let mut timestamps: Vec<i64> = Vec::with_capacity(times.len());
    for t in &times {
        let mut ms = open + (t * span as f64).round() as i64;
        if let Some(&prev) = timestamps.last() {
            ms = ms.max(prev + 1);
        }
        timestamps.push(ms.clamp(open + 1, close));
    }
    // clamping at the close can leave ties at the very end
    for i in (0..timestamps.len().saturating_sub(1)).rev() {
        if timestamps[i] >= timestamps[i + 1] {
            timestamps[i] = timestamps[i + 1] - 1;
        }
    }

    let k = 2 + WeightedIndex::new(BIDDER_COUNT_PMF)
        .expect("valid weights")
        .sample(rng);
    let roster: Vec<usize> = sample(rng, BIDDER_POOL, k).into_vec();
    let mut bidders = Vec::with_capacity(timestamps.len());
    let mut last: Option<usize> = None;
    for _ in 0..timestamps.len() {
        let pick = loop {
            let b = roster[rng.random_range(0..k)];
            if Some(b) != last {
                break b;
            }
        };
        last = Some(pick);
        bidders.push(format!("b{:03}", pick + 1));
    }
    Ok(Arrivals {
        timestamps,
        bidders,
    })
}
