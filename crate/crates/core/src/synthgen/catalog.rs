use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::auction_data::{ArtistType, Lot, Medium, Money, Timestamp};

/// Probabilities of 2, 3, ..., 8 distinct bidders per lot (mean 4.06, SD 1.64).
pub const BIDDER_COUNT_PMF: [f64; 7] = [0.2045, 0.2229, 0.2067, 0.1632, 0.1096, 0.0626, 0.0305];

/// Auction open shared by every synthetic lot: 2024-03-04T09:30:00Z.
pub const SYNTHETIC_OPEN_MS: i64 = 1_709_544_600_000;
const THREE_DAYS_MS: i64 = 3 * 24 * 3600 * 1000;
const GROUP_STAGGER_MS: i64 = 30 * 60 * 1000;

/// Mean and standard deviation pairs the catalog generator targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalogMoments {
    pub prev_price_per_sqin: (f64, f64),
    pub prev_lots_sold: (f64, f64),
    pub low_estimate: (f64, f64),
    pub opening_ratio: f64,
    pub high_ratio: f64,
    pub area_sqin: (f64, f64),
    /// Established, emerging, other.
    pub artist_mix: [f64; 3],
    pub canvas_share: f64,
}

impl Default for CatalogMoments {
    fn default() -> Self {
        CatalogMoments {
            prev_price_per_sqin: (36.0, 42.0),
            prev_lots_sold: (19.33, 19.0),
            low_estimate: (13_018.0, 16_131.0),
            opening_ratio: 0.86,
            high_ratio: 1.25,
            area_sqin: (1273.0, 1304.0),
            artist_mix: [33.0, 20.0, 54.0],
            canvas_share: 0.7,
        }
    }
}

impl CatalogMoments {
    /// Implied opening-bid mean and SD.
    pub fn opening_bid(&self) -> (f64, f64) {
        (
            self.opening_ratio * self.low_estimate.0,
            self.opening_ratio * self.low_estimate.1,
        )
    }

    /// Mean and SD of the distinct-bidder count.
    pub fn bidders_per_lot() -> (f64, f64) {
        let mean: f64 = BIDDER_COUNT_PMF
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 2) as f64 * p)
            .sum();
        let var: f64 = BIDDER_COUNT_PMF
            .iter()
            .enumerate()
            .map(|(i, p)| ((i + 2) as f64 - mean).powi(2) * p)
            .sum();
        (mean, var.sqrt())
    }
}

fn lognormal(mean: f64, sd: f64) -> LogNormal<f64> {
    let s2 = (1.0 + (sd / mean).powi(2)).ln();
    LogNormal::new(mean.ln() - s2 / 2.0, s2.sqrt()).expect("positive moments")
}

fn round_half_inch(x: f64) -> f64 {
    ((x * 2.0).round() / 2.0).max(1.0)
}

/// Position-group weights (groups 1 to 5) by artist type: established lots
/// close early and emerging lots late.
fn group_weights(kind: ArtistType) -> [f64; 5] {
    match kind {
        ArtistType::Established => [0.45, 0.25, 0.15, 0.1, 0.05],
        ArtistType::Emerging => [0.05, 0.1, 0.15, 0.25, 0.45],
        ArtistType::Other => [0.2, 0.2, 0.2, 0.2, 0.2],
    }
}

/// Draws `n` lots with windows opening at [`SYNTHETIC_OPEN_MS`]; realized
/// prices are left empty.
pub fn draw_catalog<R: Rng>(rng: &mut R, n: usize, m: &CatalogMoments) -> Vec<Lot> {
    let kinds = [
        ArtistType::Established,
        ArtistType::Emerging,
        ArtistType::Other,
    ];
    let mix = WeightedIndex::new(m.artist_mix).expect("valid mix");
    let low = lognormal(m.low_estimate.0, m.low_estimate.1);
    let area = lognormal(m.area_sqin.0, m.area_sqin.1);
    let prev_price = lognormal(m.prev_price_per_sqin.0, m.prev_price_per_sqin.1);
    let prev_sold = lognormal(m.prev_lots_sold.0 - 1.0, m.prev_lots_sold.1);
    let aspect = Normal::<f64>::new(0.0, 0.35).expect("valid sd");

    (0..n)
        .map(|j| {
            let artist_type = kinds[mix.sample(rng)];
            let group = WeightedIndex::new(group_weights(artist_type))
                .expect("valid weights")
                .sample(rng) as u32
                + 1;
            let low_dollars = low.sample(rng).round().max(10.0);
            let opening = (m.opening_ratio * low_dollars).round().max(1.0);
            let high = (m.high_ratio * low_dollars).round().max(low_dollars);

            let a = area.sample(rng);
            let ratio = aspect.sample(rng).exp();
            let length = round_half_inch((a * ratio).sqrt());
            let width = round_half_inch(a / length);

            let prev = (prev_price.sample(rng) * 100.0).round().max(100.0) as i64;
            let sold = 1 + prev_sold.sample(rng).round() as u32;
            let medium = if rng.random_bool(m.canvas_share) {
                Medium::Canvas
            } else {
                Medium::Paper
            };
            let artist_id = format!(
                "{}-{:02}",
                artist_type.as_str(),
                rng.random_range(1..=12u32)
            );
            let open = SYNTHETIC_OPEN_MS;
            let close = open + THREE_DAYS_MS + GROUP_STAGGER_MS * i64::from(group - 1);
            Lot {
                lot_id: (j + 1).to_string(),
                artist_id,
                artist_type,
                opening_bid: Money::from_major(opening),
                low_estimate: Money::from_major(low_dollars),
                high_estimate: Money::from_major(high),
                position_group: group,
                length_in: length,
                width_in: width,
                medium,
                prev_price_per_sqin: Some(Money(prev)),
                prev_lots_sold: sold,
                realized_price: None,
                auction_open: Timestamp(open),
                auction_close: Timestamp(close),
            }
        })
        .collect()
}
