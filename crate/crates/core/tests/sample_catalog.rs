//! Ingestion of the four lots from the published lot table and summary
//! statistics over the published per-lot counts.

use std::path::PathBuf;

use auctionfda::auction_data::PrevPriceTransform;
use auctionfda::auction_data::{parse_bid_history, parse_lot_catalog, summarize};
use auctionfda::curve_prep::{prepare_response, Grid, PrepOptions};
use auctionfda::funcreg::{assemble_design, CurveSamples, RegressionUnit};
use auctionfda::pipeline::{smooth_lots, AnalysisOptions};
use auctionfda::{
    build_covariates, ArtistType, CovariateOptions, Medium, Money, ResponseComponent,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

struct Row {
    id: &'static str,
    bids: usize,
    bidders: usize,
    low: i64,
    high: i64,
    realized: i64,
    length: f64,
    width: f64,
    medium: Medium,
    artist: &'static str,
    kind: ArtistType,
}

const TABLE: [Row; 4] = [
    Row {
        id: "1",
        bids: 12,
        bidders: 4,
        low: 4_000,
        high: 5_000,
        realized: 7_794,
        length: 40.5,
        width: 68.5,
        medium: Medium::Canvas,
        artist: "Ali, J. S.",
        kind: ArtistType::Other,
    },
    Row {
        id: "10",
        bids: 5,
        bidders: 4,
        low: 6_340,
        high: 8_560,
        realized: 7_794,
        length: 17.0,
        width: 14.0,
        medium: Medium::Paper,
        artist: "Sabavala, J.",
        kind: ArtistType::Other,
    },
    Row {
        id: "16",
        bids: 11,
        bidders: 5,
        low: 26_670,
        high: 31_120,
        realized: 46_225,
        length: 36.0,
        width: 36.0,
        medium: Medium::Canvas,
        artist: "Kumar, R.",
        kind: ArtistType::Established,
    },
    Row {
        id: "81",
        bids: 15,
        bidders: 5,
        low: 5_000,
        high: 6_000,
        realized: 12_094,
        length: 30.0,
        width: 71.0,
        medium: Medium::Canvas,
        artist: "Sharma, N.",
        kind: ArtistType::Emerging,
    },
];

fn dollars(v: i64) -> Money {
    Money(v * 100)
}

#[test]
fn lot_table_is_reproduced_field_by_field() {
    let lots = parse_lot_catalog(&fixture("sample_lots.csv")).unwrap();
    let bids = parse_bid_history(&fixture("sample_bids.csv"), Some(&lots)).unwrap();
    assert_eq!(lots.len(), 4);
    for (lot, row) in lots.iter().zip(&TABLE) {
        assert_eq!(lot.lot_id, row.id);
        assert_eq!(lot.artist_id, row.artist);
        assert_eq!(lot.artist_type, row.kind);
        assert_eq!(lot.low_estimate, dollars(row.low));
        assert_eq!(lot.high_estimate, dollars(row.high));
        assert_eq!(lot.realized_price, Some(dollars(row.realized)));
        assert_eq!(lot.length_in, row.length);
        assert_eq!(lot.width_in, row.width);
        assert_eq!(lot.medium, row.medium);

        let history = bids.lot(row.id);
        assert_eq!(history.len(), row.bids, "lot {}", row.id);
        assert_eq!(bids.unique_bidders(row.id), row.bidders, "lot {}", row.id);
        assert_eq!(history.last().unwrap().amount, dollars(row.realized));
    }
}

#[test]
fn lot_sixteen_area_and_lot_one_final_log_price() {
    let lots = parse_lot_catalog(&fixture("sample_lots.csv")).unwrap();
    let bids = parse_bid_history(&fixture("sample_bids.csv"), Some(&lots)).unwrap();
    let grid = Grid::default();
    let opts = CovariateOptions {
        prev_price: PrevPriceTransform::Log1p,
    };
    let x = build_covariates(&lots[2], bids.lot("16"), &grid, &opts).unwrap();
    assert!((x.area() - 1296f64.ln()).abs() < 1e-12);
    assert_eq!(x.canvas(), 1.0);
    assert_eq!(x.established(), 1.0);

    let r = prepare_response(
        "1",
        bids.lot("1"),
        lots[0].auction_open,
        lots[0].auction_close,
        &grid,
        &PrepOptions::default(),
    )
    .unwrap();
    assert!((r.final_log_price - 8.961_109_485_9).abs() < 1e-9);
}

#[test]
fn four_lot_design_at_midpoint() {
    let lots = parse_lot_catalog(&fixture("sample_lots.csv")).unwrap();
    let bids = parse_bid_history(&fixture("sample_bids.csv"), Some(&lots)).unwrap();
    let mut opts = AnalysisOptions::default();
    opts.covariates.prev_price = PrevPriceTransform::Log1p;
    let smoothed = smooth_lots(&lots, &bids, &opts).unwrap();
    assert_eq!(smoothed.curves.len(), 4);
    let units: Vec<RegressionUnit> = lots
        .iter()
        .zip(&smoothed.curves)
        .map(|(lot, c)| RegressionUnit {
            lot_id: lot.lot_id.clone(),
            covariates: build_covariates(lot, bids.lot(&lot.lot_id), &opts.grid, &opts.covariates)
                .unwrap(),
            curve: CurveSamples::from(c),
        })
        .collect();
    let d = assemble_design(&units, 50, ResponseComponent::Level).unwrap();
    assert_eq!(d.x.shape(), (4, 9));
    let x8: Vec<f64> = d.x.column(8).iter().copied().collect();
    let expected: Vec<f64> = [2.0f64, 4.0, 3.0, 5.0].iter().map(|v| v.ln()).collect();
    assert_eq!(x8, expected);
}

fn counts() -> (Vec<f64>, Vec<f64>) {
    let mut rdr = csv::Reader::from_path(fixture("lot_counts.csv")).unwrap();
    let (mut bidders, mut bids) = (Vec::new(), Vec::new());
    for row in rdr.records() {
        let row = row.unwrap();
        bidders.push(row[1].parse().unwrap());
        bids.push(row[2].parse().unwrap());
    }
    (bidders, bids)
}

fn round_to(v: f64, places: i32) -> f64 {
    let s = 10f64.powi(places);
    (v * s).round() / s
}

#[test]
fn per_lot_counts_reproduce_summary_rows() {
    let (bidders, bids) = counts();
    assert_eq!(bidders.len(), 107);

    let s = summarize(&bidders).unwrap();
    assert_eq!(round_to(s.mean, 2), 4.06);
    assert_eq!(round_to(s.sd, 2), 1.64);
    assert_eq!((s.median, s.min, s.max), (4.0, 2.0, 8.0));

    let s = summarize(&bids).unwrap();
    assert!((s.mean - 9.504).abs() < 1e-3);
    assert_eq!(round_to(s.sd, 3), 5.159);
    assert_eq!((s.median, s.min, s.max), (8.0, 2.0, 23.0));
}
