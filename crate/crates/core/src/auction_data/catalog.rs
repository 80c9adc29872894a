use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::types::{ArtistType, Lot, Medium, Money, TimeFormat, Timestamp};
use super::DataError;

/// Header of `lots.csv`.
pub const LOTS_HEADER: [&str; 15] = [
    "lot_id",
    "artist_id",
    "artist_type",
    "opening_bid",
    "low_estimate",
    "high_estimate",
    "position_group",
    "length_in",
    "width_in",
    "medium",
    "prev_price_per_sqin",
    "prev_lots_sold",
    "realized_price",
    "auction_open",
    "auction_close",
];

pub fn parse_lot_catalog(path: &Path) -> Result<Vec<Lot>, DataError> {
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_lots_from_reader(file)
}

pub fn parse_lots_from_reader<R: Read>(reader: R) -> Result<Vec<Lot>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => {
            log::warn!("lot catalog is empty");
            return Ok(Vec::new());
        }
        Some(h) => h?,
    };
    let found: Vec<&str> = header.iter().collect();
    if found != LOTS_HEADER {
        return Err(DataError::BadHeader {
            line: header.position().map(|p| p.line()).unwrap_or(1),
            expected: LOTS_HEADER.join(","),
            found: found.join(","),
        });
    }

    let mut lots = Vec::new();
    let mut ids = HashSet::new();
    for row in rows {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != LOTS_HEADER.len() {
            return Err(DataError::MalformedRow {
                line,
                message: format!("expected {} fields, found {}", LOTS_HEADER.len(), row.len()),
            });
        }
        let lot = parse_row(&row, line)?;
        if !ids.insert(lot.lot_id.clone()) {
            return Err(DataError::DuplicateLot {
                line,
                lot_id: lot.lot_id,
            });
        }
        lots.push(lot);
    }
    Ok(lots)
}

fn parse_row(row: &csv::StringRecord, line: u64) -> Result<Lot, DataError> {
    let malformed = |field: &str, value: &str| DataError::MalformedRow {
        line,
        message: format!("invalid {field} {value:?}"),
    };
    let money = |idx: usize| -> Result<Money, DataError> {
        row[idx]
            .parse()
            .map_err(|_| malformed(LOTS_HEADER[idx], &row[idx]))
    };
    let opt_money = |idx: usize| -> Result<Option<Money>, DataError> {
        if row[idx].is_empty() {
            Ok(None)
        } else {
            money(idx).map(Some)
        }
    };
    let real = |idx: usize| -> Result<f64, DataError> {
        row[idx]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| malformed(LOTS_HEADER[idx], &row[idx]))
    };
    let count = |idx: usize| -> Result<u32, DataError> {
        row[idx]
            .parse()
            .map_err(|_| malformed(LOTS_HEADER[idx], &row[idx]))
    };
    let instant = |idx: usize| -> Result<Timestamp, DataError> {
        let raw = &row[idx];
        Timestamp::detect_format(raw)
            .and_then(|f| Timestamp::parse_as(raw, f))
            .ok_or_else(|| malformed(LOTS_HEADER[idx], raw))
    };

    let lot_id = row[0].to_string();
    if lot_id.is_empty() {
        return Err(malformed("lot_id", ""));
    }
    let artist_type = ArtistType::parse_token(&row[2]).ok_or_else(|| DataError::UnknownToken {
        line,
        field: "artist_type",
        token: row[2].to_string(),
    })?;
    let medium = Medium::parse_token(&row[9]).ok_or_else(|| DataError::UnknownToken {
        line,
        field: "medium",
        token: row[9].to_string(),
    })?;

    let lot = Lot {
        lot_id: lot_id.clone(),
        artist_id: row[1].to_string(),
        artist_type,
        opening_bid: money(3)?,
        low_estimate: money(4)?,
        high_estimate: money(5)?,
        position_group: count(6)?,
        length_in: real(7)?,
        width_in: real(8)?,
        medium,
        prev_price_per_sqin: opt_money(10)?,
        prev_lots_sold: count(11)?,
        realized_price: opt_money(12)?,
        auction_open: instant(13)?,
        auction_close: instant(14)?,
    };
    lot.check_invariants()
        .map_err(|reason| DataError::InvalidLot {
            line,
            lot_id,
            reason,
        })?;
    Ok(lot)
}

/// Writes a catalog in `lots.csv` format.
pub fn write_lot_catalog<W: Write>(
    out: W,
    lots: &[Lot],
    format: TimeFormat,
) -> Result<(), DataError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(LOTS_HEADER)?;
    let opt = |m: Option<Money>| m.map(|v| v.to_string()).unwrap_or_default();
    for l in lots {
        w.write_record([
            l.lot_id.clone(),
            l.artist_id.clone(),
            l.artist_type.as_str().to_string(),
            l.opening_bid.to_string(),
            l.low_estimate.to_string(),
            l.high_estimate.to_string(),
            l.position_group.to_string(),
            l.length_in.to_string(),
            l.width_in.to_string(),
            l.medium.as_str().to_string(),
            opt(l.prev_price_per_sqin),
            l.prev_lots_sold.to_string(),
            opt(l.realized_price),
            l.auction_open.format_as(format),
            l.auction_close.format_as(format),
        ])?;
    }
    w.flush().map_err(|e| DataError::Write(e.to_string()))
}
