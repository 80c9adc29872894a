use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::types::{BidRecord, Lot, Money, TimeFormat, Timestamp};
use super::{DataError, BIDS_HEADER};

/// Bids grouped by lot, each group sorted by timestamp (ties by amount).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BidHistory {
    groups: BTreeMap<String, Vec<BidRecord>>,
    format: TimeFormat,
}

impl BidHistory {
    /// Groups and sorts arbitrary records without validation.
    pub fn from_records(records: Vec<BidRecord>, format: TimeFormat) -> Self {
        let mut groups: BTreeMap<String, Vec<BidRecord>> = BTreeMap::new();
        for r in records {
            groups.entry(r.lot_id.clone()).or_default().push(r);
        }
        for bids in groups.values_mut() {
            bids.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.amount.cmp(&b.amount)));
        }
        BidHistory { groups, format }
    }

    pub fn lot(&self, lot_id: &str) -> &[BidRecord] {
        self.groups.get(lot_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn lot_ids(&self) -> impl Iterator<Item = &str> {
        self.groups.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[BidRecord])> {
        self.groups.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn n_lots(&self) -> usize {
        self.groups.len()
    }

    pub fn total_bids(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn time_format(&self) -> TimeFormat {
        self.format
    }

    pub fn unique_bidders(&self, lot_id: &str) -> usize {
        self.lot(lot_id)
            .iter()
            .map(|b| b.bidder_id.as_str())
            .collect::<HashSet<_>>()
            .len()
    }
}

/// Reads `bids.csv`. When a catalog is supplied every bid must belong to a
/// listed lot and fall inside that lot's auction window.
pub fn parse_bid_history(path: &Path, catalog: Option<&[Lot]>) -> Result<BidHistory, DataError> {
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_bids_from_reader(file, catalog)
}

pub fn parse_bids_from_reader<R: Read>(
    reader: R,
    catalog: Option<&[Lot]>,
) -> Result<BidHistory, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let windows: Option<HashMap<&str, &Lot>> =
        catalog.map(|lots| lots.iter().map(|l| (l.lot_id.as_str(), l)).collect());

    let mut rows = rdr.records();
    let header = match rows.next() {
        None => {
            log::warn!("bid history is empty");
            return Ok(BidHistory::default());
        }
        Some(h) => h?,
    };
    let header_line = header.position().map(|p| p.line()).unwrap_or(1);
    let found: Vec<&str> = header.iter().collect();
    if found != BIDS_HEADER {
        return Err(DataError::BadHeader {
            line: header_line,
            expected: BIDS_HEADER.join(","),
            found: found.join(","),
        });
    }

    let mut format: Option<TimeFormat> = None;
    let mut seen: HashSet<(String, String, Timestamp)> = HashSet::new();
    let mut parsed: Vec<(u64, BidRecord)> = Vec::new();

    for row in rows {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != BIDS_HEADER.len() {
            return Err(DataError::MalformedRow {
                line,
                message: format!("expected {} fields, found {}", BIDS_HEADER.len(), row.len()),
            });
        }
        let lot_id = row[0].to_string();
        let bidder_id = row[1].to_string();
        if lot_id.is_empty() || bidder_id.is_empty() {
            return Err(DataError::MalformedRow {
                line,
                message: "empty lot_id or bidder_id".into(),
            });
        }
        let raw_ts = &row[2];
        let fmt = match format {
            Some(f) => f,
            None => {
                let f =
                    Timestamp::detect_format(raw_ts).ok_or_else(|| DataError::MalformedRow {
                        line,
                        message: format!("unrecognised timestamp {raw_ts:?}"),
                    })?;
                format = Some(f);
                f
            }
        };
        let timestamp =
            Timestamp::parse_as(raw_ts, fmt).ok_or_else(|| DataError::MalformedRow {
                line,
                message: format!("timestamp {raw_ts:?} does not match the file's {fmt:?} format"),
            })?;
        let amount: Money = row[3].parse().map_err(|e| DataError::MalformedRow {
            line,
            message: format!("{e}"),
        })?;
        if !amount.is_positive() {
            return Err(DataError::NonPositiveAmount {
                line,
                lot_id,
                amount,
            });
        }
        if let Some(w) = &windows {
            let lot = w
                .get(lot_id.as_str())
                .ok_or_else(|| DataError::UnknownLot {
                    line,
                    lot_id: lot_id.clone(),
                })?;
            if !lot.contains(timestamp) {
                return Err(DataError::OutsideWindow {
                    line,
                    lot_id,
                    timestamp: raw_ts.to_string(),
                });
            }
        }
        if !seen.insert((lot_id.clone(), bidder_id.clone(), timestamp)) {
            return Err(DataError::DuplicateBid {
                line,
                lot_id,
                bidder_id,
                timestamp: raw_ts.to_string(),
            });
        }
        parsed.push((
            line,
            BidRecord {
                lot_id,
                bidder_id,
                timestamp,
                amount,
            },
        ));
    }

    if parsed.is_empty() {
        log::warn!("bid history has a header but no bids");
    }

    let mut grouped: BTreeMap<String, Vec<(u64, BidRecord)>> = BTreeMap::new();
    for (line, rec) in parsed {
        grouped
            .entry(rec.lot_id.clone())
            .or_default()
            .push((line, rec));
    }
    let mut groups = BTreeMap::new();
    for (lot_id, mut bids) in grouped {
        bids.sort_by(|(_, a), (_, b)| a.timestamp.cmp(&b.timestamp).then(a.amount.cmp(&b.amount)));
        for pair in bids.windows(2) {
            if pair[1].1.amount < pair[0].1.amount {
                return Err(DataError::NotAscending {
                    line: pair[1].0,
                    lot_id,
                });
            }
        }
        groups.insert(lot_id, bids.into_iter().map(|(_, r)| r).collect());
    }

    Ok(BidHistory {
        groups,
        format: format.unwrap_or_default(),
    })
}

/// Writes bids in `bids.csv` format, lots in key order.
pub fn write_bids<W: Write>(
    out: W,
    history: &BidHistory,
    format: TimeFormat,
) -> Result<(), DataError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(BIDS_HEADER)?;
    for (_, bids) in history.iter() {
        for b in bids {
            w.write_record([
                b.lot_id.as_str(),
                b.bidder_id.as_str(),
                &b.timestamp.format_as(format),
                &b.amount.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| DataError::Write(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<BidHistory, DataError> {
        parse_bids_from_reader(s.as_bytes(), None)
    }

    #[test]
    fn groups_and_sorts() {
        let h = parse(
            "lot_id,bidder_id,timestamp,amount\n\
             2,a,30,150\n\
             1,a,10,100\n\
             1,b,5,90\n\
             2,b,20,120\n",
        )
        .unwrap();
        assert_eq!(h.n_lots(), 2);
        let lot1: Vec<i64> = h.lot("1").iter().map(|b| b.amount.cents()).collect();
        assert_eq!(lot1, vec![9000, 10000]);
        assert_eq!(h.time_format(), TimeFormat::Seconds);
        assert_eq!(h.unique_bidders("2"), 2);
    }

    #[test]
    fn empty_inputs_are_empty_datasets() {
        assert!(parse("").unwrap().is_empty());
        assert!(parse("lot_id,bidder_id,timestamp,amount\n")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn negative_amount_names_the_row() {
        let err = parse("lot_id,bidder_id,timestamp,amount\n1,a,0,100\n1,b,1,-5\n").unwrap_err();
        match err {
            DataError::NonPositiveAmount { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err_string("lot_id,bidder_id,timestamp,amount\n1,a,0,-5\n").contains("line 2"));
    }

    fn err_string(s: &str) -> String {
        parse(s).unwrap_err().to_string()
    }

    #[test]
    fn rejects_duplicates_and_malformed_rows() {
        let dup = parse("lot_id,bidder_id,timestamp,amount\n1,a,0,100\n1,a,0,100\n");
        assert!(matches!(dup, Err(DataError::DuplicateBid { line: 3, .. })));
        let bad = parse("lot_id,bidder_id,timestamp,amount\n1,a,0\n");
        assert!(matches!(bad, Err(DataError::MalformedRow { line: 2, .. })));
        let bad_amount = parse("lot_id,bidder_id,timestamp,amount\n1,a,0,ten\n");
        assert!(matches!(bad_amount, Err(DataError::MalformedRow { .. })));
        let header = parse("lot,bidder,time,amount\n");
        assert!(matches!(header, Err(DataError::BadHeader { .. })));
    }

    #[test]
    fn timestamp_format_is_per_file() {
        let mixed =
            parse("lot_id,bidder_id,timestamp,amount\n1,a,2005-12-07T09:30:00Z,100\n1,b,12,110\n");
        assert!(matches!(
            mixed,
            Err(DataError::MalformedRow { line: 3, .. })
        ));
    }

    #[test]
    fn ties_resolve_by_amount() {
        let h = parse("lot_id,bidder_id,timestamp,amount\n1,a,5,120\n1,b,5,100\n").unwrap();
        let amounts: Vec<i64> = h.lot("1").iter().map(|b| b.amount.cents()).collect();
        assert_eq!(amounts, vec![10000, 12000]);
    }

    #[test]
    fn descending_bids_rejected() {
        let r = parse("lot_id,bidder_id,timestamp,amount\n1,a,5,120\n1,b,6,100\n");
        assert!(matches!(r, Err(DataError::NotAscending { line: 3, .. })));
    }
}
