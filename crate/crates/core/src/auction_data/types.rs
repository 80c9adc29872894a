use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

/// Currency amount in integer minor units (cents).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Money(pub i64);

impl Money {
    pub const fn from_cents(cents: i64) -> Self {
        Money(cents)
    }

    pub fn from_major(value: f64) -> Self {
        Money((value * 100.0).round() as i64)
    }

    pub fn cents(self) -> i64 {
        self.0
    }

    /// Value in major units, the scale all log transforms are taken on.
    pub fn major(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let (whole, frac) = (abs / 100, abs % 100);
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            write!(f, "{sign}{whole}.{frac:02}")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseMoneyError(pub String);

impl fmt::Display for ParseMoneyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid currency amount {:?}", self.0)
    }
}

impl FromStr for Money {
    type Err = ParseMoneyError;

    /// Parses a plain decimal with at most two fractional digits. No rounding
    /// takes place, so ingestion is exact.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseMoneyError(s.to_string());
        let trimmed = s.trim();
        let (negative, body) = match trimmed.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, trimmed.strip_prefix('+').unwrap_or(trimmed)),
        };
        let (whole, frac) = match body.split_once('.') {
            Some((w, f)) => (w, f),
            None => (body, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(err());
        }
        if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        if frac.len() > 2 {
            return Err(err());
        }
        let whole: i64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| err())?
        };
        let frac_cents: i64 = match frac.len() {
            0 => 0,
            1 => frac.parse::<i64>().map_err(|_| err())? * 10,
            _ => frac.parse().map_err(|_| err())?,
        };
        let cents = whole
            .checked_mul(100)
            .and_then(|c| c.checked_add(frac_cents))
            .ok_or_else(err)?;
        Ok(Money(if negative { -cents } else { cents }))
    }
}

/// How instants were written in a source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TimeFormat {
    #[default]
    Iso8601,
    Seconds,
}

/// An instant at millisecond resolution, milliseconds since the Unix epoch.
///
/// Numeric timestamps in input files are read as (possibly fractional) seconds
/// on the same clock, so a catalog using `0` as auction open makes bid
/// seconds relative to the open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_millis(ms: i64) -> Self {
        Timestamp(ms)
    }

    pub fn from_seconds(secs: f64) -> Self {
        Timestamp((secs * 1000.0).round() as i64)
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    pub fn seconds(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn parse_seconds(s: &str) -> Option<Self> {
        let v: f64 = s.trim().parse().ok()?;
        v.is_finite().then(|| Timestamp::from_seconds(v))
    }

    /// RFC 3339 with any offset, or a naive `YYYY-MM-DDTHH:MM:SS[.fff]` read as UTC.
    pub fn parse_iso(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
            return Some(Timestamp(dt.with_timezone(&Utc).timestamp_millis()));
        }
        for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
            if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
                return Some(Timestamp(dt.and_utc().timestamp_millis()));
            }
        }
        None
    }

    pub fn parse_as(s: &str, format: TimeFormat) -> Option<Self> {
        match format {
            TimeFormat::Iso8601 => Self::parse_iso(s),
            TimeFormat::Seconds => Self::parse_seconds(s),
        }
    }

    /// Guess the format of a single token: numeric means seconds.
    pub fn detect_format(s: &str) -> Option<TimeFormat> {
        if Self::parse_seconds(s).is_some() {
            Some(TimeFormat::Seconds)
        } else if Self::parse_iso(s).is_some() {
            Some(TimeFormat::Iso8601)
        } else {
            None
        }
    }

    pub fn format_as(self, format: TimeFormat) -> String {
        match format {
            TimeFormat::Seconds => {
                if self.0 % 1000 == 0 {
                    format!("{}", self.0 / 1000)
                } else {
                    format!("{}", self.seconds())
                }
            }
            TimeFormat::Iso8601 => match DateTime::<Utc>::from_timestamp_millis(self.0) {
                Some(dt) => dt.to_rfc3339_opts(SecondsFormat::AutoSi, true),
                None => format!("{}", self.seconds()),
            },
        }
    }
}

/// One observed bid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BidRecord {
    pub lot_id: String,
    pub bidder_id: String,
    pub timestamp: Timestamp,
    pub amount: Money,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtistType {
    Established,
    Emerging,
    Other,
}

impl ArtistType {
    pub fn parse_token(token: &str) -> Option<Self> {
        match token.trim().to_ascii_lowercase().as_str() {
            "established" => Some(ArtistType::Established),
            "emerging" => Some(ArtistType::Emerging),
            "other" | "others" => Some(ArtistType::Other),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ArtistType::Established => "established",
            ArtistType::Emerging => "emerging",
            ArtistType::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Medium {
    Canvas,
    Paper,
}

impl Medium {
    /// Accepts catalog descriptions such as "Oil on canvas" or
    /// "Charcoal on paper". Canvas wins when a description names both.
    pub fn parse_token(token: &str) -> Option<Self> {
        let lower = token.trim().to_ascii_lowercase();
        if lower.contains("canvas") {
            Some(Medium::Canvas)
        } else if lower.contains("paper") {
            Some(Medium::Paper)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Medium::Canvas => "canvas",
            Medium::Paper => "paper",
        }
    }
}

/// Static lot metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lot {
    pub lot_id: String,
    pub artist_id: String,
    pub artist_type: ArtistType,
    pub opening_bid: Money,
    pub low_estimate: Money,
    pub high_estimate: Money,
    pub position_group: u32,
    pub length_in: f64,
    pub width_in: f64,
    pub medium: Medium,
    /// `None` when the artist has no prior-year auction history on record.
    pub prev_price_per_sqin: Option<Money>,
    pub prev_lots_sold: u32,
    pub realized_price: Option<Money>,
    pub auction_open: Timestamp,
    pub auction_close: Timestamp,
}

impl Lot {
    pub fn area_sqin(&self) -> f64 {
        self.length_in * self.width_in
    }

    pub fn contains(&self, ts: Timestamp) -> bool {
        ts >= self.auction_open && ts <= self.auction_close
    }

    /// Checks every field-level invariant, returning the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.low_estimate > self.high_estimate {
            return Err(format!(
                "low_estimate {} exceeds high_estimate {}",
                self.low_estimate, self.high_estimate
            ));
        }
        if !self.opening_bid.is_positive() {
            return Err(format!("opening_bid {} must be positive", self.opening_bid));
        }
        if self.opening_bid > self.low_estimate {
            return Err(format!(
                "opening_bid {} exceeds low_estimate {}",
                self.opening_bid, self.low_estimate
            ));
        }
        if self.position_group < 1 {
            return Err("position_group must be at least 1".into());
        }
        if !(self.length_in.is_finite() && self.length_in > 0.0) {
            return Err(format!("length_in {} must be positive", self.length_in));
        }
        if !(self.width_in.is_finite() && self.width_in > 0.0) {
            return Err(format!("width_in {} must be positive", self.width_in));
        }
        if let Some(p) = self.prev_price_per_sqin {
            if p.cents() < 0 {
                return Err(format!("prev_price_per_sqin {p} must be non-negative"));
            }
        }
        if let Some(r) = self.realized_price {
            if !r.is_positive() {
                return Err(format!("realized_price {r} must be positive"));
            }
        }
        if self.auction_open >= self.auction_close {
            return Err("auction_open must precede auction_close".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn money_parses_exactly() {
        assert_eq!("7794".parse::<Money>().unwrap(), Money(779_400));
        assert_eq!("12.5".parse::<Money>().unwrap(), Money(1250));
        assert_eq!("0.99".parse::<Money>().unwrap(), Money(99));
        assert_eq!("-5".parse::<Money>().unwrap(), Money(-500));
        assert!("1.234".parse::<Money>().is_err());
        assert!("abc".parse::<Money>().is_err());
        assert!("".parse::<Money>().is_err());
        assert!("1,000".parse::<Money>().is_err());
    }

    #[test]
    fn money_display_round_trips() {
        for cents in [0, 5, 99, 100, 123_456, -250] {
            let m = Money(cents);
            assert_eq!(m.to_string().parse::<Money>().unwrap(), m);
        }
    }

    #[test]
    fn timestamps_detect_and_round_trip() {
        assert_eq!(Timestamp::detect_format("12.5"), Some(TimeFormat::Seconds));
        assert_eq!(
            Timestamp::detect_format("2005-12-07T09:30:00Z"),
            Some(TimeFormat::Iso8601)
        );
        assert_eq!(Timestamp::detect_format("yesterday"), None);
        let ts = Timestamp::parse_iso("2005-12-07T09:30:00.250Z").unwrap();
        assert_eq!(
            Timestamp::parse_iso(&ts.format_as(TimeFormat::Iso8601)),
            Some(ts)
        );
        let naive = Timestamp::parse_iso("2005-12-07T09:30:00").unwrap();
        assert_eq!(naive.millis() % 1000, 0);
        assert_eq!(Timestamp::parse_seconds("1.5"), Some(Timestamp(1500)));
    }

    #[test]
    fn medium_and_artist_tokens() {
        assert_eq!(Medium::parse_token("Oil on canvas"), Some(Medium::Canvas));
        assert_eq!(
            Medium::parse_token("Charcoal on paper"),
            Some(Medium::Paper)
        );
        assert_eq!(
            Medium::parse_token("Acrylic on canvas pasted on board"),
            Some(Medium::Canvas)
        );
        assert_eq!(Medium::parse_token("bronze"), None);
        assert_eq!(ArtistType::parse_token("Others"), Some(ArtistType::Other));
        assert_eq!(
            ArtistType::parse_token("ESTABLISHED"),
            Some(ArtistType::Established)
        );
        assert_eq!(ArtistType::parse_token("famous"), None);
    }
}
