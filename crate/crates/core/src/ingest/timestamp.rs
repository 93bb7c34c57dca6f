use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timestamp as it appears in an export: epoch seconds or ISO-8601 text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawTimestamp {
    Epoch(i64),
    EpochFloat(f64),
    Text(String),
}

impl From<i64> for RawTimestamp {
    fn from(secs: i64) -> Self {
        RawTimestamp::Epoch(secs)
    }
}

impl From<&str> for RawTimestamp {
    fn from(text: &str) -> Self {
        RawTimestamp::Text(text.to_owned())
    }
}

const CANONICAL: &str = "%Y-%m-%dT%H:%M:%SZ";

/// Normalize a raw timestamp to `YYYY-MM-DDThh:mm:ssZ`.
///
/// Offsets are converted to UTC and sub-second precision is truncated.
/// ISO text without an offset is taken to already be UTC.
pub fn normalize_timestamp(raw: &RawTimestamp) -> Result<String> {
    let instant = match raw {
        RawTimestamp::Epoch(secs) => from_epoch(*secs, raw)?,
        RawTimestamp::EpochFloat(secs) => {
            if !secs.is_finite() || *secs < 0.0 || *secs >= i64::MAX as f64 {
                return Err(bad(raw, "epoch seconds must be finite and non-negative"));
            }
            from_epoch(secs.trunc() as i64, raw)?
        }
        RawTimestamp::Text(text) => parse_text(text.trim(), raw)?,
    };
    if !(0..=9999).contains(&chrono::Datelike::year(&instant)) {
        return Err(bad(raw, "year outside 0000..=9999"));
    }
    Ok(instant.format(CANONICAL).to_string())
}

fn from_epoch(secs: i64, raw: &RawTimestamp) -> Result<DateTime<Utc>> {
    if secs < 0 {
        return Err(bad(raw, "epoch seconds must be non-negative"));
    }
    DateTime::from_timestamp(secs, 0).ok_or_else(|| bad(raw, "epoch seconds out of range"))
}

fn parse_text(text: &str, raw: &RawTimestamp) -> Result<DateTime<Utc>> {
    if !text.is_empty() && text.bytes().all(|b| b.is_ascii_digit()) {
        let secs: i64 = text
            .parse()
            .map_err(|_| bad(raw, "epoch seconds out of range"))?;
        return from_epoch(secs, raw);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Ok(truncate(dt.with_timezone(&Utc)));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(text, fmt) {
            return Ok(truncate(naive.and_utc()));
        }
    }
    Err(bad(raw, "not epoch seconds or an ISO-8601 instant"))
}

fn truncate(dt: DateTime<Utc>) -> DateTime<Utc> {
    DateTime::from_timestamp(dt.timestamp(), 0).unwrap_or(dt)
}

fn bad(raw: &RawTimestamp, reason: &str) -> Error {
    let raw = match raw {
        RawTimestamp::Epoch(v) => v.to_string(),
        RawTimestamp::EpochFloat(v) => v.to_string(),
        RawTimestamp::Text(t) => t.clone(),
    };
    Error::Timestamp {
        raw,
        reason: reason.to_owned(),
    }
}
