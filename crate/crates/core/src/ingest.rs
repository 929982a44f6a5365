//! CSV plumbing shared by the module-specific readers.

use std::io::Read;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use thiserror::Error;

/// A malformed input record, located by line (1-based, header is line 1).
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct IngestError {
    pub line: u64,
    pub message: String,
}

impl IngestError {
    pub fn new(line: u64, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

impl From<csv::Error> for IngestError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        IngestError::new(line, e.to_string())
    }
}

/// Reader plus column indices for a fixed set of required headers.
pub(crate) struct Table<R> {
    reader: csv::Reader<R>,
    columns: Vec<usize>,
}

impl<R: Read> Table<R> {
    pub(crate) fn open(input: R, required: &[&str]) -> Result<Self, IngestError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = reader.headers()?.clone();
        let mut columns = Vec::with_capacity(required.len());
        for name in required {
            match headers.iter().position(|h| h.eq_ignore_ascii_case(name)) {
                Some(i) => columns.push(i),
                None => {
                    return Err(IngestError::new(
                        1,
                        format!("missing column `{name}` (expected header `{}`)", required.join(",")),
                    ))
                }
            }
        }
        Ok(Self { reader, columns })
    }

    /// Visits each record as `(line, fields in required order)`.
    pub(crate) fn for_each<F>(mut self, mut f: F) -> Result<(), IngestError>
    where
        F: FnMut(u64, &[&str]) -> Result<(), IngestError>,
    {
        let mut record = csv::StringRecord::new();
        loop {
            if !self.reader.read_record(&mut record)? {
                return Ok(());
            }
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let mut fields = Vec::with_capacity(self.columns.len());
            for &c in &self.columns {
                match record.get(c) {
                    Some(v) => fields.push(v),
                    None => return Err(IngestError::new(line, "record is missing fields")),
                }
            }
            f(line, &fields)?;
        }
    }
}

/// Parses integer epoch seconds or an ISO-8601 UTC timestamp / date.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().map(|d| d.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp())
}

pub(crate) fn field_timestamp(line: u64, name: &str, s: &str) -> Result<i64, IngestError> {
    parse_timestamp(s).ok_or_else(|| IngestError::new(line, format!("bad {name} timestamp `{s}`")))
}

pub(crate) fn field_f64(line: u64, name: &str, s: &str) -> Result<f64, IngestError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IngestError::new(line, format!("bad {name} value `{s}`"))),
    }
}
