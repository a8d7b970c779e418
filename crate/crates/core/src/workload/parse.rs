use std::collections::HashMap;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{normalize_statement, ErrorClass, QueryLogEntry, SessionClass, EMPTY_STATEMENT};
use crate::{Error, Result};

/// CPU time values that look like a logging sentinel rather than a measurement.
const CPU_SENTINEL: f64 = 1e8;
/// Only the first rows of each kind are itemized in the skip report.
const MAX_ITEMIZED_SKIPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    #[default]
    Comma,
    Tab,
}

impl Delimiter {
    fn byte(self) -> u8 {
        match self {
            Delimiter::Comma => b',',
            Delimiter::Tab => b'\t',
        }
    }
}

/// Declared layout of a workload file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FormatSpec {
    pub delimiter: Delimiter,
}

impl std::str::FromStr for FormatSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let delimiter = match s.to_ascii_lowercase().as_str() {
            "csv" | "comma" => Delimiter::Comma,
            "tsv" | "tab" => Delimiter::Tab,
            other => return Err(Error::InvalidInput(format!("unknown format `{other}`"))),
        };
        Ok(FormatSpec { delimiter })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRow {
    /// 1-based line of the record in the file, header included.
    pub line: u64,
    pub reason: String,
}

/// Bookkeeping emitted alongside parsed entries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkipReport {
    pub rows_total: usize,
    pub entries: usize,
    pub skipped: usize,
    pub empty_statements_normalized: usize,
    /// Rows whose CPU time equals the 1e8 sentinel; they are kept.
    pub cpu_time_outliers: usize,
    pub skipped_rows: Vec<SkippedRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseOutcome {
    pub entries: Vec<QueryLogEntry>,
    pub report: SkipReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Column {
    Statement,
    SourceKey,
    Timestamp,
    Error,
    Busy,
    Rows,
    SessionClass,
    UserKey,
    OptCost,
}

impl Column {
    fn from_header(name: &str) -> Option<Self> {
        Some(match name.trim().to_ascii_lowercase().as_str() {
            "statement" => Column::Statement,
            "source_key" => Column::SourceKey,
            "timestamp" => Column::Timestamp,
            "error" => Column::Error,
            "busy" => Column::Busy,
            "rows" => Column::Rows,
            "session_class" => Column::SessionClass,
            "user_key" => Column::UserKey,
            "opt_cost" => Column::OptCost,
            _ => return None,
        })
    }
}

/// Reads a delimited workload file. Unknown columns are ignored.
pub fn parse_workload_file(path: impl AsRef<Path>, format: FormatSpec) -> Result<ParseOutcome> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes)
        .map_err(|e| Error::InvalidInput(format!("{} is not UTF-8: {e}", path.display())))?;
    parse_workload_str(&text, format)
}

pub fn parse_workload_str(text: &str, format: FormatSpec) -> Result<ParseOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter.byte())
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());

    let headers = reader.headers()?.clone();
    let mut columns: HashMap<Column, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        if let Some(col) = Column::from_header(h) {
            columns.entry(col).or_insert(i);
        }
    }
    if !columns.contains_key(&Column::Statement) {
        return Err(Error::MissingColumn("statement".into()));
    }

    let mut entries = Vec::new();
    let mut report = SkipReport::default();
    for record in reader.records() {
        report.rows_total += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                skip(&mut report, line, format!("unreadable record: {e}"));
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&record, &columns) {
            Ok(entry) => {
                if entry.statement == EMPTY_STATEMENT
                    && record.get(columns[&Column::Statement]).is_some_and(|s| s.trim().is_empty())
                {
                    report.empty_statements_normalized += 1;
                }
                if entry.cpu_time_s == Some(CPU_SENTINEL) {
                    report.cpu_time_outliers += 1;
                }
                entries.push(entry);
            }
            Err(reason) => skip(&mut report, line, reason),
        }
    }
    report.entries = entries.len();

    if report.rows_total > 0 && report.skipped * 2 > report.rows_total {
        return Err(Error::MostlyMalformed {
            skipped: report.skipped,
            total: report.rows_total,
        });
    }
    Ok(ParseOutcome { entries, report })
}

fn skip(report: &mut SkipReport, line: u64, reason: String) {
    report.skipped += 1;
    if report.skipped_rows.len() < MAX_ITEMIZED_SKIPS {
        report.skipped_rows.push(SkippedRow { line, reason });
    }
}

fn parse_row(record: &csv::StringRecord, columns: &HashMap<Column, usize>) -> std::result::Result<QueryLogEntry, String> {
    let field = |col: Column| -> Option<&str> {
        columns
            .get(&col)
            .and_then(|&i| record.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
    };

    let statement = record
        .get(columns[&Column::Statement])
        .unwrap_or_default()
        .to_string();
    let mut entry = QueryLogEntry::new(normalize_statement(statement));
    entry.source_key = field(Column::SourceKey).unwrap_or_default().to_string();

    if columns.contains_key(&Column::Timestamp) {
        let raw = field(Column::Timestamp).ok_or("missing timestamp")?;
        entry.timestamp = Some(parse_timestamp(raw).ok_or_else(|| format!("bad timestamp `{raw}`"))?);
    }
    if let Some(raw) = field(Column::Error) {
        let code: i64 = raw.parse().map_err(|_| format!("bad error class `{raw}`"))?;
        entry.error_class = Some(ErrorClass::from_code(code).ok_or_else(|| format!("bad error class `{raw}`"))?);
    }
    if let Some(raw) = field(Column::Busy) {
        let v: f64 = raw.parse().map_err(|_| format!("bad cpu time `{raw}`"))?;
        if !v.is_finite() || v < 0.0 {
            return Err(format!("cpu time must be finite and non-negative, got `{raw}`"));
        }
        entry.cpu_time_s = Some(v);
    }
    if let Some(raw) = field(Column::Rows) {
        let v: i64 = raw.parse().map_err(|_| format!("bad answer rows `{raw}`"))?;
        if v < -1 {
            return Err(format!("answer rows below -1: `{raw}`"));
        }
        entry.answer_rows = Some(v);
    }
    if let Some(raw) = field(Column::SessionClass) {
        entry.session_class = Some(raw.parse::<SessionClass>().map_err(|e| e.to_string())?);
    }
    entry.user_key = field(Column::UserKey).map(str::to_string);
    if let Some(raw) = field(Column::OptCost) {
        let v: f64 = raw.parse().map_err(|_| format!("bad optimizer cost `{raw}`"))?;
        if !v.is_finite() || v < 0.0 {
            return Err(format!("optimizer cost must be finite and non-negative, got `{raw}`"));
        }
        entry.opt_cost_estimate = Some(v);
    }
    Ok(entry)
}

/// ISO-8601 with or without offset; naive times are taken as UTC.
fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(text: &str) -> Result<ParseOutcome> {
        parse_workload_str(text, FormatSpec::default())
    }

    #[test]
    fn well_formed_rows() {
        let out = csv("statement,source_key,timestamp,error\n\
                       SELECT 1,a,2008-01-01T00:00:00Z,0\n\
                       SELECT 2,a,2008-01-01T00:01:00Z,-1\n\
                       SELECT 3,b,2008-01-01 00:02:00,1\n")
        .unwrap();
        assert_eq!(out.entries.len(), 3);
        assert_eq!(out.report.skipped, 0);
        assert_eq!(out.entries[1].error_class, Some(ErrorClass::Severe));
    }

    #[test]
    fn empty_statement_becomes_placeholder() {
        let out = csv("statement,rows\n\"\",3\n").unwrap();
        assert_eq!(out.entries.len(), 1);
        assert_eq!(out.entries[0].statement, "Empty");
        assert_eq!(out.report.empty_statements_normalized, 1);
    }

    #[test]
    fn rows_missing_timestamps_are_skipped() {
        let mut text = String::from("statement,source_key,timestamp\n");
        for i in 0..10 {
            let ts = if i == 3 || i == 7 {
                String::new()
            } else {
                format!("2008-01-01T00:{i:02}:00Z")
            };
            text.push_str(&format!("SELECT {i},k,{ts}\n"));
        }
        let out = csv(&text).unwrap();
        assert_eq!(out.entries.len(), 8);
        assert_eq!(out.report.skipped, 2);
        assert_eq!(out.report.skipped_rows[0].line, 5);
    }

    #[test]
    fn quoted_fields_with_doubled_quotes() {
        let out = csv("statement\n\"SELECT \"\"a,b\"\" FROM t\"\n").unwrap();
        assert_eq!(out.entries[0].statement, "SELECT \"a,b\" FROM t");
    }

    #[test]
    fn tab_delimited() {
        let fmt: FormatSpec = "tsv".parse().unwrap();
        let out = parse_workload_str("statement\tbusy\nSELECT a, b FROM t\t0.5\n", fmt).unwrap();
        assert_eq!(out.entries[0].cpu_time_s, Some(0.5));
    }

    #[test]
    fn missing_statement_column() {
        let err = csv("query,rows\nSELECT 1,2\n").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "statement"));
    }

    #[test]
    fn mostly_malformed_is_an_error() {
        let err = csv("statement,error\nSELECT 1,7\nSELECT 2,9\nSELECT 3,0\n").unwrap_err();
        assert!(matches!(err, Error::MostlyMalformed { skipped: 2, total: 3 }));
    }

    #[test]
    fn wrong_field_count_is_skipped() {
        let out = csv("statement,rows\nSELECT 1,1\nSELECT 2,2,extra\nSELECT 3,3\n").unwrap();
        assert_eq!(out.entries.len(), 2);
        assert_eq!(out.report.skipped, 1);
    }

    #[test]
    fn label_ranges_enforced() {
        let out = csv("statement,rows,busy\nA,-1,0\nB,-2,0\nC,1,-0.5\nD,1,1e8\nE,1,2\n").unwrap();
        assert_eq!(out.entries.len(), 3);
        assert_eq!(out.report.cpu_time_outliers, 1);
        assert_eq!(out.entries[0].answer_rows, Some(-1));
    }

    #[test]
    fn session_class_names() {
        let out = csv("statement,session_class\nA,no_web_hit\nB,Browser\n").unwrap();
        assert_eq!(out.entries[0].session_class, Some(SessionClass::NoWebHit));
        assert_eq!(out.entries[1].session_class, Some(SessionClass::Browser));
    }
}
