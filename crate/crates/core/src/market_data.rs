//! CSV loading and cleaning for the three input shapes: tick series,
//! monthly fundamentals, and a benchmark index series.
//!
//! All loaders are pure functions of file contents. Cleaning is limited to
//! sorting, last-wins deduplication, and forward filling; no value is ever
//! invented that did not appear in the input.
//!
//! Expected schemas (UTF-8, comma-separated, `\n` line endings, empty field
//! encodes a missing value):
//!
//! - ticks: `timestamp,price` with ISO-8601 timestamps
//! - fundamentals: `ticker,date,pe_ratio,dividend_yield,price`, date `YYYY-MM-DD`
//! - benchmark: `date,level`

use std::collections::BTreeSet;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Utc};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("{path}: line {line}: {msg}")]
    Schema { path: PathBuf, line: u64, msg: String },
    #[error("{0}: no valid rows after cleaning")]
    EmptySeries(PathBuf),
    #[error("duplicate row for ticker {ticker} in month {month}")]
    DuplicateRow { ticker: String, month: NaiveDate },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One observed price at an instant. `price` is strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    pub timestamp: DateTime<Utc>,
    pub price: f64,
}

/// Cleaned tick stream for a single instrument: timestamps strictly
/// increasing, never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    pub instrument: String,
    pub ticks: Vec<Tick>,
}

/// One ticker-month observation. `as_of` is always a month-end date after
/// loading; `pe_ratio` and `dividend_yield` stay `None` when the source field
/// was empty (such rows simply fail every screen).
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalRow {
    pub ticker: String,
    pub as_of: NaiveDate,
    pub pe_ratio: Option<f64>,
    pub dividend_yield: Option<f64>,
    pub price: f64,
}

/// Monthly fundamentals, sorted by (month, ticker), at most one row per
/// ticker-month.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FundamentalTable {
    pub rows: Vec<FundamentalRow>,
    pub months: Vec<NaiveDate>,
}

/// Benchmark index levels on strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSeries {
    pub dates: Vec<NaiveDate>,
    pub levels: Vec<f64>,
}

/// Last calendar day of `d`'s month.
pub fn month_end(d: NaiveDate) -> NaiveDate {
    let (y, m) = (d.year(), d.month());
    let first_of_next = if m == 12 {
        NaiveDate::from_ymd_opt(y + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(y, m + 1, 1)
    }
    .expect("valid date");
    first_of_next.pred_opt().expect("valid date")
}

impl FundamentalTable {
    /// Builds a table from rows in any order: dates are snapped to month-end,
    /// rows sorted by (month, ticker), and a repeated ticker-month rejected.
    pub fn from_rows(mut rows: Vec<FundamentalRow>) -> Result<Self, DataError> {
        for r in &mut rows {
            r.as_of = month_end(r.as_of);
        }
        rows.sort_by(|a, b| (a.as_of, a.ticker.as_str()).cmp(&(b.as_of, b.ticker.as_str())));
        for w in rows.windows(2) {
            if w[0].as_of == w[1].as_of && w[0].ticker == w[1].ticker {
                return Err(DataError::DuplicateRow {
                    ticker: w[1].ticker.clone(),
                    month: w[1].as_of,
                });
            }
        }
        let months: Vec<NaiveDate> = rows
            .iter()
            .map(|r| r.as_of)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(FundamentalTable { rows, months })
    }

    /// All rows observed at `month` (empty slice for an uncovered month).
    pub fn rows_at(&self, month: NaiveDate) -> &[FundamentalRow] {
        let lo = self.rows.partition_point(|r| r.as_of < month);
        let hi = self.rows.partition_point(|r| r.as_of <= month);
        &self.rows[lo..hi]
    }

    pub fn price_of(&self, ticker: &str, month: NaiveDate) -> Option<f64> {
        self.rows_at(month)
            .iter()
            .find(|r| r.ticker == ticker)
            .map(|r| r.price)
    }
}

impl BenchmarkSeries {
    /// Most recent level at or before `date`.
    pub fn level_on_or_before(&self, date: NaiveDate) -> Option<f64> {
        let idx = self.dates.partition_point(|d| *d <= date);
        if idx == 0 {
            None
        } else {
            Some(self.levels[idx - 1])
        }
    }
}

fn open(path: &Path) -> Result<File, DataError> {
    File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            DataError::FileNotFound(path.to_path_buf())
        } else {
            DataError::Io { path: path.to_path_buf(), source: e }
        }
    })
}

fn schema_err(path: &Path, line: u64, msg: impl Into<String>) -> DataError {
    DataError::Schema { path: path.to_path_buf(), line, msg: msg.into() }
}

fn check_header(path: &Path, got: &csv::StringRecord, want: &[&str]) -> Result<(), DataError> {
    let got_cols: Vec<&str> = got.iter().map(str::trim).collect();
    if got_cols != want {
        return Err(schema_err(
            path,
            1,
            format!("expected header `{}`, found `{}`", want.join(","), got_cols.join(",")),
        ));
    }
    Ok(())
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

/// Parses an ISO-8601 timestamp. Offsets are converted to UTC; a naive
/// timestamp is taken as already UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(naive.and_utc());
        }
    }
    None
}

fn parse_price(path: &Path, line: u64, field: &str, what: &str) -> Result<Option<f64>, DataError> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    let v: f64 = field
        .parse()
        .map_err(|_| schema_err(path, line, format!("{what} is not a number: `{field}`")))?;
    if !v.is_finite() || v <= 0.0 {
        return Err(schema_err(path, line, format!("{what} must be strictly positive, got {field}")));
    }
    Ok(Some(v))
}

/// Loads and cleans a tick CSV: stable sort by timestamp, duplicate
/// timestamps collapsed to the last input row, missing prices forward-filled,
/// leading unfillable rows dropped.
pub fn load_tick_series(path: &Path, instrument: &str) -> Result<TickSeries, DataError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(open(path)?);
    let header = rdr
        .headers()
        .map_err(|e| schema_err(path, 1, e.to_string()))?
        .clone();
    check_header(path, &header, &["timestamp", "price"])?;

    let mut raw: Vec<(DateTime<Utc>, Option<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| schema_err(path, 0, e.to_string()))?;
        let line = record_line(&rec);
        if rec.len() != 2 {
            return Err(schema_err(path, line, format!("expected 2 fields, found {}", rec.len())));
        }
        let ts = parse_timestamp(rec[0].trim())
            .ok_or_else(|| schema_err(path, line, format!("bad timestamp `{}`", rec[0].trim())))?;
        let price = parse_price(path, line, &rec[1], "price")?;
        raw.push((ts, price));
    }

    // Stable sort keeps input order within equal timestamps, so taking the
    // last row of each equal-timestamp run implements input-order last-wins.
    raw.sort_by_key(|(ts, _)| *ts);
    let mut deduped: Vec<(DateTime<Utc>, Option<f64>)> = Vec::with_capacity(raw.len());
    for row in raw {
        match deduped.last_mut() {
            Some(last) if last.0 == row.0 => *last = row,
            _ => deduped.push(row),
        }
    }

    let mut ticks: Vec<Tick> = Vec::with_capacity(deduped.len());
    let mut last_price: Option<f64> = None;
    for (ts, price) in deduped {
        if let Some(p) = price {
            last_price = Some(p);
        }
        match last_price {
            Some(p) => ticks.push(Tick { timestamp: ts, price: p }),
            None => continue, // leading gap: nothing to fill from
        }
    }
    if ticks.is_empty() {
        return Err(DataError::EmptySeries(path.to_path_buf()));
    }
    Ok(TickSeries { instrument: instrument.to_string(), ticks })
}

/// Loads monthly fundamentals. Rows with a missing price are dropped; rows
/// missing pe or dy are kept with the field absent; dates snap to month-end.
pub fn load_fundamentals(path: &Path) -> Result<FundamentalTable, DataError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(open(path)?);
    let header = rdr
        .headers()
        .map_err(|e| schema_err(path, 1, e.to_string()))?
        .clone();
    check_header(path, &header, &["ticker", "date", "pe_ratio", "dividend_yield", "price"])?;

    let mut rows: Vec<FundamentalRow> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| schema_err(path, 0, e.to_string()))?;
        let line = record_line(&rec);
        if rec.len() != 5 {
            return Err(schema_err(path, line, format!("expected 5 fields, found {}", rec.len())));
        }
        let ticker = rec[0].trim();
        if ticker.is_empty() {
            return Err(schema_err(path, line, "empty ticker"));
        }
        let date = NaiveDate::parse_from_str(rec[1].trim(), "%Y-%m-%d")
            .map_err(|_| schema_err(path, line, format!("bad date `{}`", rec[1].trim())))?;
        let pe_ratio = {
            let f = rec[2].trim();
            if f.is_empty() {
                None
            } else {
                let v: f64 = f
                    .parse()
                    .map_err(|_| schema_err(path, line, format!("pe_ratio is not a number: `{f}`")))?;
                if !v.is_finite() {
                    return Err(schema_err(path, line, "pe_ratio must be finite"));
                }
                Some(v) // may be negative: loss-making companies
            }
        };
        let dividend_yield = {
            let f = rec[3].trim();
            if f.is_empty() {
                None
            } else {
                let v: f64 = f.parse().map_err(|_| {
                    schema_err(path, line, format!("dividend_yield is not a number: `{f}`"))
                })?;
                if !v.is_finite() || v < 0.0 {
                    return Err(schema_err(path, line, "dividend_yield must be a fraction >= 0"));
                }
                Some(v)
            }
        };
        let price = match parse_price(path, line, &rec[4], "price")? {
            Some(p) => p,
            None => continue, // missing price: row removed entirely
        };
        rows.push(FundamentalRow {
            ticker: ticker.to_string(),
            as_of: date,
            pe_ratio,
            dividend_yield,
            price,
        });
    }
    FundamentalTable::from_rows(rows)
}

/// Loads a benchmark CSV: sorted, last-wins on duplicate dates,
/// forward-filled, leading unfillable rows dropped.
pub fn load_benchmark(path: &Path) -> Result<BenchmarkSeries, DataError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(open(path)?);
    let header = rdr
        .headers()
        .map_err(|e| schema_err(path, 1, e.to_string()))?
        .clone();
    check_header(path, &header, &["date", "level"])?;

    let mut raw: Vec<(NaiveDate, Option<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| schema_err(path, 0, e.to_string()))?;
        let line = record_line(&rec);
        if rec.len() != 2 {
            return Err(schema_err(path, line, format!("expected 2 fields, found {}", rec.len())));
        }
        let date = NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d")
            .map_err(|_| schema_err(path, line, format!("bad date `{}`", rec[0].trim())))?;
        let level = parse_price(path, line, &rec[1], "level")?;
        raw.push((date, level));
    }

    raw.sort_by_key(|(d, _)| *d);
    let mut deduped: Vec<(NaiveDate, Option<f64>)> = Vec::with_capacity(raw.len());
    for row in raw {
        match deduped.last_mut() {
            Some(last) if last.0 == row.0 => *last = row,
            _ => deduped.push(row),
        }
    }

    let mut dates = Vec::new();
    let mut levels = Vec::new();
    let mut last: Option<f64> = None;
    for (d, level) in deduped {
        if let Some(l) = level {
            last = Some(l);
        }
        if let Some(l) = last {
            dates.push(d);
            levels.push(l);
        }
    }
    if dates.is_empty() {
        return Err(DataError::EmptySeries(path.to_path_buf()));
    }
    Ok(BenchmarkSeries { dates, levels })
}

/// Timestamp rendering used across all emitted files: RFC 3339 UTC with a
/// fractional part only when non-zero.
pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.format("%Y-%m-%dT%H:%M:%S%.fZ").to_string()
}

pub fn write_tick_csv(path: &Path, series: &TickSeries) -> std::io::Result<()> {
    let mut out = String::from("timestamp,price\n");
    for t in &series.ticks {
        out.push_str(&format!("{},{}\n", format_timestamp(t.timestamp), t.price));
    }
    let mut f = File::create(path)?;
    f.write_all(out.as_bytes())
}

pub fn write_fundamentals_csv(path: &Path, table: &FundamentalTable) -> std::io::Result<()> {
    let mut out = String::from("ticker,date,pe_ratio,dividend_yield,price\n");
    for r in &table.rows {
        let pe = r.pe_ratio.map(|v| v.to_string()).unwrap_or_default();
        let dy = r.dividend_yield.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{}\n", r.ticker, r.as_of, pe, dy, r.price));
    }
    let mut f = File::create(path)?;
    f.write_all(out.as_bytes())
}

pub fn write_benchmark_csv(path: &Path, series: &BenchmarkSeries) -> std::io::Result<()> {
    let mut out = String::from("date,level\n");
    for (d, l) in series.dates.iter().zip(&series.levels) {
        out.push_str(&format!("{},{}\n", d, l));
    }
    let mut f = File::create(path)?;
    f.write_all(out.as_bytes())
}
