//! Result-file emission and the run manifest.
//!
//! Every artifact is written atomically (temp file + rename in the target
//! directory) and formatted with shortest round-trip float representation,
//! so a rerun with identical inputs reproduces each file byte for byte. The
//! manifest records the canonical config hash and a SHA-256 per input file;
//! the wall-clock start time lives in a separate file (`started_at.txt`) to
//! keep the manifest itself deterministic.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use crate::market_data::{format_timestamp, DataError};
use crate::market_maker::{Fill, InventorySeries};
use crate::metrics::{MetricsReport, NavSeries};
use crate::optimizer::{OptimizationResult, TrialOutcome};

/// Pointwise fractional decline from the running NAV maximum; values in
/// [-1, 0] and the minimum equals `max_drawdown` of the same series.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawdownSeries {
    pub dates: Vec<NaiveDate>,
    pub drawdown: Vec<f64>,
}

pub fn drawdown_series(nav: &NavSeries) -> DrawdownSeries {
    let mut runmax = f64::NEG_INFINITY;
    let mut drawdown = Vec::with_capacity(nav.values.len());
    for &v in &nav.values {
        runmax = runmax.max(v);
        drawdown.push(v / runmax - 1.0);
    }
    DrawdownSeries { dates: nav.dates.clone(), drawdown }
}

/// Writes `bytes` to `path` via a sibling temp file and rename, so readers
/// never observe a half-written artifact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

pub fn emit_nav_csv(path: &Path, nav: &NavSeries) -> io::Result<()> {
    let mut out = String::from("date,nav\n");
    for (d, v) in nav.dates.iter().zip(&nav.values) {
        out.push_str(&format!("{d},{v}\n"));
    }
    atomic_write(path, out.as_bytes())
}

pub fn emit_drawdown_csv(path: &Path, dd: &DrawdownSeries) -> io::Result<()> {
    let mut out = String::from("date,drawdown\n");
    for (d, v) in dd.dates.iter().zip(&dd.drawdown) {
        out.push_str(&format!("{d},{v}\n"));
    }
    atomic_write(path, out.as_bytes())
}

pub fn emit_inventory_csv(path: &Path, inv: &InventorySeries) -> io::Result<()> {
    let mut out = String::from("date,inventory\n");
    for (d, v) in inv.dates.iter().zip(&inv.inventory) {
        out.push_str(&format!("{d},{v}\n"));
    }
    atomic_write(path, out.as_bytes())
}

pub fn emit_fills_csv(path: &Path, fills: &[Fill]) -> io::Result<()> {
    let mut out = String::from("timestamp,side,price,fee_points,inventory_after\n");
    for f in fills {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_timestamp(f.timestamp),
            f.side.as_str(),
            f.price,
            f.fee_points,
            f.inventory_after
        ));
    }
    atomic_write(path, out.as_bytes())
}

pub fn emit_metrics_txt(path: &Path, report: &MetricsReport) -> io::Result<()> {
    atomic_write(path, report.to_kv_text().as_bytes())
}

pub fn emit_metrics_csv(path: &Path, report: &MetricsReport) -> io::Result<()> {
    let out = format!("{}\n{}\n", MetricsReport::csv_header(), report.to_csv_row());
    atomic_write(path, out.as_bytes())
}

/// Trial log `trial,<param>...,objective,status`. Parameter columns follow
/// the space's dimension names sorted lexicographically; failed trials leave
/// the objective cell empty and carry the reason in `status`.
pub fn emit_trials_csv(path: &Path, result: &OptimizationResult) -> io::Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let param_names: Vec<String> = result
        .trials
        .first()
        .map(|t| t.params.keys().cloned().collect())
        .unwrap_or_default();
    let mut header = vec!["trial".to_string()];
    header.extend(param_names.iter().cloned());
    header.push("objective".into());
    header.push("status".into());
    writer.write_record(&header).map_err(io_from_csv)?;
    for t in &result.trials {
        let mut row = vec![t.index.to_string()];
        for name in &param_names {
            row.push(t.params[name].to_string());
        }
        match &t.outcome {
            TrialOutcome::Objective(v) => {
                row.push(v.to_string());
                row.push("ok".into());
            }
            TrialOutcome::Failed(reason) => {
                row.push(String::new());
                row.push(format!("failed: {reason}"));
            }
        }
        writer.write_record(&row).map_err(io_from_csv)?;
    }
    let bytes = writer.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    atomic_write(path, &bytes)
}

/// Winning trial in `key = value` form, parameters prefixed `param.`.
pub fn emit_best_txt(path: &Path, result: &OptimizationResult) -> io::Result<()> {
    let mut out = String::new();
    out.push_str(&format!("seed = {}\n", result.seed));
    out.push_str(&format!("n_trials = {}\n", result.n_trials));
    out.push_str(&format!("best_trial = {}\n", result.best.index));
    if let TrialOutcome::Objective(v) = result.best.outcome {
        out.push_str(&format!("objective = {v}\n"));
    }
    for (name, value) in &result.best.params {
        out.push_str(&format!("param.{name} = {value}\n"));
    }
    atomic_write(path, out.as_bytes())
}

fn io_from_csv(e: csv::Error) -> io::Error {
    io::Error::other(e.to_string())
}

pub fn sha256_hex_bytes(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex_file(path: &Path) -> io::Result<String> {
    Ok(sha256_hex_bytes(&fs::read(path)?))
}

/// What a run was made of: tool identity, seed (when the command uses one),
/// canonical config hash, one SHA-256 per input file, and the emitted
/// artifact names in order. Deliberately excludes wall-clock time.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config_hash: String,
    /// (path as configured, hex digest), sorted by path.
    pub data_hashes: Vec<(String, String)>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("tool = plutus\n");
        out.push_str(&format!("tool_version = {}\n", self.tool_version));
        out.push_str(&format!("command = {}\n", self.command));
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed = {seed}\n"));
        }
        out.push_str(&format!("config_hash = {}\n", self.config_hash));
        let mut hashes = self.data_hashes.clone();
        hashes.sort();
        for (path, digest) in &hashes {
            out.push_str(&format!("data_hash.{path} = {digest}\n"));
        }
        for name in &self.outputs {
            out.push_str(&format!("output = {name}\n"));
        }
        out
    }
}

/// Reads a `date,nav` CSV back into a series, enforcing strictly increasing
/// dates and strictly positive values.
pub fn load_nav_csv(path: &Path) -> Result<NavSeries, DataError> {
    if !path.is_file() {
        return Err(DataError::FileNotFound(path.to_path_buf()));
    }
    let schema = |line: usize, msg: String| DataError::Schema {
        path: path.to_path_buf(),
        line: line as u64,
        msg,
    };
    let text = fs::read_to_string(path)
        .map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "date,nav")) => {}
        Some((_, other)) => return Err(schema(1, format!("expected header date,nav, got {other:?}"))),
        None => return Err(schema(1, "empty file".into())),
    }
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let Some((d, v)) = line.split_once(',') else {
            return Err(schema(line_no, format!("expected date,nav, got {line:?}")));
        };
        let date = NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d")
            .map_err(|_| schema(line_no, format!("bad date {d:?}")))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| schema(line_no, format!("bad nav value {v:?}")))?;
        if !(value > 0.0) || !value.is_finite() {
            return Err(schema(line_no, format!("nav must be finite and > 0, got {value}")));
        }
        if let Some(last) = dates.last() {
            if *last >= date {
                return Err(schema(line_no, format!("dates must be strictly increasing at {date}")));
            }
        }
        dates.push(date);
        values.push(value);
    }
    if dates.is_empty() {
        return Err(DataError::EmptySeries(path.to_path_buf()));
    }
    Ok(NavSeries { dates, values })
}
