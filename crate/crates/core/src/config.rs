//! Flat `key = value` run configuration.
//!
//! One file drives every subcommand. Keys carry a module namespace prefix
//! (`smart_beta.fee_rate`), `#` starts a comment, blank lines are ignored,
//! and a repeated key takes its last value. Unknown keys are rejected so a
//! typo cannot silently fall back to a default. The canonical serialization
//! (every key materialized, sorted) is hashed into the run manifest, so two
//! configs that differ only in comments or ordering hash identically.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::market_data::parse_timestamp;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("{path}, line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}, line {line}: unknown key {key}")]
    UnknownKey { path: PathBuf, line: usize, key: String },
    #[error("invalid value for {key}: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Input file locations. All optional: each subcommand checks for the
/// inputs it needs and reports a data error if one is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSection {
    pub ticks: Option<PathBuf>,
    pub fundamentals: Option<PathBuf>,
    pub benchmark: Option<PathBuf>,
    /// Pre-computed NAV CSV for the standalone `metrics` subcommand.
    pub nav: Option<PathBuf>,
    pub instrument: String,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            ticks: None,
            fundamentals: None,
            benchmark: None,
            nav: None,
            instrument: "VN30F1M".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmartBetaSection {
    pub pe_min: f64,
    pub pe_max: f64,
    pub dy_min: f64,
    pub fee_rate: f64,
    pub rf_annual: f64,
    pub initial_capital: f64,
    pub periods_per_year: u32,
    /// Backtest window; defaults to the full fundamentals coverage.
    pub start_date: Option<NaiveDate>,
    pub end_date: Option<NaiveDate>,
    pub carry_last_price: bool,
}

impl Default for SmartBetaSection {
    fn default() -> Self {
        SmartBetaSection {
            pe_min: 0.0,
            pe_max: 15.0,
            dy_min: 0.01,
            fee_rate: 0.00035,
            rf_annual: 0.06,
            initial_capital: 1_000_000_000.0,
            periods_per_year: 12,
            start_date: None,
            end_date: None,
            carry_last_price: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketMakerSection {
    pub step: f64,
    pub inventory_coeff: f64,
    pub fee_points: f64,
    pub refresh_interval_secs: i64,
    pub initial_capital: f64,
    pub point_value: f64,
    pub periods_per_year: u32,
    /// Replay window; defaults to the full tick coverage.
    pub start: Option<DateTime<Utc>>,
    pub end: Option<DateTime<Utc>>,
}

impl Default for MarketMakerSection {
    fn default() -> Self {
        MarketMakerSection {
            step: 1.8,
            inventory_coeff: 0.02,
            fee_points: 0.2,
            refresh_interval_secs: 15,
            initial_capital: 500_000_000.0,
            point_value: 100_000.0,
            periods_per_year: 252,
            start: None,
            end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSection {
    pub rf_annual: f64,
    pub periods_per_year: u32,
    /// The information ratio is reported per-period unless this is set.
    pub annualize_ir: bool,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection { rf_annual: 0.06, periods_per_year: 252, annualize_ir: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSection {
    pub seed: u64,
    pub n_trials: usize,
    pub parallel: bool,
    /// Trials whose screen qualifies fewer stocks than this in any month
    /// are flagged failed (diversification constraint).
    pub min_qualified: usize,
    /// Replacement for an `inf` upper search bound, applied at validation.
    pub unbounded_cap: f64,
    pub pe_min_lower: f64,
    pub pe_min_upper: f64,
    pub pe_max_lower: f64,
    pub pe_max_upper: f64,
    pub dy_min_lower: f64,
    pub dy_min_upper: f64,
    pub step_lower: f64,
    pub step_upper: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        OptimizerSection {
            seed: 2025,
            n_trials: 100,
            parallel: true,
            min_qualified: 5,
            unbounded_cap: 1.0,
            pe_min_lower: 0.0,
            pe_min_upper: 10.0,
            pe_max_lower: 10.0,
            pe_max_upper: 30.0,
            dy_min_lower: 0.0,
            dy_min_upper: 0.05,
            step_lower: 0.1,
            step_upper: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub data: DataSection,
    pub smart_beta: SmartBetaSection,
    pub market_maker: MarketMakerSection,
    pub metrics: MetricsSection,
    pub optimizer: OptimizerSection,
    /// Directory the config file lives in; relative data paths resolve
    /// against it. Not part of the canonical text, so moving a config plus
    /// its data directory does not change the config hash.
    pub base_dir: PathBuf,
}

impl RunConfig {
    /// Resolves a configured data path against the config's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse::<f64>().map_err(|_| ConfigError::InvalidValue {
        key: key.into(),
        reason: format!("expected a number, got {value:?}"),
    })
}

/// Like `parse_f64`, but `inf` is allowed; the caller caps it later.
fn parse_upper_bound(key: &str, value: &str) -> Result<f64, ConfigError> {
    if value == "inf" || value == "+inf" {
        return Ok(f64::INFINITY);
    }
    parse_f64(key, value)
}

fn parse_u64(key: &str, value: &str) -> Result<u64, ConfigError> {
    value.parse::<u64>().map_err(|_| ConfigError::InvalidValue {
        key: key.into(),
        reason: format!("expected a non-negative integer, got {value:?}"),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.into(),
            reason: format!("expected true or false, got {value:?}"),
        }),
    }
}

fn parse_date(key: &str, value: &str) -> Result<NaiveDate, ConfigError> {
    NaiveDate::parse_from_str(value, "%Y-%m-%d").map_err(|_| ConfigError::InvalidValue {
        key: key.into(),
        reason: format!("expected YYYY-MM-DD, got {value:?}"),
    })
}

fn parse_instant(key: &str, value: &str) -> Result<DateTime<Utc>, ConfigError> {
    parse_timestamp(value).ok_or_else(|| ConfigError::InvalidValue {
        key: key.into(),
        reason: format!("expected an ISO-8601 timestamp, got {value:?}"),
    })
}

impl RunConfig {
    /// Parses config text. `path` labels errors and sets the base directory
    /// for relative data paths; no files are touched.
    pub fn parse(text: &str, path: &Path) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig {
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ..RunConfig::default()
        };
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: format!("expected `key = value`, got {line:?}"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return Err(ConfigError::InvalidValue {
                    key: key.into(),
                    reason: "empty value".into(),
                });
            }
            cfg.apply(key, value).map_err(|e| match e {
                ConfigError::UnknownKey { path: p, key, .. } => ConfigError::UnknownKey {
                    path: if p.as_os_str().is_empty() { path.to_path_buf() } else { p },
                    line: line_no,
                    key,
                },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "data.ticks" => self.data.ticks = Some(PathBuf::from(value)),
            "data.fundamentals" => self.data.fundamentals = Some(PathBuf::from(value)),
            "data.benchmark" => self.data.benchmark = Some(PathBuf::from(value)),
            "data.nav" => self.data.nav = Some(PathBuf::from(value)),
            "data.instrument" => self.data.instrument = value.into(),

            "smart_beta.pe_min" => self.smart_beta.pe_min = parse_f64(key, value)?,
            "smart_beta.pe_max" => self.smart_beta.pe_max = parse_f64(key, value)?,
            "smart_beta.dy_min" => self.smart_beta.dy_min = parse_f64(key, value)?,
            "smart_beta.fee_rate" => self.smart_beta.fee_rate = parse_f64(key, value)?,
            "smart_beta.rf_annual" => self.smart_beta.rf_annual = parse_f64(key, value)?,
            "smart_beta.initial_capital" => {
                self.smart_beta.initial_capital = parse_f64(key, value)?
            }
            "smart_beta.periods_per_year" => {
                self.smart_beta.periods_per_year = parse_u64(key, value)? as u32
            }
            "smart_beta.start_date" => self.smart_beta.start_date = Some(parse_date(key, value)?),
            "smart_beta.end_date" => self.smart_beta.end_date = Some(parse_date(key, value)?),
            "smart_beta.carry_last_price" => {
                self.smart_beta.carry_last_price = parse_bool(key, value)?
            }

            "market_maker.step" => self.market_maker.step = parse_f64(key, value)?,
            "market_maker.inventory_coeff" => {
                self.market_maker.inventory_coeff = parse_f64(key, value)?
            }
            "market_maker.fee_points" => self.market_maker.fee_points = parse_f64(key, value)?,
            "market_maker.refresh_interval_secs" => {
                self.market_maker.refresh_interval_secs = parse_u64(key, value)? as i64
            }
            "market_maker.initial_capital" => {
                self.market_maker.initial_capital = parse_f64(key, value)?
            }
            "market_maker.point_value" => self.market_maker.point_value = parse_f64(key, value)?,
            "market_maker.periods_per_year" => {
                self.market_maker.periods_per_year = parse_u64(key, value)? as u32
            }
            "market_maker.start" => self.market_maker.start = Some(parse_instant(key, value)?),
            "market_maker.end" => self.market_maker.end = Some(parse_instant(key, value)?),

            "metrics.rf_annual" => self.metrics.rf_annual = parse_f64(key, value)?,
            "metrics.periods_per_year" => {
                self.metrics.periods_per_year = parse_u64(key, value)? as u32
            }
            "metrics.annualize_ir" => self.metrics.annualize_ir = parse_bool(key, value)?,

            "optimizer.seed" => self.optimizer.seed = parse_u64(key, value)?,
            "optimizer.n_trials" => self.optimizer.n_trials = parse_u64(key, value)? as usize,
            "optimizer.parallel" => self.optimizer.parallel = parse_bool(key, value)?,
            "optimizer.min_qualified" => {
                self.optimizer.min_qualified = parse_u64(key, value)? as usize
            }
            "optimizer.unbounded_cap" => self.optimizer.unbounded_cap = parse_f64(key, value)?,
            "optimizer.pe_min_lower" => self.optimizer.pe_min_lower = parse_f64(key, value)?,
            "optimizer.pe_min_upper" => {
                self.optimizer.pe_min_upper = parse_upper_bound(key, value)?
            }
            "optimizer.pe_max_lower" => self.optimizer.pe_max_lower = parse_f64(key, value)?,
            "optimizer.pe_max_upper" => {
                self.optimizer.pe_max_upper = parse_upper_bound(key, value)?
            }
            "optimizer.dy_min_lower" => self.optimizer.dy_min_lower = parse_f64(key, value)?,
            "optimizer.dy_min_upper" => {
                self.optimizer.dy_min_upper = parse_upper_bound(key, value)?
            }
            "optimizer.step_lower" => self.optimizer.step_lower = parse_f64(key, value)?,
            "optimizer.step_upper" => self.optimizer.step_upper = parse_upper_bound(key, value)?,

            _ => {
                return Err(ConfigError::UnknownKey {
                    path: PathBuf::new(),
                    line: 0,
                    key: key.into(),
                })
            }
        }
        Ok(())
    }

    fn validate(&mut self) -> Result<(), ConfigError> {
        let bad = |key: &str, reason: String| {
            Err(ConfigError::InvalidValue { key: key.into(), reason })
        };

        let sb = &self.smart_beta;
        if !sb.pe_min.is_finite() || !sb.pe_max.is_finite() || sb.pe_min >= sb.pe_max {
            return bad(
                "smart_beta.pe_min",
                format!("screen needs pe_min < pe_max, got [{}, {}]", sb.pe_min, sb.pe_max),
            );
        }
        if !(sb.dy_min >= 0.0) {
            return bad("smart_beta.dy_min", format!("must be >= 0, got {}", sb.dy_min));
        }
        if !(sb.fee_rate >= 0.0 && sb.fee_rate < 1.0) {
            return bad("smart_beta.fee_rate", format!("must be in [0, 1), got {}", sb.fee_rate));
        }
        if !(sb.initial_capital > 0.0) {
            return bad(
                "smart_beta.initial_capital",
                format!("must be > 0, got {}", sb.initial_capital),
            );
        }
        if sb.periods_per_year == 0 {
            return bad("smart_beta.periods_per_year", "must be >= 1".into());
        }
        if let (Some(s), Some(e)) = (sb.start_date, sb.end_date) {
            if s >= e {
                return bad("smart_beta.start_date", format!("window {s}..{e} is empty"));
            }
        }

        let mm = &self.market_maker;
        if !(mm.step > 0.0) {
            return bad("market_maker.step", format!("must be > 0, got {}", mm.step));
        }
        if !(mm.inventory_coeff >= 0.0) {
            return bad(
                "market_maker.inventory_coeff",
                format!("must be >= 0, got {}", mm.inventory_coeff),
            );
        }
        if !(mm.fee_points >= 0.0) {
            return bad("market_maker.fee_points", format!("must be >= 0, got {}", mm.fee_points));
        }
        if mm.refresh_interval_secs <= 0 {
            return bad(
                "market_maker.refresh_interval_secs",
                format!("must be >= 1, got {}", mm.refresh_interval_secs),
            );
        }
        if !(mm.initial_capital > 0.0) {
            return bad(
                "market_maker.initial_capital",
                format!("must be > 0, got {}", mm.initial_capital),
            );
        }
        if !(mm.point_value > 0.0) {
            return bad("market_maker.point_value", format!("must be > 0, got {}", mm.point_value));
        }
        if mm.periods_per_year == 0 {
            return bad("market_maker.periods_per_year", "must be >= 1".into());
        }
        if let (Some(s), Some(e)) = (mm.start, mm.end) {
            if s >= e {
                return bad("market_maker.start", format!("window {s}..{e} is empty"));
            }
        }

        if self.metrics.periods_per_year == 0 {
            return bad("metrics.periods_per_year", "must be >= 1".into());
        }

        let opt = &mut self.optimizer;
        if opt.n_trials == 0 {
            return bad("optimizer.n_trials", "must be >= 1".into());
        }
        if !(opt.unbounded_cap.is_finite() && opt.unbounded_cap > 0.0) {
            return bad(
                "optimizer.unbounded_cap",
                format!("must be finite and > 0, got {}", opt.unbounded_cap),
            );
        }
        let cap = opt.unbounded_cap;
        for (key, lower, upper) in [
            ("optimizer.pe_min", &opt.pe_min_lower, &mut opt.pe_min_upper),
            ("optimizer.pe_max", &opt.pe_max_lower, &mut opt.pe_max_upper),
            ("optimizer.dy_min", &opt.dy_min_lower, &mut opt.dy_min_upper),
            ("optimizer.step", &opt.step_lower, &mut opt.step_upper),
        ] {
            if upper.is_infinite() {
                *upper = cap;
            }
            if !lower.is_finite() || !upper.is_finite() || *lower > *upper {
                return bad(key, format!("search range [{lower}, {upper}] is invalid"));
            }
        }
        Ok(())
    }

    /// Every key materialized in sorted order, one `key = value` per line.
    /// This is the input to [`RunConfig::config_hash`].
    pub fn canonical_text(&self) -> String {
        let path_str =
            |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut pairs: Vec<(String, String)> = vec![
            ("data.benchmark".into(), path_str(&self.data.benchmark)),
            ("data.fundamentals".into(), path_str(&self.data.fundamentals)),
            ("data.instrument".into(), self.data.instrument.clone()),
            ("data.nav".into(), path_str(&self.data.nav)),
            ("data.ticks".into(), path_str(&self.data.ticks)),
            ("market_maker.end".into(),
                self.market_maker.end.map(|t| t.to_rfc3339()).unwrap_or_default()),
            ("market_maker.fee_points".into(), self.market_maker.fee_points.to_string()),
            ("market_maker.initial_capital".into(), self.market_maker.initial_capital.to_string()),
            ("market_maker.inventory_coeff".into(), self.market_maker.inventory_coeff.to_string()),
            ("market_maker.periods_per_year".into(), self.market_maker.periods_per_year.to_string()),
            ("market_maker.point_value".into(), self.market_maker.point_value.to_string()),
            ("market_maker.refresh_interval_secs".into(),
                self.market_maker.refresh_interval_secs.to_string()),
            ("market_maker.start".into(),
                self.market_maker.start.map(|t| t.to_rfc3339()).unwrap_or_default()),
            ("market_maker.step".into(), self.market_maker.step.to_string()),
            ("metrics.annualize_ir".into(), self.metrics.annualize_ir.to_string()),
            ("metrics.periods_per_year".into(), self.metrics.periods_per_year.to_string()),
            ("metrics.rf_annual".into(), self.metrics.rf_annual.to_string()),
            ("optimizer.dy_min_lower".into(), self.optimizer.dy_min_lower.to_string()),
            ("optimizer.dy_min_upper".into(), self.optimizer.dy_min_upper.to_string()),
            ("optimizer.min_qualified".into(), self.optimizer.min_qualified.to_string()),
            ("optimizer.n_trials".into(), self.optimizer.n_trials.to_string()),
            ("optimizer.parallel".into(), self.optimizer.parallel.to_string()),
            ("optimizer.pe_max_lower".into(), self.optimizer.pe_max_lower.to_string()),
            ("optimizer.pe_max_upper".into(), self.optimizer.pe_max_upper.to_string()),
            ("optimizer.pe_min_lower".into(), self.optimizer.pe_min_lower.to_string()),
            ("optimizer.pe_min_upper".into(), self.optimizer.pe_min_upper.to_string()),
            ("optimizer.seed".into(), self.optimizer.seed.to_string()),
            ("optimizer.step_lower".into(), self.optimizer.step_lower.to_string()),
            ("optimizer.step_upper".into(), self.optimizer.step_upper.to_string()),
            ("optimizer.unbounded_cap".into(), self.optimizer.unbounded_cap.to_string()),
            ("smart_beta.carry_last_price".into(), self.smart_beta.carry_last_price.to_string()),
            ("smart_beta.dy_min".into(), self.smart_beta.dy_min.to_string()),
            ("smart_beta.end_date".into(),
                self.smart_beta.end_date.map(|d| d.to_string()).unwrap_or_default()),
            ("smart_beta.fee_rate".into(), self.smart_beta.fee_rate.to_string()),
            ("smart_beta.initial_capital".into(), self.smart_beta.initial_capital.to_string()),
            ("smart_beta.pe_max".into(), self.smart_beta.pe_max.to_string()),
            ("smart_beta.pe_min".into(), self.smart_beta.pe_min.to_string()),
            ("smart_beta.periods_per_year".into(), self.smart_beta.periods_per_year.to_string()),
            ("smart_beta.rf_annual".into(), self.smart_beta.rf_annual.to_string()),
            ("smart_beta.start_date".into(),
                self.smart_beta.start_date.map(|d| d.to_string()).unwrap_or_default()),
        ];
        pairs.sort();
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Hex SHA-256 of the canonical text. Equal configs hash equal
    /// regardless of key order, comments, or which defaults were spelled out.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    if !path.is_file() {
        return Err(ConfigError::FileNotFound(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    RunConfig::parse(&text, path)
}
