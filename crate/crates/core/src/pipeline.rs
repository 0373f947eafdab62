//! Subcommand pipelines: load inputs, run an engine, emit artifacts.
//!
//! Each pipeline function is the whole behavior of one CLI subcommand minus
//! argument parsing: it resolves data paths against the config directory,
//! runs the engine, writes result files plus `manifest.txt` into the output
//! directory, and returns a human-readable summary for stdout. All result
//! files are deterministic; the wall-clock start goes to `started_at.txt`,
//! the one file a rerun is allowed to differ in.
//!
//! Errors carry a category that the CLI maps to its exit code: config (2),
//! data (3), runtime (4), compliance (5).

use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};

use crate::compliance::{
    check_repo, default_ruleset, load_ruleset, ComplianceError, ComplianceReport,
};
use crate::config::{ConfigError, RunConfig};
use crate::market_data::{
    load_benchmark, load_fundamentals, load_tick_series, BenchmarkSeries, DataError,
};
use crate::market_maker::{run_market_maker, MarketMakerConfig, MarketMakerError};
use crate::metrics::{compute_report, MetricsError, MetricsReport, NavSeries};
use crate::optimizer::{
    optimize, optimize_serial, Dimension, OptimizationResult, OptimizerError, ParamSpace, Params,
    TrialOutcome,
};
use crate::report::{
    atomic_write, drawdown_series, emit_best_txt, emit_drawdown_csv, emit_fills_csv,
    emit_inventory_csv, emit_metrics_csv, emit_metrics_txt, emit_nav_csv, emit_trials_csv,
    load_nav_csv, sha256_hex_file, RunManifest,
};
use crate::smart_beta::{run_smart_beta, ScreenBounds, SmartBetaConfig, StrategyError};

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Data(String),
    Runtime(String),
    Compliance(String),
}

impl RunError {
    pub fn category(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Data(_) => "data",
            RunError::Runtime(_) => "runtime",
            RunError::Compliance(_) => "compliance",
        }
    }

    pub fn detail(&self) -> &str {
        match self {
            RunError::Config(s)
            | RunError::Data(s)
            | RunError::Runtime(s)
            | RunError::Compliance(s) => s,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Data(_) => 3,
            RunError::Runtime(_) => 4,
            RunError::Compliance(_) => 5,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.category(), self.detail())
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<DataError> for RunError {
    fn from(e: DataError) -> Self {
        RunError::Data(e.to_string())
    }
}

impl From<StrategyError> for RunError {
    fn from(e: StrategyError) -> Self {
        RunError::Runtime(e.to_string())
    }
}

impl From<MarketMakerError> for RunError {
    fn from(e: MarketMakerError) -> Self {
        RunError::Runtime(e.to_string())
    }
}

impl From<OptimizerError> for RunError {
    fn from(e: OptimizerError) -> Self {
        RunError::Runtime(e.to_string())
    }
}

impl From<MetricsError> for RunError {
    fn from(e: MetricsError) -> Self {
        RunError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Runtime(format!("i/o error: {e}"))
    }
}

impl From<ComplianceError> for RunError {
    fn from(e: ComplianceError) -> Self {
        match e {
            ComplianceError::RepoNotFound(_) => RunError::Data(e.to_string()),
            ComplianceError::Io(_) => RunError::Data(e.to_string()),
            ComplianceError::Ruleset { .. } | ComplianceError::EmptyRuleset(_) => {
                RunError::Config(e.to_string())
            }
        }
    }
}

/// What a pipeline run produced: a summary for stdout and the names of the
/// files written into the output directory.
#[derive(Debug)]
pub struct RunOutcome {
    pub summary: String,
    pub outputs: Vec<String>,
}

fn require_path<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, RunError> {
    value
        .as_deref()
        .ok_or_else(|| RunError::Data(format!("{key} is not set in the config")))
}

/// Emits `manifest.txt` (deterministic) and `started_at.txt` (wall clock).
/// `inputs` carries (path as configured, resolved path) pairs.
fn write_manifest(
    out_dir: &Path,
    command: &str,
    seed: Option<u64>,
    cfg: &RunConfig,
    inputs: &[(String, PathBuf)],
    mut outputs: Vec<String>,
    started_at: DateTime<Utc>,
) -> Result<Vec<String>, RunError> {
    let mut data_hashes = Vec::with_capacity(inputs.len());
    for (name, resolved) in inputs {
        let digest = sha256_hex_file(resolved)
            .map_err(|e| RunError::Data(format!("hashing {}: {e}", resolved.display())))?;
        data_hashes.push((name.clone(), digest));
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        seed,
        config_hash: cfg.config_hash(),
        data_hashes,
        outputs: outputs.clone(),
    };
    atomic_write(&out_dir.join("manifest.txt"), manifest.to_text().as_bytes())?;
    atomic_write(
        &out_dir.join("started_at.txt"),
        format!("started_at = {}\n", started_at.to_rfc3339()).as_bytes(),
    )?;
    outputs.push("manifest.txt".into());
    outputs.push("started_at.txt".into());
    Ok(outputs)
}

fn load_benchmark_if_configured(
    cfg: &RunConfig,
    inputs: &mut Vec<(String, PathBuf)>,
) -> Result<Option<BenchmarkSeries>, RunError> {
    match &cfg.data.benchmark {
        Some(p) => {
            let resolved = cfg.resolve(p);
            let series = load_benchmark(&resolved)?;
            inputs.push((p.display().to_string(), resolved));
            Ok(Some(series))
        }
        None => Ok(None),
    }
}

fn emit_series_and_metrics(
    out_dir: &Path,
    nav: &NavSeries,
    report: &MetricsReport,
) -> Result<Vec<String>, RunError> {
    emit_nav_csv(&out_dir.join("nav.csv"), nav)?;
    emit_drawdown_csv(&out_dir.join("drawdown.csv"), &drawdown_series(nav))?;
    emit_metrics_txt(&out_dir.join("metrics.txt"), report)?;
    Ok(vec!["nav.csv".into(), "drawdown.csv".into(), "metrics.txt".into()])
}

pub fn run_backtest_smart_beta(
    cfg: &RunConfig,
    out_dir: &Path,
    started_at: DateTime<Utc>,
) -> Result<RunOutcome, RunError> {
    let fundamentals_path = require_path(&cfg.data.fundamentals, "data.fundamentals")?;
    let resolved = cfg.resolve(fundamentals_path);
    let table = load_fundamentals(&resolved)?;
    let mut inputs = vec![(fundamentals_path.display().to_string(), resolved)];
    let benchmark = load_benchmark_if_configured(cfg, &mut inputs)?;

    let first_month = *table
        .months
        .first()
        .ok_or_else(|| RunError::Data("fundamentals table is empty".into()))?;
    let last_month = *table.months.last().expect("non-empty");
    let sb = &cfg.smart_beta;
    let strategy_cfg = SmartBetaConfig {
        bounds: ScreenBounds { pe_min: sb.pe_min, pe_max: sb.pe_max, dy_min: sb.dy_min },
        fee_rate: sb.fee_rate,
        rf_annual: sb.rf_annual,
        initial_capital: sb.initial_capital,
        start_date: sb.start_date.unwrap_or(first_month),
        end_date: sb.end_date.unwrap_or(last_month),
        carry_last_price: sb.carry_last_price,
    };
    let run = run_smart_beta(&strategy_cfg, &table)?;
    let report = compute_report(
        &run.nav,
        benchmark.as_ref(),
        sb.rf_annual,
        sb.periods_per_year,
        cfg.metrics.annualize_ir,
    )?;

    let outputs = emit_series_and_metrics(out_dir, &run.nav, &report)?;
    let outputs =
        write_manifest(out_dir, "backtest-smart-beta", None, cfg, &inputs, outputs, started_at)?;
    Ok(RunOutcome { summary: report.to_kv_text(), outputs })
}

fn market_maker_config(
    cfg: &RunConfig,
    ticks: &crate::market_data::TickSeries,
    step_override: Option<f64>,
) -> MarketMakerConfig {
    let mm = &cfg.market_maker;
    MarketMakerConfig {
        step: step_override.unwrap_or(mm.step),
        inventory_coeff: mm.inventory_coeff,
        fee_points: mm.fee_points,
        refresh_interval: Duration::seconds(mm.refresh_interval_secs),
        initial_capital: mm.initial_capital,
        point_value: mm.point_value,
        start: mm.start.unwrap_or_else(|| ticks.ticks.first().expect("non-empty").timestamp),
        end: mm.end.unwrap_or_else(|| ticks.ticks.last().expect("non-empty").timestamp),
    }
}

pub fn run_backtest_market_maker(
    cfg: &RunConfig,
    out_dir: &Path,
    started_at: DateTime<Utc>,
) -> Result<RunOutcome, RunError> {
    let ticks_path = require_path(&cfg.data.ticks, "data.ticks")?;
    let resolved = cfg.resolve(ticks_path);
    let ticks = load_tick_series(&resolved, &cfg.data.instrument)?;
    let inputs = vec![(ticks_path.display().to_string(), resolved)];

    let engine_cfg = market_maker_config(cfg, &ticks, None);
    let run = run_market_maker(&engine_cfg, &ticks)?;
    // No benchmark: active return against an index is not meaningful for a
    // single-instrument quoting book, so the report omits the information
    // ratio by construction.
    let report = compute_report(
        &run.nav,
        None,
        cfg.metrics.rf_annual,
        cfg.market_maker.periods_per_year,
        cfg.metrics.annualize_ir,
    )?;

    let mut outputs = emit_series_and_metrics(out_dir, &run.nav, &report)?;
    emit_inventory_csv(&out_dir.join("inventory.csv"), &run.inventory)?;
    emit_fills_csv(&out_dir.join("fills.csv"), &run.fills)?;
    outputs.push("inventory.csv".into());
    outputs.push("fills.csv".into());
    let outputs =
        write_manifest(out_dir, "backtest-market-maker", None, cfg, &inputs, outputs, started_at)?;
    Ok(RunOutcome { summary: report.to_kv_text(), outputs })
}

fn sharpe_objective(
    nav: &NavSeries,
    rf_annual: f64,
    periods_per_year: u32,
) -> TrialOutcome {
    match compute_report(nav, None, rf_annual, periods_per_year, false) {
        Ok(report) => match report.sharpe.value() {
            Some(v) => TrialOutcome::Objective(v),
            None => TrialOutcome::Failed("sharpe undefined (zero volatility)".into()),
        },
        Err(e) => TrialOutcome::Failed(e.to_string()),
    }
}

fn run_optimization<F>(
    cfg: &RunConfig,
    space: &ParamSpace,
    objective: F,
) -> Result<OptimizationResult, RunError>
where
    F: Fn(&Params) -> TrialOutcome + Sync,
{
    let opt = &cfg.optimizer;
    let result = if opt.parallel {
        optimize(space, opt.seed, opt.n_trials, objective)?
    } else {
        optimize_serial(space, opt.seed, opt.n_trials, objective)?
    };
    Ok(result)
}

fn emit_optimization(
    cfg: &RunConfig,
    out_dir: &Path,
    command: &str,
    inputs: &[(String, PathBuf)],
    result: &OptimizationResult,
    started_at: DateTime<Utc>,
) -> Result<RunOutcome, RunError> {
    emit_trials_csv(&out_dir.join("trials.csv"), result)?;
    emit_best_txt(&out_dir.join("best.txt"), result)?;
    let outputs = vec!["trials.csv".into(), "best.txt".into()];
    let outputs = write_manifest(
        out_dir,
        command,
        Some(cfg.optimizer.seed),
        cfg,
        inputs,
        outputs,
        started_at,
    )?;
    let mut summary = String::new();
    let ok = result
        .trials
        .iter()
        .filter(|t| matches!(t.outcome, TrialOutcome::Objective(_)))
        .count();
    summary.push_str(&format!(
        "trials = {} (ok {}, failed {})\n",
        result.n_trials,
        ok,
        result.n_trials - ok
    ));
    summary.push_str(&format!("best_trial = {}\n", result.best.index));
    if let TrialOutcome::Objective(v) = result.best.outcome {
        summary.push_str(&format!("objective = {v}\n"));
    }
    for (name, value) in &result.best.params {
        summary.push_str(&format!("param.{name} = {value}\n"));
    }
    Ok(RunOutcome { summary, outputs })
}

/// Searches the screen bounds for the Sharpe-maximal Smart Beta variant.
/// Trials violating `pe_min < pe_max` or qualifying fewer than
/// `optimizer.min_qualified` stocks in any rebalanced month are flagged
/// failed rather than erroring the run.
pub fn run_optimize_smart_beta(
    cfg: &RunConfig,
    out_dir: &Path,
    started_at: DateTime<Utc>,
) -> Result<RunOutcome, RunError> {
    let fundamentals_path = require_path(&cfg.data.fundamentals, "data.fundamentals")?;
    let resolved = cfg.resolve(fundamentals_path);
    let table = load_fundamentals(&resolved)?;
    let inputs = vec![(fundamentals_path.display().to_string(), resolved)];

    let first_month = *table
        .months
        .first()
        .ok_or_else(|| RunError::Data("fundamentals table is empty".into()))?;
    let last_month = *table.months.last().expect("non-empty");
    let sb = &cfg.smart_beta;
    let opt = &cfg.optimizer;
    let space = ParamSpace {
        dimensions: vec![
            Dimension { name: "pe_min".into(), lower: opt.pe_min_lower, upper: opt.pe_min_upper },
            Dimension { name: "pe_max".into(), lower: opt.pe_max_lower, upper: opt.pe_max_upper },
            Dimension { name: "dy_min".into(), lower: opt.dy_min_lower, upper: opt.dy_min_upper },
        ],
    };
    let min_qualified = opt.min_qualified;

    let objective = |params: &Params| -> TrialOutcome {
        let bounds = ScreenBounds {
            pe_min: params["pe_min"],
            pe_max: params["pe_max"],
            dy_min: params["dy_min"],
        };
        if bounds.pe_min >= bounds.pe_max {
            return TrialOutcome::Failed(format!(
                "pe_min {} >= pe_max {}",
                bounds.pe_min, bounds.pe_max
            ));
        }
        let strategy_cfg = SmartBetaConfig {
            bounds,
            fee_rate: sb.fee_rate,
            rf_annual: sb.rf_annual,
            initial_capital: sb.initial_capital,
            start_date: sb.start_date.unwrap_or(first_month),
            end_date: sb.end_date.unwrap_or(last_month),
            carry_last_price: sb.carry_last_price,
        };
        let run = match run_smart_beta(&strategy_cfg, &table) {
            Ok(run) => run,
            Err(e) => return TrialOutcome::Failed(e.to_string()),
        };
        for event in &run.rebalances {
            if event.qualified.len() < min_qualified {
                return TrialOutcome::Failed(format!(
                    "only {} qualified at {}, need {}",
                    event.qualified.len(),
                    event.date,
                    min_qualified
                ));
            }
        }
        sharpe_objective(&run.nav, sb.rf_annual, sb.periods_per_year)
    };

    let result = run_optimization(cfg, &space, objective)?;
    emit_optimization(cfg, out_dir, "optimize-smart-beta", &inputs, &result, started_at)
}

/// Searches the quote step for the Sharpe-maximal market-maker variant.
pub fn run_optimize_market_maker(
    cfg: &RunConfig,
    out_dir: &Path,
    started_at: DateTime<Utc>,
) -> Result<RunOutcome, RunError> {
    let ticks_path = require_path(&cfg.data.ticks, "data.ticks")?;
    let resolved = cfg.resolve(ticks_path);
    let ticks = load_tick_series(&resolved, &cfg.data.instrument)?;
    let inputs = vec![(ticks_path.display().to_string(), resolved)];

    let opt = &cfg.optimizer;
    let space = ParamSpace {
        dimensions: vec![Dimension {
            name: "step".into(),
            lower: opt.step_lower,
            upper: opt.step_upper,
        }],
    };

    let objective = |params: &Params| -> TrialOutcome {
        let engine_cfg = market_maker_config(cfg, &ticks, Some(params["step"]));
        match run_market_maker(&engine_cfg, &ticks) {
            Ok(run) => sharpe_objective(
                &run.nav,
                cfg.metrics.rf_annual,
                cfg.market_maker.periods_per_year,
            ),
            Err(e) => TrialOutcome::Failed(e.to_string()),
        }
    };

    let result = run_optimization(cfg, &space, objective)?;
    emit_optimization(cfg, out_dir, "optimize-market-maker", &inputs, &result, started_at)
}

/// Computes the four metrics for a stored NAV series (plus benchmark when
/// configured) without running any strategy.
pub fn run_metrics(
    cfg: &RunConfig,
    out_dir: &Path,
    started_at: DateTime<Utc>,
) -> Result<RunOutcome, RunError> {
    let nav_path = require_path(&cfg.data.nav, "data.nav")?;
    let resolved = cfg.resolve(nav_path);
    let nav = load_nav_csv(&resolved)?;
    let mut inputs = vec![(nav_path.display().to_string(), resolved)];
    let benchmark = load_benchmark_if_configured(cfg, &mut inputs)?;

    let report = compute_report(
        &nav,
        benchmark.as_ref(),
        cfg.metrics.rf_annual,
        cfg.metrics.periods_per_year,
        cfg.metrics.annualize_ir,
    )?;

    emit_metrics_txt(&out_dir.join("metrics.txt"), &report)?;
    emit_metrics_csv(&out_dir.join("metrics.csv"), &report)?;
    let outputs = vec!["metrics.txt".into(), "metrics.csv".into()];
    let outputs = write_manifest(out_dir, "metrics", None, cfg, &inputs, outputs, started_at)?;
    Ok(RunOutcome { summary: report.to_kv_text(), outputs })
}

/// Scores a repository's README against a ruleset (the standard one unless
/// `rules` is given). Writes the machine-readable report to `out` when
/// requested. The caller decides the exit status from the report.
pub fn run_check(
    repo: &Path,
    rules: Option<&Path>,
    out: Option<&Path>,
) -> Result<ComplianceReport, RunError> {
    let ruleset = match rules {
        Some(path) => load_ruleset(path)?,
        None => default_ruleset(),
    };
    let report = check_repo(repo, &ruleset)?;
    if let Some(out_path) = out {
        atomic_write(out_path, report.to_kv().as_bytes())?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{write_benchmark_csv, write_fundamentals_csv, write_tick_csv};
    use crate::synth::{benchmark_fixture, fundamentals_fixture, random_walk_ticks};
    use chrono::NaiveDate;
    use std::fs;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn ts(s: &str) -> DateTime<Utc> {
        crate::market_data::parse_timestamp(s).unwrap()
    }

    /// Writes fixtures + config into a temp dir, returns (dir, config).
    fn smart_beta_workspace() -> (tempfile::TempDir, RunConfig) {
        let dir = tempfile::tempdir().unwrap();
        let table = fundamentals_fixture(11, d("2021-01-15"), 24, 10, &[], &[]);
        write_fundamentals_csv(&dir.path().join("fundamentals.csv"), &table).unwrap();
        let bench = benchmark_fixture(2, d("2021-01-01"), 760, 1000.0, 0.0003, 0.008);
        write_benchmark_csv(&dir.path().join("benchmark.csv"), &bench).unwrap();
        let conf_path = dir.path().join("run.conf");
        fs::write(
            &conf_path,
            "data.fundamentals = fundamentals.csv\ndata.benchmark = benchmark.csv\n",
        )
        .unwrap();
        let cfg = crate::config::load_config(&conf_path).unwrap();
        (dir, cfg)
    }

    fn market_maker_workspace(constant_price: bool) -> (tempfile::TempDir, RunConfig) {
        let dir = tempfile::tempdir().unwrap();
        let ticks = if constant_price {
            let mut s = random_walk_ticks(5, d("2022-01-03"), 3, 200, 30, 1000.0, 0.0, 0.0, "VN30F1M");
            for t in &mut s.ticks {
                t.price = 1000.0;
            }
            s
        } else {
            random_walk_ticks(5, d("2022-01-03"), 5, 400, 30, 1000.0, 1.2, 0.0, "VN30F1M")
        };
        write_tick_csv(&dir.path().join("ticks.csv"), &ticks).unwrap();
        let conf_path = dir.path().join("run.conf");
        fs::write(&conf_path, "data.ticks = ticks.csv\n").unwrap();
        let cfg = crate::config::load_config(&conf_path).unwrap();
        (dir, cfg)
    }

    fn read(dir: &Path, name: &str) -> String {
        fs::read_to_string(dir.join(name)).unwrap()
    }

    #[test]
    fn smart_beta_pipeline_emits_all_artifacts() {
        let (dir, cfg) = smart_beta_workspace();
        let out = dir.path().join("out");
        fs::create_dir(&out).unwrap();
        let outcome =
            run_backtest_smart_beta(&cfg, &out, ts("2026-01-01T00:00:00Z")).unwrap();
        assert_eq!(
            outcome.outputs,
            vec!["nav.csv", "drawdown.csv", "metrics.txt", "manifest.txt", "started_at.txt"]
        );
        let nav = load_nav_csv(&out.join("nav.csv")).unwrap();
        assert_eq!(nav.len(), 24);
        assert!(outcome.summary.contains("sharpe ="));
        assert!(outcome.summary.contains("information_ratio"));
        let manifest = read(&out, "manifest.txt");
        assert!(manifest.contains("command = backtest-smart-beta\n"));
        assert!(manifest.contains("data_hash.benchmark.csv = "));
        assert!(manifest.contains("data_hash.fundamentals.csv = "));
        assert!(!manifest.contains("started_at"));
    }

    #[test]
    fn smart_beta_pipeline_is_byte_deterministic() {
        let (dir, cfg) = smart_beta_workspace();
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        fs::create_dir_all(&out_a).unwrap();
        fs::create_dir_all(&out_b).unwrap();
        run_backtest_smart_beta(&cfg, &out_a, ts("2026-01-01T00:00:00Z")).unwrap();
        run_backtest_smart_beta(&cfg, &out_b, ts("2026-02-02T09:30:00Z")).unwrap();
        for name in ["nav.csv", "drawdown.csv", "metrics.txt", "manifest.txt"] {
            assert_eq!(read(&out_a, name), read(&out_b, name), "{name} differs");
        }
        assert_ne!(read(&out_a, "started_at.txt"), read(&out_b, "started_at.txt"));
    }

    #[test]
    fn market_maker_constant_price_yields_flat_nav_and_no_fills() {
        let (dir, cfg) = market_maker_workspace(true);
        let out = dir.path().join("out");
        fs::create_dir(&out).unwrap();
        run_backtest_market_maker(&cfg, &out, ts("2026-01-01T00:00:00Z")).unwrap();
        let fills = read(&out, "fills.csv");
        assert_eq!(fills, "timestamp,side,price,fee_points,inventory_after\n");
        let nav = load_nav_csv(&out.join("nav.csv")).unwrap();
        assert!(nav.values.iter().all(|v| *v == 500_000_000.0));
        let metrics = read(&out, "metrics.txt");
        assert!(metrics.contains("undefined"));
        assert!(!metrics.contains("information_ratio"));
        let inventory = read(&out, "inventory.csv");
        assert!(inventory.starts_with("date,inventory\n2022-01-03,0\n"));
    }

    #[test]
    fn market_maker_pipeline_trades_on_noisy_ticks() {
        let (dir, cfg) = market_maker_workspace(false);
        let out = dir.path().join("out");
        fs::create_dir(&out).unwrap();
        let outcome =
            run_backtest_market_maker(&cfg, &out, ts("2026-01-01T00:00:00Z")).unwrap();
        let fills = read(&out, "fills.csv");
        assert!(fills.lines().count() > 1, "expected fills on a noisy walk");
        assert!(outcome.summary.contains("max_drawdown ="));
    }

    #[test]
    fn metrics_pipeline_round_trips_a_nav_file() {
        let (dir, cfg) = market_maker_workspace(false);
        let out = dir.path().join("out");
        fs::create_dir(&out).unwrap();
        run_backtest_market_maker(&cfg, &out, ts("2026-01-01T00:00:00Z")).unwrap();

        let conf_path = dir.path().join("metrics.conf");
        fs::write(&conf_path, "data.nav = out/nav.csv\n").unwrap();
        let metrics_cfg = crate::config::load_config(&conf_path).unwrap();
        let out2 = dir.path().join("m");
        fs::create_dir(&out2).unwrap();
        let outcome = run_metrics(&metrics_cfg, &out2, ts("2026-01-01T00:00:00Z")).unwrap();
        assert_eq!(
            outcome.outputs,
            vec!["metrics.txt", "metrics.csv", "manifest.txt", "started_at.txt"]
        );
        // Same series, same conventions: the standalone report must agree
        // with the one the backtest emitted.
        assert_eq!(read(&out, "metrics.txt"), read(&out2, "metrics.txt"));
    }

    #[test]
    fn optimize_market_maker_parallel_matches_serial() {
        let (dir, mut cfg) = market_maker_workspace(false);
        cfg.optimizer.n_trials = 8;
        let out_par = dir.path().join("par");
        let out_ser = dir.path().join("ser");
        fs::create_dir_all(&out_par).unwrap();
        fs::create_dir_all(&out_ser).unwrap();
        run_optimize_market_maker(&cfg, &out_par, ts("2026-01-01T00:00:00Z")).unwrap();
        cfg.optimizer.parallel = false;
        run_optimize_market_maker(&cfg, &out_ser, ts("2026-01-01T00:00:00Z")).unwrap();
        assert_eq!(read(&out_par, "trials.csv"), read(&out_ser, "trials.csv"));
        assert_eq!(read(&out_par, "best.txt"), read(&out_ser, "best.txt"));
        // The manifests differ only in the recorded parallel flag.
        let trials = read(&out_par, "trials.csv");
        assert!(trials.starts_with("trial,step,objective,status\n"));
        let best = read(&out_par, "best.txt");
        assert!(best.contains("seed = 2025\n"));
        assert!(best.contains("param.step = "));
    }

    #[test]
    fn optimize_smart_beta_flags_constraint_violations() {
        let (dir, mut cfg) = smart_beta_workspace();
        cfg.optimizer.n_trials = 12;
        cfg.optimizer.parallel = false;
        // An impossible diversification floor fails every trial.
        cfg.optimizer.min_qualified = 11;
        let out = dir.path().join("out");
        fs::create_dir(&out).unwrap();
        let err = run_optimize_smart_beta(&cfg, &out, ts("2026-01-01T00:00:00Z")).unwrap_err();
        assert!(matches!(err, RunError::Runtime(_)));
        assert!(err.detail().contains("trials failed"));

        // With the default floor some trials succeed and artifacts appear.
        cfg.optimizer.min_qualified = 5;
        let outcome = run_optimize_smart_beta(&cfg, &out, ts("2026-01-01T00:00:00Z")).unwrap();
        assert!(outcome.summary.contains("best_trial = "));
        let trials = read(&out, "trials.csv");
        assert!(trials.starts_with("trial,dy_min,pe_max,pe_min,objective,status\n"));
        assert!(trials.contains("ok"));
    }

    #[test]
    fn missing_inputs_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let conf_path = dir.path().join("run.conf");
        fs::write(&conf_path, "market_maker.step = 2.0\n").unwrap();
        let cfg = crate::config::load_config(&conf_path).unwrap();
        let out = dir.path().join("out");
        fs::create_dir(&out).unwrap();

        let err = run_backtest_market_maker(&cfg, &out, ts("2026-01-01T00:00:00Z")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.detail().contains("data.ticks"));

        let err = run_backtest_smart_beta(&cfg, &out, ts("2026-01-01T00:00:00Z")).unwrap_err();
        assert_eq!(err.exit_code(), 3);

        let err = run_metrics(&cfg, &out, ts("2026-01-01T00:00:00Z")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn check_pipeline_reports_and_writes_kv() {
        let dir = tempfile::tempdir().unwrap();
        let repo = dir.path().join("repo");
        fs::create_dir(&repo).unwrap();
        fs::write(
            repo.join("README.md"),
            "# X\n\n## Abstract\n\nbody\n\n## Introduction\n\nbody\n",
        )
        .unwrap();
        let out_path = dir.path().join("report.txt");
        let report = run_check(&repo, None, Some(&out_path)).unwrap();
        assert!((report.score - 2.0 / 7.0).abs() < 1e-12);
        let kv = fs::read_to_string(&out_path).unwrap();
        assert!(kv.contains("required_present = 2\n"));

        let err = run_check(Path::new("/nonexistent/r"), None, None).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
