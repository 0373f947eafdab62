//! Performance metrics over NAV series: Sharpe, Sortino, Information Ratio,
//! and Maximum Drawdown.
//!
//! Conventions, declared once so independent reruns agree:
//!
//! - sample (n−1) standard deviation everywhere;
//! - the risk-free rate de-annualizes geometrically,
//!   `rf_period = (1 + rf_annual)^(1/periods_per_year) − 1`;
//! - Sortino's downside deviation averages `min(excess, 0)²` over *all*
//!   periods, not only the negative ones;
//! - the Information Ratio is per-period unless explicitly annualized.
//!
//! Unit operations are strict (zero volatility or zero downside is an error);
//! batch reporting via [`compute_report`] records those as flagged-undefined
//! instead of aborting.

use chrono::NaiveDate;
use thiserror::Error;

use crate::market_data::BenchmarkSeries;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("series too short: need at least {need} points, have {have}")]
    SeriesTooShort { need: usize, have: usize },
    #[error("zero volatility: standard deviation of excess returns is 0")]
    ZeroVolatility,
    #[error("zero downside: no return below the per-period risk-free rate")]
    ZeroDownside,
    #[error("length mismatch: {left} vs {right} returns")]
    LengthMismatch { left: usize, right: usize },
    #[error("zero tracking error: active returns have zero standard deviation")]
    ZeroTrackingError,
}

/// Portfolio value over time. Dates are strictly increasing and `values[0]`
/// is the run's initial capital by engine construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NavSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl NavSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Simple periodic returns; `returns[i]` realizes on `dates[i]`, the date of
/// the later NAV point (one fewer return than NAV points).
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
}

/// A metric that either has a value or is explicitly undefined with a reason.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricValue {
    Defined(f64),
    Undefined(String),
}

impl MetricValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Defined(v) => Some(*v),
            MetricValue::Undefined(_) => None,
        }
    }
}

/// The four reported metrics for one backtest window. `information_ratio` is
/// `None` when no benchmark was supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub sharpe: MetricValue,
    pub sortino: MetricValue,
    pub information_ratio: Option<MetricValue>,
    pub max_drawdown: f64,
    pub period_start: NaiveDate,
    pub period_end: NaiveDate,
}

pub fn to_returns(nav: &NavSeries) -> Result<ReturnSeries, MetricsError> {
    if nav.len() < 2 {
        return Err(MetricsError::SeriesTooShort { need: 2, have: nav.len() });
    }
    let returns = nav.values.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    Ok(ReturnSeries { dates: nav.dates[1..].to_vec(), returns })
}

/// Per-period risk-free rate from an annual rate, geometric compounding.
pub fn rf_per_period(rf_annual: f64, periods_per_year: u32) -> f64 {
    (1.0 + rf_annual).powf(1.0 / periods_per_year as f64) - 1.0
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn stdev_sample(xs: &[f64]) -> Result<f64, MetricsError> {
    if xs.len() < 2 {
        return Err(MetricsError::SeriesTooShort { need: 2, have: xs.len() });
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    Ok(var.sqrt())
}

/// Annualized Sharpe ratio:
/// `mean(excess) / stdev_sample(excess) × sqrt(periods_per_year)` with
/// `excess[i] = returns[i] − rf_period`.
pub fn sharpe_ratio(
    r: &ReturnSeries,
    rf_annual: f64,
    periods_per_year: u32,
) -> Result<f64, MetricsError> {
    let rf = rf_per_period(rf_annual, periods_per_year);
    let excess: Vec<f64> = r.returns.iter().map(|x| x - rf).collect();
    let sd = stdev_sample(&excess)?;
    if sd == 0.0 {
        return Err(MetricsError::ZeroVolatility);
    }
    Ok(mean(&excess) / sd * (periods_per_year as f64).sqrt())
}

/// Downside deviation: root mean of squared negative excess over all periods.
pub fn downside_deviation(excess: &[f64]) -> f64 {
    let sum_sq: f64 = excess.iter().map(|e| e.min(0.0) * e.min(0.0)).sum();
    (sum_sq / excess.len() as f64).sqrt()
}

/// Annualized Sortino ratio; errors with [`MetricsError::ZeroDownside`] when
/// no return falls below the per-period risk-free rate.
pub fn sortino_ratio(
    r: &ReturnSeries,
    rf_annual: f64,
    periods_per_year: u32,
) -> Result<f64, MetricsError> {
    if r.returns.len() < 2 {
        return Err(MetricsError::SeriesTooShort { need: 2, have: r.returns.len() });
    }
    let rf = rf_per_period(rf_annual, periods_per_year);
    let excess: Vec<f64> = r.returns.iter().map(|x| x - rf).collect();
    if !excess.iter().any(|e| *e < 0.0) {
        return Err(MetricsError::ZeroDownside);
    }
    let dd = downside_deviation(&excess);
    Ok(mean(&excess) / dd * (periods_per_year as f64).sqrt())
}

/// Per-period Information Ratio: `mean(active) / stdev_sample(active)` with
/// `active[i] = r[i] − b[i]`. Not annualized; see
/// [`information_ratio_annualized`] for the opt-in scaling.
pub fn information_ratio(r: &ReturnSeries, b: &ReturnSeries) -> Result<f64, MetricsError> {
    if r.returns.len() != b.returns.len() {
        return Err(MetricsError::LengthMismatch {
            left: r.returns.len(),
            right: b.returns.len(),
        });
    }
    let active: Vec<f64> = r.returns.iter().zip(&b.returns).map(|(x, y)| x - y).collect();
    let sd = stdev_sample(&active)?;
    if sd == 0.0 {
        return Err(MetricsError::ZeroTrackingError);
    }
    Ok(mean(&active) / sd)
}

pub fn information_ratio_annualized(
    r: &ReturnSeries,
    b: &ReturnSeries,
    periods_per_year: u32,
) -> Result<f64, MetricsError> {
    Ok(information_ratio(r, b)? * (periods_per_year as f64).sqrt())
}

/// Maximum drawdown: `min over t of nav[t]/runmax[t] − 1`, in [−1, 0].
pub fn max_drawdown(nav: &NavSeries) -> Result<f64, MetricsError> {
    if nav.is_empty() {
        return Err(MetricsError::SeriesTooShort { need: 1, have: 0 });
    }
    let mut runmax = f64::MIN;
    let mut mdd: f64 = 0.0;
    for &v in &nav.values {
        runmax = runmax.max(v);
        mdd = mdd.min(v / runmax - 1.0);
    }
    Ok(mdd)
}

/// Samples benchmark levels at the NAV dates (latest level at or before each
/// date) and converts to returns aligned with the NAV's return series.
fn benchmark_returns_aligned(
    nav: &NavSeries,
    bench: &BenchmarkSeries,
) -> Result<ReturnSeries, String> {
    let mut levels = Vec::with_capacity(nav.len());
    for &d in &nav.dates {
        match bench.level_on_or_before(d) {
            Some(l) => levels.push(l),
            None => return Err(format!("benchmark has no level on or before {d}")),
        }
    }
    let returns = levels.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    Ok(ReturnSeries { dates: nav.dates[1..].to_vec(), returns })
}

/// Assembles the full report. Structural problems (series too short) are
/// errors; degenerate statistics (zero volatility, zero downside, zero
/// tracking error, uncovered benchmark dates) are flagged undefined so a
/// batch report never aborts on a flat series.
pub fn compute_report(
    nav: &NavSeries,
    benchmark: Option<&BenchmarkSeries>,
    rf_annual: f64,
    periods_per_year: u32,
    annualize_ir: bool,
) -> Result<MetricsReport, MetricsError> {
    let r = to_returns(nav)?;

    let sharpe = match sharpe_ratio(&r, rf_annual, periods_per_year) {
        Ok(v) => MetricValue::Defined(v),
        Err(MetricsError::ZeroVolatility) => {
            MetricValue::Undefined("zero volatility".to_string())
        }
        Err(e) => return Err(e),
    };
    let sortino = match sortino_ratio(&r, rf_annual, periods_per_year) {
        Ok(v) => MetricValue::Defined(v),
        Err(MetricsError::ZeroDownside) => MetricValue::Undefined("zero downside".to_string()),
        Err(e) => return Err(e),
    };
    let information_ratio = match benchmark {
        None => None,
        Some(b) => Some(match benchmark_returns_aligned(nav, b) {
            Err(reason) => MetricValue::Undefined(reason),
            Ok(br) => {
                let res = if annualize_ir {
                    information_ratio_annualized(&r, &br, periods_per_year)
                } else {
                    information_ratio(&r, &br)
                };
                match res {
                    Ok(v) => MetricValue::Defined(v),
                    Err(MetricsError::ZeroTrackingError) => {
                        MetricValue::Undefined("zero tracking error".to_string())
                    }
                    Err(e) => return Err(e),
                }
            }
        }),
    };

    Ok(MetricsReport {
        sharpe,
        sortino,
        information_ratio,
        max_drawdown: max_drawdown(nav)?,
        period_start: nav.dates[0],
        period_end: *nav.dates.last().expect("non-empty"),
    })
}

impl MetricsReport {
    /// Flat `key = value` text block, the `metrics.txt` format.
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("period_start = {}\n", self.period_start));
        out.push_str(&format!("period_end = {}\n", self.period_end));
        let fmt = |m: &MetricValue| match m {
            MetricValue::Defined(v) => v.to_string(),
            MetricValue::Undefined(reason) => format!("undefined ({reason})"),
        };
        out.push_str(&format!("sharpe = {}\n", fmt(&self.sharpe)));
        out.push_str(&format!("sortino = {}\n", fmt(&self.sortino)));
        if let Some(ir) = &self.information_ratio {
            out.push_str(&format!("information_ratio = {}\n", fmt(ir)));
        }
        out.push_str(&format!("max_drawdown = {}\n", self.max_drawdown));
        out
    }

    pub fn csv_header() -> &'static str {
        "period_start,period_end,sharpe,sortino,information_ratio,max_drawdown"
    }

    /// CSV row form; undefined or absent metrics serialize as empty fields.
    pub fn to_csv_row(&self) -> String {
        let cell = |m: &MetricValue| m.value().map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.period_start,
            self.period_end,
            cell(&self.sharpe),
            cell(&self.sortino),
            self.information_ratio.as_ref().map(&cell).unwrap_or_default(),
            self.max_drawdown
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn nav_of(values: &[f64]) -> NavSeries {
        let start = d("2022-01-01");
        let dates = (0..values.len())
            .map(|i| start + chrono::Days::new(i as u64))
            .collect();
        NavSeries { dates, values: values.to_vec() }
    }

    fn returns_of(returns: &[f64]) -> ReturnSeries {
        let start = d("2022-01-02");
        let dates = (0..returns.len())
            .map(|i| start + chrono::Days::new(i as u64))
            .collect();
        ReturnSeries { dates, returns: returns.to_vec() }
    }

    fn assert_close(got: f64, want: f64, rel: f64) {
        let scale = want.abs().max(1e-300);
        assert!(
            ((got - want) / scale).abs() <= rel,
            "got {got}, want {want} (rel tol {rel})"
        );
    }

    #[test]
    fn returns_from_nav() {
        let r = to_returns(&nav_of(&[100.0, 110.0])).unwrap();
        assert_eq!(r.returns, vec![0.10000000000000009]);
        let r = to_returns(&nav_of(&[100.0, 100.0, 100.0])).unwrap();
        assert_eq!(r.returns, vec![0.0, 0.0]);
    }

    #[test]
    fn returns_need_two_points() {
        assert_eq!(
            to_returns(&nav_of(&[100.0])),
            Err(MetricsError::SeriesTooShort { need: 2, have: 1 })
        );
    }

    #[test]
    fn sharpe_zero_mean_is_zero() {
        let r = returns_of(&[0.01, -0.01]);
        assert_eq!(sharpe_ratio(&r, 0.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn sharpe_matches_frozen_oracle() {
        // Independently computed before build: mean 0.015, sample stdev
        // sqrt(0.0005/3) = 0.012909944487358056.
        let r = returns_of(&[0.02, 0.00, 0.01, 0.03]);
        assert_close(sharpe_ratio(&r, 0.0, 1).unwrap(), 1.161895003862225, 1e-12);
    }

    #[test]
    fn sharpe_constant_returns_is_zero_volatility() {
        let r = returns_of(&[0.01, 0.01]);
        assert_eq!(sharpe_ratio(&r, 0.0, 1), Err(MetricsError::ZeroVolatility));
    }

    #[test]
    fn sharpe_annualizes_with_sqrt() {
        let r = returns_of(&[0.02, 0.00, 0.01, 0.03]);
        let per = sharpe_ratio(&r, 0.0, 1).unwrap();
        // rf 0 keeps excess identical for any periods_per_year.
        let ann = sharpe_ratio(&r, 0.0, 252).unwrap();
        assert_close(ann, per * 252f64.sqrt(), 1e-12);
    }

    #[test]
    fn rf_deannualization_is_geometric() {
        // Frozen oracle: (1.06)^(1/12) - 1.
        assert_close(rf_per_period(0.06, 12), 0.004867550565343048, 1e-12);
        assert_close(rf_per_period(0.06, 1), 0.06, 1e-12);
    }

    #[test]
    fn sortino_matches_frozen_oracle() {
        // mean 0.01, downside deviation sqrt(0.02^2 / 3) = 0.011547005383792516.
        let r = returns_of(&[0.04, -0.02, 0.01]);
        assert_close(sortino_ratio(&r, 0.0, 1).unwrap(), 0.8660254037844386, 1e-12);
    }

    #[test]
    fn sortino_zero_mean_is_zero() {
        let r = returns_of(&[0.01, -0.01]);
        assert_eq!(sortino_ratio(&r, 0.0, 1).unwrap(), 0.0);
        let r = returns_of(&[0.02, -0.02]);
        assert_eq!(sortino_ratio(&r, 0.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn sortino_without_downside_is_error() {
        let r = returns_of(&[0.02, 0.03]);
        assert_eq!(sortino_ratio(&r, 0.0, 1), Err(MetricsError::ZeroDownside));
    }

    #[test]
    fn information_ratio_matches_frozen_oracle() {
        // Active returns equal the Sharpe example series, so the per-period
        // IR equals that example's unannualized ratio.
        let r = returns_of(&[0.03, 0.01, 0.02, 0.04]);
        let b = returns_of(&[0.01, 0.01, 0.01, 0.01]);
        assert_close(information_ratio(&r, &b).unwrap(), 1.161895003862225, 1e-9);
        assert_close(
            information_ratio_annualized(&r, &b, 4).unwrap(),
            1.161895003862225 * 2.0,
            1e-9,
        );
    }

    #[test]
    fn information_ratio_identical_series_is_zero_tracking() {
        let r = returns_of(&[0.02, 0.00, 0.01]);
        assert_eq!(information_ratio(&r, &r), Err(MetricsError::ZeroTrackingError));
    }

    #[test]
    fn information_ratio_zero_mean_active_is_zero() {
        let r = returns_of(&[0.02, 0.00]);
        let b = returns_of(&[0.01, 0.01]);
        assert_eq!(information_ratio(&r, &b).unwrap(), 0.0);
    }

    #[test]
    fn information_ratio_length_mismatch() {
        let r = returns_of(&[0.02, 0.00, 0.01]);
        let b = returns_of(&[0.01, 0.01]);
        assert_eq!(
            information_ratio(&r, &b),
            Err(MetricsError::LengthMismatch { left: 3, right: 2 })
        );
    }

    #[test]
    fn max_drawdown_examples() {
        assert_eq!(max_drawdown(&nav_of(&[100.0, 110.0, 120.0])).unwrap(), 0.0);
        assert_eq!(max_drawdown(&nav_of(&[100.0, 120.0, 90.0, 110.0])).unwrap(), -0.25);
        assert_eq!(max_drawdown(&nav_of(&[100.0])).unwrap(), 0.0);
    }

    #[test]
    fn max_drawdown_empty_is_error() {
        assert!(max_drawdown(&NavSeries { dates: vec![], values: vec![] }).is_err());
    }

    #[test]
    fn report_flat_nav_flags_undefined() {
        let nav = nav_of(&[100.0, 100.0, 100.0]);
        let rep = compute_report(&nav, None, 0.0, 252, false).unwrap();
        assert_eq!(rep.max_drawdown, 0.0);
        assert!(matches!(rep.sharpe, MetricValue::Undefined(_)));
        assert!(matches!(rep.sortino, MetricValue::Undefined(_)));
        assert_eq!(rep.information_ratio, None);
    }

    #[test]
    fn report_with_benchmark_populates_all_four() {
        let nav = NavSeries {
            dates: vec![d("2022-01-31"), d("2022-02-28"), d("2022-03-31"), d("2022-04-30")],
            values: vec![100.0, 104.0, 102.0, 107.0],
        };
        let bench = BenchmarkSeries {
            dates: vec![d("2022-01-15"), d("2022-02-25"), d("2022-03-30"), d("2022-04-29")],
            levels: vec![1000.0, 1015.0, 1012.0, 1020.0],
        };
        let rep = compute_report(&nav, Some(&bench), 0.06, 12, false).unwrap();
        assert!(rep.sharpe.value().is_some());
        assert!(rep.sortino.value().is_some());
        assert!(rep.information_ratio.as_ref().unwrap().value().is_some());
        assert!(rep.max_drawdown < 0.0);
        assert_eq!(rep.period_start, d("2022-01-31"));
        assert_eq!(rep.period_end, d("2022-04-30"));
    }

    #[test]
    fn report_benchmark_not_covering_start_flags_ir_undefined() {
        let nav = nav_of(&[100.0, 104.0, 102.0]);
        let bench = BenchmarkSeries { dates: vec![d("2023-01-01")], levels: vec![1000.0] };
        let rep = compute_report(&nav, Some(&bench), 0.0, 12, false).unwrap();
        assert!(matches!(rep.information_ratio, Some(MetricValue::Undefined(_))));
    }

    #[test]
    fn kv_text_and_csv_row_shapes() {
        let rep = MetricsReport {
            sharpe: MetricValue::Defined(1.25),
            sortino: MetricValue::Undefined("zero downside".to_string()),
            information_ratio: None,
            max_drawdown: -0.25,
            period_start: d("2022-01-31"),
            period_end: d("2022-12-30"),
        };
        let text = rep.to_kv_text();
        assert!(text.contains("sharpe = 1.25\n"));
        assert!(text.contains("sortino = undefined (zero downside)\n"));
        assert!(!text.contains("information_ratio"));
        assert!(text.contains("max_drawdown = -0.25\n"));
        assert_eq!(rep.to_csv_row(), "2022-01-31,2022-12-30,1.25,,,-0.25");
    }
}
