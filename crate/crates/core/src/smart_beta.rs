//! Month-end value-screened portfolio strategy: screen the universe on P/E
//! and dividend yield, exit everything, re-enter equal-weighted, with a
//! proportional fee on every buy and sell.
//!
//! The engine is a deterministic loop over the table's month-ends inside the
//! configured window. At each month-end it marks NAV at that month's prices,
//! liquidates, screens, and allocates; the recorded NAV point is the mark, so
//! fees paid at month m surface in month m+1's mark. The returned
//! [`RebalanceEvent`] log carries before/after values and fees for auditing
//! every rebalance directly.
//!
//! Screen comparisons are strict on purpose: `pe_min < pe < pe_max` and
//! `dy > dy_min`. A missing P/E or DY fails the screen. Months where nothing
//! qualifies are spent fully in cash, which earns nothing.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use thiserror::Error;

use crate::market_data::FundamentalTable;
use crate::metrics::NavSeries;

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("month {0} is not covered by the fundamentals table")]
    UnknownMonth(NaiveDate),
    #[error("no price for held ticker {ticker} at rebalance")]
    MissingPrice { ticker: String },
    #[error("invalid screen bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid strategy config: {0}")]
    InvalidConfig(String),
    #[error("no month-end inside the window {start}..={end}")]
    EmptyWindow { start: NaiveDate, end: NaiveDate },
}

/// Eligibility window for the value screen: `pe_min < pe < pe_max` and
/// `dy > dy_min`. The DY upper bound is deliberately absent (unbounded).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenBounds {
    pub pe_min: f64,
    pub pe_max: f64,
    pub dy_min: f64,
}

impl Default for ScreenBounds {
    fn default() -> Self {
        ScreenBounds { pe_min: 0.0, pe_max: 15.0, dy_min: 0.01 }
    }
}

impl ScreenBounds {
    pub fn validate(&self) -> Result<(), StrategyError> {
        if !(self.pe_min < self.pe_max) {
            return Err(StrategyError::InvalidBounds(format!(
                "pe_min ({}) must be < pe_max ({})",
                self.pe_min, self.pe_max
            )));
        }
        if !(self.dy_min >= 0.0) {
            return Err(StrategyError::InvalidBounds(format!(
                "dy_min ({}) must be >= 0",
                self.dy_min
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SmartBetaConfig {
    pub bounds: ScreenBounds,
    /// Fraction of traded value charged on each buy and each sell.
    pub fee_rate: f64,
    /// Annual risk-free rate, used by metrics downstream (never accrued here).
    pub rf_annual: f64,
    pub initial_capital: f64,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// When true, a held ticker missing a price at rebalance is valued and
    /// traded at its last known price instead of failing the run.
    pub carry_last_price: bool,
}

impl SmartBetaConfig {
    pub fn validate(&self) -> Result<(), StrategyError> {
        self.bounds.validate()?;
        if !(self.fee_rate >= 0.0 && self.fee_rate < 1.0) {
            return Err(StrategyError::InvalidConfig(format!(
                "fee_rate ({}) must be in [0, 1)",
                self.fee_rate
            )));
        }
        if !(self.initial_capital > 0.0) {
            return Err(StrategyError::InvalidConfig("initial_capital must be > 0".into()));
        }
        if self.start_date > self.end_date {
            return Err(StrategyError::InvalidConfig(format!(
                "start_date {} is after end_date {}",
                self.start_date, self.end_date
            )));
        }
        Ok(())
    }
}

/// Long-only portfolio: non-negative cash plus non-negative fractional
/// holdings. BTreeMap keeps every iteration deterministic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Portfolio {
    pub cash: f64,
    pub holdings: BTreeMap<String, f64>,
}

impl Portfolio {
    pub fn all_cash(cash: f64) -> Self {
        Portfolio { cash, holdings: BTreeMap::new() }
    }

    /// Cash plus holdings marked at `prices`.
    pub fn market_value(&self, prices: &BTreeMap<String, f64>) -> Result<f64, StrategyError> {
        let mut total = self.cash;
        for (ticker, qty) in &self.holdings {
            let p = prices
                .get(ticker)
                .ok_or_else(|| StrategyError::MissingPrice { ticker: ticker.clone() })?;
            total += qty * p;
        }
        Ok(total)
    }
}

/// One month-end rebalance, recorded for auditing: the NAV mark before
/// trading, the fees paid, and the state after re-entry, all at the same
/// month's prices.
#[derive(Debug, Clone, PartialEq)]
pub struct RebalanceEvent {
    pub date: NaiveDate,
    pub nav_before: f64,
    pub fees_paid: f64,
    pub nav_after: f64,
    pub qualified: Vec<String>,
    pub portfolio_after: Portfolio,
}

/// Engine output: the NAV curve plus the full rebalance log.
#[derive(Debug, Clone, PartialEq)]
pub struct SmartBetaRun {
    pub nav: NavSeries,
    pub rebalances: Vec<RebalanceEvent>,
}

/// Tickers whose month row passes the screen, sorted lexicographically.
/// An empty table yields an empty list; a month missing from a non-empty
/// table is an error.
pub fn screen_universe(
    table: &FundamentalTable,
    month: NaiveDate,
    bounds: &ScreenBounds,
) -> Result<Vec<String>, StrategyError> {
    bounds.validate()?;
    if table.rows.is_empty() {
        return Ok(Vec::new());
    }
    if !table.months.contains(&month) {
        return Err(StrategyError::UnknownMonth(month));
    }
    let mut out: Vec<String> = table
        .rows_at(month)
        .iter()
        .filter(|r| {
            let pe_ok = r
                .pe_ratio
                .map(|pe| bounds.pe_min < pe && pe < bounds.pe_max)
                .unwrap_or(false);
            let dy_ok = r.dividend_yield.map(|dy| dy > bounds.dy_min).unwrap_or(false);
            pe_ok && dy_ok
        })
        .map(|r| r.ticker.clone())
        .collect();
    out.sort(); // rows_at is already sorted, but the contract is explicit
    Ok(out)
}

/// Sells every position at `prices`, crediting `qty × price × (1 − fee_rate)`.
pub fn liquidate(
    p: &Portfolio,
    prices: &BTreeMap<String, f64>,
    fee_rate: f64,
) -> Result<Portfolio, StrategyError> {
    let mut cash = p.cash;
    for (ticker, qty) in &p.holdings {
        let price = prices
            .get(ticker)
            .ok_or_else(|| StrategyError::MissingPrice { ticker: ticker.clone() })?;
        cash += qty * price * (1.0 - fee_rate);
    }
    Ok(Portfolio::all_cash(cash))
}

/// Splits `cash` equally across `tickers`: per-ticker gross spend
/// `g = cash / (n × (1 + fee_rate))`, so every position starts at market
/// value `g` and the buy fee `g × fee_rate` is paid on top. An empty ticker
/// list keeps everything in cash.
pub fn allocate_equal(
    cash: f64,
    tickers: &[String],
    prices: &BTreeMap<String, f64>,
    fee_rate: f64,
) -> Result<Portfolio, StrategyError> {
    if tickers.is_empty() {
        return Ok(Portfolio::all_cash(cash));
    }
    let n = tickers.len() as f64;
    let g = cash / (n * (1.0 + fee_rate));
    let mut holdings = BTreeMap::new();
    for t in tickers {
        let price = prices
            .get(t)
            .ok_or_else(|| StrategyError::MissingPrice { ticker: t.clone() })?;
        holdings.insert(t.clone(), g / price);
    }
    // Exact arithmetic leaves residual = 0; floating point can leave a few
    // ulps of either sign. Clamp the negative case so cash stays >= 0.
    let residual = (cash - n * g * (1.0 + fee_rate)).max(0.0);
    Ok(Portfolio { cash: residual, holdings })
}

/// Replays the strategy over every month-end of `table` inside the window.
///
/// The NAV series holds the initial point at `start_date` (skipped when it
/// coincides with the first month-end, whose mark equals the capital anyway)
/// followed by one pre-rebalance mark per month-end.
pub fn run_smart_beta(
    cfg: &SmartBetaConfig,
    table: &FundamentalTable,
) -> Result<SmartBetaRun, StrategyError> {
    cfg.validate()?;
    let months: Vec<NaiveDate> = table
        .months
        .iter()
        .copied()
        .filter(|m| *m >= cfg.start_date && *m <= cfg.end_date)
        .collect();
    if months.is_empty() {
        return Err(StrategyError::EmptyWindow { start: cfg.start_date, end: cfg.end_date });
    }

    let mut portfolio = Portfolio::all_cash(cfg.initial_capital);
    let mut last_seen_price: BTreeMap<String, f64> = BTreeMap::new();
    let mut dates: Vec<NaiveDate> = Vec::with_capacity(months.len() + 1);
    let mut values: Vec<f64> = Vec::with_capacity(months.len() + 1);
    let mut rebalances: Vec<RebalanceEvent> = Vec::with_capacity(months.len());

    if cfg.start_date < months[0] {
        dates.push(cfg.start_date);
        values.push(cfg.initial_capital);
    }

    for &month in &months {
        let mut prices: BTreeMap<String, f64> = table
            .rows_at(month)
            .iter()
            .map(|r| (r.ticker.clone(), r.price))
            .collect();
        if cfg.carry_last_price {
            for ticker in portfolio.holdings.keys() {
                if !prices.contains_key(ticker) {
                    if let Some(p) = last_seen_price.get(ticker) {
                        prices.insert(ticker.clone(), *p);
                    }
                }
            }
        }

        let nav_before = portfolio.market_value(&prices)?;
        dates.push(month);
        values.push(nav_before);

        let sell_gross: f64 = portfolio
            .holdings
            .iter()
            .map(|(t, qty)| qty * prices.get(t).copied().unwrap_or(0.0))
            .sum();
        let after_sell = liquidate(&portfolio, &prices, cfg.fee_rate)?;
        let qualified = screen_universe(table, month, &cfg.bounds)?;
        let next = allocate_equal(after_sell.cash, &qualified, &prices, cfg.fee_rate)?;

        let buy_gross = if qualified.is_empty() {
            0.0
        } else {
            let n = qualified.len() as f64;
            n * (after_sell.cash / (n * (1.0 + cfg.fee_rate)))
        };
        let fees_paid = sell_gross * cfg.fee_rate + buy_gross * cfg.fee_rate;
        let nav_after = next.market_value(&prices)?;

        rebalances.push(RebalanceEvent {
            date: month,
            nav_before,
            fees_paid,
            nav_after,
            qualified,
            portfolio_after: next.clone(),
        });

        for r in table.rows_at(month) {
            last_seen_price.insert(r.ticker.clone(), r.price);
        }
        portfolio = next;
    }

    Ok(SmartBetaRun { nav: NavSeries { dates, values }, rebalances })
}
