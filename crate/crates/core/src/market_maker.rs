//! Inventory-aware two-sided quoting over a deterministic tick replay.
//!
//! Quotes are offset from the latest tick price (the mid) and skewed against
//! the current inventory, implemented exactly as specified:
//!
//! ```text
//! bid = mid − step × (max(inventory, 0) × coeff + 1)
//! ask = mid − step × (min(inventory, 0) × coeff − 1)
//! ```
//!
//! With `step > 0` and `coeff ≥ 0` this guarantees `bid ≤ mid − step` and
//! `ask ≥ mid + step`, so the spread is at least `2 × step` and one tick
//! price can touch at most one side.
//!
//! Fill model: a resting quote fills when a tick touches or crosses it
//! (`tick ≤ bid` buys one contract at the bid, `tick ≥ ask` sells one at the
//! ask). The fee is quoted in points and always adverse: buys pay
//! `(bid + fee_points) × point_value` in cash, sells receive
//! `(ask − fee_points) × point_value`. A fill cancels the quote and the
//! engine re-quotes immediately at the same tick; otherwise quotes refresh
//! once `refresh_interval` has elapsed. Inventory carries overnight — there
//! is no daily reset.

use chrono::{DateTime, Duration, NaiveDate, Utc};
use thiserror::Error;

use crate::market_data::{Tick, TickSeries};
use crate::metrics::NavSeries;

/// Default inventory skew coefficient. Setting it to 0 disables the skew.
pub const DEFAULT_INVENTORY_COEFF: f64 = 0.02;

#[derive(Debug, Error, PartialEq)]
pub enum MarketMakerError {
    #[error("no ticks inside the window {start}..={end}")]
    EmptySeries { start: DateTime<Utc>, end: DateTime<Utc> },
    #[error("match_tick called without an active quote")]
    NoActiveQuote,
    #[error("invalid market-maker config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketMakerConfig {
    /// Base quote distance from the mid, in points.
    pub step: f64,
    pub inventory_coeff: f64,
    /// Per-fill fee in points, deducted adversely from the execution price.
    pub fee_points: f64,
    pub refresh_interval: Duration,
    pub initial_capital: f64,
    /// Currency value of one index point for one contract.
    pub point_value: f64,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl MarketMakerConfig {
    pub fn validate(&self) -> Result<(), MarketMakerError> {
        let bad = |msg: String| Err(MarketMakerError::InvalidConfig(msg));
        if !(self.step > 0.0) {
            return bad(format!("step ({}) must be > 0", self.step));
        }
        if !(self.inventory_coeff >= 0.0) {
            return bad(format!("inventory_coeff ({}) must be >= 0", self.inventory_coeff));
        }
        if !(self.fee_points >= 0.0) {
            return bad(format!("fee_points ({}) must be >= 0", self.fee_points));
        }
        if self.refresh_interval <= Duration::zero() {
            return bad("refresh_interval must be > 0".into());
        }
        if !(self.initial_capital > 0.0) {
            return bad("initial_capital must be > 0".into());
        }
        if !(self.point_value > 0.0) {
            return bad("point_value must be > 0".into());
        }
        if self.start > self.end {
            return bad(format!("start {} is after end {}", self.start, self.end));
        }
        Ok(())
    }
}

/// A two-sided resting quote, in points. `bid < ask` by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quote {
    pub bid: f64,
    pub ask: f64,
}

/// Mutable replay state: signed inventory in contracts, cash in currency,
/// the last quote refresh instant, and the resting quote if any.
#[derive(Debug, Clone, PartialEq)]
pub struct MMState {
    pub inventory: i64,
    pub cash: f64,
    pub last_refresh: DateTime<Utc>,
    pub active_quote: Option<Quote>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        }
    }
}

/// One executed trade of exactly one contract at a resting quote price.
#[derive(Debug, Clone, PartialEq)]
pub struct Fill {
    pub timestamp: DateTime<Utc>,
    pub side: Side,
    pub price: f64,
    pub fee_points: f64,
    pub inventory_after: i64,
}

/// End-of-day net position per calendar day, carried over days without ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct InventorySeries {
    pub dates: Vec<NaiveDate>,
    pub inventory: Vec<i64>,
}

/// Everything a replay produces: daily NAV, daily inventory, the fill log,
/// and the final state for accounting checks.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketMakerRun {
    pub nav: NavSeries,
    pub inventory: InventorySeries,
    pub fills: Vec<Fill>,
    pub final_state: MMState,
}

/// Quote formulas with the default skew coefficient of 0.02.
pub fn compute_quotes(mid: f64, inventory: i64, step: f64) -> Quote {
    compute_quotes_with_coeff(mid, inventory, step, DEFAULT_INVENTORY_COEFF)
}

/// The quote formulas, evaluated exactly as printed. Positive inventory
/// pushes the bid further below the mid; negative inventory pushes the ask
/// further above. The untouched side stays at `mid ± step`.
pub fn compute_quotes_with_coeff(mid: f64, inventory: i64, step: f64, coeff: f64) -> Quote {
    let inv = inventory as f64;
    let bid = mid - step * (inv.max(0.0) * coeff + 1.0);
    let ask = mid - step * (inv.min(0.0) * coeff - 1.0);
    Quote { bid, ask }
}

/// Applies one tick against the resting quote. At most one side can fill
/// (`bid < ask` always), a fill cancels the quote, and the caller re-quotes
/// immediately. Cash moves by `(price ± fee_points) × point_value`.
pub fn match_tick(
    state: &MMState,
    tick: &Tick,
    fee_points: f64,
    point_value: f64,
) -> Result<(MMState, Option<Fill>), MarketMakerError> {
    let quote = state.active_quote.ok_or(MarketMakerError::NoActiveQuote)?;
    let mut next = state.clone();

    let fill = if tick.price <= quote.bid {
        next.inventory += 1;
        next.cash -= (quote.bid + fee_points) * point_value;
        Some(Fill {
            timestamp: tick.timestamp,
            side: Side::Buy,
            price: quote.bid,
            fee_points,
            inventory_after: next.inventory,
        })
    } else if tick.price >= quote.ask {
        next.inventory -= 1;
        next.cash += (quote.ask - fee_points) * point_value;
        Some(Fill {
            timestamp: tick.timestamp,
            side: Side::Sell,
            price: quote.ask,
            fee_points,
            inventory_after: next.inventory,
        })
    } else {
        None
    };

    if fill.is_some() {
        next.active_quote = None;
    }
    Ok((next, fill))
}

/// End-of-day inventory derived from the fill log alone: the last fill's
/// `inventory_after` on or before each day, zero before the first fill.
pub fn daily_inventory(fills: &[Fill], first_day: NaiveDate, last_day: NaiveDate) -> InventorySeries {
    let mut dates = Vec::new();
    let mut inventory = Vec::new();
    let mut idx = 0usize;
    let mut inv = 0i64;
    let mut day = first_day;
    while day <= last_day {
        while idx < fills.len() && fills[idx].timestamp.date_naive() <= day {
            inv = fills[idx].inventory_after;
            idx += 1;
        }
        dates.push(day);
        inventory.push(inv);
        day = day.succ_opt().expect("valid date");
    }
    InventorySeries { dates, inventory }
}

/// Replays the configured window tick by tick.
///
/// Per tick: check the resting quote for a fill first; on a fill re-quote
/// immediately from the current tick price and new inventory, otherwise
/// re-quote once the refresh interval has elapsed. NAV is marked at each
/// day's last tick as `cash + inventory × price × point_value`; an initial
/// point holding the starting capital is dated the day before the first
/// in-window tick so the series always opens at the configured capital.
pub fn run_market_maker(
    cfg: &MarketMakerConfig,
    ticks: &TickSeries,
) -> Result<MarketMakerRun, MarketMakerError> {
    cfg.validate()?;
    let window: Vec<&Tick> = ticks
        .ticks
        .iter()
        .filter(|t| t.timestamp >= cfg.start && t.timestamp <= cfg.end)
        .collect();
    if window.is_empty() {
        return Err(MarketMakerError::EmptySeries { start: cfg.start, end: cfg.end });
    }

    let first = window[0];
    let mut state = MMState {
        inventory: 0,
        cash: cfg.initial_capital,
        last_refresh: first.timestamp,
        active_quote: Some(compute_quotes_with_coeff(
            first.price,
            0,
            cfg.step,
            cfg.inventory_coeff,
        )),
    };
    let mut fills: Vec<Fill> = Vec::new();

    let first_day = first.timestamp.date_naive();
    let mut nav_dates: Vec<NaiveDate> = vec![first_day.pred_opt().expect("valid date")];
    let mut nav_values: Vec<f64> = vec![cfg.initial_capital];

    for (i, tick) in window.iter().enumerate() {
        if i > 0 {
            let (next, fill) = match_tick(&state, tick, cfg.fee_points, cfg.point_value)?;
            state = next;
            if let Some(f) = fill {
                fills.push(f);
                // Immediate re-quote on fill, from this tick's price.
                state.active_quote = Some(compute_quotes_with_coeff(
                    tick.price,
                    state.inventory,
                    cfg.step,
                    cfg.inventory_coeff,
                ));
                state.last_refresh = tick.timestamp;
            } else if tick.timestamp - state.last_refresh >= cfg.refresh_interval {
                state.active_quote = Some(compute_quotes_with_coeff(
                    tick.price,
                    state.inventory,
                    cfg.step,
                    cfg.inventory_coeff,
                ));
                state.last_refresh = tick.timestamp;
            }
        }

        let day = tick.timestamp.date_naive();
        let is_last_of_day = match window.get(i + 1) {
            Some(next_tick) => next_tick.timestamp.date_naive() != day,
            None => true,
        };
        if is_last_of_day {
            nav_dates.push(day);
            nav_values.push(state.cash + state.inventory as f64 * tick.price * cfg.point_value);
        }
    }

    let last_day = window.last().expect("non-empty").timestamp.date_naive();
    let inventory = daily_inventory(&fills, first_day, last_day);

    Ok(MarketMakerRun {
        nav: NavSeries { dates: nav_dates, values: nav_values },
        inventory,
        fills,
        final_state: state,
    })
}
