//! Seeded synthetic market data.
//!
//! Everything here is a pure function of its arguments: the same seed gives
//! bit-identical series on every machine, which is what lets fixtures be
//! regenerated instead of versioned as opaque blobs. Draws come from
//! ChaCha8 keyed by `(seed, generator tag)`; Gaussian noise is Box-Muller.
//!
//! Tick generators produce one trading session per calendar day (06:00 to
//! whenever the tick budget runs out), with prices carried across days and
//! clamped to stay strictly positive.

use chrono::{Duration, Months, NaiveDate, NaiveTime};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::market_data::{month_end, BenchmarkSeries, FundamentalRow, FundamentalTable, Tick, TickSeries};

fn rng(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box-Muller; `1 - u` keeps the log argument nonzero.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - unit(rng);
    let u2 = unit(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

const SESSION_OPEN: NaiveTime = match NaiveTime::from_hms_opt(6, 0, 0) {
    Some(t) => t,
    None => unreachable!(),
};

fn sessions(
    first_day: NaiveDate,
    n_days: usize,
    ticks_per_day: usize,
    dt_secs: i64,
    mut price_step: impl FnMut(f64) -> f64,
    start_price: f64,
    instrument: &str,
) -> TickSeries {
    let mut ticks = Vec::with_capacity(n_days * ticks_per_day);
    let mut price = start_price;
    let mut day = first_day;
    for _ in 0..n_days {
        let open = day.and_time(SESSION_OPEN).and_utc();
        for k in 0..ticks_per_day {
            ticks.push(Tick {
                timestamp: open + Duration::seconds(k as i64 * dt_secs),
                price,
            });
            price = price_step(price).max(1.0);
        }
        day = day.succ_opt().expect("valid date");
    }
    TickSeries { instrument: instrument.into(), ticks }
}

/// Arithmetic random walk with per-tick drift, one session per day.
#[allow(clippy::too_many_arguments)]
pub fn random_walk_ticks(
    seed: u64,
    first_day: NaiveDate,
    n_days: usize,
    ticks_per_day: usize,
    dt_secs: i64,
    start_price: f64,
    vol: f64,
    drift: f64,
    instrument: &str,
) -> TickSeries {
    let mut r = rng(seed, 1);
    sessions(
        first_day,
        n_days,
        ticks_per_day,
        dt_secs,
        move |p| p + drift + vol * normal(&mut r),
        start_price,
        instrument,
    )
}

/// Mean-reverting walk: each tick pulls a fraction `kappa` back toward
/// `mean` before adding noise.
#[allow(clippy::too_many_arguments)]
pub fn ou_ticks(
    seed: u64,
    first_day: NaiveDate,
    n_days: usize,
    ticks_per_day: usize,
    dt_secs: i64,
    mean: f64,
    kappa: f64,
    vol: f64,
    instrument: &str,
) -> TickSeries {
    let mut r = rng(seed, 2);
    sessions(
        first_day,
        n_days,
        ticks_per_day,
        dt_secs,
        move |p| p + kappa * (mean - p) + vol * normal(&mut r),
        mean,
        instrument,
    )
}

/// Bull regime then bear regime, price continuous at the switch.
#[allow(clippy::too_many_arguments)]
pub fn two_regime_ticks(
    seed: u64,
    first_day: NaiveDate,
    days_per_regime: usize,
    ticks_per_day: usize,
    dt_secs: i64,
    start_price: f64,
    vol: f64,
    drift_bull: f64,
    drift_bear: f64,
    instrument: &str,
) -> TickSeries {
    let mut r = rng(seed, 3);
    let mut k = 0usize;
    let switch = days_per_regime * ticks_per_day;
    sessions(
        first_day,
        days_per_regime * 2,
        ticks_per_day,
        dt_secs,
        move |p| {
            let drift = if k < switch { drift_bull } else { drift_bear };
            k += 1;
            p + drift + vol * normal(&mut r)
        },
        start_price,
        instrument,
    )
}

/// Monthly fundamentals for `n_tickers` symbols over `n_months` month-ends.
///
/// P/E sits in (10.5, 14.5) and dividend yield in (0.045, 0.08), so under
/// the default screen every listed ticker qualifies; months listed in
/// `zero_qualified_months` (0-based) get P/E 50 everywhere and qualify
/// nobody. Every seventh row of the last ticker drops its dividend yield to
/// exercise the absent-field path. `monthly_drift[m]`, when provided, tilts
/// all prices that month (empty slice = flat drift).
pub fn fundamentals_fixture(
    seed: u64,
    first_month: NaiveDate,
    n_months: usize,
    n_tickers: usize,
    zero_qualified_months: &[usize],
    monthly_drift: &[f64],
) -> FundamentalTable {
    assert!(monthly_drift.is_empty() || monthly_drift.len() == n_months);
    let mut r = rng(seed, 4);
    let tickers: Vec<String> = (0..n_tickers).map(|i| format!("S{i:02}")).collect();
    let mut prices: Vec<f64> = (0..n_tickers).map(|_| 20.0 + 60.0 * unit(&mut r)).collect();

    let mut rows = Vec::with_capacity(n_months * n_tickers);
    let mut month = month_end(first_month);
    for m in 0..n_months {
        let drift = monthly_drift.get(m).copied().unwrap_or(0.0);
        let zeroed = zero_qualified_months.contains(&m);
        for (i, ticker) in tickers.iter().enumerate() {
            let pe = if zeroed { 50.0 } else { 10.5 + 4.0 * unit(&mut r) };
            let dy = if i == n_tickers - 1 && m % 7 == 0 {
                None
            } else {
                Some(0.045 + 0.035 * unit(&mut r))
            };
            rows.push(FundamentalRow {
                ticker: ticker.clone(),
                as_of: month,
                pe_ratio: Some(pe),
                dividend_yield: dy,
                price: prices[i],
            });
            prices[i] = (prices[i] * (1.0 + drift + 0.04 * normal(&mut r))).max(1.0);
        }
        month = month_end(
            month
                .checked_add_months(Months::new(1))
                .expect("valid month"),
        );
    }
    FundamentalTable::from_rows(rows).expect("fixture rows are unique per (ticker, month)")
}

/// Daily benchmark index levels, multiplicative steps, strictly positive.
pub fn benchmark_fixture(
    seed: u64,
    first_day: NaiveDate,
    n_days: usize,
    start_level: f64,
    daily_drift: f64,
    vol: f64,
) -> BenchmarkSeries {
    let mut r = rng(seed, 5);
    let mut dates = Vec::with_capacity(n_days);
    let mut levels = Vec::with_capacity(n_days);
    let mut level = start_level;
    let mut day = first_day;
    for _ in 0..n_days {
        dates.push(day);
        levels.push(level);
        level = (level * (1.0 + daily_drift + vol * normal(&mut r))).max(0.01);
        day = day.succ_opt().expect("valid date");
    }
    BenchmarkSeries { dates, levels }
}
