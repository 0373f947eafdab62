//! Deterministic backtesting toolkit for the PLUTUS reproducibility standard.
//!
//! The crate is organized as a pipeline: [`market_data`] loads and cleans CSV
//! inputs, [`smart_beta`] and [`market_maker`] replay strategies over them,
//! [`metrics`] scores the resulting NAV curves, [`optimizer`] searches strategy
//! parameters with a seeded, scheduling-independent sampler, and [`compliance`]
//! checks a repository's README against the standard's required sections.
//! [`config`], [`report`], and [`pipeline`] tie everything to the `plutus` CLI:
//! flat key-value configs in, byte-deterministic result files out.
//!
//! Every run is reproducible: identical config and data produce bit-identical
//! output files, including across serial and concurrent optimizer execution.

// Validation deliberately writes `!(x >= 0.0)` instead of `x < 0.0`: the
// negated form also rejects NaN, which must never pass a bounds check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compliance;
pub mod config;
pub mod market_data;
pub mod market_maker;
pub mod metrics;
pub mod optimizer;
pub mod pipeline;
pub mod report;
pub mod smart_beta;
pub mod synth;
