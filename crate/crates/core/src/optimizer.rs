//! Seeded random search over a box-constrained parameter space.
//!
//! Every sampled coordinate is drawn from its own ChaCha8 stream keyed by
//! `(seed, trial_index, dimension_index)`, so the value of trial `t`,
//! dimension `d` depends on nothing but those three numbers. That makes the
//! parallel and serial drivers produce bit-identical trial lists, and lets a
//! rerun with the same seed reproduce a report exactly.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OptimizerError {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("n_trials must be > 0")]
    NoTrials,
    #[error("all {0} trials failed; no finite objective was produced")]
    AllTrialsFailed(usize),
}

/// One box-constrained search dimension. `lower == upper` pins the value.
#[derive(Debug, Clone, PartialEq)]
pub struct Dimension {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSpace {
    pub dimensions: Vec<Dimension>,
}

impl ParamSpace {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.dimensions.is_empty() {
            return Err(OptimizerError::InvalidSpace("no dimensions".into()));
        }
        let mut seen = BTreeMap::new();
        for d in &self.dimensions {
            if d.name.is_empty() {
                return Err(OptimizerError::InvalidSpace("empty dimension name".into()));
            }
            if seen.insert(d.name.clone(), ()).is_some() {
                return Err(OptimizerError::InvalidSpace(format!("duplicate dimension {}", d.name)));
            }
            if !d.lower.is_finite() || !d.upper.is_finite() {
                return Err(OptimizerError::InvalidSpace(format!(
                    "dimension {} has non-finite bounds [{}, {}]",
                    d.name, d.lower, d.upper
                )));
            }
            if d.lower > d.upper {
                return Err(OptimizerError::InvalidSpace(format!(
                    "dimension {} has lower {} > upper {}",
                    d.name, d.lower, d.upper
                )));
            }
        }
        Ok(())
    }
}

/// Sampled parameter values keyed by dimension name.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Objective(f64),
    /// The objective declined to score these params (constraint violation,
    /// degenerate backtest, non-finite value). The reason is reported as-is.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub params: Params,
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    /// The highest finite objective; ties resolve to the lowest trial index.
    pub best: Trial,
    pub trials: Vec<Trial>,
    pub seed: u64,
    pub n_trials: usize,
}

fn stream_key(seed: u64, trial: u64, dim: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&dim.to_le_bytes());
    key
}

/// Uniform draw in [0, 1) with exactly 53 random mantissa bits.
pub fn sample_unit(seed: u64, trial: u64, dim: u64) -> f64 {
    let mut rng = ChaCha8Rng::from_seed(stream_key(seed, trial, dim));
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws one full parameter vector for the given trial index.
pub fn sample_params(space: &ParamSpace, seed: u64, trial: u64) -> Params {
    space
        .dimensions
        .iter()
        .enumerate()
        .map(|(d, dim)| {
            let u = sample_unit(seed, trial, d as u64);
            (dim.name.clone(), dim.lower + (dim.upper - dim.lower) * u)
        })
        .collect()
}

fn run_trial<F>(space: &ParamSpace, seed: u64, index: usize, objective: &F) -> Trial
where
    F: Fn(&Params) -> TrialOutcome + Sync,
{
    let params = sample_params(space, seed, index as u64);
    let outcome = match objective(&params) {
        TrialOutcome::Objective(v) if !v.is_finite() => {
            TrialOutcome::Failed(format!("non-finite objective {v}"))
        }
        other => other,
    };
    Trial { index, params, outcome }
}

fn pick_best(trials: &[Trial], n_trials: usize) -> Result<Trial, OptimizerError> {
    let mut best: Option<&Trial> = None;
    for t in trials {
        if let TrialOutcome::Objective(v) = t.outcome {
            let better = match best {
                None => true,
                Some(b) => match b.outcome {
                    TrialOutcome::Objective(bv) => v > bv,
                    TrialOutcome::Failed(_) => unreachable!("best is always a scored trial"),
                },
            };
            if better {
                best = Some(t);
            }
        }
    }
    best.cloned().ok_or(OptimizerError::AllTrialsFailed(n_trials))
}

/// Random search, evaluating trials in parallel. The result is bit-identical
/// to [`optimize_serial`] because each trial's draws are keyed, not streamed.
pub fn optimize<F>(
    space: &ParamSpace,
    seed: u64,
    n_trials: usize,
    objective: F,
) -> Result<OptimizationResult, OptimizerError>
where
    F: Fn(&Params) -> TrialOutcome + Sync,
{
    space.validate()?;
    if n_trials == 0 {
        return Err(OptimizerError::NoTrials);
    }
    let trials: Vec<Trial> = (0..n_trials)
        .into_par_iter()
        .map(|i| run_trial(space, seed, i, &objective))
        .collect();
    let best = pick_best(&trials, n_trials)?;
    Ok(OptimizationResult { best, trials, seed, n_trials })
}

/// Single-threaded driver with the same sampling and selection semantics.
pub fn optimize_serial<F>(
    space: &ParamSpace,
    seed: u64,
    n_trials: usize,
    objective: F,
) -> Result<OptimizationResult, OptimizerError>
where
    F: Fn(&Params) -> TrialOutcome + Sync,
{
    space.validate()?;
    if n_trials == 0 {
        return Err(OptimizerError::NoTrials);
    }
    let trials: Vec<Trial> =
        (0..n_trials).map(|i| run_trial(space, seed, i, &objective)).collect();
    let best = pick_best(&trials, n_trials)?;
    Ok(OptimizationResult { best, trials, seed, n_trials })
}
