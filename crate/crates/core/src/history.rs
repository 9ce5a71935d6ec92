//! Canonical log of an adaptive experiment plus lagged running statistics.
//!
//! A [`BanditHistory`] is the single source of truth every estimator reads:
//! per step the full propensity vector actually used for sampling, the chosen
//! arm, and the observed reward. [`RunningArmStats`] exposes the lagged sample
//! mean that serves as the default plug-in estimator.
//!
//! The interchange format is JSON lines: a header object
//! `{"num_arms": K, "horizon": T}` followed by one object
//! `{"t": .., "e": [..], "w": .., "y": ..}` per step. serde_json prints f64
//! with shortest-round-trip encoding, so read(write(h)) == h bit for bit.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::Welford;

/// Tolerance on `sum(e) == 1` for a recorded propensity vector.
pub const PROPENSITY_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed JSON: {source}")]
    Malformed { line: usize, source: serde_json::Error },
    #[error("missing header line")]
    MissingHeader,
    #[error("line {line}: propensity vector has {got} entries, expected {expected}")]
    WrongArity { line: usize, got: usize, expected: usize },
    #[error("line {line}: propensities sum to {sum}, not 1")]
    NotNormalized { line: usize, sum: f64 },
    #[error("line {line}: arm index {arm} out of range for {num_arms} arms")]
    ArmOutOfRange { line: usize, arm: usize, num_arms: usize },
    #[error("line {line}: chosen arm {arm} has non-positive propensity {propensity}")]
    ZeroPropensityChosen { line: usize, arm: usize, propensity: f64 },
    #[error("line {line}: step index {got}, expected {expected}")]
    OutOfOrder { line: usize, got: u64, expected: u64 },
    #[error("log has {got} steps but header declares horizon {declared}")]
    HorizonMismatch { got: usize, declared: u64 },
    #[error("line {line}: non-finite reward or propensity")]
    NonFinite { line: usize },
}

/// One observation: the assignment law `e_t(.)`, the arm pulled, the reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based step index.
    pub t: u64,
    /// The exact propensity vector the arm was sampled from.
    #[serde(rename = "e")]
    pub propensities: Vec<f64>,
    /// Chosen arm `W_t` (0-based).
    #[serde(rename = "w")]
    pub arm: usize,
    /// Observed reward `Y_t`.
    #[serde(rename = "y")]
    pub reward: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LogHeader {
    num_arms: usize,
    horizon: u64,
}

/// The ordered record of a completed (or in-progress) adaptive experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditHistory {
    num_arms: usize,
    steps: Vec<StepRecord>,
}

impl BanditHistory {
    pub fn new(num_arms: usize) -> Self {
        Self { num_arms, steps: Vec::new() }
    }

    pub fn with_capacity(num_arms: usize, horizon: usize) -> Self {
        Self { num_arms, steps: Vec::with_capacity(horizon) }
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    /// Number of recorded steps (T for a completed run).
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn step(&self, index: usize) -> &StepRecord {
        &self.steps[index]
    }

    /// Append the next step; `t` is assigned automatically.
    pub fn push(&mut self, propensities: Vec<f64>, arm: usize, reward: f64) {
        debug_assert_eq!(propensities.len(), self.num_arms);
        debug_assert!(arm < self.num_arms);
        debug_assert!(propensities[arm] > 0.0);
        let t = self.steps.len() as u64 + 1;
        self.steps.push(StepRecord { t, propensities, arm, reward });
    }

    /// Pull count per arm.
    pub fn pull_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.num_arms];
        for rec in &self.steps {
            counts[rec.arm] += 1;
        }
        counts
    }
}

/// Per-arm running count/mean/sum-of-squared-deviations with a lag contract:
/// the value read at step t must reflect only steps 1..t-1, so callers read
/// before they [`RunningArmStats::update`].
#[derive(Debug, Clone)]
pub struct RunningArmStats {
    arms: Vec<Welford>,
}

impl RunningArmStats {
    pub fn new(num_arms: usize) -> Self {
        Self { arms: vec![Welford::new(); num_arms] }
    }

    pub fn update(&mut self, arm: usize, reward: f64) {
        self.arms[arm].push(reward);
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.arms[arm].count()
    }

    /// Sample mean of the arm's past rewards; 0.0 before the first pull
    /// (the cold-start plug-in, matching the prior mean).
    pub fn lagged_mean(&self, arm: usize) -> f64 {
        if self.arms[arm].count() == 0 {
            0.0
        } else {
            self.arms[arm].mean()
        }
    }

    /// Sum of squared deviations from the arm's running mean.
    pub fn sum_sq_dev(&self, arm: usize) -> f64 {
        self.arms[arm].sum_sq_dev()
    }
}

/// Serialize a history as JSON lines.
pub fn write_log<W: Write>(history: &BanditHistory, mut out: W) -> std::io::Result<()> {
    let header = LogHeader {
        num_arms: history.num_arms(),
        horizon: history.horizon() as u64,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for rec in history.steps() {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse and validate a JSON-lines history log. Errors carry line numbers.
pub fn read_log<R: BufRead>(input: R) -> Result<BanditHistory, LogError> {
    let mut lines = input.lines().enumerate();
    let header: LogHeader = loop {
        match lines.next() {
            None => return Err(LogError::MissingHeader),
            Some((idx, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line)
                    .map_err(|source| LogError::Malformed { line: idx + 1, source })?;
            }
        }
    };
    let mut history = BanditHistory::with_capacity(header.num_arms, header.horizon as usize);
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let rec: StepRecord = serde_json::from_str(&line)
            .map_err(|source| LogError::Malformed { line: lineno, source })?;
        validate_record(&rec, header.num_arms, history.horizon() as u64 + 1, lineno)?;
        history.steps.push(rec);
    }
    if history.horizon() as u64 != header.horizon {
        return Err(LogError::HorizonMismatch {
            got: history.horizon(),
            declared: header.horizon,
        });
    }
    Ok(history)
}

fn validate_record(
    rec: &StepRecord,
    num_arms: usize,
    expected_t: u64,
    lineno: usize,
) -> Result<(), LogError> {
    if rec.t != expected_t {
        return Err(LogError::OutOfOrder { line: lineno, got: rec.t, expected: expected_t });
    }
    if rec.propensities.len() != num_arms {
        return Err(LogError::WrongArity {
            line: lineno,
            got: rec.propensities.len(),
            expected: num_arms,
        });
    }
    if !rec.reward.is_finite() || rec.propensities.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(LogError::NonFinite { line: lineno });
    }
    let sum: f64 = rec.propensities.iter().sum();
    if (sum - 1.0).abs() > PROPENSITY_SUM_TOL {
        return Err(LogError::NotNormalized { line: lineno, sum });
    }
    if rec.arm >= num_arms {
        return Err(LogError::ArmOutOfRange { line: lineno, arm: rec.arm, num_arms });
    }
    if rec.propensities[rec.arm] <= 0.0 {
        return Err(LogError::ZeroPropensityChosen {
            line: lineno,
            arm: rec.arm,
            propensity: rec.propensities[rec.arm],
        });
    }
    Ok(())
}
