//! Per-step unbiased scoring rules for arm values and contrasts.
//!
//! A score transforms one observation into a quantity whose conditional mean
//! given the past equals the estimand: inverse-propensity weighting, or its
//! augmented variant with a history-adapted plug-in acting as a control
//! variate. Scores are computed lazily from a history so one log can serve
//! many estimators and targets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::{BanditHistory, RunningArmStats, StepRecord};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("step {t}: target arm {arm} has zero propensity (invalid history for this target)")]
    ZeroPropensity { t: u64, arm: usize },
    #[error("arm {arm} out of range for {num_arms} arms")]
    ArmOutOfRange { arm: usize, num_arms: usize },
}

/// What a score series estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// The value Q(w) of one arm.
    Arm(usize),
    /// The difference Q(w1) - Q(w2).
    Contrast(usize, usize),
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Arm(w) => write!(f, "arm({w})"),
            Target::Contrast(w1, w2) => write!(f, "contrast({w1},{w2})"),
        }
    }
}

/// Scoring rule family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Ipw,
    Aipw,
}

/// Source of the plug-in m̂_t(w). Must be computable from the history strictly
/// before step t; the built-in sources satisfy that by construction.
#[derive(Debug, Clone, PartialEq)]
pub enum PlugIn {
    /// Lagged per-arm sample mean, 0 before the first pull.
    LaggedMean,
    /// Identically zero: reduces AIPW to IPW.
    Zero,
    /// Fixed per-arm constants (e.g. oracle values for diagnostics).
    PerArm(Vec<f64>),
}

impl PlugIn {
    fn value(&self, stats: &RunningArmStats, arm: usize) -> f64 {
        match self {
            PlugIn::LaggedMean => stats.lagged_mean(arm),
            PlugIn::Zero => 0.0,
            PlugIn::PerArm(values) => values[arm],
        }
    }
}

/// Inverse-propensity score: 1{W_t = w} Y_t / e_t(w).
pub fn ipw_score(record: &StepRecord, arm: usize) -> f64 {
    if record.arm != arm {
        return 0.0;
    }
    record.reward / record.propensities[arm]
}

/// Augmented IPW score: (1{W_t = w}/e_t) Y_t + (1 - 1{W_t = w}/e_t) m̂_t(w).
///
/// `plug_in` must be a function of the history before this step. The first
/// term is evaluated as `Y_t / e_t`, the same expression [`ipw_score`] uses,
/// so a zero plug-in reproduces the IPW score bit for bit.
pub fn aipw_score(record: &StepRecord, arm: usize, plug_in: f64) -> f64 {
    if record.arm == arm {
        let e = record.propensities[arm];
        record.reward / e + (1.0 - 1.0 / e) * plug_in
    } else {
        plug_in
    }
}

/// Difference of AIPW scores, the unbiased scoring rule for Q(w1) - Q(w2).
pub fn contrast_score(
    record: &StepRecord,
    w1: usize,
    w2: usize,
    plug_in_w1: f64,
    plug_in_w2: f64,
) -> f64 {
    aipw_score(record, w1, plug_in_w1) - aipw_score(record, w2, plug_in_w2)
}

/// A per-step score sequence for one target over a complete history.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    pub target: Target,
    pub kind: ScoreKind,
    pub values: Vec<f64>,
}

impl ScoreSeries {
    /// Scores for a single arm value. `kind == Ipw` ignores the plug-in.
    pub fn arm_value(
        history: &BanditHistory,
        arm: usize,
        kind: ScoreKind,
        plug_in: &PlugIn,
    ) -> Result<ScoreSeries, ScoreError> {
        check_arm(history, arm)?;
        let mut stats = RunningArmStats::new(history.num_arms());
        let mut values = Vec::with_capacity(history.horizon());
        for rec in history.steps() {
            // identification requires a strictly positive assignment
            // probability for the target arm at every step
            if rec.propensities[arm] <= 0.0 {
                return Err(ScoreError::ZeroPropensity { t: rec.t, arm });
            }
            let v = match kind {
                ScoreKind::Ipw => ipw_score(rec, arm),
                ScoreKind::Aipw => aipw_score(rec, arm, plug_in.value(&stats, arm)),
            };
            values.push(v);
            stats.update(rec.arm, rec.reward);
        }
        Ok(ScoreSeries { target: Target::Arm(arm), kind, values })
    }

    /// AIPW score differences targeting Q(w1) - Q(w2).
    pub fn contrast(
        history: &BanditHistory,
        w1: usize,
        w2: usize,
        plug_in: &PlugIn,
    ) -> Result<ScoreSeries, ScoreError> {
        check_arm(history, w1)?;
        check_arm(history, w2)?;
        let mut stats = RunningArmStats::new(history.num_arms());
        let mut values = Vec::with_capacity(history.horizon());
        for rec in history.steps() {
            for &w in &[w1, w2] {
                if rec.propensities[w] <= 0.0 {
                    return Err(ScoreError::ZeroPropensity { t: rec.t, arm: w });
                }
            }
            let v = contrast_score(
                rec,
                w1,
                w2,
                plug_in.value(&stats, w1),
                plug_in.value(&stats, w2),
            );
            values.push(v);
            stats.update(rec.arm, rec.reward);
        }
        Ok(ScoreSeries { target: Target::Contrast(w1, w2), kind: ScoreKind::Aipw, values })
    }
}

fn check_arm(history: &BanditHistory, arm: usize) -> Result<(), ScoreError> {
    if arm >= history.num_arms() {
        Err(ScoreError::ArmOutOfRange { arm, num_arms: history.num_arms() })
    } else {
        Ok(())
    }
}
