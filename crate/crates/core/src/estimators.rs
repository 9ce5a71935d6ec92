//! Point estimates, variance estimates, studentized statistics and normal
//! confidence intervals for arm values and contrasts.
//!
//! The central estimator is the adaptively-weighted average of unbiased
//! scores `sum h_t G_t / sum h_t` with the variance estimate
//! `sum h_t^2 (G_t - point)^2 / (sum h_t)^2`. Baselines: the arm sample mean,
//! the weighted-average ratio estimator, and W-decorrelation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::BanditHistory;
use crate::numeric::normal_quantile;
use crate::scores::{PlugIn, ScoreError, ScoreKind, ScoreSeries, Target};
use crate::weights::{build_schedule, WeightError, WeightScheme, WeightSchedule};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error("evaluation weights sum to zero")]
    AllZeroWeights,
    #[error("score and weight series have different lengths ({scores} vs {weights})")]
    LengthMismatch { scores: usize, weights: usize },
}

/// Single-run diagnostics carried alongside an estimate, for inspection
/// rather than inference.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Realized effective-sample-size ratio (sum h)^2 / sum(h^2/e).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infinite_sampling_ratio: Option<f64>,
    /// Realized bounded-moments ratio at delta = 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lyapunov_ratio: Option<f64>,
    /// For contrasts: ratio of the two per-arm variance estimates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_ratio: Option<f64>,
}

/// One estimate: point, uncertainty, interval, and optional evaluation
/// against a known truth. Estimators without a variance estimate (the
/// confidence-sequence baseline) leave `variance`/`stderr` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimator: String,
    pub target: Target,
    pub point: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub level: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub studentized: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

impl EstimateReport {
    pub fn width(&self) -> f64 {
        self.ci_hi - self.ci_lo
    }

    pub fn covered(&self) -> Option<bool> {
        self.truth.map(|q| self.ci_lo <= q && q <= self.ci_hi)
    }
}

/// Weighted mean of scores: `sum h_t G_t / sum h_t`.
pub fn adaptively_weighted_estimate(
    scores: &ScoreSeries,
    schedule: &WeightSchedule,
) -> Result<f64, EstimatorError> {
    if scores.values.len() != schedule.h.len() {
        return Err(EstimatorError::LengthMismatch {
            scores: scores.values.len(),
            weights: schedule.h.len(),
        });
    }
    let wsum = schedule.weight_sum();
    if wsum <= 0.0 {
        return Err(EstimatorError::AllZeroWeights);
    }
    let num: f64 = scores.values.iter().zip(&schedule.h).map(|(g, h)| h * g).sum();
    Ok(num / wsum)
}

/// Variance estimate `sum h_t^2 (G_t - point)^2 / (sum h_t)^2`, where `point`
/// is the matching weighted estimate.
pub fn variance_estimate(
    scores: &ScoreSeries,
    schedule: &WeightSchedule,
    point: f64,
) -> Result<f64, EstimatorError> {
    if scores.values.len() != schedule.h.len() {
        return Err(EstimatorError::LengthMismatch {
            scores: scores.values.len(),
            weights: schedule.h.len(),
        });
    }
    let wsum = schedule.weight_sum();
    if wsum <= 0.0 {
        return Err(EstimatorError::AllZeroWeights);
    }
    let num: f64 = scores
        .values
        .iter()
        .zip(&schedule.h)
        .map(|(g, h)| {
            let d = g - point;
            h * h * d * d
        })
        .sum();
    Ok(num / (wsum * wsum))
}

/// Two-sided normal interval `point ± z_{(1+level)/2} sqrt(variance)`.
pub fn normal_ci(point: f64, variance: f64, level: f64) -> (f64, f64) {
    assert!(variance >= 0.0, "variance must be non-negative");
    assert!(level > 0.0 && level < 1.0, "level must be in (0, 1)");
    let z = normal_quantile(0.5 + level / 2.0);
    let half = z * variance.sqrt();
    (point - half, point + half)
}

/// Studentized statistic `(point - truth)/sqrt(variance)`; `None` when the
/// report has no positive variance estimate.
pub fn studentize(report: &EstimateReport, truth: f64) -> Option<f64> {
    match report.variance {
        Some(v) if v > 0.0 => Some((report.point - truth) / v.sqrt()),
        _ => None,
    }
}

fn finish_report(
    estimator: &str,
    target: Target,
    point: f64,
    variance: f64,
    level: f64,
    truth: Option<f64>,
    diagnostics: Option<Diagnostics>,
) -> EstimateReport {
    let (ci_lo, ci_hi) = normal_ci(point, variance, level);
    let mut report = EstimateReport {
        estimator: estimator.to_string(),
        target,
        point,
        variance: Some(variance),
        stderr: Some(variance.sqrt()),
        ci_lo,
        ci_hi,
        level,
        truth,
        studentized: None,
        diagnostics,
    };
    if let Some(q) = truth {
        report.studentized = studentize(&report, q);
    }
    report
}

/// Adaptively-weighted AIPW report for one arm.
pub fn aw_report(
    history: &BanditHistory,
    arm: usize,
    scheme: WeightScheme,
    plug_in: &PlugIn,
    kind: ScoreKind,
    estimator: &str,
    level: f64,
    truth: Option<f64>,
) -> Result<EstimateReport, EstimatorError> {
    let scores = ScoreSeries::arm_value(history, arm, kind, plug_in)?;
    let schedule = build_schedule(history, arm, scheme)?;
    let point = adaptively_weighted_estimate(&scores, &schedule)?;
    let variance = variance_estimate(&scores, &schedule, point)?;
    let diagnostics = Diagnostics {
        infinite_sampling_ratio: Some(schedule.infinite_sampling_ratio(history)),
        lyapunov_ratio: Some(schedule.lyapunov_ratio(history, 1.0)),
        variance_ratio: None,
    };
    Ok(finish_report(estimator, Target::Arm(arm), point, variance, level, truth, Some(diagnostics)))
}

/// Contrast report from two arm-value reports on the same history:
/// point difference, variance sum.
pub fn contrast_estimate(r1: &EstimateReport, r2: &EstimateReport) -> EstimateReport {
    let (Target::Arm(w1), Target::Arm(w2)) = (r1.target, r2.target) else {
        panic!("contrast_estimate expects two arm-value reports");
    };
    assert_eq!(r1.level, r2.level, "levels must match");
    let v1 = r1.variance.expect("contrast needs a variance estimate");
    let v2 = r2.variance.expect("contrast needs a variance estimate");
    let point = r1.point - r2.point;
    let variance = v1 + v2;
    let truth = match (r1.truth, r2.truth) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    // the contrast inherits the weaker of the two per-arm diagnostics
    let combine = |f: fn(f64, f64) -> f64, get: fn(&Diagnostics) -> Option<f64>| match (
        r1.diagnostics.as_ref().and_then(get),
        r2.diagnostics.as_ref().and_then(get),
    ) {
        (Some(a), Some(b)) => Some(f(a, b)),
        _ => None,
    };
    let diagnostics = Diagnostics {
        infinite_sampling_ratio: combine(f64::min, |d| d.infinite_sampling_ratio),
        lyapunov_ratio: combine(f64::max, |d| d.lyapunov_ratio),
        variance_ratio: if v2 > 0.0 { Some(v1 / v2) } else { None },
    };
    finish_report(
        &r1.estimator,
        Target::Contrast(w1, w2),
        point,
        variance,
        r1.level,
        truth,
        Some(diagnostics),
    )
}

/// Arm sample mean with the naive variance estimate
/// `T_w^-2 sum_{W_t=w} (Y_t - mean)^2`. `None` when the arm was never pulled.
pub fn sample_mean_report(
    history: &BanditHistory,
    arm: usize,
    level: f64,
    truth: Option<f64>,
) -> Option<EstimateReport> {
    let mut count = 0u64;
    let mut sum = 0.0;
    for rec in history.steps() {
        if rec.arm == arm {
            count += 1;
            sum += rec.reward;
        }
    }
    if count == 0 {
        return None;
    }
    let mean = sum / count as f64;
    let mut ssd = 0.0;
    for rec in history.steps() {
        if rec.arm == arm {
            let d = rec.reward - mean;
            ssd += d * d;
        }
    }
    let variance = ssd / (count as f64 * count as f64);
    Some(finish_report("sample_mean", Target::Arm(arm), mean, variance, level, truth, None))
}

/// Weighted-average ratio estimator
/// `sum h (1{W=w}/e) Y / sum h (1{W=w}/e)` with its plug-in variance.
/// `None` when the arm was never pulled with positive weight.
pub fn weighted_average_report(
    history: &BanditHistory,
    arm: usize,
    schedule: &WeightSchedule,
    estimator: &str,
    level: f64,
    truth: Option<f64>,
) -> Option<EstimateReport> {
    debug_assert_eq!(schedule.h.len(), history.horizon());
    let mut den = 0.0;
    let mut num = 0.0;
    for (rec, &h) in history.steps().iter().zip(&schedule.h) {
        if rec.arm == arm {
            let w = h / rec.propensities[arm];
            den += w;
            num += w * rec.reward;
        }
    }
    if den <= 0.0 {
        return None;
    }
    let point = num / den;
    let mut vnum = 0.0;
    for (rec, &h) in history.steps().iter().zip(&schedule.h) {
        if rec.arm == arm {
            let e = rec.propensities[arm];
            let d = rec.reward - point;
            vnum += h * h / (e * e) * d * d;
        }
    }
    let variance = vnum / (den * den);
    Some(finish_report(estimator, Target::Arm(arm), point, variance, level, truth, None))
}

/// Default W-decorrelation tuning parameter, `T_w / (T ln T)`.
pub fn w_decorrelation_default_lambda(pulls: u64, horizon: u64) -> f64 {
    let t = (horizon.max(2)) as f64;
    (pulls as f64 / (t * t.ln())).max(1e-12)
}

/// W-decorrelation estimate: the sample mean corrected by geometrically
/// decaying weights `a = (1/(1+l)) (l/(1+l))^N` in the arm's running pull
/// count N. Variance is the plug-in `sum a^2 (Y - mean)^2`.
/// `None` when the arm was never pulled.
pub fn w_decorrelation_report(
    history: &BanditHistory,
    arm: usize,
    tuning_lambda: Option<f64>,
    level: f64,
    truth: Option<f64>,
) -> Option<EstimateReport> {
    let mut count = 0u64;
    let mut sum = 0.0;
    for rec in history.steps() {
        if rec.arm == arm {
            count += 1;
            sum += rec.reward;
        }
    }
    if count == 0 {
        return None;
    }
    let mean = sum / count as f64;
    let lambda =
        tuning_lambda.unwrap_or_else(|| w_decorrelation_default_lambda(count, history.horizon() as u64));
    let base = 1.0 / (1.0 + lambda);
    let ratio = lambda / (1.0 + lambda);
    let mut point = mean;
    let mut variance = 0.0;
    let mut pulls_before = 0u64;
    for rec in history.steps() {
        if rec.arm == arm {
            let a = base * ratio.powi(pulls_before as i32);
            point += a * (rec.reward - mean);
            let d = rec.reward - mean;
            variance += a * a * d * d;
            pulls_before += 1;
        }
    }
    Some(finish_report("w_decorrelation", Target::Arm(arm), point, variance, level, truth, None))
}
