//! Evaluation-weight schemes: uniform, and variance-stabilizing
//! stick-breaking with constant or two-point allocation rates.
//!
//! Stick-breaking spreads a unit variance budget over the experiment:
//! `h_t^2 / e_t = (remaining budget) * lambda_t`, with `lambda_T = 1` so the
//! budget is exhausted exactly and `sum h_t^2 / e_t == 1` by construction.
//! The allocation rate `lambda_t` is the fraction of the remaining budget
//! spent on step t.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::BanditHistory;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("step {t}: arm {arm} has zero propensity; stick-breaking weights are undefined")]
    ZeroPropensity { t: u64, arm: usize },
    #[error("arm {arm} out of range for {num_arms} arms")]
    ArmOutOfRange { arm: usize, num_arms: usize },
}

/// Weighting scheme for the adaptively-weighted estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// h_t = 1: the unweighted estimator.
    Uniform,
    /// lambda_t = 1/(T - t + 1), which solves to h_t = sqrt(e_t / T).
    ConstantAlloc,
    /// lambda_t blends the always-sampled and floor-decay scenarios by the
    /// current propensity; `alpha` is the assumed floor decay exponent.
    TwoPointAlloc { alpha: f64 },
}

impl WeightScheme {
    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::ConstantAlloc => "constant_alloc",
            WeightScheme::TwoPointAlloc { .. } => "two_point_alloc",
        }
    }
}

/// Constant allocation rate 1/(T - t + 1). `t` is 1-based and must be in
/// [1, T].
pub fn allocation_constant(t: u64, horizon: u64) -> f64 {
    assert!(t >= 1 && t <= horizon, "t = {t} out of range 1..={horizon}");
    1.0 / (horizon - t + 1) as f64
}

/// Two-point allocation rate
/// `e_t / (T - t + 1) + (1 - e_t) t^-a / (t^-a + (T^(1-a) - t^(1-a)) / (1-a))`.
///
/// Returns exactly 1 at t = T (both branches equal 1 there).
pub fn allocation_two_point(t: u64, horizon: u64, e_t: f64, alpha: f64) -> f64 {
    assert!(t >= 1 && t <= horizon, "t = {t} out of range 1..={horizon}");
    assert!(e_t > 0.0 && e_t <= 1.0, "e_t = {e_t} out of (0, 1]");
    assert!((0.0..1.0).contains(&alpha), "alpha = {alpha} out of [0, 1)");
    if t == horizon {
        return 1.0;
    }
    let tf = t as f64;
    let hf = horizon as f64;
    let optimistic = 1.0 / (hf - tf + 1.0);
    let t_pow = tf.powf(-alpha);
    let decay = t_pow / (t_pow + (hf.powf(1.0 - alpha) - tf.powf(1.0 - alpha)) / (1.0 - alpha));
    e_t * optimistic + (1.0 - e_t) * decay
}

/// One step of the stick-breaking recursion: spend `lambda` of the remaining
/// budget on a step with propensity `e`, returning the evaluation weight and
/// the new budget. The budget is clamped at 0 to absorb 1-ulp negatives near
/// exhaustion.
pub fn stick_break_step(budget: f64, lambda: f64, e: f64) -> (f64, f64) {
    assert!((0.0..=1.0 + 1e-12).contains(&budget), "budget = {budget}");
    assert!((0.0..=1.0).contains(&lambda), "lambda = {lambda}");
    assert!(e > 0.0 && e <= 1.0, "e = {e}");
    let h = (budget * lambda * e).sqrt();
    let new_budget = (budget * (1.0 - lambda)).max(0.0);
    (h, new_budget)
}

/// Evaluation weights for one target arm over a complete history.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSchedule {
    pub target_arm: usize,
    pub scheme: WeightScheme,
    /// Evaluation weights h_t.
    pub h: Vec<f64>,
    /// Allocation rates lambda_t (zeros for the uniform scheme).
    pub lambda: Vec<f64>,
    /// Remaining budget 1 - sum_{s<t} h_s^2/e_s entering each step (ones for
    /// the uniform scheme).
    pub budget_trace: Vec<f64>,
}

/// Run the stick-breaking recursion over a completed history, forcing
/// `lambda_T = 1`. The uniform scheme fills h with ones and leaves lambda and
/// budget fields as unused markers.
pub fn build_schedule(
    history: &BanditHistory,
    arm: usize,
    scheme: WeightScheme,
) -> Result<WeightSchedule, WeightError> {
    if arm >= history.num_arms() {
        return Err(WeightError::ArmOutOfRange { arm, num_arms: history.num_arms() });
    }
    let horizon = history.horizon() as u64;
    let n = history.horizon();
    if let WeightScheme::Uniform = scheme {
        return Ok(WeightSchedule {
            target_arm: arm,
            scheme,
            h: vec![1.0; n],
            lambda: vec![0.0; n],
            budget_trace: vec![1.0; n],
        });
    }
    let mut h = Vec::with_capacity(n);
    let mut lambda = Vec::with_capacity(n);
    let mut budget_trace = Vec::with_capacity(n);
    let mut budget = 1.0;
    for rec in history.steps() {
        let e = rec.propensities[arm];
        if e <= 0.0 {
            return Err(WeightError::ZeroPropensity { t: rec.t, arm });
        }
        let lam = if rec.t == horizon {
            1.0
        } else {
            match scheme {
                WeightScheme::ConstantAlloc => allocation_constant(rec.t, horizon),
                WeightScheme::TwoPointAlloc { alpha } => {
                    allocation_two_point(rec.t, horizon, e, alpha)
                }
                WeightScheme::Uniform => unreachable!(),
            }
        };
        budget_trace.push(budget);
        let (ht, next) = stick_break_step(budget, lam, e);
        h.push(ht);
        lambda.push(lam);
        budget = next;
    }
    Ok(WeightSchedule { target_arm: arm, scheme, h, lambda, budget_trace })
}

impl WeightSchedule {
    pub fn weight_sum(&self) -> f64 {
        self.h.iter().sum()
    }

    /// sum h_t^2 / e_t over the history; 1 by construction for stick-breaking
    /// schemes.
    pub fn variance_budget_spent(&self, history: &BanditHistory) -> f64 {
        self.h
            .iter()
            .zip(history.steps())
            .map(|(h, rec)| h * h / rec.propensities[self.target_arm])
            .sum()
    }

    /// Realized effective-sample-size ratio `(sum h)^2 / sum(h^2/e)`, the
    /// single-run proxy for the infinite-sampling condition. Diagnostic only.
    pub fn infinite_sampling_ratio(&self, history: &BanditHistory) -> f64 {
        let s = self.weight_sum();
        s * s / self.variance_budget_spent(history)
    }

    /// Realized Lyapunov-type ratio
    /// `sum(h^(2+delta)/e^(1+delta)) / (sum h^2/e)^(1+delta/2)`, the
    /// single-run proxy for the bounded-moments condition. Diagnostic only.
    pub fn lyapunov_ratio(&self, history: &BanditHistory, delta: f64) -> f64 {
        // delta = 1 is the reported default; integer powers keep it cheap
        let num: f64 = self
            .h
            .iter()
            .zip(history.steps())
            .map(|(h, rec)| {
                let e = rec.propensities[self.target_arm];
                if delta == 1.0 {
                    h * h * h / (e * e)
                } else {
                    h.powf(2.0 + delta) / e.powf(1.0 + delta)
                }
            })
            .sum();
        let spent = self.variance_budget_spent(history);
        let denom = if delta == 1.0 { spent * spent.sqrt() } else { spent.powf(1.0 + delta / 2.0) };
        num / denom
    }
}

/// Check the allocation-rate sandwich
/// `1/(T - t + 1) <= lambda_t <= C' e_t / (t^-a + T^(1-a) - t^(1-a))`
/// for a supplied constant C'.
pub fn check_allocation_bounds(
    lambda_t: f64,
    t: u64,
    horizon: u64,
    e_t: f64,
    alpha: f64,
    c_prime: f64,
) -> bool {
    let tf = t as f64;
    let hf = horizon as f64;
    let lower = 1.0 / (hf - tf + 1.0);
    let upper =
        c_prime * e_t / (tf.powf(-alpha) + hf.powf(1.0 - alpha) - tf.powf(1.0 - alpha));
    lower <= lambda_t && lambda_t <= upper
}
