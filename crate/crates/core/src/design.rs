//! Assignment designs: modified Thompson sampling with a probability floor,
//! the two-stage design, and fixed randomization.
//!
//! A design produces, at every step, the exact probability vector that the
//! arm is sampled from; that vector is recorded verbatim in the history so
//! estimators see the true assignment law.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::history::BanditHistory;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("unknown design `{0}` (expected thompson_floor, two_stage or fixed:<p1,p2,...>)")]
    UnknownDesign(String),
    #[error("floor {floor} is infeasible for {num_arms} arms (must be in (0, 1/K])")]
    InfeasibleFloor { floor: f64, num_arms: usize },
    #[error("fixed design probabilities must be non-negative and sum to 1 (sum = {sum})")]
    BadFixedProbabilities { sum: f64 },
    #[error("two_stage design requires exactly 2 arms, got {0}")]
    TwoStageNeedsTwoArms(usize),
    #[error("two_stage design requires an even horizon, got {0}")]
    TwoStageNeedsEvenHorizon(u64),
    #[error("design parameter out of range: {0}")]
    BadParameter(&'static str),
}

/// A probability vector together with the floor imposed on it (0 when the
/// design imposes none). Entries are >= floor and sum to 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityVector {
    pub probs: Vec<f64>,
    pub floor_value: f64,
}

impl PropensityVector {
    pub fn num_arms(&self) -> usize {
        self.probs.len()
    }

    /// Check normalization and the floor constraint.
    pub fn validate(&self) -> Result<(), DesignError> {
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(DesignError::BadFixedProbabilities { sum });
        }
        if self.probs.iter().any(|p| *p < self.floor_value - 1e-15 || *p < 0.0) {
            return Err(DesignError::BadParameter("probability below floor"));
        }
        Ok(())
    }

    pub fn sample_arm<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_arm(self, rng)
    }
}

/// Multinomial draw from the recorded law.
pub fn sample_arm<R: Rng + ?Sized>(probs: &PropensityVector, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (w, &p) in probs.probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = w;
            if u < acc {
                return w;
            }
        }
    }
    // float residue: the cumulative sum fell a few ulp short of 1
    last_positive
}

/// Per-arm normal posterior under a normal prior N(0, 1) and normal
/// likelihood with known variance, tracked through sufficient statistics.
#[derive(Debug, Clone)]
pub struct PosteriorState {
    pull_counts: Vec<u64>,
    reward_sums: Vec<f64>,
    likelihood_variance: f64,
}

impl PosteriorState {
    pub fn new(num_arms: usize, likelihood_variance: f64) -> Self {
        assert!(likelihood_variance > 0.0, "likelihood variance must be positive");
        Self {
            pull_counts: vec![0; num_arms],
            reward_sums: vec![0.0; num_arms],
            likelihood_variance,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.pull_counts.len()
    }

    pub fn pull_count(&self, arm: usize) -> u64 {
        self.pull_counts[arm]
    }

    pub fn reward_sum(&self, arm: usize) -> f64 {
        self.reward_sums[arm]
    }

    /// Conjugate update with one observation.
    pub fn update(&mut self, arm: usize, reward: f64) {
        self.pull_counts[arm] += 1;
        self.reward_sums[arm] += reward;
    }

    /// Posterior mean: precision-weighted average of the prior mean (0) and
    /// the running reward mean.
    pub fn posterior_mean(&self, arm: usize) -> f64 {
        self.reward_sums[arm] / self.likelihood_variance / self.posterior_precision(arm)
    }

    /// Posterior variance; prior variance 1 gives precision 1 + n/sigma^2.
    pub fn posterior_var(&self, arm: usize) -> f64 {
        1.0 / self.posterior_precision(arm)
    }

    fn posterior_precision(&self, arm: usize) -> f64 {
        1.0 + self.pull_counts[arm] as f64 / self.likelihood_variance
    }
}

/// Monte Carlo Thompson probabilities: the fraction of `num_draws` joint
/// posterior draws in which each arm attains the maximum, ties broken toward
/// the lowest arm index.
pub fn thompson_raw_probs<R: Rng + ?Sized>(
    state: &PosteriorState,
    num_draws: usize,
    rng: &mut R,
) -> Vec<f64> {
    assert!(num_draws >= 1, "need at least one posterior draw");
    let k = state.num_arms();
    if k == 1 {
        return vec![1.0];
    }
    let means: Vec<f64> = (0..k).map(|w| state.posterior_mean(w)).collect();
    let sds: Vec<f64> = (0..k).map(|w| state.posterior_var(w).sqrt()).collect();
    let mut counts = vec![0u64; k];
    for _ in 0..num_draws {
        let mut best = 0usize;
        let mut best_y = f64::NEG_INFINITY;
        for w in 0..k {
            let z: f64 = StandardNormal.sample(rng);
            let y = means[w] + sds[w] * z;
            if y > best_y {
                best_y = y;
                best = w;
            }
        }
        counts[best] += 1;
    }
    counts.iter().map(|&c| c as f64 / num_draws as f64).collect()
}

/// Impose a probability floor: arms below `floor` are raised to it, the rest
/// are shrunk toward the floor by the constant that restores normalization.
/// Preserves the ranking of the un-floored arms.
pub fn apply_floor(raw: &[f64], floor: f64) -> Result<PropensityVector, DesignError> {
    let k = raw.len();
    if !(floor > 0.0) || floor > 1.0 / k as f64 + 1e-15 {
        return Err(DesignError::InfeasibleFloor { floor, num_arms: k });
    }
    let mut excess = 0.0; // sum of (raw - floor) over arms at or above the floor
    for &p in raw {
        if p >= floor {
            excess += p - floor;
        }
    }
    let mut probs = Vec::with_capacity(k);
    if excess <= 0.0 {
        // every arm sits exactly at the floor, which forces floor == 1/K
        probs.resize(k, 1.0 / k as f64);
    } else {
        let c = (1.0 - k as f64 * floor) / excess;
        for &p in raw {
            if p < floor {
                probs.push(floor);
            } else {
                probs.push(floor + c * (p - floor));
            }
        }
    }
    Ok(PropensityVector { probs, floor_value: floor })
}

/// Parameters of the modified Thompson sampling design.
#[derive(Debug, Clone, PartialEq)]
pub struct ThompsonFloorConfig {
    /// Decay exponent of the floor (1/K) * t^-exponent.
    pub floor_exponent: f64,
    /// Scale of the floor; `None` means 1/K.
    pub floor_scale: Option<f64>,
    /// Number of joint posterior draws per probability computation.
    pub posterior_draws: usize,
    /// Known likelihood variance of the conjugate normal update.
    pub likelihood_variance: f64,
    /// Steps sharing one propensity computation; 1 is fully sequential.
    pub batch_size: u64,
}

impl Default for ThompsonFloorConfig {
    fn default() -> Self {
        Self {
            floor_exponent: 0.7,
            floor_scale: None,
            posterior_draws: 10_000,
            likelihood_variance: 1.0,
            batch_size: 1,
        }
    }
}

impl ThompsonFloorConfig {
    pub fn floor_at(&self, t: u64, num_arms: usize) -> f64 {
        let scale = self.floor_scale.unwrap_or(1.0 / num_arms as f64);
        scale * (t as f64).powf(-self.floor_exponent)
    }
}

/// One step of modified Thompson sampling: raw Monte Carlo probabilities,
/// then the floor (1/K) * t^-exponent. The returned vector is exactly the law
/// `sample_arm` uses and must be recorded verbatim.
pub fn thompson_floor_step<R: Rng + ?Sized>(
    state: &PosteriorState,
    t: u64,
    cfg: &ThompsonFloorConfig,
    rng: &mut R,
) -> Result<PropensityVector, DesignError> {
    let raw = thompson_raw_probs(state, cfg.posterior_draws, rng);
    apply_floor(&raw, cfg.floor_at(t, state.num_arms()))
}

/// The two-stage design on a history prefix: 50/50 for t <= T/2, then 90/10
/// in favor of the arm with the higher sample mean at T/2. Ties at T/2 go to
/// arm 0; an arm with zero pulls counts as sample mean -infinity.
pub fn two_stage_step(history: &BanditHistory, t: u64, horizon: u64) -> Result<PropensityVector, DesignError> {
    if history.num_arms() != 2 {
        return Err(DesignError::TwoStageNeedsTwoArms(history.num_arms()));
    }
    if horizon % 2 != 0 {
        return Err(DesignError::TwoStageNeedsEvenHorizon(horizon));
    }
    let half = horizon / 2;
    if t <= half {
        return Ok(PropensityVector { probs: vec![0.5, 0.5], floor_value: 0.0 });
    }
    let mut sums = [0.0f64; 2];
    let mut counts = [0u64; 2];
    for rec in history.steps().iter().take(half as usize) {
        sums[rec.arm] += rec.reward;
        counts[rec.arm] += 1;
    }
    Ok(two_stage_second_half(&sums, &counts))
}

fn two_stage_second_half(sums: &[f64; 2], counts: &[u64; 2]) -> PropensityVector {
    let mean = |i: usize| {
        if counts[i] == 0 {
            f64::NEG_INFINITY
        } else {
            sums[i] / counts[i] as f64
        }
    };
    let winner = if mean(0) >= mean(1) { 0 } else { 1 };
    let probs = if winner == 0 { vec![0.9, 0.1] } else { vec![0.1, 0.9] };
    PropensityVector { probs, floor_value: 0.0 }
}

/// An assignment design, selectable by name.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    ThompsonFloor(ThompsonFloorConfig),
    TwoStage,
    Fixed(Vec<f64>),
}

impl Design {
    /// Parse `thompson_floor`, `two_stage` or `fixed:<p1,p2,...>`.
    pub fn parse(s: &str) -> Result<Design, DesignError> {
        match s {
            "thompson_floor" => Ok(Design::ThompsonFloor(ThompsonFloorConfig::default())),
            "two_stage" => Ok(Design::TwoStage),
            other => {
                if let Some(rest) = other.strip_prefix("fixed:") {
                    let probs: Result<Vec<f64>, _> =
                        rest.split(',').map(|p| p.trim().parse::<f64>()).collect();
                    match probs {
                        Ok(probs) if !probs.is_empty() => {
                            let sum: f64 = probs.iter().sum();
                            if probs.iter().any(|p| *p < 0.0 || !p.is_finite())
                                || (sum - 1.0).abs() > 1e-12
                            {
                                return Err(DesignError::BadFixedProbabilities { sum });
                            }
                            Ok(Design::Fixed(probs))
                        }
                        _ => Err(DesignError::UnknownDesign(other.to_string())),
                    }
                } else {
                    Err(DesignError::UnknownDesign(other.to_string()))
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Design::ThompsonFloor(_) => "thompson_floor",
            Design::TwoStage => "two_stage",
            Design::Fixed(_) => "fixed",
        }
    }

    /// Validate against the run shape and build per-replication state.
    pub fn start(&self, num_arms: usize, horizon: u64) -> Result<DesignState, DesignError> {
        let inner = match self {
            Design::ThompsonFloor(cfg) => {
                if cfg.posterior_draws == 0 {
                    return Err(DesignError::BadParameter("posterior_draws must be >= 1"));
                }
                if cfg.batch_size == 0 {
                    return Err(DesignError::BadParameter("batch_size must be >= 1"));
                }
                if !(cfg.likelihood_variance > 0.0) {
                    return Err(DesignError::BadParameter("likelihood_variance must be > 0"));
                }
                if !(cfg.floor_exponent >= 0.0) {
                    return Err(DesignError::BadParameter("floor_exponent must be >= 0"));
                }
                let scale = cfg.floor_scale.unwrap_or(1.0 / num_arms as f64);
                if !(scale > 0.0) || scale > 1.0 / num_arms as f64 + 1e-15 {
                    return Err(DesignError::InfeasibleFloor { floor: scale, num_arms });
                }
                StateInner::Thompson {
                    posterior: PosteriorState::new(num_arms, cfg.likelihood_variance),
                    cfg: cfg.clone(),
                    cached: None,
                }
            }
            Design::TwoStage => {
                if num_arms != 2 {
                    return Err(DesignError::TwoStageNeedsTwoArms(num_arms));
                }
                if horizon % 2 != 0 {
                    return Err(DesignError::TwoStageNeedsEvenHorizon(horizon));
                }
                StateInner::TwoStage { sums: [0.0; 2], counts: [0; 2], second_half: None }
            }
            Design::Fixed(probs) => {
                if probs.len() != num_arms {
                    return Err(DesignError::BadParameter(
                        "fixed design arity does not match the model",
                    ));
                }
                let v = PropensityVector { probs: probs.clone(), floor_value: 0.0 };
                v.validate()?;
                StateInner::Fixed(v)
            }
        };
        Ok(DesignState { inner, horizon })
    }
}

enum StateInner {
    Thompson {
        posterior: PosteriorState,
        cfg: ThompsonFloorConfig,
        cached: Option<PropensityVector>,
    },
    TwoStage {
        sums: [f64; 2],
        counts: [u64; 2],
        second_half: Option<PropensityVector>,
    },
    Fixed(PropensityVector),
}

/// Mutable per-replication design state. Not shared across replications.
pub struct DesignState {
    inner: StateInner,
    horizon: u64,
}

impl DesignState {
    /// The assignment law for step `t` (1-based). `rng` feeds posterior draws
    /// only; sampling the arm itself uses the caller's design stream.
    pub fn propensities<R: Rng + ?Sized>(&mut self, t: u64, rng: &mut R) -> PropensityVector {
        match &mut self.inner {
            StateInner::Thompson { posterior, cfg, cached } => {
                let fresh = (t - 1) % cfg.batch_size == 0 || cached.is_none();
                if fresh {
                    let v = thompson_floor_step(posterior, t, cfg, rng)
                        .expect("floor validated at start");
                    *cached = Some(v);
                }
                cached.clone().expect("cached propensities")
            }
            StateInner::TwoStage { sums, counts, second_half } => {
                let half = self.horizon / 2;
                if t <= half {
                    PropensityVector { probs: vec![0.5, 0.5], floor_value: 0.0 }
                } else {
                    if second_half.is_none() {
                        *second_half = Some(two_stage_second_half(sums, counts));
                    }
                    second_half.clone().expect("frozen second-half law")
                }
            }
            StateInner::Fixed(v) => v.clone(),
        }
    }

    /// Record the observation for step `t`.
    pub fn observe(&mut self, t: u64, arm: usize, reward: f64) {
        match &mut self.inner {
            StateInner::Thompson { posterior, .. } => posterior.update(arm, reward),
            StateInner::TwoStage { sums, counts, .. } => {
                if t <= self.horizon / 2 {
                    sums[arm] += reward;
                    counts[arm] += 1;
                }
            }
            StateInner::Fixed(_) => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream_rng, Substream};

    fn posterior_rng() -> rand_chacha::ChaCha8Rng {
        substream_rng(2024, 0, Substream::Posterior)
    }

    #[test]
    fn posterior_update_textbook_case() {
        // prior N(0,1), likelihood variance 1, observe y = 2 -> N(1, 1/2)
        let mut s = PosteriorState::new(1, 1.0);
        s.update(0, 2.0);
        assert!((s.posterior_mean(0) - 1.0).abs() < 1e-15);
        assert!((s.posterior_var(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn posterior_without_observations_is_the_prior() {
        let s = PosteriorState::new(3, 1.0);
        for w in 0..3 {
            assert_eq!(s.posterior_mean(w), 0.0);
            assert_eq!(s.posterior_var(w), 1.0);
        }
    }

    #[test]
    fn posterior_mean_is_consistent() {
        let mut s = PosteriorState::new(1, 1.0);
        let mut rng = posterior_rng();
        let mu = 2.5;
        for _ in 0..100_000 {
            let z: f64 = rand_distr::Distribution::sample(&StandardNormal, &mut rng);
            s.update(0, mu + z);
        }
        assert!((s.posterior_mean(0) - mu).abs() < 0.05);
        assert!(s.posterior_var(0) < 1e-4);
    }

    #[test]
    fn raw_probs_single_arm() {
        let s = PosteriorState::new(1, 1.0);
        let mut rng = posterior_rng();
        assert_eq!(thompson_raw_probs(&s, 100, &mut rng), vec![1.0]);
    }

    #[test]
    fn raw_probs_symmetric_arms() {
        let s = PosteriorState::new(2, 1.0);
        let mut rng = posterior_rng();
        let l = 40_000;
        let p = thompson_raw_probs(&s, l, &mut rng);
        let se = (0.25f64 / l as f64).sqrt();
        assert!((p[0] - 0.5).abs() < 5.0 * se, "p = {p:?}");
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn raw_probs_separated_posteriors() {
        // posterior of arm 1 centered 10 sds above arm 0
        let mut s = PosteriorState::new(2, 1.0);
        for _ in 0..1 {
            s.update(1, 20.0); // posterior mean 10, var 1/2
        }
        assert!((s.posterior_mean(1) - 10.0).abs() < 1e-12);
        let mut rng = posterior_rng();
        let p = thompson_raw_probs(&s, 10_000, &mut rng);
        assert!(p[1] >= 0.999, "p = {p:?}");
    }

    #[test]
    fn floor_shrinks_others_proportionally() {
        let v = apply_floor(&[0.8, 0.15, 0.05], 0.1).unwrap();
        let c = 0.7 / 0.75;
        assert!((v.probs[0] - (0.1 + c * 0.7)).abs() < 1e-12);
        assert!((v.probs[1] - (0.1 + c * 0.05)).abs() < 1e-12);
        assert!((v.probs[2] - 0.1).abs() < 1e-15);
        assert!((v.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn floor_noop_when_all_above() {
        let v = apply_floor(&[0.5, 0.5], 0.1).unwrap();
        assert_eq!(v.probs, vec![0.5, 0.5]);
    }

    #[test]
    fn boundary_floor_forces_uniform() {
        let v = apply_floor(&[1.0, 0.0], 0.5).unwrap();
        assert_eq!(v.probs, vec![0.5, 0.5]);
        assert!(apply_floor(&[0.6, 0.4], 0.6).is_err());
    }

    #[test]
    fn thompson_floor_value_examples() {
        let cfg = ThompsonFloorConfig::default();
        assert!((cfg.floor_at(1, 3) - 1.0 / 3.0).abs() < 1e-15);
        // (1/3) * 1000^-0.7, reference value from 30-digit arithmetic
        assert!((cfg.floor_at(1000, 3) - 2.647_760_782_414_271_7e-3).abs() < 1e-15);
    }

    #[test]
    fn thompson_first_step_is_uniform() {
        let s = PosteriorState::new(3, 1.0);
        let cfg = ThompsonFloorConfig { posterior_draws: 500, ..Default::default() };
        let mut rng = posterior_rng();
        let v = thompson_floor_step(&s, 1, &cfg, &mut rng).unwrap();
        for p in &v.probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dominated_arm_sits_exactly_on_floor() {
        let mut s = PosteriorState::new(3, 1.0);
        for _ in 0..50 {
            s.update(2, 50.0);
        }
        let cfg = ThompsonFloorConfig { posterior_draws: 2000, ..Default::default() };
        let mut rng = posterior_rng();
        let t = 500;
        let v = thompson_floor_step(&s, t, &cfg, &mut rng).unwrap();
        let floor = cfg.floor_at(t, 3);
        assert_eq!(v.probs[0], floor);
        assert_eq!(v.probs[1], floor);
        assert!(v.probs[2] > 0.99);
        assert!((v.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_stage_schedule() {
        let mut h = BanditHistory::new(2);
        let horizon = 8;
        for t in 1..=4u64 {
            // arm 0 earns higher rewards in the first half
            let arm = (t % 2) as usize;
            let reward = if arm == 0 { 1.0 } else { -1.0 };
            h.push(vec![0.5, 0.5], arm, reward);
        }
        let at_half = two_stage_step(&h, 4, horizon).unwrap();
        assert_eq!(at_half.probs, vec![0.5, 0.5]);
        let after = two_stage_step(&h, 5, horizon).unwrap();
        assert_eq!(after.probs, vec![0.9, 0.1]);
    }

    #[test]
    fn two_stage_tie_breaks_toward_arm_zero() {
        let mut h = BanditHistory::new(2);
        h.push(vec![0.5, 0.5], 0, 1.0);
        h.push(vec![0.5, 0.5], 1, 1.0);
        // t = T/2 still randomizes evenly
        let v = two_stage_step(&h, 2, 4).unwrap();
        assert_eq!(v.probs, vec![0.5, 0.5]);
        // t > T/2 with identical halftime means: arm 0 wins the tie
        let v2 = two_stage_step(&h, 3, 4).unwrap();
        assert_eq!(v2.probs, vec![0.9, 0.1]);
    }

    #[test]
    fn two_stage_unpulled_arm_loses() {
        let mut h = BanditHistory::new(2);
        h.push(vec![0.5, 0.5], 1, -100.0);
        let v = two_stage_step(&h, 2, 2).unwrap();
        // arm 0 was never pulled: sample mean -inf, arm 1 wins despite -100
        assert_eq!(v.probs, vec![0.1, 0.9]);
    }

    #[test]
    fn two_stage_rejects_bad_shapes() {
        let h = BanditHistory::new(3);
        assert!(matches!(two_stage_step(&h, 1, 4), Err(DesignError::TwoStageNeedsTwoArms(3))));
        assert!(Design::TwoStage.start(2, 7).is_err());
    }

    #[test]
    fn sample_arm_degenerate_and_frequencies() {
        let sure = PropensityVector { probs: vec![1.0, 0.0], floor_value: 0.0 };
        let mut rng = substream_rng(5, 0, Substream::Design);
        for _ in 0..100 {
            assert_eq!(sure.sample_arm(&mut rng), 0);
        }
        let skew = PropensityVector { probs: vec![0.9, 0.1], floor_value: 0.0 };
        let n = 1_000_000;
        let mut ones = 0u64;
        for _ in 0..n {
            if skew.sample_arm(&mut rng) == 1 {
                ones += 1;
            }
        }
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.1).abs() < 0.001, "freq {freq}");
    }

    #[test]
    fn recorded_propensity_matches_sampling_frequency() {
        // the returned vector is the exact law sample_arm draws from
        let mut s = PosteriorState::new(3, 1.0);
        s.update(1, 0.8);
        s.update(2, 1.6);
        s.update(2, 1.4);
        let cfg = ThompsonFloorConfig { posterior_draws: 5000, ..Default::default() };
        let mut rng = posterior_rng();
        let v = thompson_floor_step(&s, 37, &cfg, &mut rng).unwrap();
        let n = 100_000u64;
        let mut counts = vec![0u64; 3];
        let mut draw_rng = substream_rng(5, 1, Substream::Design);
        for _ in 0..n {
            counts[v.sample_arm(&mut draw_rng)] += 1;
        }
        for w in 0..3 {
            let p = v.probs[w];
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let freq = counts[w] as f64 / n as f64;
            assert!((freq - p).abs() <= 5.0 * se, "arm {w}: freq {freq} vs p {p}");
        }
    }

    #[test]
    fn floored_probs_respect_theorem_bound() {
        // e_t(w) >= (1/K) t^-0.7 for every arm and step
        let mut s = PosteriorState::new(3, 1.0);
        let cfg = ThompsonFloorConfig { posterior_draws: 200, ..Default::default() };
        let mut rng = posterior_rng();
        for t in 1..=500u64 {
            let v = thompson_floor_step(&s, t, &cfg, &mut rng).unwrap();
            let floor = cfg.floor_at(t, 3);
            for &p in &v.probs {
                assert!(p >= floor - 1e-15, "t={t} p={p} floor={floor}");
            }
            assert!((v.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let arm = v.sample_arm(&mut rng);
            s.update(arm, if arm == 2 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn design_parsing() {
        assert!(matches!(Design::parse("thompson_floor"), Ok(Design::ThompsonFloor(_))));
        assert!(matches!(Design::parse("two_stage"), Ok(Design::TwoStage)));
        match Design::parse("fixed:0.25,0.75") {
            Ok(Design::Fixed(p)) => assert_eq!(p, vec![0.25, 0.75]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Design::parse("fixed:0.5,0.4").is_err());
        assert!(Design::parse("ucb").is_err());
    }
}
