//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured statistic.
//!
//! Run `cargo test -p banditeval --test acceptance -- --nocapture` to watch
//! the lines appear; the full suite is Monte Carlo heavy and takes tens of
//! minutes on a small machine.
//!
//! Scale notes, fixed here and documented in the README:
//! * criteria 5, 6, 8, 9 share three replicated runs at T = 10^4, R = 10^4;
//! * Thompson-sampling runs use 200 posterior draws per step instead of the
//!   library default 10,000. The floored Monte Carlo probabilities are
//!   recorded verbatim and remain the exact sampling law, so estimator
//!   validity is unaffected; the draw count only perturbs the design's
//!   exploration path while the floor pins its decay rate.

use std::sync::OnceLock;

use banditeval::design::Design;
use banditeval::confseq::{ConfSeqParams, ConfSeqState};
use banditeval::env::Setting;
use banditeval::harness::{
    run_simulation, thompson_floor_design, EstimationContext, EstimatorKind, ModelSpec,
    SimOutput, SimulationConfig,
};
use banditeval::harness::estimate_on_history;
use banditeval::history::BanditHistory;
use banditeval::numeric::{excess_kurtosis, ks_distance_vs_std_normal, splitmix64, Welford};
use banditeval::rng::{substream_rng, Substream};
use banditeval::scores::{PlugIn, ScoreKind, ScoreSeries, Target};
use banditeval::weights::{
    allocation_two_point, build_schedule, check_allocation_bounds, WeightScheme,
};
use rand::Rng;
use rayon::prelude::*;

const DESK_HORIZON: u64 = 10_000;
const DESK_REPS: u64 = 10_000;
const DESK_POSTERIOR_DRAWS: usize = 200;

fn verdict(criterion: u32, pass: bool, detail: &str) {
    println!(
        "acceptance criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion}: {detail}");
}

fn desk_config(setting: Setting, seed: u64) -> SimulationConfig {
    let mut cfg = SimulationConfig::new(
        ModelSpec::Preset(setting),
        thompson_floor_design(DESK_POSTERIOR_DRAWS),
        DESK_HORIZON,
        DESK_REPS,
    );
    cfg.base_seed = seed;
    cfg.estimators = vec![
        EstimatorKind::SampleMean,
        EstimatorKind::UnweightedAipw,
        EstimatorKind::AwTwoPoint,
        EstimatorKind::HowardCs,
    ];
    cfg.arms = vec![0, 2];
    cfg.contrasts = vec![(2, 0)];
    cfg
}

fn desk_run(setting: Setting) -> &'static SimOutput {
    static NO: OnceLock<SimOutput> = OnceLock::new();
    static LOW: OnceLock<SimOutput> = OnceLock::new();
    static HIGH: OnceLock<SimOutput> = OnceLock::new();
    let (lock, seed) = match setting {
        Setting::NoSignal => (&NO, 0xACCE_5500),
        Setting::LowSignal => (&LOW, 0xACCE_5501),
        Setting::HighSignal => (&HIGH, 0xACCE_5502),
        Setting::IntroNormal => unreachable!("no desk run for the intro setting"),
    };
    lock.get_or_init(|| run_simulation(&desk_config(setting, seed)).unwrap())
}

fn intro_run() -> &'static SimOutput {
    static INTRO: OnceLock<SimOutput> = OnceLock::new();
    INTRO.get_or_init(|| {
        let mut cfg = SimulationConfig::new(
            ModelSpec::Preset(Setting::IntroNormal),
            Design::TwoStage,
            10_000,
            100_000,
        );
        cfg.base_seed = 0xACCE_5510;
        cfg.estimators = vec![EstimatorKind::SampleMean, EstimatorKind::UnweightedIpw];
        cfg.arms = vec![0];
        run_simulation(&cfg).unwrap()
    })
}

// ---------------------------------------------------------------------------
// criterion 1: exact algebraic properties
// ---------------------------------------------------------------------------

/// Independent re-transcriptions of every estimator, used as the brute-force
/// oracle. The stick-breaking recursion is written in its subtraction form
/// (1 - spent so far) rather than the library's multiplicative budget.
mod oracle {
    use banditeval::history::BanditHistory;

    pub fn lagged_mean(h: &BanditHistory, upto: usize, arm: usize) -> f64 {
        let mut n = 0u64;
        let mut s = 0.0;
        for rec in h.steps().iter().take(upto) {
            if rec.arm == arm {
                n += 1;
                s += rec.reward;
            }
        }
        if n == 0 {
            0.0
        } else {
            s / n as f64
        }
    }

    pub fn sample_mean(h: &BanditHistory, arm: usize) -> Option<(f64, f64)> {
        let rewards: Vec<f64> =
            h.steps().iter().filter(|r| r.arm == arm).map(|r| r.reward).collect();
        if rewards.is_empty() {
            return None;
        }
        let n = rewards.len() as f64;
        let mean = rewards.iter().sum::<f64>() / n;
        let var = rewards.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n * n);
        Some((mean, var))
    }

    fn score(h: &BanditHistory, i: usize, arm: usize, augmented: bool) -> f64 {
        let rec = &h.steps()[i];
        let m = if augmented { lagged_mean(h, i, arm) } else { 0.0 };
        if rec.arm == arm {
            let e = rec.propensities[arm];
            rec.reward / e + (1.0 - 1.0 / e) * m
        } else {
            m
        }
    }

    pub enum Scheme {
        Uniform,
        Constant,
        TwoPoint(f64),
    }

    fn weights(h: &BanditHistory, arm: usize, scheme: &Scheme) -> Vec<f64> {
        let t_total = h.horizon();
        let mut spent = 0.0;
        let mut out = Vec::with_capacity(t_total);
        for (i, rec) in h.steps().iter().enumerate() {
            let t = (i + 1) as f64;
            let tt = t_total as f64;
            let e = rec.propensities[arm];
            let lam = if i + 1 == t_total {
                1.0
            } else {
                match scheme {
                    Scheme::Uniform => unreachable!(),
                    Scheme::Constant => 1.0 / (tt - t + 1.0),
                    Scheme::TwoPoint(a) => {
                        let tp = t.powf(-a);
                        e / (tt - t + 1.0)
                            + (1.0 - e) * tp
                                / (tp + (tt.powf(1.0 - a) - t.powf(1.0 - a)) / (1.0 - a))
                    }
                }
            };
            let h2 = (1.0 - spent) * lam * e;
            out.push(h2.max(0.0).sqrt());
            spent += (1.0 - spent) * lam;
        }
        out
    }

    /// Adaptively-weighted point and variance by direct formula transcription.
    pub fn aw(h: &BanditHistory, arm: usize, scheme: &Scheme, augmented: bool) -> (f64, f64) {
        let ws = match scheme {
            Scheme::Uniform => vec![1.0; h.horizon()],
            other => weights(h, arm, other),
        };
        let scores: Vec<f64> =
            (0..h.horizon()).map(|i| score(h, i, arm, augmented)).collect();
        let wsum: f64 = ws.iter().sum();
        let point = ws.iter().zip(&scores).map(|(w, g)| w * g).sum::<f64>() / wsum;
        let var = ws
            .iter()
            .zip(&scores)
            .map(|(w, g)| w * w * (g - point) * (g - point))
            .sum::<f64>()
            / (wsum * wsum);
        (point, var)
    }

    pub fn weighted_average(h: &BanditHistory, arm: usize, alpha: f64) -> Option<(f64, f64)> {
        let ws = weights(h, arm, &Scheme::TwoPoint(alpha));
        let mut den = 0.0;
        let mut num = 0.0;
        for (rec, w) in h.steps().iter().zip(&ws) {
            if rec.arm == arm {
                den += w / rec.propensities[arm];
                num += w / rec.propensities[arm] * rec.reward;
            }
        }
        if den <= 0.0 {
            return None;
        }
        let point = num / den;
        let mut vnum = 0.0;
        for (rec, w) in h.steps().iter().zip(&ws) {
            if rec.arm == arm {
                let e = rec.propensities[arm];
                vnum += w * w / (e * e) * (rec.reward - point) * (rec.reward - point);
            }
        }
        Some((point, vnum / (den * den)))
    }

    pub fn w_decorrelation(h: &BanditHistory, arm: usize, lambda: f64) -> Option<(f64, f64)> {
        let (mean, _) = sample_mean(h, arm)?;
        let mut point = mean;
        let mut var = 0.0;
        let mut pulls = 0i32;
        for rec in h.steps() {
            if rec.arm == arm {
                let a = (1.0 / (1.0 + lambda)) * (lambda / (1.0 + lambda)).powi(pulls);
                point += a * (rec.reward - mean);
                var += a * a * (rec.reward - mean) * (rec.reward - mean);
                pulls += 1;
            }
        }
        Some((point, var))
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * 1.0f64.max(a.abs()).max(b.abs())
}

fn random_small_history(seed: u64) -> BanditHistory {
    let mut rng = substream_rng(seed, 0, Substream::Design);
    let horizon = 1 + (splitmix64(seed) % 6) as usize;
    let mut h = BanditHistory::new(2);
    for _ in 0..horizon {
        let p0 = 0.15 + 0.7 * rng.random::<f64>();
        let p1 = 1.0 - p0;
        let arm = usize::from(rng.random::<f64>() >= p0);
        let reward = rng.random::<f64>() * 4.0 - 2.0;
        h.push(vec![p0, p1], arm, reward);
    }
    h
}

fn random_history(seed: u64, num_arms: usize, horizon: usize) -> BanditHistory {
    let mut rng = substream_rng(seed, 1, Substream::Design);
    let mut h = BanditHistory::new(num_arms);
    for _ in 0..horizon {
        let mut probs: Vec<f64> = (0..num_arms).map(|_| 0.05 + rng.random::<f64>()).collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        let tail: f64 = probs.iter().skip(1).sum();
        probs[0] = 1.0 - tail;
        let u: f64 = rng.random();
        let mut arm = num_arms - 1;
        let mut acc = 0.0;
        for (w, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                arm = w;
                break;
            }
        }
        let reward = rng.random::<f64>() * 2.0 - 1.0;
        h.push(probs, arm, reward);
    }
    h
}

#[test]
fn criterion_1_exact_algebraic_properties() {
    // stick-breaking exhaustion and the constant-allocation closed form on
    // 1,000 random histories
    let mut worst_sum = 0.0f64;
    let mut worst_closed_form = 0.0f64;
    for i in 0..1000u64 {
        let k = 2 + (i % 2) as usize;
        let horizon = 1 + (splitmix64(i ^ 0xA11) % 200) as usize;
        let h = random_history(i, k, horizon);
        for scheme in [WeightScheme::ConstantAlloc, WeightScheme::TwoPointAlloc { alpha: 0.7 }] {
            let sched = build_schedule(&h, 0, scheme).unwrap();
            worst_sum = worst_sum.max((sched.variance_budget_spent(&h) - 1.0).abs());
            assert_eq!(*sched.lambda.last().unwrap(), 1.0, "terminal allocation");
            if scheme == WeightScheme::ConstantAlloc {
                for (ht, rec) in sched.h.iter().zip(h.steps()) {
                    let expect = (rec.propensities[0] / horizon as f64).sqrt();
                    worst_closed_form = worst_closed_form.max((ht - expect).abs());
                }
            }
        }
    }
    let sums_ok = worst_sum <= 1e-10;
    let closed_ok = worst_closed_form <= 1e-12;

    // two-point terminal allocation is exactly 1
    let mut terminal_ok = true;
    for t_total in [1u64, 2, 7, 100, 9999] {
        for e in [1e-6, 0.25, 1.0] {
            for a in [0.0, 0.3, 0.7, 0.99] {
                terminal_ok &= allocation_two_point(t_total, t_total, e, a) == 1.0;
            }
        }
    }

    // the lower-bound inequality on a 10^4-point (t, T, alpha) grid
    let mut inequality_ok = true;
    let alphas: Vec<f64> = (0..20).map(|i| i as f64 * 0.05).collect();
    let horizons: Vec<u64> =
        (0..25).map(|i| 1 + (1.35f64.powi(i) as u64)).collect();
    for &a in &alphas {
        for &t_total in &horizons {
            for j in 0..20u64 {
                let t = (1 + j * t_total / 20).clamp(1, t_total);
                let lower = 1.0 / (1.0 + t_total as f64 - t as f64);
                let tp = (t as f64).powf(-a);
                let decay = tp
                    / (tp
                        + ((t_total as f64).powf(1.0 - a) - (t as f64).powf(1.0 - a))
                            / (1.0 - a));
                inequality_ok &= lower <= decay + 1e-12;
                // the two-point rate sits inside the theorem bounds with a
                // constant of scale K/(1-alpha) whenever e >= (1/K) t^-alpha.
                // At alpha = 0 and at e = 1 the rate EQUALS the lower bound,
                // so the sweep compares with one-ulp-scale slack; the exact
                // checker is exercised where the inequalities are strict.
                let c_prime = 3.0 / (1.0 - a);
                let floor = tp / 3.0;
                for e in [floor, (floor + 1.0) / 2.0, 1.0] {
                    let lam = allocation_two_point(t, t_total, e, a);
                    let upper = c_prime * e
                        / (tp + (t_total as f64).powf(1.0 - a) - (t as f64).powf(1.0 - a));
                    inequality_ok &= lam >= lower * (1.0 - 1e-12);
                    inequality_ok &= lam <= upper * (1.0 + 1e-12);
                    if a > 0.0 && e < 1.0 && e > floor && t < t_total {
                        inequality_ok &=
                            check_allocation_bounds(lam, t, t_total, e, a, c_prime);
                    }
                }
            }
        }
    }

    // AIPW with a zero plug-in IS the IPW score
    let mut zero_plug_ok = true;
    for i in 0..200u64 {
        let h = random_history(i ^ 0xBEEF, 2 + (i % 2) as usize, 1 + (i % 50) as usize);
        for arm in 0..h.num_arms() {
            let ipw = ScoreSeries::arm_value(&h, arm, ScoreKind::Ipw, &PlugIn::Zero).unwrap();
            let aipw = ScoreSeries::arm_value(&h, arm, ScoreKind::Aipw, &PlugIn::Zero).unwrap();
            zero_plug_ok &= ipw.values == aipw.values;
        }
    }

    // brute-force oracle equivalence on short two-arm histories
    let mut brute_ok = true;
    let mut ctx = EstimationContext::new(0.95);
    ctx.wd_lambda = Some(0.8);
    for i in 0..500u64 {
        let h = random_small_history(i.wrapping_mul(0x9E37) + 1);
        for arm in 0..2 {
            let lib = |kind| estimate_on_history(&h, kind, Target::Arm(arm), &ctx);
            let pairs: Vec<(Option<(f64, f64)>, Option<(f64, f64)>)> = vec![
                (
                    oracle::sample_mean(&h, arm),
                    lib(EstimatorKind::SampleMean).map(|r| (r.point, r.variance.unwrap())),
                ),
                (
                    Some(oracle::aw(&h, arm, &oracle::Scheme::Uniform, false)),
                    lib(EstimatorKind::UnweightedIpw).map(|r| (r.point, r.variance.unwrap())),
                ),
                (
                    Some(oracle::aw(&h, arm, &oracle::Scheme::Uniform, true)),
                    lib(EstimatorKind::UnweightedAipw).map(|r| (r.point, r.variance.unwrap())),
                ),
                (
                    Some(oracle::aw(&h, arm, &oracle::Scheme::Constant, true)),
                    lib(EstimatorKind::AwConstant).map(|r| (r.point, r.variance.unwrap())),
                ),
                (
                    Some(oracle::aw(&h, arm, &oracle::Scheme::TwoPoint(0.7), true)),
                    lib(EstimatorKind::AwTwoPoint).map(|r| (r.point, r.variance.unwrap())),
                ),
                (
                    oracle::weighted_average(&h, arm, 0.7),
                    lib(EstimatorKind::WeightedAverage).map(|r| (r.point, r.variance.unwrap())),
                ),
                (
                    oracle::w_decorrelation(&h, arm, 0.8),
                    lib(EstimatorKind::WDecorrelation).map(|r| (r.point, r.variance.unwrap())),
                ),
            ];
            for (want, got) in pairs {
                match (want, got) {
                    (Some((p, v)), Some((lp, lv))) => {
                        brute_ok &= close(p, lp) && close(v, lv);
                    }
                    (None, None) => {}
                    _ => brute_ok = false,
                }
            }
        }
    }

    let pass = sums_ok && closed_ok && terminal_ok && inequality_ok && zero_plug_ok && brute_ok;
    verdict(
        1,
        pass,
        &format!(
            "stick sum max|.-1| {worst_sum:.2e} (<=1e-10: {sums_ok}); constant closed form \
             max err {worst_closed_form:.2e} (<=1e-12: {closed_ok}); two-point lambda_T==1: \
             {terminal_ok}; allocation-bound grid: {inequality_ok}; AIPW(0)==IPW: \
             {zero_plug_ok}; brute-force oracle (500 histories, 7 estimators): {brute_ok}"
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 2: unbiasedness of the unweighted AIPW estimator
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_unweighted_aipw_unbiasedness() {
    let mut cfg = SimulationConfig::new(
        ModelSpec::Preset(Setting::LowSignal),
        thompson_floor_design(DESK_POSTERIOR_DRAWS),
        1_000,
        100_000,
    );
    cfg.base_seed = 0xACCE_5520;
    cfg.estimators = vec![EstimatorKind::UnweightedAipw];
    cfg.arms = vec![0];
    let out = run_simulation(&cfg).unwrap();
    let cell = out.cell(EstimatorKind::UnweightedAipw, Target::Arm(0)).unwrap();
    let mut points = Welford::new();
    for p in cell.points() {
        points.push(p);
    }
    let err = (points.mean() - 1.0).abs();
    let se = points.mean_se();
    verdict(
        2,
        err <= 4.0 * se,
        &format!("|mean - Q| = {err:.2e} vs 4 MC se = {:.2e} (R = 1e5, T = 1e3)", 4.0 * se),
    );
}

// ---------------------------------------------------------------------------
// criteria 3 and 4: the two-stage introduction example
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_sample_mean_bias_in_two_stage_design() {
    let out = intro_run();
    let cell = out.cell(EstimatorKind::SampleMean, Target::Arm(0)).unwrap();
    let mut points = Welford::new();
    for p in cell.points() {
        points.push(p);
    }
    let sqrt_t = (10_000f64).sqrt();
    let scaled_mean = sqrt_t * points.mean();
    let scaled_se = sqrt_t * points.mean_se();
    verdict(
        3,
        scaled_mean < -4.0 * scaled_se,
        &format!("mean sqrt(T)*AVG = {scaled_mean:.4} (4 MC se = {:.4})", 4.0 * scaled_se),
    );
}

#[test]
fn criterion_4_ipw_heavy_tails_in_two_stage_design() {
    let out = intro_run();
    let cell = out.cell(EstimatorKind::UnweightedIpw, Target::Arm(0)).unwrap();
    let points = cell.points();
    let kurt = excess_kurtosis(&points);
    let mut moments = Welford::new();
    for &p in &points {
        moments.push(p);
    }
    let mean_ok = moments.mean().abs() <= 4.0 * moments.mean_se();
    let kurt_ok = kurt > 1.0;
    verdict(
        4,
        kurt_ok && mean_ok,
        &format!(
            "excess kurtosis of sqrt(T)*IPW = {kurt:.3} (>1: {kurt_ok}); |mean| = {:.2e} \
             vs 4 MC se = {:.2e} ({mean_ok})",
            (10_000f64).sqrt() * moments.mean().abs(),
            (10_000f64).sqrt() * 4.0 * moments.mean_se()
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 5: normality of the studentized two-point contrast statistic
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_studentized_normality() {
    let out = desk_run(Setting::NoSignal);
    let contrast = Target::Contrast(2, 0);
    let two_point = out.cell(EstimatorKind::AwTwoPoint, contrast).unwrap().studentized_values();
    let uniform =
        out.cell(EstimatorKind::UnweightedAipw, contrast).unwrap().studentized_values();
    let ks_two_point = ks_distance_vs_std_normal(&two_point);
    let ks_uniform = ks_distance_vs_std_normal(&uniform);
    let pass = ks_two_point <= 0.02 && ks_uniform > ks_two_point;
    verdict(
        5,
        pass,
        &format!(
            "KS(two-point) = {ks_two_point:.4} (<= 0.02); KS(unweighted AIPW) = {ks_uniform:.4} \
             (must exceed the two-point statistic)"
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 6: contrast coverage
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_contrast_coverage() {
    let contrast = Target::Contrast(2, 0);
    let mut detail = String::new();
    let mut pass = true;
    for setting in [Setting::NoSignal, Setting::LowSignal, Setting::HighSignal] {
        let out = desk_run(setting);
        let agg = out.cell(EstimatorKind::AwTwoPoint, contrast).unwrap().aggregate();
        let cov = agg.coverage.unwrap();
        let ok = (0.93..=0.97).contains(&cov);
        pass &= ok;
        detail.push_str(&format!("{} two-point {cov:.4} ({ok}); ", setting.name()));
    }
    let naive = desk_run(Setting::NoSignal)
        .cell(EstimatorKind::SampleMean, contrast)
        .unwrap()
        .aggregate();
    let naive_cov = naive.coverage.unwrap();
    let naive_ok = naive_cov < 0.93;
    pass &= naive_ok;
    detail.push_str(&format!("no_signal sample-mean {naive_cov:.4} (< 0.93: {naive_ok})"));
    verdict(6, pass, &detail);
}

// ---------------------------------------------------------------------------
// criterion 7: bad-arm sampling count under the floor
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_bad_arm_sampling_count() {
    let mut cfg = SimulationConfig::new(
        ModelSpec::Preset(Setting::HighSignal),
        thompson_floor_design(DESK_POSTERIOR_DRAWS),
        100_000,
        1_000,
    );
    cfg.base_seed = 0xACCE_5530;
    cfg.estimators = vec![EstimatorKind::SampleMean];
    cfg.arms = vec![0];
    let out = run_simulation(&cfg).unwrap();
    let mean_pulls = out.mean_pulls(0);
    verdict(
        7,
        (25.0..=50.0).contains(&mean_pulls),
        &format!("mean pulls of the bad arm at T = 1e5: {mean_pulls:.2} (target [25, 50])"),
    );
}

// ---------------------------------------------------------------------------
// criterion 8: confidence-sequence validity and conservativeness
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_confidence_sequence_validity_and_width() {
    // time-uniform validity on iid streams: mean-1 rewards with uniform[-1,1]
    // noise, the no-signal arm distribution
    let (reps, horizon) = (10_000u64, 10_000u64);
    let truth = 1.0;
    let t_opt = ((1..=horizon).map(|t| (t as f64).powf(-0.7)).sum::<f64>() / 3.0).floor();
    let params = ConfSeqParams::new(2.0, t_opt / 3.0, 0.95);

    // monotone lower envelope of the boundary on a grid of intrinsic times,
    // so the per-step check rarely needs the exact incomplete-gamma solve
    let grid_step = 4.0f64;
    let grid: Vec<f64> = (0..=((4.0 * horizon as f64) / grid_step) as usize)
        .map(|i| params.boundary(i as f64 * grid_step))
        .collect();

    let violations: u64 = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream_rng(0xACCE_5540, rep, Substream::Environment);
            let mut cs = ConfSeqState::new(params.clone(), Some((0.0, 2.0)));
            let mut sum = 0.0f64;
            for n in 1..=horizon {
                let y = truth + rng.random::<f64>() * 2.0 - 1.0;
                cs.update(y);
                sum += y;
                let s_abs = (sum - n as f64 * truth).abs();
                let safe = grid[(cs.variance_process() / grid_step) as usize];
                if s_abs > safe && cs.violates(truth) {
                    return 1u64;
                }
            }
            0
        })
        .sum();
    let rate = violations as f64 / reps as f64;
    let rate_bound = 0.05 + 3.0 * (0.05f64 * 0.95 / reps as f64).sqrt();
    let validity_ok = rate <= rate_bound;

    // conservativeness: on the good arm of the high-signal desk runs, the
    // final-time sequence is wider than the sample-mean normal interval in
    // at least 95% of replications
    let out = desk_run(Setting::HighSignal);
    let cs_cell = out.cell(EstimatorKind::HowardCs, Target::Arm(2)).unwrap();
    let mean_cell = out.cell(EstimatorKind::SampleMean, Target::Arm(2)).unwrap();
    let mut wider = 0u64;
    let mut both = 0u64;
    for (a, b) in cs_cell.reports.iter().zip(&mean_cell.reports) {
        if let (Some(ra), Some(rb)) = (a, b) {
            both += 1;
            if ra.width() > rb.width() {
                wider += 1;
            }
        }
    }
    let wider_frac = wider as f64 / both as f64;
    let width_ok = wider_frac >= 0.95;

    verdict(
        8,
        validity_ok && width_ok,
        &format!(
            "ever-violation rate {rate:.4} <= {rate_bound:.4} ({validity_ok}); CS wider than \
             normal CI in {wider_frac:.4} of high-signal replications (>= 0.95: {width_ok})"
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 9: two-point RMSE dominance over the unweighted AIPW
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_two_point_rmse_dominance() {
    let out = desk_run(Setting::LowSignal);
    let contrast = Target::Contrast(2, 0);
    let two_point = out.cell(EstimatorKind::AwTwoPoint, contrast).unwrap().aggregate();
    let uniform = out.cell(EstimatorKind::UnweightedAipw, contrast).unwrap().aggregate();
    let (r_tp, se_tp) = (two_point.rmse.unwrap(), two_point.rmse_se.unwrap());
    let (r_un, se_un) = (uniform.rmse.unwrap(), uniform.rmse_se.unwrap());
    let gap = r_un - r_tp;
    let merged_se = (se_tp * se_tp + se_un * se_un).sqrt();
    verdict(
        9,
        gap > 4.0 * merged_se,
        &format!(
            "RMSE two-point {r_tp:.4} < RMSE unweighted {r_un:.4}; gap {gap:.4} vs 4 merged \
             MC se {:.4}",
            4.0 * merged_se
        ),
    );
}

// ---------------------------------------------------------------------------
// throughput note (recorded, not asserted)
// ---------------------------------------------------------------------------

#[test]
fn throughput_note_single_replication() {
    let mut cfg = desk_config(Setting::HighSignal, 1);
    cfg.replications = 1;
    cfg.horizon = 100_000;
    cfg.design = Design::Fixed(vec![0.4, 0.3, 0.3]);
    let resolved = cfg.resolve().unwrap();
    let start = std::time::Instant::now();
    let (out, _) = banditeval::harness::run_replication(&resolved, 0);
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "throughput note: one replication at T = 1e5, K = 3 with {} cells took {elapsed:.3}s",
        out.reports.len()
    );
}
