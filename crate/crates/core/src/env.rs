//! Stationary potential-outcome distributions and reward generation.
//!
//! An [`ArmOutcomeModel`] is a set of arm means with a centered noise
//! distribution. Rewards are materialized only for the chosen arm; because the
//! noise draw is independent of history, this is equivalent to sampling the
//! full potential-outcome vector and revealing one coordinate.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("unknown setting name `{0}` (expected no_signal, low_signal, high_signal or intro_normal)")]
    UnknownSetting(String),
    #[error("arm means must be finite")]
    NonFiniteMean,
    #[error("noise parameter must be positive and finite")]
    BadNoiseParameter,
    #[error("model needs at least one arm")]
    NoArms,
}

/// Centered additive noise on top of the arm mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "param")]
pub enum Noise {
    /// uniform[-half_width, half_width]
    Uniform { half_width: f64 },
    /// normal(0, sd^2)
    Normal { sd: f64 },
}

impl Noise {
    pub fn variance(&self) -> f64 {
        match *self {
            Noise::Uniform { half_width } => half_width * half_width / 3.0,
            Noise::Normal { sd } => sd * sd,
        }
    }
}

/// Arm means `Q(w)` plus the reward noise distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmOutcomeModel {
    arm_means: Vec<f64>,
    noise: Noise,
}

impl ArmOutcomeModel {
    pub fn new(arm_means: Vec<f64>, noise: Noise) -> Result<Self, EnvError> {
        if arm_means.is_empty() {
            return Err(EnvError::NoArms);
        }
        if arm_means.iter().any(|m| !m.is_finite()) {
            return Err(EnvError::NonFiniteMean);
        }
        let param_ok = match noise {
            Noise::Uniform { half_width } => half_width.is_finite() && half_width >= 0.0,
            Noise::Normal { sd } => sd.is_finite() && sd >= 0.0,
        };
        if !param_ok {
            return Err(EnvError::BadNoiseParameter);
        }
        Ok(Self { arm_means, noise })
    }

    pub fn num_arms(&self) -> usize {
        self.arm_means.len()
    }

    /// True arm value `Q(w)`.
    pub fn mean(&self, arm: usize) -> f64 {
        self.arm_means[arm]
    }

    pub fn arm_means(&self) -> &[f64] {
        &self.arm_means
    }

    pub fn noise(&self) -> Noise {
        self.noise
    }

    /// Variance of the reward noise (known by construction).
    pub fn noise_variance(&self) -> f64 {
        self.noise.variance()
    }

    /// Known reward support for an arm, when the noise is bounded.
    pub fn support_bounds(&self, arm: usize) -> Option<(f64, f64)> {
        match self.noise {
            Noise::Uniform { half_width } => {
                Some((self.arm_means[arm] - half_width, self.arm_means[arm] + half_width))
            }
            Noise::Normal { .. } => None,
        }
    }

    /// Draw one reward for `arm`. Panics if `arm` is out of range.
    pub fn draw_reward<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> f64 {
        let mean = self.arm_means[arm];
        match self.noise {
            Noise::Uniform { half_width } => {
                if half_width == 0.0 {
                    mean
                } else {
                    let u = Uniform::new_inclusive(-half_width, half_width)
                        .expect("valid uniform range");
                    mean + u.sample(rng)
                }
            }
            Noise::Normal { sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
        }
    }
}

/// Named preset reward distributions, selectable from the CLI or a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Three identical arms, Q(w) = 1, uniform[-1, 1] noise.
    NoSignal,
    /// Q(w) in (1.0, 1.1, 1.2), uniform[-1, 1] noise.
    LowSignal,
    /// Q(w) in (1.0, 1.5, 2.0), uniform[-1, 1] noise.
    HighSignal,
    /// Two identical arms with standard normal rewards.
    IntroNormal,
}

impl Setting {
    pub const ALL: [Setting; 4] =
        [Setting::NoSignal, Setting::LowSignal, Setting::HighSignal, Setting::IntroNormal];

    pub fn name(&self) -> &'static str {
        match self {
            Setting::NoSignal => "no_signal",
            Setting::LowSignal => "low_signal",
            Setting::HighSignal => "high_signal",
            Setting::IntroNormal => "intro_normal",
        }
    }
}

impl std::str::FromStr for Setting {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "no_signal" => Ok(Setting::NoSignal),
            "low_signal" => Ok(Setting::LowSignal),
            "high_signal" => Ok(Setting::HighSignal),
            "intro_normal" => Ok(Setting::IntroNormal),
            other => Err(EnvError::UnknownSetting(other.to_string())),
        }
    }
}

/// Build the outcome model for a named preset.
pub fn make_setting(setting: Setting) -> ArmOutcomeModel {
    let (means, noise) = match setting {
        Setting::NoSignal => (vec![1.0, 1.0, 1.0], Noise::Uniform { half_width: 1.0 }),
        Setting::LowSignal => (vec![1.0, 1.1, 1.2], Noise::Uniform { half_width: 1.0 }),
        Setting::HighSignal => (vec![1.0, 1.5, 2.0], Noise::Uniform { half_width: 1.0 }),
        Setting::IntroNormal => (vec![0.0, 0.0], Noise::Normal { sd: 1.0 }),
    };
    ArmOutcomeModel::new(means, noise).expect("presets are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream_rng, Substream};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn preset_means() {
        assert_eq!(make_setting(Setting::NoSignal).arm_means(), &[1.0, 1.0, 1.0]);
        assert_eq!(make_setting(Setting::LowSignal).arm_means(), &[1.0, 1.1, 1.2]);
        assert_eq!(make_setting(Setting::HighSignal).arm_means(), &[1.0, 1.5, 2.0]);
        let intro = make_setting(Setting::IntroNormal);
        assert_eq!(intro.arm_means(), &[0.0, 0.0]);
        assert_eq!(intro.noise(), Noise::Normal { sd: 1.0 });
        assert!("bogus".parse::<Setting>().is_err());
    }

    #[test]
    fn derived_noise_quantities() {
        let m = make_setting(Setting::HighSignal);
        assert!((m.noise_variance() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.support_bounds(2), Some((1.0, 3.0)));
        assert_eq!(make_setting(Setting::IntroNormal).support_bounds(0), None);
    }

    #[test]
    fn zero_noise_is_degenerate() {
        let m = ArmOutcomeModel::new(vec![1.0, 1.0, 1.0], Noise::Uniform { half_width: 0.0 })
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(m.draw_reward(0, &mut rng), 1.0);
        }
    }

    #[test]
    fn sample_mean_within_five_standard_errors() {
        let m = make_setting(Setting::HighSignal);
        let mut rng = substream_rng(12345, 0, Substream::Environment);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += m.draw_reward(2, &mut rng);
        }
        let mean = sum / n as f64;
        let se = (m.noise_variance() / n as f64).sqrt();
        assert!((mean - 2.0).abs() < 5.0 * se, "mean {mean}");
    }

    #[test]
    fn uniform_noise_variance_within_one_percent() {
        let m = make_setting(Setting::NoSignal);
        let mut rng = substream_rng(777, 0, Substream::Environment);
        let n = 1_000_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            let y = m.draw_reward(1, &mut rng) - 1.0;
            sum += y;
            sumsq += y * y;
        }
        let var = sumsq / n as f64 - (sum / n as f64).powi(2);
        assert!((var - 1.0 / 3.0).abs() < 0.01 / 3.0, "var {var}");
    }

    #[test]
    fn normal_noise_variance_check() {
        let m = make_setting(Setting::IntroNormal);
        let mut rng = substream_rng(9, 0, Substream::Environment);
        let n = 1_000_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            let y = m.draw_reward(0, &mut rng);
            sum += y;
            sumsq += y * y;
        }
        let var = sumsq / n as f64 - (sum / n as f64).powi(2);
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn identical_seeds_identical_streams() {
        let m = make_setting(Setting::LowSignal);
        let mut a = substream_rng(42, 17, Substream::Environment);
        let mut b = substream_rng(42, 17, Substream::Environment);
        for _ in 0..1000 {
            let x = m.draw_reward(1, &mut a);
            let y = m.draw_reward(1, &mut b);
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
