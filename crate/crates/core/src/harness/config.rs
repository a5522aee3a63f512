use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::netsim::{Jitter, LinkModel};
use crate::protocol::{DEFAULT_GAMMA_MAX, DEFAULT_GAMMA_MIN, DEFAULT_HISTORY_CAPACITY};
use crate::scene::Strategy;

/// Named link presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkPreset {
    #[serde(rename = "ideal")]
    Ideal,
    /// 0.2 ms LAN, Gaussian jitter at 10%.
    #[serde(rename = "lan_0_2ms")]
    LanFast,
    /// 1 ms LAN, Gaussian jitter at 10%.
    #[serde(rename = "lan_1ms")]
    Lan1ms,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitLink {
    pub base_latency: f64,
    /// Defaults to Gaussian with σ = 10% of the base latency.
    #[serde(default)]
    pub jitter: Option<Jitter>,
    #[serde(default = "default_fifo")]
    pub fifo: bool,
}

fn default_fifo() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinkSpec {
    Preset(LinkPreset),
    Explicit(ExplicitLink),
}

impl LinkSpec {
    pub fn model(&self, seed: u64) -> LinkModel {
        match *self {
            LinkSpec::Preset(LinkPreset::Ideal) => LinkModel::ideal().with_seed(seed),
            LinkSpec::Preset(LinkPreset::LanFast) => LinkModel::lan_fast(seed),
            LinkSpec::Preset(LinkPreset::Lan1ms) => LinkModel::lan_1ms(seed),
            LinkSpec::Explicit(ExplicitLink {
                base_latency,
                jitter,
                fifo,
            }) => {
                let mut m = LinkModel::with_default_jitter(base_latency, seed);
                if let Some(j) = jitter {
                    m.jitter = j;
                }
                m.fifo = fifo;
                m
            }
        }
    }
}

/// One experiment family. Field names are the JSON keys; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub participants: usize,
    pub strategy: Strategy,
    /// Degrees/second.
    pub angular_velocity: f64,
    pub num_actions: usize,
    pub link: LinkSpec,
    /// Latency to emulate, seconds. By default it is emulated by scaling the
    /// angular velocity on `link`; with `true_latency` the link itself is
    /// stretched to this latency instead.
    pub emulated_latency: Option<f64>,
    pub true_latency: bool,
    pub history_capacity: usize,
    pub gamma_min: u32,
    pub gamma_max: u32,
    pub gamma_start: u32,
    pub seed: u64,
    pub repetitions: usize,
    /// Seconds of measurement traffic before the first action.
    pub warmup: f64,
    /// Rest time between consecutive actions, seconds.
    pub settle: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            participants: 2,
            strategy: Strategy::Asa,
            angular_velocity: 100.0,
            num_actions: 50,
            link: LinkSpec::Preset(LinkPreset::LanFast),
            emulated_latency: None,
            true_latency: false,
            history_capacity: DEFAULT_HISTORY_CAPACITY,
            gamma_min: DEFAULT_GAMMA_MIN,
            gamma_max: DEFAULT_GAMMA_MAX,
            gamma_start: 10,
            seed: 0,
            repetitions: 30,
            warmup: 2.0,
            settle: 0.1,
        }
    }
}

/// Angular velocity and link actually simulated once latency emulation is
/// resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSetup {
    pub angular_velocity: f64,
    pub link: LinkModel,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: Self = serde_json::from_str(text)
            .map_err(|e| HarnessError::Config(vec![format!("config: {e}")]))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every field and reports all offenders at once.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut errors = Vec::new();
        if self.participants < 2 || self.participants > u16::MAX as usize {
            errors.push(format!(
                "participants: must be at least 2, got {}",
                self.participants
            ));
        }
        if self.num_actions < 1 {
            errors.push("num_actions: must be at least 1".to_string());
        }
        if !(1.0..=1000.0).contains(&self.angular_velocity) {
            errors.push(format!(
                "angular_velocity: must lie in [1, 1000] deg/s, got {}",
                self.angular_velocity
            ));
        }
        let link = self.link.model(0);
        if let Err(e) = link.validate() {
            errors.push(format!("link: {e}"));
        }
        if let Some(l) = self.emulated_latency {
            if !(l > 0.0) || !l.is_finite() {
                errors.push(format!(
                    "emulated_latency: must be a positive number of seconds, got {l}"
                ));
            } else if !self.true_latency && !(link.base_latency > 0.0) {
                errors.push(
                    "emulated_latency: velocity scaling needs a link with positive base_latency"
                        .to_string(),
                );
            }
        } else if self.true_latency {
            errors.push("true_latency: requires emulated_latency".to_string());
        }
        if self.history_capacity < 1 {
            errors.push("history_capacity: must be at least 1".to_string());
        }
        if self.gamma_min < 1 || self.gamma_min > self.gamma_max {
            errors.push(format!(
                "gamma_min/gamma_max: need 1 <= gamma_min <= gamma_max, got {}/{}",
                self.gamma_min, self.gamma_max
            ));
        }
        if self.gamma_start < self.gamma_min || self.gamma_start > self.gamma_max {
            errors.push(format!(
                "gamma_start: must lie in [gamma_min, gamma_max], got {}",
                self.gamma_start
            ));
        }
        if self.repetitions < 1 {
            errors.push("repetitions: must be at least 1".to_string());
        }
        if !(self.warmup >= 0.0) || !self.warmup.is_finite() {
            errors.push(format!("warmup: must be >= 0 seconds, got {}", self.warmup));
        }
        if !(self.settle >= 0.0) || !self.settle.is_finite() {
            errors.push(format!("settle: must be >= 0 seconds, got {}", self.settle));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(errors))
        }
    }

    /// Resolves latency emulation into the velocity and link to simulate.
    ///
    /// Velocity scaling multiplies `ω` by `L / base_latency`; true latency
    /// scales the link's base latency and jitter spread by the same factor.
    /// Either way the expected drift per action is `ω · L`.
    pub fn effective_setup(&self, link_seed: u64) -> EffectiveSetup {
        let link = self.link.model(link_seed);
        match self.emulated_latency {
            None => EffectiveSetup {
                angular_velocity: self.angular_velocity,
                link,
            },
            Some(target) if self.true_latency => {
                let link = if link.base_latency > 0.0 {
                    let factor = target / link.base_latency;
                    LinkModel {
                        base_latency: target,
                        jitter: match link.jitter {
                            Jitter::None => Jitter::None,
                            Jitter::Uniform { amplitude } => Jitter::Uniform {
                                amplitude: amplitude * factor,
                            },
                            Jitter::Gaussian { std_dev } => Jitter::Gaussian {
                                std_dev: std_dev * factor,
                            },
                        },
                        ..link
                    }
                } else {
                    LinkModel::with_default_jitter(target, link_seed)
                };
                EffectiveSetup {
                    angular_velocity: self.angular_velocity,
                    link,
                }
            }
            Some(target) => EffectiveSetup {
                angular_velocity: self.angular_velocity * target / link.base_latency,
                link,
            },
        }
    }
}
