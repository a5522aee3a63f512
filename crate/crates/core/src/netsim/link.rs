use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Jitter added on top of a link's base latency. Amplitudes are seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Jitter {
    None,
    /// Uniform on `[-amplitude, +amplitude]`.
    Uniform {
        amplitude: f64,
    },
    /// Zero-mean normal.
    Gaussian {
        std_dev: f64,
    },
}

/// Fraction of the base latency used as the default Gaussian jitter.
pub const DEFAULT_JITTER_FRACTION: f64 = 0.1;

/// One direction of a point-to-point link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    /// Seconds.
    pub base_latency: f64,
    pub jitter: Jitter,
    pub seed: u64,
    /// Deliver in send order even when a later sample is shorter.
    pub fifo: bool,
}

impl LinkModel {
    pub fn constant(base_latency: f64) -> Self {
        Self {
            base_latency,
            jitter: Jitter::None,
            seed: 0,
            fifo: true,
        }
    }

    /// Gaussian jitter at 10% of the base latency.
    pub fn with_default_jitter(base_latency: f64, seed: u64) -> Self {
        Self {
            base_latency,
            jitter: Jitter::Gaussian {
                std_dev: DEFAULT_JITTER_FRACTION * base_latency,
            },
            seed,
            fifo: true,
        }
    }

    /// 0.2 ms local network.
    pub fn lan_fast(seed: u64) -> Self {
        Self::with_default_jitter(0.0002, seed)
    }

    /// 1 ms local network.
    pub fn lan_1ms(seed: u64) -> Self {
        Self::with_default_jitter(0.001, seed)
    }

    pub fn ideal() -> Self {
        Self::constant(0.0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.base_latency >= 0.0) || !self.base_latency.is_finite() {
            return Err(format!(
                "base_latency must be a finite non-negative number of seconds, got {}",
                self.base_latency
            ));
        }
        let spread = match self.jitter {
            Jitter::None => 0.0,
            Jitter::Uniform { amplitude } => amplitude,
            Jitter::Gaussian { std_dev } => std_dev,
        };
        if !(spread >= 0.0) || !spread.is_finite() {
            return Err(format!(
                "jitter spread must be finite and >= 0, got {spread}"
            ));
        }
        Ok(())
    }
}

/// Runtime state of one link direction: its seeded stream and the latest
/// delivery time it has scheduled.
#[derive(Debug, Clone)]
pub struct Link {
    model: LinkModel,
    rng: ChaCha8Rng,
    last_deliver_at: Option<u64>,
}

impl Link {
    pub fn new(model: LinkModel) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            model,
            last_deliver_at: None,
        }
    }

    pub fn model(&self) -> &LinkModel {
        &self.model
    }

    /// Base latency plus one jitter draw, truncated at zero. Seconds.
    pub fn sample_latency(&mut self) -> f64 {
        let jitter = match self.model.jitter {
            Jitter::None => return self.model.base_latency,
            Jitter::Uniform { amplitude } if amplitude > 0.0 => {
                self.rng.random_range(-amplitude..=amplitude)
            }
            Jitter::Gaussian { std_dev } if std_dev > 0.0 => Normal::new(0.0, std_dev)
                .expect("validated std_dev")
                .sample(&mut self.rng),
            _ => 0.0,
        };
        (self.model.base_latency + jitter).max(0.0)
    }

    /// Delivery time for a packet sent at `now` (µs), honoring FIFO order.
    pub(crate) fn schedule(&mut self, now: u64) -> (u64, f64) {
        let latency = self.sample_latency();
        let mut deliver_at = now + seconds_to_us(latency);
        if self.model.fifo {
            if let Some(last) = self.last_deliver_at {
                deliver_at = deliver_at.max(last);
            }
        }
        self.last_deliver_at = Some(
            self.last_deliver_at
                .map_or(deliver_at, |l| l.max(deliver_at)),
        );
        (deliver_at, latency)
    }
}

pub fn sample_latency(link: &mut Link) -> f64 {
    link.sample_latency()
}

pub fn seconds_to_us(s: f64) -> u64 {
    (s * 1e6).round() as u64
}

pub fn us_to_seconds(us: u64) -> f64 {
    us as f64 * 1e-6
}

/// SplitMix64 mix of a base seed with a stream index.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
