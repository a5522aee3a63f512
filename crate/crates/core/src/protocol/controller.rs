use serde::{Deserialize, Serialize};

use super::{DelayHistory, ProtocolError};

pub const DEFAULT_GAMMA_MIN: u32 = 1;
/// Matches the tracker's 60 Hz update ceiling.
pub const DEFAULT_GAMMA_MAX: u32 = 60;
/// Rate of the fixed-threshold mode: one measurement per second.
pub const FIXED_THRESHOLD_RATE: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementMode {
    FixedThreshold,
    Adaptive,
}

/// Current delay-measurement rate `γ` (measurements/second) and its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementController {
    gamma: u32,
    gamma_min: u32,
    gamma_max: u32,
    mode: MeasurementMode,
}

impl MeasurementController {
    pub fn adaptive(gamma: u32, gamma_min: u32, gamma_max: u32) -> Result<Self, ProtocolError> {
        if gamma_min == 0 || gamma_min > gamma_max {
            return Err(ProtocolError::InvalidArgument(format!(
                "measurement bounds must satisfy 1 <= gamma_min <= gamma_max, got [{gamma_min}, {gamma_max}]"
            )));
        }
        Ok(Self {
            gamma: gamma.clamp(gamma_min, gamma_max),
            gamma_min,
            gamma_max,
            mode: MeasurementMode::Adaptive,
        })
    }

    pub fn fixed_threshold() -> Self {
        Self {
            gamma: FIXED_THRESHOLD_RATE,
            gamma_min: FIXED_THRESHOLD_RATE,
            gamma_max: FIXED_THRESHOLD_RATE,
            mode: MeasurementMode::FixedThreshold,
        }
    }

    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    pub fn gamma_min(&self) -> u32 {
        self.gamma_min
    }

    pub fn gamma_max(&self) -> u32 {
        self.gamma_max
    }

    pub fn mode(&self) -> MeasurementMode {
        self.mode
    }

    /// Time between measurements, in microseconds.
    pub fn interval_us(&self) -> u64 {
        (1_000_000.0 / self.gamma as f64).round() as u64
    }

    /// One adaptation step against `history`.
    ///
    /// If the latest delay lies in `[mean − σ, mean + σ]` the network is
    /// behaving as expected and `γ` drops by one; otherwise it rises by one.
    /// The result is clamped to the bounds. Fixed-threshold controllers are
    /// left as they are.
    pub fn adapt_rate(&mut self, history: &DelayHistory) -> Result<u32, ProtocolError> {
        if self.mode == MeasurementMode::FixedThreshold {
            return Ok(self.gamma);
        }
        let stats = history.history_stats()?;
        let latest = history.latest().ok_or(ProtocolError::NoData)?;
        self.gamma = if stats.contains(latest) {
            self.gamma.saturating_sub(1)
        } else {
            self.gamma.saturating_add(1)
        }
        .clamp(self.gamma_min, self.gamma_max);
        Ok(self.gamma)
    }
}

impl Default for MeasurementController {
    fn default() -> Self {
        Self::adaptive(DEFAULT_GAMMA_MAX, DEFAULT_GAMMA_MIN, DEFAULT_GAMMA_MAX).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Window with mean 0.002 and σ = 0.001: alternating 0.001 / 0.003.
    fn spread_history() -> DelayHistory {
        let mut h = DelayHistory::default();
        for i in 0..10 {
            h.record_delay(if i % 2 == 0 { 0.001 } else { 0.003 })
                .unwrap();
        }
        h
    }

    #[test]
    fn in_band_decrements() {
        let mut h = spread_history();
        h.record_delay(0.002).unwrap();
        let s = h.history_stats().unwrap();
        assert!(s.std_dev > 0.0);
        let mut c = MeasurementController::adaptive(5, 1, 60).unwrap();
        assert_eq!(c.adapt_rate(&h).unwrap(), 4);
    }

    #[test]
    fn out_of_band_increments() {
        let mut h = spread_history();
        let s = h.history_stats().unwrap();
        h.record_delay(s.mean + 2.0 * s.std_dev).unwrap();
        let s = h.history_stats().unwrap();
        assert!(!s.contains(h.latest().unwrap()));
        let mut c = MeasurementController::adaptive(5, 1, 60).unwrap();
        assert_eq!(c.adapt_rate(&h).unwrap(), 6);
    }

    #[test]
    fn clamps_at_min() {
        let mut h = DelayHistory::default();
        h.record_delay(0.002).unwrap();
        let mut c = MeasurementController::adaptive(1, 1, 60).unwrap();
        assert_eq!(c.adapt_rate(&h).unwrap(), 1);
    }

    #[test]
    fn clamps_at_max() {
        let mut h = spread_history();
        h.record_delay(0.5).unwrap();
        let mut c = MeasurementController::adaptive(60, 1, 60).unwrap();
        assert_eq!(c.adapt_rate(&h).unwrap(), 60);
    }

    #[test]
    fn fixed_mode_is_unchanged() {
        let mut c = MeasurementController::fixed_threshold();
        assert_eq!(c.adapt_rate(&DelayHistory::default()).unwrap(), 1);
        assert_eq!(c.interval_us(), 1_000_000);
    }

    #[test]
    fn empty_history_is_an_error() {
        let mut c = MeasurementController::default();
        assert_eq!(
            c.adapt_rate(&DelayHistory::default()),
            Err(ProtocolError::NoData)
        );
    }

    #[test]
    fn bad_bounds() {
        assert!(MeasurementController::adaptive(5, 0, 60).is_err());
        assert!(MeasurementController::adaptive(5, 10, 2).is_err());
        assert_eq!(
            MeasurementController::adaptive(100, 1, 60).unwrap().gamma(),
            60
        );
    }
}
