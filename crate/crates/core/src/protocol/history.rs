use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ProtocolError;

pub const DEFAULT_HISTORY_CAPACITY: usize = 100;

/// Mean and population standard deviation of a delay window, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayStats {
    pub mean: f64,
    pub std_dev: f64,
}

impl DelayStats {
    /// Closed-interval test `h ∈ [mean − σ, mean + σ]`, with a few ulps of
    /// slack so a constant window (σ = 0) always contains its own samples.
    pub fn contains(&self, h: f64) -> bool {
        let slack = 4.0 * f64::EPSILON * self.mean.abs().max(h.abs());
        (h - self.mean).abs() <= self.std_dev + slack
    }
}

/// Sliding window of the most recent one-way delay measurements (seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayHistory {
    window: VecDeque<f64>,
    capacity: usize,
}

impl DelayHistory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "delay history capacity must be positive");
        Self {
            window: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn is_saturated(&self) -> bool {
        self.window.len() == self.capacity
    }

    /// Oldest first.
    pub fn window(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.window.iter().copied()
    }

    /// The most recent measurement, `h_0`.
    pub fn latest(&self) -> Option<f64> {
        self.window.back().copied()
    }

    pub fn record_delay(&mut self, h: f64) -> Result<(), ProtocolError> {
        if !h.is_finite() || h < 0.0 {
            return Err(ProtocolError::InvalidMeasurement(h));
        }
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(h);
        Ok(())
    }

    /// Population mean and standard deviation over the current entries.
    /// Until the window fills, the entry count stands in for the capacity.
    pub fn history_stats(&self) -> Result<DelayStats, ProtocolError> {
        if self.window.is_empty() {
            return Err(ProtocolError::NoData);
        }
        let n = self.window.len() as f64;
        let mean = self.window.iter().sum::<f64>() / n;
        let var = self.window.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n;
        Ok(DelayStats {
            mean,
            std_dev: var.sqrt(),
        })
    }

    /// One-way delay used for compensation: the window mean. Entries are
    /// already one-way values (RTT/2).
    pub fn one_way_delay_estimate(&self) -> Result<f64, ProtocolError> {
        Ok(self.history_stats()?.mean)
    }
}

impl Default for DelayHistory {
    fn default() -> Self {
        Self::new(DEFAULT_HISTORY_CAPACITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_insert() {
        let mut h = DelayHistory::default();
        h.record_delay(0.001).unwrap();
        assert_eq!(h.window().collect::<Vec<_>>(), vec![0.001]);
        assert_eq!(h.latest(), Some(0.001));
    }

    #[test]
    fn ring_keeps_capacity() {
        let mut h = DelayHistory::default();
        for i in 0..100 {
            h.record_delay(i as f64).unwrap();
        }
        h.record_delay(1000.0).unwrap();
        assert_eq!(h.len(), 100);
        assert_eq!(h.window().next(), Some(1.0));
        assert_eq!(h.latest(), Some(1000.0));
    }

    #[test]
    fn keeps_last_hundred_of_150() {
        let mut h = DelayHistory::default();
        for i in 0..150 {
            h.record_delay(i as f64 * 1e-4).unwrap();
        }
        let expected: Vec<f64> = (50..150).map(|i| i as f64 * 1e-4).collect();
        assert_eq!(h.window().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn rejects_negative() {
        let mut h = DelayHistory::default();
        assert_eq!(
            h.record_delay(-1e-3),
            Err(ProtocolError::InvalidMeasurement(-1e-3))
        );
        assert!(h.record_delay(f64::NAN).is_err());
        assert!(h.is_empty());
    }

    #[test]
    fn stats_cases() {
        let mut h = DelayHistory::default();
        assert_eq!(h.history_stats(), Err(ProtocolError::NoData));
        for _ in 0..3 {
            h.record_delay(0.002).unwrap();
        }
        let s = h.history_stats().unwrap();
        assert!((s.mean - 0.002).abs() < 1e-18);
        assert!(s.std_dev < 1e-18);

        let mut h = DelayHistory::default();
        h.record_delay(0.001).unwrap();
        h.record_delay(0.003).unwrap();
        let s = h.history_stats().unwrap();
        assert!((s.mean - 0.002).abs() < 1e-15);
        assert!((s.std_dev - 0.001).abs() < 1e-15);

        let mut h = DelayHistory::default();
        h.record_delay(0.0).unwrap();
        assert_eq!(
            h.history_stats().unwrap(),
            DelayStats {
                mean: 0.0,
                std_dev: 0.0
            }
        );
    }

    #[test]
    fn estimate_cases() {
        let mut h = DelayHistory::default();
        assert_eq!(h.one_way_delay_estimate(), Err(ProtocolError::NoData));
        h.record_delay(0.01).unwrap();
        assert_eq!(h.one_way_delay_estimate().unwrap(), 0.01);
        let mut h = DelayHistory::default();
        h.record_delay(0.001).unwrap();
        h.record_delay(0.003).unwrap();
        assert!((h.one_way_delay_estimate().unwrap() - 0.002).abs() < 1e-15);
    }

    #[test]
    fn constant_window_contains_its_value() {
        let mut h = DelayHistory::default();
        for _ in 0..100 {
            h.record_delay(0.0002).unwrap();
        }
        let s = h.history_stats().unwrap();
        assert!(s.contains(0.0002));
        assert!(!s.contains(0.0003));
    }
}
