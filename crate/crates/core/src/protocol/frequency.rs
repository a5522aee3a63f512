use std::fmt;

use serde::{Deserialize, Serialize};

use super::ProtocolError;

/// Inputs to the action-frequency estimate. `counts[j][k]` is the number of
/// actions participant `k` applied to object `j` over `delta_t` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyProfile {
    pub t_xy: f64,
    pub m: usize,
    pub counts: Vec<Vec<u64>>,
    pub delta_t: f64,
}

impl FrequencyProfile {
    /// Profile for a single participant, one count per object.
    pub fn single_participant(t_xy: f64, per_object: &[u64], delta_t: f64) -> Self {
        Self {
            t_xy,
            m: per_object.len(),
            counts: per_object.iter().map(|&c| vec![c]).collect(),
            delta_t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConsistencyClass {
    HighConsistencyAchievable,
    Overloaded,
}

impl fmt::Display for ConsistencyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::HighConsistencyAchievable => "HIGH",
            Self::Overloaded => "OVERLOADED",
        })
    }
}

/// Updates per second the infrastructure supports: `1 / t_xy`.
pub fn upshot_frequency(t_xy: f64) -> Result<f64, ProtocolError> {
    if !(t_xy > 0.0) || !t_xy.is_finite() {
        return Err(ProtocolError::InvalidArgument(format!(
            "mean delay must be positive, got {t_xy}"
        )));
    }
    Ok(1.0 / t_xy)
}

/// Mean updates per object per second for participant `k`:
/// `Σ_j b_jk / (m · Δt)`.
pub fn action_frequency(profile: &FrequencyProfile, k: usize) -> Result<f64, ProtocolError> {
    if profile.m == 0 {
        return Err(ProtocolError::InvalidArgument(
            "at least one affected object is required".to_string(),
        ));
    }
    if !(profile.delta_t > 0.0) || !profile.delta_t.is_finite() {
        return Err(ProtocolError::InvalidArgument(format!(
            "observation interval must be positive, got {}",
            profile.delta_t
        )));
    }
    if profile.counts.len() != profile.m {
        return Err(ProtocolError::InvalidArgument(format!(
            "expected counts for {} objects, got {}",
            profile.m,
            profile.counts.len()
        )));
    }
    let total = profile
        .counts
        .iter()
        .map(|row| {
            row.get(k).copied().ok_or_else(|| {
                ProtocolError::InvalidArgument(format!("no counts for participant {k}"))
            })
        })
        .sum::<Result<u64, _>>()?;
    Ok(total as f64 / (profile.m as f64 * profile.delta_t))
}

/// High consistency is achievable only while `ν_k < ν_0` (strict).
pub fn classify_consistency(nu_k: f64, nu_0: f64) -> ConsistencyClass {
    if nu_k < nu_0 {
        ConsistencyClass::HighConsistencyAchievable
    } else {
        ConsistencyClass::Overloaded
    }
}
