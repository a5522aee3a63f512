use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{run_repetitions, DriftTrace, ExperimentConfig, HarnessError};
use crate::mathcore::polyfit;

/// Participant counts that must be present for a report.
pub const REQUIRED_COUNTS: [usize; 2] = [2, 6];

/// Mean drift per participant count, keyed by total participants (n + 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalabilityReport {
    pub psi: BTreeMap<usize, f64>,
    /// `ψ_n / ψ_1`. When both are zero the ratio is 1.
    pub ratios: BTreeMap<usize, f64>,
    /// Linear regression of ψ against participant count.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl ScalabilityReport {
    /// ψ for the two-participant setup.
    pub fn psi_1(&self) -> f64 {
        self.psi[&2]
    }

    pub fn ratio(&self, participants: usize) -> Option<f64> {
        self.ratios.get(&participants).copied()
    }

    /// Bounded drift growth: ψ_n/ψ_1 below the observer count for every n.
    pub fn is_highly_scalable(&self) -> bool {
        self.ratios
            .iter()
            .filter(|(&n, _)| n > 2)
            .all(|(&n, &r)| r < (n - 1) as f64)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("participants,psi_deg,ratio\n");
        for (n, psi) in &self.psi {
            out.push_str(&format!("{n},{psi},{}\n", self.ratios[n]));
        }
        out
    }
}

/// Builds the report from the raw α values of each participant count.
pub fn scalability_from_samples(
    alphas: &BTreeMap<usize, Vec<f64>>,
) -> Result<ScalabilityReport, HarnessError> {
    let missing: Vec<String> = REQUIRED_COUNTS
        .iter()
        .filter(|n| alphas.get(n).is_none_or(|a| a.is_empty()))
        .map(|n| n.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(HarnessError::Incomplete(format!(
            "no samples for participant count(s) {}",
            missing.join(", ")
        )));
    }
    let mut psi = BTreeMap::new();
    for (&n, a) in alphas {
        if a.is_empty() {
            continue;
        }
        if let Some(bad) = a.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(HarnessError::Input(format!(
                "drift values must be finite and non-negative, got {bad} for {n} participants"
            )));
        }
        psi.insert(n, a.iter().sum::<f64>() / a.len() as f64);
    }
    let psi_1 = psi[&2];
    let ratios = psi
        .iter()
        .map(|(&n, &p)| {
            let r = if p == 0.0 && psi_1 == 0.0 {
                1.0
            } else {
                p / psi_1
            };
            (n, r)
        })
        .collect();
    let points: Vec<(f64, f64)> = psi.iter().map(|(&n, &p)| (n as f64, p)).collect();
    let fit = polyfit(&points, 1)?;
    Ok(ScalabilityReport {
        psi,
        ratios,
        slope: fit.coefficients[1],
        intercept: fit.coefficients[0],
        r_squared: fit.r_squared,
    })
}

/// Report over traces keyed by participant count; all traces of a count are
/// pooled.
pub fn scalability_report(
    traces: &BTreeMap<usize, Vec<DriftTrace>>,
) -> Result<ScalabilityReport, HarnessError> {
    let alphas = traces
        .iter()
        .map(|(&n, ts)| {
            let a = ts
                .iter()
                .flat_map(|t| t.samples.iter().map(|s| s.alpha))
                .collect();
            (n, a)
        })
        .collect();
    scalability_from_samples(&alphas)
}

/// Runs `base` at each participant count with the same repetition seeds.
pub fn run_scalability(
    base: &ExperimentConfig,
    counts: &[usize],
) -> Result<BTreeMap<usize, Vec<DriftTrace>>, HarnessError> {
    counts
        .par_iter()
        .map(|&n| {
            let traces = run_repetitions(&ExperimentConfig {
                participants: n,
                ..base.clone()
            })?;
            Ok((n, traces))
        })
        .collect()
}
