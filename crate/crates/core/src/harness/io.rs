//! Text formats: drift-trace CSV, landmark files, registration results.

use std::fs;
use std::path::Path;

use super::{HarnessError, CSV_HEADER};
use crate::netsim::NodeId;
use crate::registration::{LandmarkSet, RigidTransform};
use crate::scene::DriftSample;

pub fn read_file(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

fn field<T: std::str::FromStr>(raw: &str, name: &str, line: usize) -> Result<T, HarnessError> {
    raw.trim()
        .parse()
        .map_err(|_| HarnessError::Input(format!("line {line}: bad {name} {raw:?}")))
}

/// Parses a drift-trace CSV. The header must match [`CSV_HEADER`].
pub fn parse_trace_csv(text: &str) -> Result<Vec<DriftSample>, HarnessError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(HarnessError::Input(format!(
                "expected header {CSV_HEADER:?}, got {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(HarnessError::Input(format!(
                "line {n}: expected 4 columns, got {}",
                cols.len()
            )));
        }
        let alpha: f64 = field(cols[3], "alpha_deg", n)?;
        if !alpha.is_finite() {
            return Err(HarnessError::Input(format!(
                "line {n}: alpha_deg must be finite"
            )));
        }
        samples.push(DriftSample {
            action_index: field(cols[0], "action_index", n)?,
            sim_time: field(cols[1], "sim_time_us", n)?,
            observer_id: field::<NodeId>(cols[2], "observer_id", n)?,
            alpha,
        });
    }
    Ok(samples)
}

/// Mean α per action index, ascending.
pub fn per_action_means(samples: &[DriftSample]) -> Vec<(usize, f64)> {
    let mut acc = std::collections::BTreeMap::<usize, (f64, usize)>::new();
    for s in samples {
        let e = acc.entry(s.action_index).or_default();
        e.0 += s.alpha;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, (sum, c))| (k, sum / c as f64))
        .collect()
}

/// One pair per line, `x1 x2 x3 y1 y2 y3`; `#` starts a comment.
pub fn parse_landmarks(text: &str) -> Result<LandmarkSet, HarnessError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let values: Vec<&str> = line.split_whitespace().collect();
        if values.len() != 6 {
            return Err(HarnessError::Input(format!(
                "landmarks line {}: expected 6 numbers, got {}",
                i + 1,
                values.len()
            )));
        }
        let mut v = [0.0f64; 6];
        for (slot, s) in v.iter_mut().zip(&values) {
            *slot = field(s, "coordinate", i + 1)?;
            if !slot.is_finite() {
                return Err(HarnessError::Input(format!(
                    "landmarks line {}: coordinates must be finite",
                    i + 1
                )));
            }
        }
        pairs.push(([v[0], v[1], v[2]], [v[3], v[4], v[5]]));
    }
    Ok(LandmarkSet::from_arrays(&pairs))
}

pub fn format_registration(transform: &RigidTransform, residual: f64) -> String {
    let r = &transform.rotation;
    let t = &transform.translation;
    let mut out = String::from("# rotation, row-major\n");
    for i in 0..3 {
        out.push_str(&format!("{} {} {}\n", r[(i, 0)], r[(i, 1)], r[(i, 2)]));
    }
    out.push_str(&format!("# translation\n{} {} {}\n", t[0], t[1], t[2]));
    out.push_str(&format!("# residual (squared distance)\n{residual}\n"));
    out
}
