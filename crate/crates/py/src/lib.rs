//! Python bindings for `scenesync_core`.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use scenesync_core::harness::{self, ExperimentConfig, HarnessError};
use scenesync_core::mathcore::{self, Pose, UnitQuaternion};
use scenesync_core::protocol::{self, ActionDescriptor, ActionKind, ControlPacket, PacketKind};
use scenesync_core::registration::{self as reg, LandmarkSet};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn harness_error(e: HarnessError) -> PyErr {
    if e.exit_code() == 2 {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Unit quaternion `(w, x, y, z)`.
#[pyclass(name = "Quaternion", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyQuaternion(UnitQuaternion);

#[pymethods]
impl PyQuaternion {
    /// Normalizes the given components.
    #[new]
    fn new(w: f64, x: f64, y: f64, z: f64) -> PyResult<Self> {
        UnitQuaternion::from_components(w, x, y, z)
            .map(Self)
            .map_err(value_error)
    }

    #[staticmethod]
    fn identity() -> Self {
        Self(UnitQuaternion::IDENTITY)
    }

    /// Rotation of `angle_deg` degrees about the unit vector `axis`.
    #[staticmethod]
    fn from_axis_angle(axis: [f64; 3], angle_deg: f64) -> PyResult<Self> {
        mathcore::quat_from_axis_angle(axis, angle_deg)
            .map(Self)
            .map_err(value_error)
    }

    #[getter]
    fn components(&self) -> (f64, f64, f64, f64) {
        let [w, x, y, z] = self.0.components();
        (w, x, y, z)
    }

    fn inverse(&self) -> Self {
        Self(mathcore::quat_inverse(self.0))
    }

    fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        self.0.rotate(v)
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn __mul__(&self, other: &Self) -> Self {
        Self(mathcore::quat_multiply(self.0, other.0))
    }

    fn __repr__(&self) -> String {
        let [w, x, y, z] = self.0.components();
        format!("Quaternion({w}, {x}, {y}, {z})")
    }
}

#[pyfunction]
fn correction_quaternion(q_s: &PyQuaternion, q_c: &PyQuaternion) -> PyQuaternion {
    PyQuaternion(mathcore::correction_quaternion(q_s.0, q_c.0))
}

#[pyfunction]
fn drift_angle(q_e: &PyQuaternion) -> f64 {
    mathcore::drift_angle(q_e.0)
}

#[pyfunction]
fn minimal_angle(alpha_deg: f64) -> f64 {
    mathcore::minimal_angle(alpha_deg)
}

#[pyfunction]
fn predicted_drift(omega: f64, delay: f64) -> f64 {
    mathcore::predicted_drift(omega, delay)
}

/// Returns `(coefficients, r_squared)`, constant term first.
#[pyfunction]
fn polyfit(points: Vec<(f64, f64)>, degree: usize) -> PyResult<(Vec<f64>, f64)> {
    let fit = mathcore::polyfit(&points, degree).map_err(value_error)?;
    Ok((fit.coefficients, fit.r_squared))
}

/// Rigid transform `y = R x + t` from `[(x, y), ...]` landmark pairs.
/// Returns `(R as 3 rows, t, residual)`.
#[pyfunction]
fn estimate_rigid_transform(
    pairs: Vec<([f64; 3], [f64; 3])>,
) -> PyResult<([[f64; 3]; 3], [f64; 3], f64)> {
    let set = LandmarkSet::from_arrays(&pairs);
    let t = reg::estimate_rigid_transform(&set).map_err(value_error)?;
    let residual = reg::registration_residual(&t, &set);
    let rows = std::array::from_fn(|i| std::array::from_fn(|j| t.rotation[(i, j)]));
    Ok((
        rows,
        [t.translation[0], t.translation[1], t.translation[2]],
        residual,
    ))
}

fn packet_kind(name: &str) -> PyResult<PacketKind> {
    Ok(match name {
        "action_start" => PacketKind::ActionStart,
        "pose_snapshot" => PacketKind::PoseSnapshot,
        "ping" => PacketKind::Ping,
        "pong" => PacketKind::Pong,
        other => return Err(value_error(format!("unknown packet kind {other:?}"))),
    })
}

fn packet_kind_name(kind: PacketKind) -> &'static str {
    match kind {
        PacketKind::ActionStart => "action_start",
        PacketKind::PoseSnapshot => "pose_snapshot",
        PacketKind::Ping => "ping",
        PacketKind::Pong => "pong",
    }
}

fn action_kind(name: &str) -> PyResult<ActionKind> {
    Ok(match name {
        "rotate" => ActionKind::Rotate,
        "translate" => ActionKind::Translate,
        "scale" => ActionKind::Scale,
        other => return Err(value_error(format!("unknown action kind {other:?}"))),
    })
}

fn action_kind_name(kind: ActionKind) -> &'static str {
    match kind {
        ActionKind::Rotate => "rotate",
        ActionKind::Translate => "translate",
        ActionKind::Scale => "scale",
    }
}

/// Encodes a control packet given as keyword fields; returns 120 bytes.
#[pyfunction]
#[pyo3(signature = (kind, object_id, sender_id, sequence, send_timestamp=0, orientation=(1.0, 0.0, 0.0, 0.0), position=[0.0; 3], axis=[0.0; 3], rate=0.0, action_kind="rotate", echo_timestamp=0))]
#[allow(clippy::too_many_arguments)]
fn encode_cpo<'py>(
    py: Python<'py>,
    kind: &str,
    object_id: u32,
    sender_id: u16,
    sequence: u32,
    send_timestamp: u64,
    orientation: (f64, f64, f64, f64),
    position: [f64; 3],
    axis: [f64; 3],
    rate: f64,
    action_kind: &str,
    echo_timestamp: u64,
) -> PyResult<Bound<'py, PyBytes>> {
    let (w, x, y, z) = orientation;
    let q = UnitQuaternion::from_unit_components(w, x, y, z, protocol::POSE_UNIT_TOLERANCE)
        .map_err(value_error)?;
    let mut p = ControlPacket::new(packet_kind(kind)?, object_id, sender_id, sequence);
    p.send_timestamp = send_timestamp;
    p.pose = Pose::new(q, position).map_err(value_error)?;
    p.action = ActionDescriptor {
        axis,
        rate,
        kind: self::action_kind(action_kind)?,
    };
    p.echo_timestamp = echo_timestamp;
    let bytes = protocol::encode_cpo(&p).map_err(value_error)?;
    Ok(PyBytes::new(py, &bytes))
}

/// Decodes 120 bytes into a dict of packet fields.
#[pyfunction]
fn decode_cpo<'py>(py: Python<'py>, data: &[u8]) -> PyResult<Bound<'py, PyDict>> {
    let p = protocol::decode_cpo(data).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("kind", packet_kind_name(p.kind))?;
    d.set_item("object_id", p.object_id)?;
    d.set_item("sender_id", p.sender_id)?;
    d.set_item("sequence", p.sequence)?;
    d.set_item("send_timestamp", p.send_timestamp)?;
    let [w, x, y, z] = p.pose.orientation.components();
    d.set_item("orientation", (w, x, y, z))?;
    d.set_item("position", p.pose.position)?;
    d.set_item("axis", p.action.axis)?;
    d.set_item("rate", p.action.rate)?;
    d.set_item("action_kind", action_kind_name(p.action.kind))?;
    d.set_item("echo_timestamp", p.echo_timestamp)?;
    Ok(d)
}

/// Sliding window of one-way delays, seconds.
#[pyclass(name = "DelayHistory")]
struct PyDelayHistory(protocol::DelayHistory);

#[pymethods]
impl PyDelayHistory {
    #[new]
    #[pyo3(signature = (capacity=protocol::DEFAULT_HISTORY_CAPACITY))]
    fn new(capacity: usize) -> PyResult<Self> {
        if capacity == 0 {
            return Err(value_error("capacity must be positive"));
        }
        Ok(Self(protocol::DelayHistory::new(capacity)))
    }

    fn record_delay(&mut self, h: f64) -> PyResult<()> {
        self.0.record_delay(h).map_err(value_error)
    }

    /// `(mean, population standard deviation)`.
    fn stats(&self) -> PyResult<(f64, f64)> {
        let s = self.0.history_stats().map_err(value_error)?;
        Ok((s.mean, s.std_dev))
    }

    fn one_way_delay_estimate(&self) -> PyResult<f64> {
        self.0.one_way_delay_estimate().map_err(value_error)
    }

    fn window(&self) -> Vec<f64> {
        self.0.window().collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Adaptive measurement-rate controller.
#[pyclass(name = "MeasurementController")]
struct PyController(protocol::MeasurementController);

#[pymethods]
impl PyController {
    #[new]
    #[pyo3(signature = (gamma=10, gamma_min=1, gamma_max=60))]
    fn new(gamma: u32, gamma_min: u32, gamma_max: u32) -> PyResult<Self> {
        protocol::MeasurementController::adaptive(gamma, gamma_min, gamma_max)
            .map(Self)
            .map_err(value_error)
    }

    #[staticmethod]
    fn fixed_threshold() -> Self {
        Self(protocol::MeasurementController::fixed_threshold())
    }

    #[getter]
    fn gamma(&self) -> u32 {
        self.0.gamma()
    }

    fn adapt_rate(&mut self, history: &PyDelayHistory) -> PyResult<u32> {
        self.0.adapt_rate(&history.0).map_err(value_error)
    }
}

#[pyfunction]
fn upshot_frequency(t_xy: f64) -> PyResult<f64> {
    protocol::upshot_frequency(t_xy).map_err(value_error)
}

/// Action frequency of one participant from per-object action counts.
#[pyfunction]
fn action_frequency(counts: Vec<u64>, delta_t: f64) -> PyResult<f64> {
    let profile = protocol::FrequencyProfile::single_participant(0.0, &counts, delta_t);
    protocol::action_frequency(&profile, 0).map_err(value_error)
}

/// `"HIGH"` or `"OVERLOADED"`.
#[pyfunction]
fn classify_consistency(nu_k: f64, nu_0: f64) -> String {
    protocol::classify_consistency(nu_k, nu_0).to_string()
}

fn parse_config(config_json: Option<&str>) -> PyResult<ExperimentConfig> {
    match config_json {
        Some(text) => ExperimentConfig::from_json(text).map_err(harness_error),
        None => Ok(ExperimentConfig::default()),
    }
}

/// Runs one experiment. `config_json` uses the CLI config keys.
/// Returns a dict with `samples` as `(action_index, sim_time_us,
/// observer_id, alpha_deg)` tuples, `mean_drift`, `final_drift` and `csv`.
#[pyfunction]
#[pyo3(signature = (config_json=None))]
fn run_experiment<'py>(py: Python<'py>, config_json: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
    let config = parse_config(config_json)?;
    let trace = py
        .detach(|| harness::run_experiment(&config))
        .map_err(harness_error)?;
    let d = PyDict::new(py);
    let samples: Vec<(usize, u64, u16, f64)> = trace
        .samples
        .iter()
        .map(|s| (s.action_index, s.sim_time, s.observer_id, s.alpha))
        .collect();
    d.set_item("samples", samples)?;
    d.set_item("mean_drift", trace.mean_drift())?;
    d.set_item("final_drift", trace.final_drift())?;
    d.set_item("effective_velocity", trace.effective_velocity)?;
    d.set_item("csv", trace.to_csv_string())?;
    Ok(d)
}

/// ψ report over participant counts (must include 2 and 6), pooling
/// `repetitions` seeds per count.
#[pyfunction]
#[pyo3(signature = (config_json=None, participants=vec![2, 3, 4, 5, 6]))]
fn scalability<'py>(
    py: Python<'py>,
    config_json: Option<&str>,
    participants: Vec<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = parse_config(config_json)?;
    let report = py
        .detach(|| {
            let traces = harness::run_scalability(&config, &participants)?;
            harness::scalability_report(&traces)
        })
        .map_err(harness_error)?;
    let d = PyDict::new(py);
    d.set_item("psi", report.psi.clone())?;
    d.set_item("ratios", report.ratios.clone())?;
    d.set_item("slope", report.slope)?;
    d.set_item("intercept", report.intercept)?;
    d.set_item("r_squared", report.r_squared)?;
    d.set_item("highly_scalable", report.is_highly_scalable())?;
    Ok(d)
}

/// ψ report from raw drift values keyed by participant count.
#[pyfunction]
fn scalability_from_samples(
    alphas: BTreeMap<usize, Vec<f64>>,
) -> PyResult<(BTreeMap<usize, f64>, f64)> {
    let report = harness::scalability_from_samples(&alphas).map_err(harness_error)?;
    Ok((report.psi, report.slope))
}

#[pymodule]
fn scenesync(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuaternion>()?;
    m.add_class::<PyDelayHistory>()?;
    m.add_class::<PyController>()?;
    m.add_function(wrap_pyfunction!(correction_quaternion, m)?)?;
    m.add_function(wrap_pyfunction!(drift_angle, m)?)?;
    m.add_function(wrap_pyfunction!(minimal_angle, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_drift, m)?)?;
    m.add_function(wrap_pyfunction!(polyfit, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_rigid_transform, m)?)?;
    m.add_function(wrap_pyfunction!(encode_cpo, m)?)?;
    m.add_function(wrap_pyfunction!(decode_cpo, m)?)?;
    m.add_function(wrap_pyfunction!(upshot_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(action_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(classify_consistency, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(scalability, m)?)?;
    m.add_function(wrap_pyfunction!(scalability_from_samples, m)?)?;
    m.add("CPO_SIZE", protocol::CPO_SIZE)?;
    Ok(())
}
