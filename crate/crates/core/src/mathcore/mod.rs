//! Quaternion algebra, the correction-quaternion drift metric, the linear
//! drift model and polynomial trend fitting.

mod fit;
mod quaternion;

use thiserror::Error;

pub use fit::{polyfit, residual_sum_of_squares, PolyFit};
pub use quaternion::{
    correction_quaternion, drift_angle, minimal_angle, predicted_drift, quat_from_axis_angle,
    quat_inverse, quat_multiply, Pose, UnitQuaternion, AXIS_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}
