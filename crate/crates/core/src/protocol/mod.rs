//! Control packet wire format, delay history bookkeeping, the measurement
//! rate controller, and update-frequency classification.

mod codec;
mod controller;
mod frequency;
mod history;

use thiserror::Error;

pub use codec::{
    decode_cpo, encode_cpo, ActionDescriptor, ActionKind, ControlPacket, PacketKind, CPO_SIZE,
    MAGIC, POSE_UNIT_TOLERANCE, SEQUENCE_OFFSET,
};
pub use controller::{
    MeasurementController, MeasurementMode, DEFAULT_GAMMA_MAX, DEFAULT_GAMMA_MIN,
    FIXED_THRESHOLD_RATE,
};
pub use frequency::{
    action_frequency, classify_consistency, upshot_frequency, ConsistencyClass, FrequencyProfile,
};
pub use history::{DelayHistory, DelayStats, DEFAULT_HISTORY_CAPACITY};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("invalid packet: {0}")]
    InvalidPacket(String),
    #[error("protocol mismatch: bad magic {0:02x?}")]
    ProtocolMismatch([u8; 4]),
    #[error("truncated packet: need {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("unsupported version: {0}")]
    UnsupportedVersion(String),
    #[error("invalid delay measurement {0}")]
    InvalidMeasurement(f64),
    #[error("no delay measurements recorded")]
    NoData,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
