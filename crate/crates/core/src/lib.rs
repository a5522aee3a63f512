//! Shared-scene synchronization toolkit.
//!
//! Keeps the pose of shared objects consistent across distributed
//! participants with an adaptive, delay-history driven synchronization
//! scheme, and measures how well that works:
//!
//! * [`mathcore`]: quaternions, the correction-quaternion drift angle and
//!   least-squares trend fitting.
//! * [`registration`]: SVD-based rigid landmark registration.
//! * [`protocol`]: the control packet wire format, delay history statistics,
//!   the measurement-rate controller and update-frequency classification.
//! * [`netsim`]: a deterministic discrete-event network simulator.
//! * [`scene`]: per-participant replicas under three consistency strategies.
//! * [`harness`]: experiment runner, scalability metrics and the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod harness;
pub mod mathcore;
pub mod netsim;
pub mod protocol;
pub mod registration;
pub mod scene;
