//! Experiment runner, scalability analysis, file formats and the CLI.

use thiserror::Error;

use crate::mathcore::MathError;
use crate::netsim::SimError;
use crate::protocol::ProtocolError;
use crate::registration::RegistrationError;
use crate::scene::SceneError;

pub mod cli;
mod config;
mod experiment;
pub mod io;
mod scalability;

pub use config::{EffectiveSetup, ExperimentConfig, ExplicitLink, LinkPreset, LinkSpec};
pub use experiment::{
    repetition_seed, run_experiment, run_repetitions, sweep_velocities, DriftTrace, ACTOR,
    CSV_HEADER, SHARED_OBJECT, TARGET_ANGLE_RANGE,
};
pub use scalability::{
    run_scalability, scalability_from_samples, scalability_report, ScalabilityReport,
    REQUIRED_COUNTS,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    /// Bad user input other than the config file (CSV, landmarks, flags).
    #[error("invalid input: {0}")]
    Input(String),
    #[error("incomplete input: {0}")]
    Incomplete(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Registration(#[from] RegistrationError),
}

impl HarnessError {
    /// 2 for anything the user can fix by changing the input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_)
            | HarnessError::Input(_)
            | HarnessError::Incomplete(_)
            | HarnessError::Registration(_)
            | HarnessError::Math(_) => 2,
            HarnessError::Io { .. }
            | HarnessError::Sim(_)
            | HarnessError::Scene(_)
            | HarnessError::Protocol(_) => 1,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
