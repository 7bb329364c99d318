//! Simulation plants, experiment runner, metrics and file output for
//! comparing controller architectures.

mod config;
mod lipm;
mod log;
mod metrics;
mod run;
mod sweep;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::control::ControlError;
use crate::estimation::EstimationError;
use crate::planner::PlannerError;
use crate::rigidbody::RigidBodyError;
use crate::wbc::WbcError;

pub use config::{
    Architecture, DcmConfig, DisturbanceConfig, ExperimentConfig, Impulse, ImpulseTarget, KinematicConfig, MpcConfig, PlantKind,
    Simplified, SweepConfig, TorqueConfig, WholeBody, ZmpComConfig,
};
pub use lipm::{lipm_step, LipmDiscretization};
pub use log::{column_names, read_log, read_log_file, write_log, write_log_file, TickRow, LOG_SCHEMA_VERSION};
pub use metrics::{compute_metrics, format_metrics, realized_footsteps, ErrorSeries, Metrics, MIN_DISTANCE};
pub use run::{
    inverse_dynamics, load_experiment_model, nominal_posture, positive_power, run_experiment, run_experiment_observed, Outcome,
    RunOutput, TorqueTick,
};
pub use sweep::{export, run_sweep, SweepRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {message}", .path.display())]
    Io { path: PathBuf, message: String },
    #[error("log format: {0}")]
    Csv(String),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Wbc(#[from] WbcError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    RigidBody(#[from] RigidBodyError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    /// Attaches a path to format errors.
    pub(crate) fn at(self, path: &Path) -> Self {
        match self {
            HarnessError::Csv(m) => HarnessError::io(path, m),
            other => other,
        }
    }
}
