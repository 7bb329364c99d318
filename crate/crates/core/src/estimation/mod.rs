//! Floating-base estimation: contact detection on normal forces, legged
//! odometry for the base pose and a contact-Jacobian base velocity.

mod odometry;
mod schmitt;

use thiserror::Error;

use crate::rigidbody::RigidBodyError;

pub use odometry::{base_velocity, EstimatorOutput, LeggedOdometry, OdometryState};
pub use schmitt::{ContactState, SchmittSettings, SchmittTrigger};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("no foot is in contact; the fixed frame is undefined")]
    NoFixedFrame,
    #[error("fixed-frame Jacobian is numerically singular (condition number {condition:e})")]
    NumericallySingular { condition: f64 },
    #[error("timestamps must be nondecreasing ({previous} then {current})")]
    NonMonotonicTime { previous: f64, current: f64 },
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error(transparent)]
    RigidBody(#[from] RigidBodyError),
}
