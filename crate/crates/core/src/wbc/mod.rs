//! Whole-body QP control: a velocity-level stack of tasks returning desired
//! joint velocities, and a torque-level controller over accelerations,
//! torques and contact wrenches.

mod dynamic;
mod kinematic;
mod laws;

use nalgebra::{Matrix3, Vector2};
use thiserror::Error;

use crate::planner::Side;
use crate::qp::{QpError, QpStatus};
use crate::rigidbody::math::orthonormality_error;
use crate::rigidbody::{FrameId, RigidBodyError, RobotModel};

pub use dynamic::{
    contact_polygon, wrench_feasibility, zmp_equality, FootMotionReference, RotationReference, StanceContact, TorqueGains,
    TorqueLayout, TorqueOutput, TorqueProblem, TorqueResiduals, TorqueRows, TorqueTaskReferences, TorqueWbc,
    WrenchRegularization, WRENCH_ROWS,
};
pub use kinematic::{
    FootReference, KinematicGains, KinematicIntegrals, KinematicOutput, KinematicProblem, KinematicTaskReferences, KinematicWbc,
};
pub use laws::{integrate_joint_positions, linear_pid, rotational_pid, torso_angular_velocity_des};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WbcError {
    #[error("inverse kinematics infeasible (status {}): {}", .status.as_str(), .violated.join(", "))]
    IkInfeasible { status: QpStatus, violated: Vec<String> },
    #[error("torque QP infeasible (status {}), active groups: {}", .status.as_str(), .certificate.join(", "))]
    TorqueQpInfeasible { status: QpStatus, certificate: Vec<String> },
    #[error("ZMP reference ({:.4}, {:.4}) is {distance:.4} m outside the support polygon", .zmp.x, .zmp.y)]
    ZmpRefInfeasible { zmp: Vector2<f64>, distance: f64 },
    #[error("stance contacts are not coplanar (deviation {deviation:e})")]
    NonCoplanarContacts { deviation: f64 },
    #[error("no foot in contact")]
    NoContact,
    #[error("invalid gains: {0}")]
    InvalidGains(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    RigidBody(#[from] RigidBodyError),
    #[error(transparent)]
    Qp(#[from] QpError),
}

pub fn foot_frame(model: &RobotModel, side: Side) -> FrameId {
    match side {
        Side::Left => model.left_foot_frame,
        Side::Right => model.right_foot_frame,
    }
}

pub(crate) fn is_pd3(m: &Matrix3<f64>) -> bool {
    ((m + m.transpose()) * 0.5).symmetric_eigenvalues().min() > 0.0
}

fn check_rotation(r: &Matrix3<f64>, what: &str) -> Result<(), WbcError> {
    let err = orthonormality_error(r);
    if err > 1e-9 {
        return Err(WbcError::InvalidInput(format!("{what} is not a rotation (error {err:e})")));
    }
    Ok(())
}
