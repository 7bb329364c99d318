//! Floating-base rigid-body model: kinematics, Jacobians, mass matrix, bias
//! forces, centre of mass and zero-moment point.
//!
//! Velocity convention: `nu = (v_B, omega_B, s_dot)` where `v_B` is the time
//! derivative of the base origin and `omega_B` the base angular velocity in
//! the inertial frame. Frame twists are returned as `(linear; angular)` with
//! the linear part being the velocity of the frame origin, both in the
//! inertial frame.
//!
//! Dynamics follow `M(q) nu_dot + h(q, nu) = B tau + sum_k J_k' f_k` with
//! `h = C(q, nu) nu + G(q)`; contact wrenches `f_k = (force; torque)` are
//! expressed in the inertial frame at the contact frame origin. Under gravity
//! `(0, 0, -9.81)` the vertical base-force entry of `G` is `+m g`.

mod dynamics;
mod kinematics;
pub mod math;
mod model;
mod model_file;
mod zmp;

use thiserror::Error;

pub use kinematics::Kinematics;
pub use model::{FootGeometry, Frame, FrameId, Joint, JointLimits, Link, ModelItem, ModelSpec, RobotModel, RobotState};
pub use model_file::{load_model, mini_biped, parse_model};
pub use zmp::{global_zmp, local_zmp, ContactWrench, ZmpContact, DEFAULT_F_MIN};

use nalgebra::{DMatrix, DVector, Matrix3xX, Matrix6xX, Vector3, Vector6};

use math::Pose;

pub const GRAVITY: Vector3<f64> = Vector3::new(0.0, 0.0, -9.81);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RigidBodyError {
    #[error("frame not found: {0}")]
    FrameNotFound(String),
    #[error("ZMP undefined: normal force {normal_force} N below {f_min} N")]
    ZmpUndefined { normal_force: f64, f_min: f64 },
    #[error("contact surfaces are not coplanar (deviation {deviation:e} m)")]
    NonCoplanarContacts { deviation: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("{path}:{line}: {message}")]
    ModelFile { path: String, line: usize, message: String },
}

pub fn frame_pose(model: &RobotModel, state: &RobotState, frame: FrameId) -> Result<Pose, RigidBodyError> {
    Kinematics::new(model, state)?.frame_pose(frame)
}

pub fn frame_jacobian(model: &RobotModel, state: &RobotState, frame: FrameId) -> Result<Matrix6xX<f64>, RigidBodyError> {
    Kinematics::new(model, state)?.frame_jacobian(frame)
}

pub fn bias_acceleration(model: &RobotModel, state: &RobotState, frame: FrameId) -> Result<Vector6<f64>, RigidBodyError> {
    Kinematics::new(model, state)?.bias_acceleration(frame)
}

pub fn mass_matrix(model: &RobotModel, state: &RobotState) -> Result<DMatrix<f64>, RigidBodyError> {
    Ok(Kinematics::new(model, state)?.mass_matrix())
}

pub fn bias_forces(model: &RobotModel, state: &RobotState, gravity: &Vector3<f64>) -> Result<DVector<f64>, RigidBodyError> {
    Ok(Kinematics::new(model, state)?.bias_forces(gravity))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComState {
    pub position: Vector3<f64>,
    pub jacobian: Matrix3xX<f64>,
}

pub fn com_state(model: &RobotModel, state: &RobotState) -> Result<ComState, RigidBodyError> {
    let kin = Kinematics::new(model, state)?;
    Ok(ComState {
        position: kin.com_position(),
        jacobian: kin.com_jacobian(),
    })
}

/// State at rest with the given joint positions and the base placed so that
/// the sole frames are centred on the inertial origin in xy with the lower
/// sole at `z = 0`.
pub fn standing_state(model: &RobotModel, joint_positions: &DVector<f64>) -> Result<RobotState, RigidBodyError> {
    let mut state = RobotState::zero(model);
    if joint_positions.len() != model.dof() {
        return Err(RigidBodyError::InvalidState(format!("expected {} joint positions", model.dof())));
    }
    state.joint_positions = joint_positions.clone();
    let kin = Kinematics::new(model, &state)?;
    let l = kin.frame_pose(model.left_foot_frame)?.translation.vector;
    let r = kin.frame_pose(model.right_foot_frame)?.translation.vector;
    let mid = (l + r) / 2.0;
    state.base_position = -Vector3::new(mid.x, mid.y, l.z.min(r.z));
    Ok(state)
}
