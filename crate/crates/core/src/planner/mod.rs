//! Trajectory generation: unicycle footsteps, swing-foot splines, DCM
//! recursion with double-support smoothing, and the derived ZMP/CoM
//! references.

mod dcm;
mod export;
mod footsteps;
mod references;
mod swing;

use thiserror::Error;

pub use dcm::{double_support_windows, plan_dcm, smooth_dcm, DcmPiece, DcmTrajectory, InitialBlend, TerminalRule};
pub use export::{format_footsteps, parse_footsteps, write_footsteps, write_plan_csv, PLAN_CSV_HEADER};
pub use footsteps::{plan_footsteps, step_center, wrap_angle, Footstep, FootstepBounds, Pose2, Side, UnicycleCommand};
pub use references::{derive_zmp_com, plan_walk, ContactPhase, FootSample, RefSample, ReferenceTrajectories, WalkPlan, WalkSettings};
pub use swing::{swing_trajectory, FootTrajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("no feasible step within bounds: {0}")]
    PlanInfeasible(String),
    #[error("invalid timing: {0}")]
    InvalidTiming(String),
    #[error("invalid planner input: {0}")]
    InvalidInput(String),
}

/// Linear inverted pendulum constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumConstants {
    pub z0: f64,
    pub g: f64,
    /// `sqrt(z0 / g)`
    pub b: f64,
}

impl PendulumConstants {
    pub fn new(z0: f64, g: f64) -> Self {
        Self { z0, g, b: (z0 / g).sqrt() }
    }
}
