//! Simplified-model control: instantaneous and receding-horizon DCM
//! controllers, both returning a desired ZMP, and the ZMP-CoM loop that turns
//! a desired ZMP into a desired CoM velocity.

mod instantaneous;
mod mpc;
mod polygon;
mod zmp_com;

use nalgebra::Matrix2;
use thiserror::Error;

use crate::qp::QpStatus;

pub use instantaneous::{augmented_error_matrix, dcm_law, instantaneous_dcm, max_real_eigenvalue, DcmGains, DcmIntegral};
pub use mpc::{MpcDcm, MpcOutput, MpcSettings};
pub use polygon::{support_polygon, ConvexPolygon};
pub use zmp_com::{zmp_com_control, ZmpComGains};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("invalid gains: {0}")]
    InvalidGains(String),
    #[error("MPC problem not solved (status {})", .0.as_str())]
    MpcInfeasible(QpStatus),
    #[error("invalid controller input: {0}")]
    InvalidInput(String),
}

/// Smallest eigenvalue of the symmetric part.
fn min_eigenvalue(m: &Matrix2<f64>) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().min()
}

pub(crate) fn is_positive_definite(m: &Matrix2<f64>) -> bool {
    min_eigenvalue(m) > 0.0
}

pub(crate) fn is_positive_semidefinite(m: &Matrix2<f64>) -> bool {
    min_eigenvalue(m) >= -1e-12
}
