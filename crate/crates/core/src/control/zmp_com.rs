use nalgebra::{Matrix2, Vector2};

use super::{is_positive_definite, ControlError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZmpComGains {
    k_zmp: Matrix2<f64>,
    k_com: Matrix2<f64>,
}

impl ZmpComGains {
    /// Requires `K_com > I / b` and `0 < K_zmp < I / b`.
    pub fn new(k_zmp: Matrix2<f64>, k_com: Matrix2<f64>, b: f64) -> Result<Self, ControlError> {
        let inv_b = Matrix2::identity() / b;
        if !is_positive_definite(&(k_com - inv_b)) {
            return Err(ControlError::InvalidGains(format!("K_com must exceed I / b = {:.3}", 1.0 / b)));
        }
        if !is_positive_definite(&k_zmp) || !is_positive_definite(&(inv_b - k_zmp)) {
            return Err(ControlError::InvalidGains(format!("K_zmp must lie strictly between 0 and I / b = {:.3}", 1.0 / b)));
        }
        Ok(Self { k_zmp, k_com })
    }

    pub fn diagonal(k_zmp: f64, k_com: f64, b: f64) -> Result<Self, ControlError> {
        Self::new(Matrix2::identity() * k_zmp, Matrix2::identity() * k_com, b)
    }

    pub fn k_zmp(&self) -> &Matrix2<f64> {
        &self.k_zmp
    }

    pub fn k_com(&self) -> &Matrix2<f64> {
        &self.k_com
    }
}

/// Desired CoM velocity `v_ref - K_zmp (r* - r) + K_com (p_ref - p)`.
pub fn zmp_com_control(
    zmp_des: &Vector2<f64>,
    zmp: &Vector2<f64>,
    com_ref: &Vector2<f64>,
    com: &Vector2<f64>,
    com_vel_ref: &Vector2<f64>,
    gains: &ZmpComGains,
) -> Vector2<f64> {
    com_vel_ref - gains.k_zmp * (zmp_des - zmp) + gains.k_com * (com_ref - com)
}
