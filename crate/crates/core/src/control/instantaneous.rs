use nalgebra::{Matrix2, Matrix4, Vector2};

use super::{is_positive_definite, is_positive_semidefinite, ControlError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcmGains {
    kp: Matrix2<f64>,
    ki: Matrix2<f64>,
    integral_limit: Vector2<f64>,
}

impl DcmGains {
    /// Accepts gains with `K_p - I` positive definite and `K_i` positive
    /// semidefinite.
    pub fn new(kp: Matrix2<f64>, ki: Matrix2<f64>, integral_limit: Vector2<f64>) -> Result<Self, ControlError> {
        if !is_positive_definite(&(kp - Matrix2::identity())) {
            return Err(ControlError::InvalidGains(format!("K_p - I must be positive definite, K_p = {kp:?}")));
        }
        if !is_positive_semidefinite(&ki) {
            return Err(ControlError::InvalidGains(format!("K_i must be positive semidefinite, K_i = {ki:?}")));
        }
        if integral_limit.iter().any(|l| !(*l >= 0.0)) {
            return Err(ControlError::InvalidGains("integral limit must be non-negative".into()));
        }
        Ok(Self { kp, ki, integral_limit })
    }

    pub fn diagonal(kp: f64, ki: f64, integral_limit: f64) -> Result<Self, ControlError> {
        Self::new(
            Matrix2::identity() * kp,
            Matrix2::identity() * ki,
            Vector2::repeat(integral_limit),
        )
    }

    pub fn kp(&self) -> &Matrix2<f64> {
        &self.kp
    }

    pub fn ki(&self) -> &Matrix2<f64> {
        &self.ki
    }

    pub fn integral_limit(&self) -> &Vector2<f64> {
        &self.integral_limit
    }
}

/// Running integral of the DCM error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DcmIntegral {
    pub value: Vector2<f64>,
    /// Error at the previous tick; `None` before the first tick.
    pub last_error: Option<Vector2<f64>>,
}

/// `xi_ref - b xi_ref_dot + K_p (xi - xi_ref) + K_i integral`.
pub fn dcm_law(
    xi: &Vector2<f64>,
    xi_ref: &Vector2<f64>,
    xi_ref_dot: &Vector2<f64>,
    integral: &Vector2<f64>,
    gains: &DcmGains,
    b: f64,
) -> Vector2<f64> {
    xi_ref - xi_ref_dot * b + gains.kp * (xi - xi_ref) + gains.ki * integral
}

/// One tick of the instantaneous DCM controller with period `dt`: advances
/// the error integral by the trapezoidal rule, clamps it, and evaluates
/// [`dcm_law`] with the new integral.
pub fn instantaneous_dcm(
    xi: &Vector2<f64>,
    xi_ref: &Vector2<f64>,
    xi_ref_dot: &Vector2<f64>,
    integral: &DcmIntegral,
    gains: &DcmGains,
    b: f64,
    dt: f64,
) -> (Vector2<f64>, DcmIntegral) {
    let e = xi - xi_ref;
    let mut value = match integral.last_error {
        Some(prev) => integral.value + (prev + e) * (dt / 2.0),
        None => integral.value,
    };
    for i in 0..2 {
        value[i] = value[i].clamp(-gains.integral_limit[i], gains.integral_limit[i]);
    }
    let next = DcmIntegral {
        value,
        last_error: Some(e),
    };
    (dcm_law(xi, xi_ref, xi_ref_dot, &value, gains, b), next)
}

/// State matrix of the closed-loop error system in `(integral, error)`:
/// `d/dt [I; e] = [0, I; -K_i / b, (I - K_p) / b] [I; e]`.
pub fn augmented_error_matrix(gains: &DcmGains, b: f64) -> Matrix4<f64> {
    let mut a = Matrix4::zeros();
    a.fixed_view_mut::<2, 2>(0, 2).copy_from(&Matrix2::identity());
    a.fixed_view_mut::<2, 2>(2, 0).copy_from(&(-gains.ki / b));
    a.fixed_view_mut::<2, 2>(2, 2).copy_from(&((Matrix2::identity() - gains.kp) / b));
    a
}

/// Largest real part among the eigenvalues of [`augmented_error_matrix`].
pub fn max_real_eigenvalue(a: &Matrix4<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feedforward_only_with_zero_error() {
        let g = DcmGains::diagonal(2.0, 0.5, 0.05).unwrap();
        let xr = Vector2::new(0.1, 0.2);
        let xd = Vector2::new(0.3, -0.1);
        let (r, _) = instantaneous_dcm(&xr, &xr, &xd, &DcmIntegral::default(), &g, 0.25, 0.01);
        assert!((r - (xr - xd * 0.25)).norm() < 1e-15);
    }

    #[test]
    fn proportional_term() {
        let g = DcmGains::diagonal(2.0, 0.0, 0.05).unwrap();
        let xr = Vector2::new(0.1, 0.2);
        let xi = xr + Vector2::new(0.01, 0.0);
        let (r, _) = instantaneous_dcm(&xi, &xr, &Vector2::zeros(), &DcmIntegral::default(), &g, 0.25, 0.01);
        assert!((r - (xr + Vector2::new(0.02, 0.0))).norm() < 1e-15);
    }

    #[test]
    fn integral_is_trapezoidal_and_clamped() {
        let g = DcmGains::diagonal(2.0, 1.0, 0.05).unwrap();
        let z = Vector2::zeros();
        let mut st = DcmIntegral::default();
        let (_, s1) = instantaneous_dcm(&Vector2::new(0.1, 0.0), &z, &z, &st, &g, 0.25, 0.1);
        assert_eq!(s1.value, z);
        let (_, s2) = instantaneous_dcm(&Vector2::new(0.3, 0.0), &z, &z, &s1, &g, 0.25, 0.1);
        assert!((s2.value.x - 0.02).abs() < 1e-15);
        st = s2;
        for _ in 0..100 {
            st = instantaneous_dcm(&Vector2::new(1.0, -1.0), &z, &z, &st, &g, 0.25, 0.1).1;
        }
        assert_eq!(st.value, Vector2::new(0.05, -0.05));
    }

    #[test]
    fn gains_below_identity_are_rejected() {
        assert!(DcmGains::diagonal(1.0, 0.5, 0.05).is_err());
        assert!(DcmGains::diagonal(2.0, -0.1, 0.05).is_err());
    }
}
