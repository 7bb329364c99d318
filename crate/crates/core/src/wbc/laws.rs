use nalgebra::{DVector, Matrix3, Vector3};

use crate::rigidbody::math::{skew, vee_sk};
use crate::rigidbody::RobotModel;

/// Desired torso angular velocity `-K (sk(R R_ref'))^v`.
pub fn torso_angular_velocity_des(r: &Matrix3<f64>, r_ref: &Matrix3<f64>, k: &Matrix3<f64>) -> Vector3<f64> {
    -(k * vee_sk(&(r * r_ref.transpose())))
}

/// Attitude feedback on the angular acceleration:
///
/// `w_dot_ref - c0 (W R R_ref' - R R_ref' W_ref)^v - c1 (w - w_ref) - c2 (R R_ref')^v`,
/// where `W = skew(w)` and the vee map takes the skew part first.
pub fn rotational_pid(
    r: &Matrix3<f64>,
    r_ref: &Matrix3<f64>,
    omega: &Vector3<f64>,
    omega_ref: &Vector3<f64>,
    omega_dot_ref: &Vector3<f64>,
    c: [f64; 3],
) -> Vector3<f64> {
    let e = r * r_ref.transpose();
    let rate = skew(omega) * e - e * skew(omega_ref);
    omega_dot_ref - vee_sk(&rate) * c[0] - (omega - omega_ref) * c[1] - vee_sk(&e) * c[2]
}

/// `v_dot_ref - K_d (v - v_ref) - K_p (p - p_ref)`.
pub fn linear_pid(
    p: &Vector3<f64>,
    p_ref: &Vector3<f64>,
    v: &Vector3<f64>,
    v_ref: &Vector3<f64>,
    v_dot_ref: &Vector3<f64>,
    kp: &Matrix3<f64>,
    kd: &Matrix3<f64>,
) -> Vector3<f64> {
    v_dot_ref - kd * (v - v_ref) - kp * (p - p_ref)
}

/// Forward Euler on the joint positions, clamped to the joint limits.
pub fn integrate_joint_positions(model: &RobotModel, s: &DVector<f64>, s_dot: &DVector<f64>, dt: f64) -> DVector<f64> {
    DVector::from_fn(s.len(), |i, _| {
        let lim = &model.joints[i].limits;
        (s[i] + dt * s_dot[i]).clamp(lim.lower, lim.upper)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigidbody::math::rotation_about;

    #[test]
    fn quarter_turn_about_x() {
        let r = *rotation_about(&Vector3::x(), std::f64::consts::FRAC_PI_2).matrix();
        let w = torso_angular_velocity_des(&r, &Matrix3::identity(), &Matrix3::identity());
        assert!((w - Vector3::new(-1.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn small_yaw_error_is_first_order() {
        let d = 1e-4;
        let r = *rotation_about(&Vector3::z(), d).matrix();
        let w = torso_angular_velocity_des(&r, &Matrix3::identity(), &(Matrix3::identity() * 3.0));
        assert!((w - Vector3::new(0.0, 0.0, -3.0 * d)).norm() < 1e-11);
    }

    #[test]
    fn feedthrough_and_single_terms() {
        let r = *rotation_about(&Vector3::new(1.0, 2.0, 3.0).normalize(), 0.4).matrix();
        let w = Vector3::new(0.1, -0.2, 0.3);
        let a = Vector3::new(1.0, 2.0, 3.0);
        assert!((rotational_pid(&r, &r, &w, &w, &a, [2.0, 3.0, 4.0]) - a).norm() < 1e-14);
        let dw = Vector3::new(0.0, 0.5, 0.0);
        let out = rotational_pid(&r, &r, &(w + dw), &w, &a, [0.0, 3.0, 0.0]);
        assert!((out - (a - dw * 3.0)).norm() < 1e-14);
        let p = Vector3::new(0.1, 0.0, -0.2);
        let k = Matrix3::identity() * 10.0;
        let z = Vector3::zeros();
        assert!((linear_pid(&p, &z, &z, &z, &z, &k, &k) + p * 10.0).norm() < 1e-15);
    }
}
