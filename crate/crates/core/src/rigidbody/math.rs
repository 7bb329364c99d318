use nalgebra::{IsometryMatrix3, Matrix3, Rotation3, Translation3, Unit, Vector3};

/// Rigid transform with an explicit rotation matrix.
pub type Pose = IsometryMatrix3<f64>;

/// `skew(v) * w == v x w`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`] for an exactly skew-symmetric matrix.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Skew-symmetric part `(A - A') / 2`.
pub fn sk(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m - m.transpose()) * 0.5
}

/// `vee(sk(A))`, the vee map extended to arbitrary 3x3 matrices.
pub fn vee_sk(m: &Matrix3<f64>) -> Vector3<f64> {
    vee(&sk(m))
}

pub fn pose(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Pose {
    IsometryMatrix3::from_parts(
        Translation3::from(translation),
        Rotation3::from_matrix_unchecked(rotation),
    )
}

pub fn pose_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Pose {
    IsometryMatrix3::from_parts(
        Translation3::new(xyz[0], xyz[1], xyz[2]),
        Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]),
    )
}

pub fn rotation_about(axis: &Vector3<f64>, angle: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Unit::new_unchecked(*axis), angle)
}

pub fn rot_z(yaw: f64) -> Matrix3<f64> {
    *Rotation3::from_euler_angles(0.0, 0.0, yaw).matrix()
}

/// `||R'R - I||_inf` and `|det R - 1|`, whichever is larger.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    let e = (r.transpose() * r - Matrix3::identity()).amax();
    e.max((r.determinant() - 1.0).abs())
}

/// Rotation vector of `R` (axis times angle).
pub fn log_so3(r: &Matrix3<f64>) -> Vector3<f64> {
    Rotation3::from_matrix_unchecked(*r).scaled_axis()
}

/// `R exp(skew(w))` style update for a world-frame angular increment:
/// `exp(skew(w)) R`.
pub fn integrate_rotation(r: &Matrix3<f64>, omega_dt: &Vector3<f64>) -> Matrix3<f64> {
    let inc = Rotation3::new(*omega_dt);
    let out = inc.matrix() * r;
    // Re-orthonormalize against drift.
    *Rotation3::from_matrix_eps(&out, 1e-15, 20, Rotation3::identity()).matrix()
}

/// Yaw angle of a rotation whose z axis is (close to) vertical.
pub fn yaw_of(r: &Matrix3<f64>) -> f64 {
    r[(1, 0)].atan2(r[(0, 0)])
}
