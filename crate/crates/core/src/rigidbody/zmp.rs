use nalgebra::{Vector2, Vector3};

use super::math::Pose;
use super::model::FrameId;
use super::RigidBodyError;

/// Below this normal force (N) the ZMP is treated as undefined.
pub const DEFAULT_F_MIN: f64 = 1.0;

const COPLANAR_TOL: f64 = 1e-6;

/// Contact wrench in the contact body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactWrench {
    pub frame: FrameId,
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZmpContact {
    pub wrench: ContactWrench,
    /// Pose of the contact frame in the inertial frame.
    pub pose: Pose,
}

/// ZMP in the contact frame: `(-tau_y / f_z, tau_x / f_z)`.
pub fn local_zmp(wrench: &ContactWrench, f_min: f64) -> Result<Vector2<f64>, RigidBodyError> {
    let fz = wrench.force.z;
    if fz.abs() < f_min {
        return Err(RigidBodyError::ZmpUndefined { normal_force: fz, f_min });
    }
    Ok(Vector2::new(-wrench.torque.y / fz, wrench.torque.x / fz))
}

/// Normal-force weighted combination of the local ZMPs, in inertial xy.
///
/// Each term is formed as `f_z * zmp_k`, which stays defined when a single
/// contact carries almost no load; only the total normal force is checked.
pub fn global_zmp(contacts: &[ZmpContact], f_min: f64) -> Result<Vector2<f64>, RigidBodyError> {
    let Some(first) = contacts.first() else {
        return Err(RigidBodyError::ZmpUndefined { normal_force: 0.0, f_min });
    };
    let n0 = first.pose.rotation * Vector3::z();
    let o0 = first.pose.translation.vector;
    for c in &contacts[1..] {
        let n = c.pose.rotation * Vector3::z();
        let offset = (c.pose.translation.vector - o0).dot(&n0).abs();
        let tilt = n.cross(&n0).norm();
        if offset > COPLANAR_TOL || tilt > COPLANAR_TOL || n.dot(&n0) < 0.0 {
            return Err(RigidBodyError::NonCoplanarContacts { deviation: offset.max(tilt) });
        }
    }
    let mut total = 0.0;
    let mut weighted = Vector3::zeros();
    for c in contacts {
        let w = &c.wrench;
        let fz = w.force.z;
        let local = Vector3::new(-w.torque.y, w.torque.x, 0.0);
        weighted += c.pose.rotation * local + c.pose.translation.vector * fz;
        total += fz;
    }
    if total < f_min {
        return Err(RigidBodyError::ZmpUndefined { normal_force: total, f_min });
    }
    Ok(Vector2::new(weighted.x / total, weighted.y / total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigidbody::math::pose_xyz_rpy;

    fn wrench(f: [f64; 3], t: [f64; 3]) -> ContactWrench {
        ContactWrench {
            frame: FrameId(0),
            force: Vector3::from(f),
            torque: Vector3::from(t),
        }
    }

    #[test]
    fn local_zmp_cases() {
        assert_eq!(local_zmp(&wrench([0.0, 0.0, 100.0], [0.0; 3]), 1.0).unwrap(), Vector2::zeros());
        let z = local_zmp(&wrench([0.0, 0.0, 100.0], [1.0, 2.0, 0.0]), 1.0).unwrap();
        assert!((z - Vector2::new(-0.02, 0.01)).amax() < 1e-15);
        assert!(matches!(
            local_zmp(&wrench([0.0, 0.0, 0.5], [0.0; 3]), 1.0),
            Err(RigidBodyError::ZmpUndefined { .. })
        ));
    }

    #[test]
    fn weighted_global_zmp() {
        let a = ZmpContact {
            wrench: wrench([0.0, 0.0, 100.0], [0.0; 3]),
            pose: pose_xyz_rpy([0.0, 0.0, 0.0], [0.0; 3]),
        };
        let b = ZmpContact {
            wrench: wrench([0.0, 0.0, 300.0], [0.0; 3]),
            pose: pose_xyz_rpy([0.2, 0.0, 0.0], [0.0, 0.0, 0.4]),
        };
        let z = global_zmp(&[a, b], 1.0).unwrap();
        assert!((z.x - 0.15).abs() < 1e-15 && z.y.abs() < 1e-15);
        let mut lifted = b;
        lifted.pose.translation.vector.z = 0.01;
        assert!(matches!(
            global_zmp(&[a, lifted], 1.0),
            Err(RigidBodyError::NonCoplanarContacts { .. })
        ));
    }
}
