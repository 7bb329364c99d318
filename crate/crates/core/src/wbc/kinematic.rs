use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};

use super::laws::torso_angular_velocity_des;
use super::{check_rotation, foot_frame, is_pd3, WbcError};
use crate::planner::Side;
use crate::qp::{QpProblem, QpSettings, QpStatus, Solver};
use crate::rigidbody::math::vee_sk;
use crate::rigidbody::{Kinematics, RobotModel, RobotState};

/// Reference for one foot of the velocity-level controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootReference {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
    /// Feed-forward twist `(v; omega)`.
    pub twist: Vector6<f64>,
    /// Stance feet are held still regardless of the other fields.
    pub in_contact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTaskReferences {
    /// Desired CoM position (integral of `com_velocity`).
    pub com_position: Vector3<f64>,
    /// Desired CoM velocity from the ZMP-CoM loop.
    pub com_velocity: Vector3<f64>,
    pub left: FootReference,
    pub right: FootReference,
    pub torso_rotation: Matrix3<f64>,
    pub posture: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicGains {
    pub torso_weight: Matrix3<f64>,
    /// Diagonal posture weight.
    pub posture_weight: DVector<f64>,
    /// Diagonal posture gain.
    pub posture_gain: DVector<f64>,
    pub torso_gain: Matrix3<f64>,
    pub foot_kp: Matrix3<f64>,
    pub foot_ki: Matrix3<f64>,
    pub foot_kw: Matrix3<f64>,
    pub com_kp: Matrix3<f64>,
    pub com_ki: Matrix3<f64>,
    pub velocity_lower: DVector<f64>,
    pub velocity_upper: DVector<f64>,
    pub foot_integral_limit: f64,
    pub com_integral_limit: f64,
    pub regularization: f64,
}

impl KinematicGains {
    /// Repo defaults for a model with `n` joints.
    pub fn defaults(n: usize) -> Self {
        Self {
            torso_weight: Matrix3::identity() * 10.0,
            posture_weight: DVector::repeat(n, 1.0),
            posture_gain: DVector::repeat(n, 5.0),
            torso_gain: Matrix3::identity() * 5.0,
            foot_kp: Matrix3::identity() * 20.0,
            foot_ki: Matrix3::identity() * 2.0,
            foot_kw: Matrix3::identity() * 20.0,
            com_kp: Matrix3::identity() * 20.0,
            com_ki: Matrix3::identity() * 2.0,
            velocity_lower: DVector::repeat(n, -2.0),
            velocity_upper: DVector::repeat(n, 2.0),
            foot_integral_limit: 0.05,
            com_integral_limit: 0.05,
            regularization: 1e-8,
        }
    }

    /// The torso weight may be zero; every other gain must be positive
    /// definite and the velocity bounds ordered.
    pub fn validate(&self, n: usize) -> Result<(), WbcError> {
        let sizes = [&self.posture_weight, &self.posture_gain, &self.velocity_lower, &self.velocity_upper];
        if sizes.iter().any(|v| v.len() != n) {
            return Err(WbcError::InvalidGains(format!("posture gains and velocity bounds need {n} entries")));
        }
        let psd_torso = self.torso_weight.symmetric_eigenvalues().min() >= 0.0;
        let pd = [&self.torso_gain, &self.foot_kp, &self.foot_ki, &self.foot_kw, &self.com_kp, &self.com_ki]
            .iter()
            .all(|m| is_pd3(m));
        let positive = self.posture_weight.iter().chain(self.posture_gain.iter()).all(|&x| x > 0.0);
        let ordered = self.velocity_lower.iter().zip(self.velocity_upper.iter()).all(|(l, u)| l < u);
        if !(psd_torso && pd && positive && ordered) {
            return Err(WbcError::InvalidGains("kinematic controller gains violate their invariants".into()));
        }
        if !(self.foot_integral_limit >= 0.0 && self.com_integral_limit >= 0.0 && self.regularization >= 0.0) {
            return Err(WbcError::InvalidGains("integral limits and regularization must be non-negative".into()));
        }
        Ok(())
    }
}

/// Integrator states of the foot and CoM laws.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KinematicIntegrals {
    pub com: Vector3<f64>,
    pub left: Vector3<f64>,
    pub right: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicOutput {
    pub nu: DVector<f64>,
    pub integrals: KinematicIntegrals,
    pub com_velocity_des: Vector3<f64>,
    pub left_twist_des: Vector6<f64>,
    pub right_twist_des: Vector6<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    /// Joints whose velocity ended on a bound.
    pub active_bounds: Vec<usize>,
}

/// Velocity-level whole-body controller: hard CoM and foot velocity
/// constraints, weighted torso and posture tasks, joint velocity bounds.
#[derive(Debug, Default)]
pub struct KinematicWbc {
    solver: Solver,
}

/// Problem pieces exposed for inspection and testing.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicProblem {
    pub qp: QpProblem,
    pub com_velocity_des: Vector3<f64>,
    pub left_twist_des: Vector6<f64>,
    pub right_twist_des: Vector6<f64>,
    pub integrals: KinematicIntegrals,
}

fn clamp_norm_inf(v: Vector3<f64>, limit: f64) -> Vector3<f64> {
    v.map(|x| x.clamp(-limit, limit))
}

impl KinematicWbc {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the QP over `nu` for one tick of length `dt`.
    pub fn build(
        model: &RobotModel,
        state: &RobotState,
        refs: &KinematicTaskReferences,
        gains: &KinematicGains,
        integrals: &KinematicIntegrals,
        dt: f64,
    ) -> Result<KinematicProblem, WbcError> {
        let n = model.dof();
        gains.validate(n)?;
        check_rotation(&refs.torso_rotation, "torso reference")?;
        check_rotation(&refs.left.rotation, "left foot reference")?;
        check_rotation(&refs.right.rotation, "right foot reference")?;
        if refs.posture.len() != n {
            return Err(WbcError::InvalidInput(format!("posture reference needs {n} entries")));
        }
        let kin = Kinematics::new(model, state)?;
        let nv = n + 6;

        // CoM law with clamped integral.
        let com = kin.com_position();
        let mut next = *integrals;
        let com_err = com - refs.com_position;
        next.com = clamp_norm_inf(integrals.com + com_err * dt, gains.com_integral_limit);
        let com_velocity_des = refs.com_velocity - gains.com_kp * com_err - gains.com_ki * next.com;

        // Foot laws.
        let foot = |side: Side, r: &FootReference, integral: &mut Vector3<f64>| -> Result<Vector6<f64>, WbcError> {
            if r.in_contact {
                *integral = Vector3::zeros();
                return Ok(Vector6::zeros());
            }
            let frame = foot_frame(model, side);
            let pose = kin.frame_pose(frame)?;
            let err = pose.translation.vector - r.position;
            *integral = clamp_norm_inf(*integral + err * dt, gains.foot_integral_limit);
            let lin = r.twist.fixed_rows::<3>(0) - gains.foot_kp * err - gains.foot_ki * *integral;
            let ang = r.twist.fixed_rows::<3>(3)
                - gains.foot_kw * vee_sk(&(pose.rotation.matrix() * r.rotation.transpose()));
            Ok(Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z))
        };
        let left_twist_des = foot(Side::Left, &refs.left, &mut next.left)?;
        let right_twist_des = foot(Side::Right, &refs.right, &mut next.right)?;

        // Cost.
        let torso_frame = model.torso_frame;
        let torso_rot = *kin.frame_pose(torso_frame)?.rotation.matrix();
        let omega_des = torso_angular_velocity_des(&torso_rot, &refs.torso_rotation, &gains.torso_gain);
        let jt = kin.frame_jacobian(torso_frame)?.fixed_rows::<3>(3).into_owned();
        let mut hessian = jt.transpose() * gains.torso_weight * &jt;
        let mut gradient = -(jt.transpose() * (gains.torso_weight * omega_des));
        let s_dot_des = -gains.posture_gain.component_mul(&(&state.joint_positions - &refs.posture));
        for i in 0..n {
            hessian[(6 + i, 6 + i)] += gains.posture_weight[i];
            gradient[6 + i] -= gains.posture_weight[i] * s_dot_des[i];
        }
        for i in 0..nv {
            hessian[(i, i)] += gains.regularization;
        }
        let hessian = (&hessian + hessian.transpose()) * 0.5;

        // Constraints: CoM (3), feet (12), joint velocity bounds (n).
        let m = 15 + n;
        let mut a = DMatrix::zeros(m, nv);
        let mut lower = DVector::zeros(m);
        let mut upper = DVector::zeros(m);
        a.rows_mut(0, 3).copy_from(&kin.com_jacobian());
        lower.rows_mut(0, 3).copy_from(&com_velocity_des);
        a.rows_mut(3, 6).copy_from(&kin.frame_jacobian(model.left_foot_frame)?);
        lower.rows_mut(3, 6).copy_from(&left_twist_des);
        a.rows_mut(9, 6).copy_from(&kin.frame_jacobian(model.right_foot_frame)?);
        lower.rows_mut(9, 6).copy_from(&right_twist_des);
        upper.rows_mut(0, 15).copy_from(&lower.rows(0, 15));
        for i in 0..n {
            a[(15 + i, 6 + i)] = 1.0;
            lower[15 + i] = gains.velocity_lower[i];
            upper[15 + i] = gains.velocity_upper[i];
        }
        Ok(KinematicProblem {
            qp: QpProblem {
                hessian,
                gradient,
                constraint_matrix: a,
                lower_bounds: lower,
                upper_bounds: upper,
            },
            com_velocity_des,
            left_twist_des,
            right_twist_des,
            integrals: next,
        })
    }

    pub fn build_and_solve(
        &mut self,
        model: &RobotModel,
        state: &RobotState,
        refs: &KinematicTaskReferences,
        gains: &KinematicGains,
        integrals: &KinematicIntegrals,
        dt: f64,
    ) -> Result<KinematicOutput, WbcError> {
        let problem = Self::build(model, state, refs, gains, integrals, dt)?;
        let settings = QpSettings {
            warm_start: true,
            ..QpSettings::default()
        };
        let sol = self.solver.solve(&problem.qp, &settings)?;
        if !sol.is_solved() {
            return Err(WbcError::IkInfeasible {
                status: sol.status,
                violated: violated_bounds(model, &problem.qp, gains),
            });
        }
        let n = model.dof();
        let active_bounds = (0..n)
            .filter(|&i| {
                let v = sol.primal[6 + i];
                v <= gains.velocity_lower[i] + 1e-9 || v >= gains.velocity_upper[i] - 1e-9
            })
            .collect();
        Ok(KinematicOutput {
            nu: sol.primal,
            integrals: problem.integrals,
            com_velocity_des: problem.com_velocity_des,
            left_twist_des: problem.left_twist_des,
            right_twist_des: problem.right_twist_des,
            status: sol.status,
            iterations: sol.iterations,
            active_bounds,
        })
    }
}

/// Names of the joint-velocity bounds that the equality tasks alone would
/// violate.
fn violated_bounds(model: &RobotModel, qp: &QpProblem, gains: &KinematicGains) -> Vec<String> {
    let n = model.dof();
    let eq = QpProblem {
        hessian: qp.hessian.clone(),
        gradient: qp.gradient.clone(),
        constraint_matrix: qp.constraint_matrix.rows(0, 15).into_owned(),
        lower_bounds: qp.lower_bounds.rows(0, 15).into_owned(),
        upper_bounds: qp.upper_bounds.rows(0, 15).into_owned(),
    };
    let Ok(sol) = crate::qp::solve(&eq, &QpSettings::default()) else {
        return vec!["task equalities".into()];
    };
    if !sol.is_solved() {
        return vec!["task equalities".into()];
    }
    (0..n)
        .filter(|&i| {
            let v = sol.primal[6 + i];
            v < gains.velocity_lower[i] - 1e-9 || v > gains.velocity_upper[i] + 1e-9
        })
        .map(|i| format!("velocity bound of {}", model.joints[i].name))
        .collect()
}
