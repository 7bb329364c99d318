use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, SMatrix, Vector2, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::laws::{linear_pid, rotational_pid};
use super::{check_rotation, foot_frame, is_pd3, WbcError};
use crate::control::ConvexPolygon;
use crate::planner::{Pose2, Side};
use crate::qp::{QpProblem, QpSettings, QpStatus, Solver};
use crate::rigidbody::math::{yaw_of, Pose};
use crate::rigidbody::{FootGeometry, Kinematics, RobotModel, RobotState, GRAVITY};

/// Rows of the per-contact wrench feasibility set `B_f f <= 0`.
pub const WRENCH_ROWS: usize = 13;
const PYRAMID_FACETS: usize = 8;
const COPLANAR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationReference {
    pub rotation: Matrix3<f64>,
    pub omega: Vector3<f64>,
    pub omega_dot: Vector3<f64>,
}

impl RotationReference {
    pub fn fixed(rotation: Matrix3<f64>) -> Self {
        Self {
            rotation,
            omega: Vector3::zeros(),
            omega_dot: Vector3::zeros(),
        }
    }
}

/// Swing feet track all fields. For a stance foot, `position` and
/// `orientation.rotation` give the contact frame on the ground, where the
/// ZMP and wrench-feasibility rows are written.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootMotionReference {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
    pub orientation: RotationReference,
    pub in_contact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorqueTaskReferences {
    pub torso: RotationReference,
    pub left: FootMotionReference,
    pub right: FootMotionReference,
    /// CoM height, rate and acceleration.
    pub com_height: Vector3<f64>,
    pub posture: DVector<f64>,
    pub posture_velocity: DVector<f64>,
    pub posture_acceleration: DVector<f64>,
    /// Desired global ZMP.
    pub zmp: Vector2<f64>,
}

/// What the wrench term of the cost pulls towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WrenchRegularization {
    /// The robot weight shared equally by the stance feet.
    #[default]
    NominalShare,
    /// Zero wrench.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorqueGains {
    pub torso_weight: Matrix3<f64>,
    /// Diagonal weight of the posture acceleration task.
    pub posture_weight: DVector<f64>,
    /// Diagonal torque weight.
    pub torque_weight: DVector<f64>,
    /// Diagonal weight on each contact wrench `(force; torque)`.
    pub wrench_weight: Vector6<f64>,
    pub wrench_mode: WrenchRegularization,
    /// `c0, c1, c2` of the torso attitude law.
    pub torso_pid: [f64; 3],
    /// `c0, c1, c2` of the swing-foot attitude law.
    pub foot_pid: [f64; 3],
    pub posture_kp: DVector<f64>,
    pub posture_kd: DVector<f64>,
    pub foot_kp: Matrix3<f64>,
    pub foot_kd: Matrix3<f64>,
    pub com_kp: f64,
    pub com_kd: f64,
    pub friction: f64,
    pub torque_lower: DVector<f64>,
    pub torque_upper: DVector<f64>,
    /// Replace a ZMP reference outside the support polygon by its projection
    /// instead of failing.
    pub project_zmp: bool,
    pub regularization: f64,
}

impl TorqueGains {
    pub fn defaults(model: &RobotModel) -> Self {
        let n = model.dof();
        let tau = model.torque_limits();
        Self {
            torso_weight: Matrix3::identity() * 10.0,
            posture_weight: DVector::repeat(n, 1.0),
            torque_weight: DVector::repeat(n, 1e-2),
            wrench_weight: Vector6::new(1e-3, 1e-3, 1e-4, 1e-2, 1e-2, 1e-2),
            wrench_mode: WrenchRegularization::NominalShare,
            torso_pid: [1.0, 20.0, 100.0],
            foot_pid: [1.0, 20.0, 100.0],
            posture_kp: DVector::repeat(n, 50.0),
            posture_kd: DVector::repeat(n, 14.0),
            foot_kp: Matrix3::identity() * 100.0,
            foot_kd: Matrix3::identity() * 20.0,
            com_kp: 100.0,
            com_kd: 20.0,
            friction: 1.0 / 3.0,
            torque_lower: -&tau,
            torque_upper: tau,
            project_zmp: false,
            regularization: 1e-8,
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), WbcError> {
        let vecs = [
            &self.posture_weight,
            &self.torque_weight,
            &self.posture_kp,
            &self.posture_kd,
            &self.torque_lower,
            &self.torque_upper,
        ];
        if vecs.iter().any(|v| v.len() != n) {
            return Err(WbcError::InvalidGains(format!("per-joint torque gains need {n} entries")));
        }
        let positive = self
            .posture_weight
            .iter()
            .chain(self.torque_weight.iter())
            .chain(self.posture_kp.iter())
            .chain(self.posture_kd.iter())
            .chain(self.torso_pid.iter())
            .chain(self.foot_pid.iter())
            .chain([self.com_kp, self.com_kd, self.friction].iter())
            .all(|&x| x > 0.0);
        let wrench = self.wrench_weight.iter().all(|&x| x >= 0.0);
        let pd = self.torso_weight.symmetric_eigenvalues().min() >= 0.0 && is_pd3(&self.foot_kp) && is_pd3(&self.foot_kd);
        let ordered = self.torque_lower.iter().zip(self.torque_upper.iter()).all(|(l, u)| l < u);
        if !(positive && wrench && pd && ordered && self.regularization >= 0.0) {
            return Err(WbcError::InvalidGains("torque controller gains violate their invariants".into()));
        }
        Ok(())
    }
}

/// `B_f` for one contact, acting on the wrench `(force; torque)` expressed in
/// the inertial frame at the contact origin: unilateral normal force, an
/// 8-facet friction pyramid inscribed in the cone, and the local CoP inside
/// the foot rectangle.
pub fn wrench_feasibility(rotation: &Matrix3<f64>, foot: &FootGeometry, mu: f64) -> SMatrix<f64, WRENCH_ROWS, 6> {
    let mut local = SMatrix::<f64, WRENCH_ROWS, 6>::zeros();
    local[(0, 2)] = -1.0;
    let inscribed = mu * (std::f64::consts::PI / PYRAMID_FACETS as f64).cos();
    for i in 0..PYRAMID_FACETS {
        let th = std::f64::consts::TAU * i as f64 / PYRAMID_FACETS as f64;
        local[(1 + i, 0)] = th.cos();
        local[(1 + i, 1)] = th.sin();
        local[(1 + i, 2)] = -inscribed;
    }
    let (hl, hw) = (foot.length / 2.0, foot.width / 2.0);
    // CoP x = -tau_y / f_z, y = tau_x / f_z.
    let cop = [(4, -1.0, hl), (4, 1.0, hl), (3, 1.0, hw), (3, -1.0, hw)];
    for (k, &(col, sign, half)) in cop.iter().enumerate() {
        local[(9 + k, col)] = sign;
        local[(9 + k, 2)] = -half;
    }
    let mut to_local = SMatrix::<f64, 6, 6>::zeros();
    to_local.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation.transpose());
    to_local.fixed_view_mut::<3, 3>(3, 3).copy_from(&rotation.transpose());
    local * to_local
}

/// Stance contact used by the ZMP constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StanceContact {
    pub side: Side,
    pub pose: Pose,
}

/// Support polygon of flat stance contacts.
pub fn contact_polygon(contacts: &[StanceContact], foot: &FootGeometry) -> Option<ConvexPolygon> {
    let pts: Vec<Vector2<f64>> = contacts
        .iter()
        .filter_map(|c| {
            let t = c.pose.translation.vector;
            ConvexPolygon::rectangle(&Pose2::new(t.x, t.y, yaw_of(c.pose.rotation.matrix())), foot.length, foot.width, 0.0)
        })
        .flat_map(|p| p.vertices().to_vec())
        .collect();
    ConvexPolygon::hull(&pts)
}

/// Two rows over the stacked contact wrenches whose null space is exactly
/// "global ZMP equals `zmp`": `sum_k tau_k + (p_k - r) x f_k` has no
/// horizontal component. With one contact this is
/// `[0 0 r_x - p_x 0 1 0; 0 0 r_y - p_y -1 0 0]`.
pub fn zmp_equality(contacts: &[StanceContact], zmp: &Vector2<f64>, foot: &FootGeometry) -> Result<DMatrix<f64>, WbcError> {
    let Some(first) = contacts.first() else {
        return Err(WbcError::NoContact);
    };
    let z0 = first.pose.translation.vector.z;
    for c in contacts {
        let n = c.pose.rotation * Vector3::z();
        let dev = (c.pose.translation.vector.z - z0).abs().max(n.xy().norm());
        if dev > COPLANAR_TOL {
            return Err(WbcError::NonCoplanarContacts { deviation: dev });
        }
    }
    let poly = contact_polygon(contacts, foot).ok_or(WbcError::NoContact)?;
    let dist = poly.signed_distance(zmp);
    if dist > 1e-9 {
        return Err(WbcError::ZmpRefInfeasible { zmp: *zmp, distance: dist });
    }
    let mut a = DMatrix::zeros(2, 6 * contacts.len());
    for (k, c) in contacts.iter().enumerate() {
        let p = c.pose.translation.vector;
        a[(0, 6 * k + 2)] = zmp.x - p.x;
        a[(0, 6 * k + 4)] = 1.0;
        a[(1, 6 * k + 2)] = zmp.y - p.y;
        a[(1, 6 * k + 3)] = -1.0;
    }
    Ok(a)
}

/// Offsets of the variable blocks in `u = (nu_dot, tau, f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueLayout {
    pub nv: usize,
    pub n: usize,
    pub contacts: Vec<StanceContact>,
}

impl TorqueLayout {
    pub fn tau(&self) -> usize {
        self.nv
    }

    pub fn wrench(&self, k: usize) -> usize {
        self.nv + self.n + 6 * k
    }

    pub fn len(&self) -> usize {
        self.nv + self.n + 6 * self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Named row ranges of the constraint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueRows {
    pub dynamics: std::ops::Range<usize>,
    pub left_foot: std::ops::Range<usize>,
    pub right_foot: std::ops::Range<usize>,
    pub com_height: std::ops::Range<usize>,
    pub zmp: std::ops::Range<usize>,
    pub wrench: std::ops::Range<usize>,
    pub torque: std::ops::Range<usize>,
}

impl TorqueRows {
    fn name_of(&self, row: usize) -> &'static str {
        let groups = [
            (&self.dynamics, "dynamics"),
            (&self.left_foot, "left foot task"),
            (&self.right_foot, "right foot task"),
            (&self.com_height, "CoM height task"),
            (&self.zmp, "ZMP equality"),
            (&self.wrench, "wrench feasibility"),
            (&self.torque, "torque bounds"),
        ];
        groups.iter().find(|(r, _)| r.contains(&row)).map_or("unknown", |(_, n)| n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorqueProblem {
    pub qp: QpProblem,
    pub layout: TorqueLayout,
    pub rows: TorqueRows,
    /// ZMP reference actually imposed (projected when enabled and needed).
    pub zmp: Vector2<f64>,
    pub zmp_projected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorqueResiduals {
    /// `|| M nu_dot + h - B tau - J_c' f ||_inf`.
    pub dynamics: f64,
    /// Largest residual of the foot, CoM-height and ZMP equalities.
    pub tasks: f64,
    /// Largest violation of the wrench and torque inequalities (0 if none).
    pub inequalities: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorqueOutput {
    pub nu_dot: DVector<f64>,
    pub tau: DVector<f64>,
    /// Stance wrenches `(force; torque)` in the inertial frame at the sole.
    pub wrenches: Vec<(Side, Vector6<f64>)>,
    pub status: QpStatus,
    pub iterations: usize,
    pub residuals: TorqueResiduals,
    pub zmp: Vector2<f64>,
    pub zmp_projected: bool,
    pub active_set: Vec<usize>,
}

/// Torque-level whole-body controller over `u = (nu_dot, tau, f)`.
#[derive(Debug, Default)]
pub struct TorqueWbc {
    solver: Solver,
}

impl TorqueWbc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn build(
        model: &RobotModel,
        state: &RobotState,
        refs: &TorqueTaskReferences,
        gains: &TorqueGains,
    ) -> Result<TorqueProblem, WbcError> {
        let n = model.dof();
        let nv = n + 6;
        gains.validate(n)?;
        for (r, what) in [
            (&refs.torso.rotation, "torso reference"),
            (&refs.left.orientation.rotation, "left foot reference"),
            (&refs.right.orientation.rotation, "right foot reference"),
        ] {
            check_rotation(r, what)?;
        }
        if [&refs.posture, &refs.posture_velocity, &refs.posture_acceleration].iter().any(|v| v.len() != n) {
            return Err(WbcError::InvalidInput(format!("posture references need {n} entries")));
        }
        let kin = Kinematics::new(model, state)?;

        let mut contacts = Vec::new();
        for (side, r) in [(Side::Left, &refs.left), (Side::Right, &refs.right)] {
            if r.in_contact {
                contacts.push(StanceContact {
                    side,
                    pose: Pose::from_parts(r.position.into(), Rotation3::from_matrix_unchecked(r.orientation.rotation)),
                });
            }
        }
        if contacts.is_empty() {
            return Err(WbcError::NoContact);
        }
        let layout = TorqueLayout { nv, n, contacts };
        let nu_len = layout.len();

        let mut zmp = refs.zmp;
        let mut zmp_projected = false;
        let zmp_rows = match zmp_equality(&layout.contacts, &zmp, &model.foot) {
            Err(WbcError::ZmpRefInfeasible { .. }) if gains.project_zmp => {
                let poly = contact_polygon(&layout.contacts, &model.foot).ok_or(WbcError::NoContact)?;
                zmp = poly.project(&zmp);
                zmp_projected = true;
                zmp_equality(&layout.contacts, &zmp, &model.foot)?
            }
            other => other?,
        };

        // Cost.
        let mut hessian = DMatrix::zeros(nu_len, nu_len);
        let mut gradient = DVector::zeros(nu_len);
        let torso = model.torso_frame;
        let torso_pose = kin.frame_pose(torso)?;
        let torso_twist = kin.frame_velocity(torso)?;
        let omega_dot_des = rotational_pid(
            torso_pose.rotation.matrix(),
            &refs.torso.rotation,
            &torso_twist.fixed_rows::<3>(3).into_owned(),
            &refs.torso.omega,
            &refs.torso.omega_dot,
            gains.torso_pid,
        );
        let jt = kin.frame_jacobian(torso)?.fixed_rows::<3>(3).into_owned();
        let target = omega_dot_des - kin.bias_acceleration(torso)?.fixed_rows::<3>(3);
        hessian
            .view_mut((0, 0), (nv, nv))
            .copy_from(&(jt.transpose() * gains.torso_weight * &jt));
        gradient.rows_mut(0, nv).copy_from(&(-(jt.transpose() * (gains.torso_weight * target))));
        let s_ddot_des = &refs.posture_acceleration
            - gains.posture_kd.component_mul(&(&state.joint_velocities - &refs.posture_velocity))
            - gains.posture_kp.component_mul(&(&state.joint_positions - &refs.posture));
        for i in 0..n {
            hessian[(6 + i, 6 + i)] += gains.posture_weight[i];
            gradient[6 + i] -= gains.posture_weight[i] * s_ddot_des[i];
            hessian[(nv + i, nv + i)] += gains.torque_weight[i];
        }
        let share = match gains.wrench_mode {
            WrenchRegularization::NominalShare => model.total_mass() * -GRAVITY.z / layout.contacts.len() as f64,
            WrenchRegularization::Literal => 0.0,
        };
        for k in 0..layout.contacts.len() {
            let o = layout.wrench(k);
            for j in 0..6 {
                hessian[(o + j, o + j)] += gains.wrench_weight[j];
            }
            gradient[o + 2] -= gains.wrench_weight[2] * share;
        }
        for i in 0..nu_len {
            hessian[(i, i)] += gains.regularization;
        }

        // Constraints.
        let nc = layout.contacts.len();
        let rows = TorqueRows {
            dynamics: 0..nv,
            left_foot: nv..nv + 6,
            right_foot: nv + 6..nv + 12,
            com_height: nv + 12..nv + 13,
            zmp: nv + 13..nv + 15,
            wrench: nv + 15..nv + 15 + WRENCH_ROWS * nc,
            torque: nv + 15 + WRENCH_ROWS * nc..nv + 15 + WRENCH_ROWS * nc + n,
        };
        let m = rows.torque.end;
        let mut a = DMatrix::zeros(m, nu_len);
        let mut lower = DVector::zeros(m);
        let mut upper = DVector::zeros(m);

        // M nu_dot - B tau - J_c' f = -h.
        let mass = kin.mass_matrix();
        let h = kin.bias_forces(&GRAVITY);
        a.view_mut((0, 0), (nv, nv)).copy_from(&mass);
        for i in 0..n {
            a[(6 + i, nv + i)] = -1.0;
        }
        for (k, c) in layout.contacts.iter().enumerate() {
            let j = kin.frame_jacobian(foot_frame(model, c.side))?;
            a.view_mut((0, layout.wrench(k)), (nv, 6)).copy_from(&(-j.transpose()));
        }
        lower.rows_mut(0, nv).copy_from(&(-&h));

        for (side, r, range) in [
            (Side::Left, &refs.left, rows.left_foot.clone()),
            (Side::Right, &refs.right, rows.right_foot.clone()),
        ] {
            let frame = foot_frame(model, side);
            let jf = kin.frame_jacobian(frame)?;
            let bias = kin.bias_acceleration(frame)?;
            let acc_des = if r.in_contact {
                Vector6::zeros()
            } else {
                let pose = kin.frame_pose(frame)?;
                let twist = kin.frame_velocity(frame)?;
                let lin = linear_pid(
                    &pose.translation.vector,
                    &r.position,
                    &twist.fixed_rows::<3>(0).into_owned(),
                    &r.velocity,
                    &r.acceleration,
                    &gains.foot_kp,
                    &gains.foot_kd,
                );
                let ang = rotational_pid(
                    pose.rotation.matrix(),
                    &r.orientation.rotation,
                    &twist.fixed_rows::<3>(3).into_owned(),
                    &r.orientation.omega,
                    &r.orientation.omega_dot,
                    gains.foot_pid,
                );
                Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z)
            };
            a.view_mut((range.start, 0), (6, nv)).copy_from(&jf);
            lower.rows_mut(range.start, 6).copy_from(&(acc_des - bias));
        }

        let jc = kin.com_jacobian();
        let com = kin.com_position();
        let com_vel = kin.com_velocity();
        let z_ddot_des = refs.com_height.z - gains.com_kd * (com_vel.z - refs.com_height.y) - gains.com_kp * (com.z - refs.com_height.x);
        let r = rows.com_height.start;
        a.view_mut((r, 0), (1, nv)).copy_from(&jc.row(2));
        lower[r] = z_ddot_des - kin.com_bias_acceleration().z;

        a.view_mut((rows.zmp.start, nv + n), (2, 6 * nc)).copy_from(&zmp_rows);
        upper.rows_mut(0, rows.wrench.start).copy_from(&lower.rows(0, rows.wrench.start));

        for (k, c) in layout.contacts.iter().enumerate() {
            let bf = wrench_feasibility(c.pose.rotation.matrix(), &model.foot, gains.friction);
            let r0 = rows.wrench.start + WRENCH_ROWS * k;
            a.view_mut((r0, layout.wrench(k)), (WRENCH_ROWS, 6)).copy_from(&bf);
            for i in 0..WRENCH_ROWS {
                lower[r0 + i] = f64::NEG_INFINITY;
            }
        }
        for i in 0..n {
            let row = rows.torque.start + i;
            a[(row, nv + i)] = 1.0;
            lower[row] = gains.torque_lower[i];
            upper[row] = gains.torque_upper[i];
        }

        let hessian = (&hessian + hessian.transpose()) * 0.5;
        Ok(TorqueProblem {
            qp: QpProblem {
                hessian,
                gradient,
                constraint_matrix: a,
                lower_bounds: lower,
                upper_bounds: upper,
            },
            layout,
            rows,
            zmp,
            zmp_projected,
        })
    }

    pub fn build_and_solve(
        &mut self,
        model: &RobotModel,
        state: &RobotState,
        refs: &TorqueTaskReferences,
        gains: &TorqueGains,
    ) -> Result<TorqueOutput, WbcError> {
        let problem = Self::build(model, state, refs, gains)?;
        let sol = self.solver.solve(&problem.qp, &QpSettings::default())?;
        if !sol.is_solved() {
            let mut groups: Vec<&str> = sol.active_set.iter().map(|&r| problem.rows.name_of(r)).collect();
            groups.dedup();
            return Err(WbcError::TorqueQpInfeasible {
                status: sol.status,
                certificate: groups.into_iter().map(String::from).collect(),
            });
        }
        Ok(Self::unpack(&problem, &sol.primal, sol.status, sol.iterations, sol.active_set))
    }

    /// Splits a solution vector and evaluates its residuals.
    pub fn unpack(problem: &TorqueProblem, u: &DVector<f64>, status: QpStatus, iterations: usize, active_set: Vec<usize>) -> TorqueOutput {
        let l = &problem.layout;
        let qp = &problem.qp;
        let au = &qp.constraint_matrix * u;
        let eq_end = problem.rows.wrench.start;
        let dynamics = (0..l.nv).map(|i| (au[i] - qp.lower_bounds[i]).abs()).fold(0.0, f64::max);
        let tasks = (l.nv..eq_end).map(|i| (au[i] - qp.lower_bounds[i]).abs()).fold(0.0, f64::max);
        let inequalities = (eq_end..qp.num_constraints())
            .map(|i| (qp.lower_bounds[i] - au[i]).max(au[i] - qp.upper_bounds[i]))
            .fold(0.0, f64::max);
        TorqueOutput {
            nu_dot: u.rows(0, l.nv).into_owned(),
            tau: u.rows(l.tau(), l.n).into_owned(),
            wrenches: l
                .contacts
                .iter()
                .enumerate()
                .map(|(k, c)| (c.side, u.fixed_rows::<6>(l.wrench(k)).into_owned()))
                .collect(),
            status,
            iterations,
            residuals: TorqueResiduals {
                dynamics,
                tasks,
                inequalities,
            },
            zmp: problem.zmp,
            zmp_projected: problem.zmp_projected,
            active_set,
        }
    }
}
