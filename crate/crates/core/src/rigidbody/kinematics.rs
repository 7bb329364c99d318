use nalgebra::{Matrix3, Matrix3xX, Matrix6, Matrix6xX, Vector3, Vector6};

use super::math::{rotation_about, skew, Pose};
use super::model::{FrameId, RobotModel, RobotState};
use super::RigidBodyError;

// Spatial vectors are expressed in the inertial frame about the inertial
// origin. Motion vectors are (angular; linear velocity of the body point
// passing through the origin), force vectors are (moment about the origin;
// force).

pub(crate) fn cross_motion(v: &Vector6<f64>, m: &Vector6<f64>) -> Vector6<f64> {
    let (w, vo) = (v.fixed_rows::<3>(0), v.fixed_rows::<3>(3));
    let (mw, mv) = (m.fixed_rows::<3>(0), m.fixed_rows::<3>(3));
    let a = w.cross(&mw);
    let b = w.cross(&mv) + vo.cross(&mw);
    Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z)
}

pub(crate) fn cross_force(v: &Vector6<f64>, f: &Vector6<f64>) -> Vector6<f64> {
    let (w, vo) = (v.fixed_rows::<3>(0), v.fixed_rows::<3>(3));
    let (n, fl) = (f.fixed_rows::<3>(0), f.fixed_rows::<3>(3));
    let a = w.cross(&n) + vo.cross(&fl);
    let b = w.cross(&fl);
    Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z)
}

fn spatial(angular: &Vector3<f64>, linear: &Vector3<f64>) -> Vector6<f64> {
    Vector6::new(angular.x, angular.y, angular.z, linear.x, linear.y, linear.z)
}

/// Spatial inertia about the inertial origin of a body with mass `m`, CoM at
/// `c` and rotational inertia `ic` about the CoM (inertial axes).
pub(crate) fn spatial_inertia(m: f64, c: &Vector3<f64>, ic: &Matrix3<f64>) -> Matrix6<f64> {
    let cx = skew(c);
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&(ic + m * cx * cx.transpose()));
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(m * cx));
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&(m * cx.transpose()));
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Matrix3::identity() * m));
    out
}

/// Forward kinematics of one configuration, cached for repeated queries.
#[derive(Debug, Clone)]
pub struct Kinematics<'a> {
    pub(crate) model: &'a RobotModel,
    pub(crate) state: &'a RobotState,
    pub(crate) link_pose: Vec<Pose>,
    /// Spatial velocity per link.
    pub(crate) link_velocity: Vec<Vector6<f64>>,
    /// Spatial acceleration per link at zero generalized acceleration.
    pub(crate) link_bias: Vec<Vector6<f64>>,
    /// World motion subspace per joint.
    pub(crate) joint_axis: Vec<Vector6<f64>>,
    /// Columns for `v_B` and `omega_B`.
    pub(crate) base_axes: Matrix6<f64>,
    pub(crate) link_com: Vec<Vector3<f64>>,
    pub(crate) link_inertia: Vec<Matrix6<f64>>,
}

impl<'a> Kinematics<'a> {
    pub fn new(model: &'a RobotModel, state: &'a RobotState) -> Result<Self, RigidBodyError> {
        state.check(model)?;
        let nl = model.links.len();
        let mut link_pose = vec![Pose::identity(); nl];
        let mut link_velocity = vec![Vector6::zeros(); nl];
        let mut link_bias = vec![Vector6::zeros(); nl];
        let mut joint_axis = vec![Vector6::zeros(); model.dof()];

        let p_b = state.base_position;
        let w_b = state.base_angular_velocity;
        let v_b = state.base_linear_velocity;
        let mut base_axes = Matrix6::zeros();
        for k in 0..3 {
            let e = Vector3::ith(k, 1.0);
            base_axes.set_column(k, &spatial(&Vector3::zeros(), &e));
            base_axes.set_column(3 + k, &spatial(&e, &p_b.cross(&e)));
        }
        link_pose[model.base] = state.base_pose();
        link_velocity[model.base] = spatial(&w_b, &(v_b + p_b.cross(&w_b)));
        link_bias[model.base] = spatial(&Vector3::zeros(), &v_b.cross(&w_b));

        for (k, joint) in model.joints.iter().enumerate() {
            let s = state.joint_positions[k];
            let sd = state.joint_velocities[k];
            let local = joint.origin * rotation_about(&joint.axis, s);
            let pose = link_pose[joint.parent] * local;
            let axis = pose.rotation * joint.axis;
            let pos = pose.translation.vector;
            let sj = spatial(&axis, &pos.cross(&axis));
            let v = link_velocity[joint.parent] + sj * sd;
            link_bias[joint.child] = link_bias[joint.parent] + cross_motion(&v, &(sj * sd));
            link_velocity[joint.child] = v;
            link_pose[joint.child] = pose;
            joint_axis[k] = sj;
        }

        let mut link_com = Vec::with_capacity(nl);
        let mut link_inertia = Vec::with_capacity(nl);
        for (link, pose) in model.links.iter().zip(&link_pose) {
            let c = pose * nalgebra::Point3::from(link.com);
            let r = pose.rotation.matrix();
            let ic = r * link.inertia * r.transpose();
            link_inertia.push(spatial_inertia(link.mass, &c.coords, &ic));
            link_com.push(c.coords);
        }

        Ok(Self {
            model,
            state,
            link_pose,
            link_velocity,
            link_bias,
            joint_axis,
            base_axes,
            link_com,
            link_inertia,
        })
    }

    pub fn model(&self) -> &RobotModel {
        self.model
    }

    pub fn link_pose(&self, link: usize) -> &Pose {
        &self.link_pose[link]
    }

    pub fn frame_pose(&self, frame: FrameId) -> Result<Pose, RigidBodyError> {
        let f = self.model.check_frame(frame)?;
        Ok(self.link_pose[f.link] * f.offset)
    }

    /// Frame twist `(v; omega)`.
    pub fn frame_velocity(&self, frame: FrameId) -> Result<Vector6<f64>, RigidBodyError> {
        let f = self.model.check_frame(frame)?;
        let p = (self.link_pose[f.link] * f.offset).translation.vector;
        let v = &self.link_velocity[f.link];
        let w = v.fixed_rows::<3>(0).into_owned();
        let lin = v.fixed_rows::<3>(3) + w.cross(&p);
        Ok(Vector6::new(lin.x, lin.y, lin.z, w.x, w.y, w.z))
    }

    /// 6x(n+6) Jacobian mapping `nu` to the frame twist `(v; omega)`.
    pub fn frame_jacobian(&self, frame: FrameId) -> Result<Matrix6xX<f64>, RigidBodyError> {
        let f = self.model.check_frame(frame)?;
        let p = (self.link_pose[f.link] * f.offset).translation.vector;
        let n = self.model.dof();
        let mut jac = Matrix6xX::zeros(n + 6);
        let to_twist = |s: &Vector6<f64>| -> Vector6<f64> {
            let w = s.fixed_rows::<3>(0).into_owned();
            let lin = s.fixed_rows::<3>(3) + w.cross(&p);
            Vector6::new(lin.x, lin.y, lin.z, w.x, w.y, w.z)
        };
        for c in 0..6 {
            jac.set_column(c, &to_twist(&self.base_axes.column(c).into_owned()));
        }
        for &k in &self.model.support[f.link] {
            jac.set_column(6 + k, &to_twist(&self.joint_axis[k]));
        }
        Ok(jac)
    }

    /// `J_dot nu`: frame acceleration `(a; alpha)` at zero `nu_dot`.
    pub fn bias_acceleration(&self, frame: FrameId) -> Result<Vector6<f64>, RigidBodyError> {
        let f = self.model.check_frame(frame)?;
        let p = (self.link_pose[f.link] * f.offset).translation.vector;
        let v = &self.link_velocity[f.link];
        let a = &self.link_bias[f.link];
        Ok(point_acceleration(v, a, &p))
    }

    pub fn com_position(&self) -> Vector3<f64> {
        let m = self.model.total_mass();
        self.model
            .links
            .iter()
            .zip(&self.link_com)
            .map(|(l, c)| l.mass * c)
            .sum::<Vector3<f64>>()
            / m
    }

    /// Subtree mass and mass-weighted CoM sum, indexed by link.
    fn subtree_moments(&self) -> (Vec<f64>, Vec<Vector3<f64>>) {
        let mut mass: Vec<f64> = self.model.links.iter().map(|l| l.mass).collect();
        let mut first: Vec<Vector3<f64>> = mass.iter().zip(&self.link_com).map(|(m, c)| *m * c).collect();
        for joint in self.model.joints.iter().rev() {
            mass[joint.parent] += mass[joint.child];
            let fc = first[joint.child];
            first[joint.parent] += fc;
        }
        (mass, first)
    }

    pub fn com_jacobian(&self) -> Matrix3xX<f64> {
        let n = self.model.dof();
        let m = self.model.total_mass();
        let (sub_mass, sub_first) = self.subtree_moments();
        let mut jac = Matrix3xX::zeros(n + 6);
        let column = |s: &Vector6<f64>, mass: f64, first: &Vector3<f64>| -> Vector3<f64> {
            let w = s.fixed_rows::<3>(0).into_owned();
            (s.fixed_rows::<3>(3) * mass + w.cross(first)) / m
        };
        let base = self.model.base;
        for c in 0..6 {
            jac.set_column(c, &column(&self.base_axes.column(c).into_owned(), sub_mass[base], &sub_first[base]));
        }
        for (k, joint) in self.model.joints.iter().enumerate() {
            jac.set_column(6 + k, &column(&self.joint_axis[k], sub_mass[joint.child], &sub_first[joint.child]));
        }
        jac
    }

    pub fn com_velocity(&self) -> Vector3<f64> {
        self.com_jacobian() * self.state.velocity()
    }

    /// `J_com_dot nu`.
    pub fn com_bias_acceleration(&self) -> Vector3<f64> {
        let m = self.model.total_mass();
        self.model
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let acc = point_acceleration(&self.link_velocity[i], &self.link_bias[i], &self.link_com[i]);
                l.mass * acc.fixed_rows::<3>(0).into_owned()
            })
            .sum::<Vector3<f64>>()
            / m
    }
}

/// Classical acceleration `(a; alpha)` of the body point at `p`.
pub(crate) fn point_acceleration(v: &Vector6<f64>, a: &Vector6<f64>, p: &Vector3<f64>) -> Vector6<f64> {
    let w = v.fixed_rows::<3>(0).into_owned();
    let vp = v.fixed_rows::<3>(3) + w.cross(p);
    let alpha = a.fixed_rows::<3>(0).into_owned();
    let lin = a.fixed_rows::<3>(3) + alpha.cross(p) + w.cross(&vp);
    Vector6::new(lin.x, lin.y, lin.z, alpha.x, alpha.y, alpha.z)
}
