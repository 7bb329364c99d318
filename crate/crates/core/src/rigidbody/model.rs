use nalgebra::{DVector, Matrix3, Vector3};

use super::math::{orthonormality_error, Pose};
use super::RigidBodyError;

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub name: String,
    /// kg
    pub mass: f64,
    /// CoM offset in the link frame (m).
    pub com: Vector3<f64>,
    /// Rotational inertia about the CoM, link-frame axes (kg m^2).
    pub inertia: Matrix3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub lower: f64,
    pub upper: f64,
    /// rad/s
    pub velocity: f64,
    /// N m
    pub torque: f64,
}

/// Revolute joint. The child frame is `parent * origin * Rot(axis, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub parent: usize,
    pub child: usize,
    pub axis: Vector3<f64>,
    pub origin: Pose,
    pub limits: JointLimits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub name: String,
    pub link: usize,
    pub offset: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootGeometry {
    pub length: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameId(pub usize);

/// Floating-base kinematic tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub links: Vec<Link>,
    /// Topologically ordered: a joint's parent link is the base or the child
    /// of an earlier joint. Joint `k` drives `s[k]`.
    pub joints: Vec<Joint>,
    pub base: usize,
    pub frames: Vec<Frame>,
    pub foot: FootGeometry,
    pub torso_frame: FrameId,
    pub left_foot_frame: FrameId,
    pub right_foot_frame: FrameId,
    /// Joint whose child is this link (`None` for the base).
    pub(crate) parent_joint: Vec<Option<usize>>,
    /// Joints between the base and each link, root first.
    pub(crate) support: Vec<Vec<usize>>,
}

/// Raw description handed to [`RobotModel::new`].
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub name: String,
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
    pub base: usize,
    pub frames: Vec<Frame>,
    pub foot: FootGeometry,
    pub torso: String,
    pub left_foot: String,
    pub right_foot: String,
}

/// Which item of a [`ModelSpec`] failed validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelItem {
    Model,
    Link(usize),
    Joint(usize),
    Frame(usize),
    Foot,
    Roles,
}

impl RobotModel {
    pub fn new(spec: ModelSpec) -> Result<Self, (ModelItem, String)> {
        let ModelSpec {
            name,
            links,
            mut joints,
            base,
            frames,
            foot,
            torso,
            left_foot,
            right_foot,
        } = spec;
        if links.is_empty() || base >= links.len() {
            return Err((ModelItem::Model, "base link missing".into()));
        }
        for (i, link) in links.iter().enumerate() {
            if !(link.mass > 0.0 && link.mass.is_finite()) {
                return Err((ModelItem::Link(i), format!("link '{}' mass must be > 0", link.name)));
            }
            let asym = (link.inertia - link.inertia.transpose()).amax();
            if asym > 1e-12 * link.inertia.amax().max(1.0) {
                return Err((ModelItem::Link(i), format!("link '{}' inertia not symmetric", link.name)));
            }
            let eig = link.inertia.symmetric_eigenvalues();
            if eig.min() <= 0.0 {
                return Err((
                    ModelItem::Link(i),
                    format!("link '{}' inertia not positive definite", link.name),
                ));
            }
        }
        let mut parent_joint: Vec<Option<usize>> = vec![None; links.len()];
        for (k, joint) in joints.iter().enumerate() {
            if joint.parent >= links.len() || joint.child >= links.len() {
                return Err((ModelItem::Joint(k), format!("joint '{}' references a missing link", joint.name)));
            }
            if joint.child == base {
                return Err((ModelItem::Joint(k), format!("joint '{}' has the base as child", joint.name)));
            }
            if parent_joint[joint.child].is_some() {
                return Err((
                    ModelItem::Joint(k),
                    format!("link '{}' has two parent joints (loop)", links[joint.child].name),
                ));
            }
            parent_joint[joint.child] = Some(k);
            if ((joint.axis.norm()) - 1.0).abs() > 1e-9 {
                return Err((ModelItem::Joint(k), format!("joint '{}' axis is not unit norm", joint.name)));
            }
            if orthonormality_error(joint.origin.rotation.matrix()) > 1e-9 {
                return Err((ModelItem::Joint(k), format!("joint '{}' origin rotation not in SO(3)", joint.name)));
            }
            let l = &joint.limits;
            if !(l.lower < l.upper) || !(l.velocity > 0.0) || !(l.torque > 0.0) {
                return Err((ModelItem::Joint(k), format!("joint '{}' has inconsistent limits", joint.name)));
            }
        }
        for (i, pj) in parent_joint.iter().enumerate() {
            if i != base && pj.is_none() {
                return Err((ModelItem::Model, format!("link '{}' is not connected", links[i].name)));
            }
        }

        // Topological order: stable sort by depth.
        let depth = |mut link: usize| -> Option<usize> {
            let mut d = 0;
            while link != base {
                let j = parent_joint[link]?;
                link = joints[j].parent;
                d += 1;
                if d > joints.len() {
                    return None;
                }
            }
            Some(d)
        };
        let mut depths = Vec::with_capacity(joints.len());
        for (k, joint) in joints.iter().enumerate() {
            match depth(joint.child) {
                Some(d) => depths.push((d, k)),
                None => return Err((ModelItem::Joint(k), format!("joint '{}' is part of a loop", joint.name))),
            }
        }
        let mut order: Vec<usize> = (0..joints.len()).collect();
        order.sort_by_key(|&k| depths[k].0);
        if order.iter().enumerate().any(|(i, &k)| i != k) {
            let reordered: Vec<Joint> = order.iter().map(|&k| joints[k].clone()).collect();
            joints = reordered;
            for (k, joint) in joints.iter().enumerate() {
                parent_joint[joint.child] = Some(k);
            }
        }

        let mut support = vec![Vec::new(); links.len()];
        for (k, joint) in joints.iter().enumerate() {
            let mut chain = support[joint.parent].clone();
            chain.push(k);
            support[joint.child] = chain;
        }

        for (i, frame) in frames.iter().enumerate() {
            if frame.link >= links.len() {
                return Err((ModelItem::Frame(i), format!("frame '{}' references a missing link", frame.name)));
            }
        }
        if !(foot.length > 0.0 && foot.width > 0.0) {
            return Err((ModelItem::Foot, "foot length and width must be > 0".into()));
        }
        let find = |n: &str| frames.iter().position(|f| f.name == n).map(FrameId);
        let torso_frame = find(&torso).ok_or((ModelItem::Roles, format!("torso frame '{torso}' not found")))?;
        let left_foot_frame =
            find(&left_foot).ok_or((ModelItem::Roles, format!("left foot frame '{left_foot}' not found")))?;
        let right_foot_frame =
            find(&right_foot).ok_or((ModelItem::Roles, format!("right foot frame '{right_foot}' not found")))?;

        Ok(Self {
            name,
            links,
            joints,
            base,
            frames,
            foot,
            torso_frame,
            left_foot_frame,
            right_foot_frame,
            parent_joint,
            support,
        })
    }

    /// Number of joints `n`; the generalized velocity has `n + 6` entries.
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }

    pub fn frame_id(&self, name: &str) -> Result<FrameId, RigidBodyError> {
        self.frames
            .iter()
            .position(|f| f.name == name)
            .map(FrameId)
            .ok_or_else(|| RigidBodyError::FrameNotFound(name.to_string()))
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub(crate) fn check_frame(&self, frame: FrameId) -> Result<&Frame, RigidBodyError> {
        self.frames
            .get(frame.0)
            .ok_or_else(|| RigidBodyError::FrameNotFound(format!("#{}", frame.0)))
    }

    pub fn lower_limits(&self) -> DVector<f64> {
        DVector::from_iterator(self.dof(), self.joints.iter().map(|j| j.limits.lower))
    }

    pub fn upper_limits(&self) -> DVector<f64> {
        DVector::from_iterator(self.dof(), self.joints.iter().map(|j| j.limits.upper))
    }

    pub fn torque_limits(&self) -> DVector<f64> {
        DVector::from_iterator(self.dof(), self.joints.iter().map(|j| j.limits.torque))
    }
}

/// Configuration `q = (p_B, R_B, s)` and velocity `nu = (v_B, omega_B, s_dot)`.
///
/// `v_B` is the time derivative of the base position and `omega_B` is the
/// inertial-frame angular velocity, `skew(omega_B) = R_B_dot R_B'`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub base_position: Vector3<f64>,
    pub base_rotation: Matrix3<f64>,
    pub joint_positions: DVector<f64>,
    pub base_linear_velocity: Vector3<f64>,
    pub base_angular_velocity: Vector3<f64>,
    pub joint_velocities: DVector<f64>,
}

impl RobotState {
    /// Identity base pose, all joints at zero, at rest.
    pub fn zero(model: &RobotModel) -> Self {
        let n = model.dof();
        Self {
            base_position: Vector3::zeros(),
            base_rotation: Matrix3::identity(),
            joint_positions: DVector::zeros(n),
            base_linear_velocity: Vector3::zeros(),
            base_angular_velocity: Vector3::zeros(),
            joint_velocities: DVector::zeros(n),
        }
    }

    pub fn base_pose(&self) -> Pose {
        super::math::pose(self.base_rotation, self.base_position)
    }

    pub fn set_base_pose(&mut self, pose: &Pose) {
        self.base_position = pose.translation.vector;
        self.base_rotation = *pose.rotation.matrix();
    }

    /// Stacked `nu` (length `n + 6`).
    pub fn velocity(&self) -> DVector<f64> {
        let n = self.joint_velocities.len();
        let mut nu = DVector::zeros(n + 6);
        nu.fixed_rows_mut::<3>(0).copy_from(&self.base_linear_velocity);
        nu.fixed_rows_mut::<3>(3).copy_from(&self.base_angular_velocity);
        nu.rows_mut(6, n).copy_from(&self.joint_velocities);
        nu
    }

    pub fn set_velocity(&mut self, nu: &DVector<f64>) {
        let n = self.joint_velocities.len();
        self.base_linear_velocity = nu.fixed_rows::<3>(0).into_owned();
        self.base_angular_velocity = nu.fixed_rows::<3>(3).into_owned();
        self.joint_velocities = nu.rows(6, n).into_owned();
    }

    pub fn check(&self, model: &RobotModel) -> Result<(), RigidBodyError> {
        let n = model.dof();
        if self.joint_positions.len() != n || self.joint_velocities.len() != n {
            return Err(RigidBodyError::InvalidState(format!(
                "expected {n} joints, got {} positions / {} velocities",
                self.joint_positions.len(),
                self.joint_velocities.len()
            )));
        }
        let err = orthonormality_error(&self.base_rotation);
        if err > 1e-9 {
            return Err(RigidBodyError::InvalidState(format!(
                "base rotation not in SO(3) (error {err:e})"
            )));
        }
        Ok(())
    }
}
