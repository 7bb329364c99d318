use nalgebra::{DVector, Vector6};

use super::schmitt::{ContactState, SchmittSettings, SchmittTrigger};
use super::EstimationError;
use crate::planner::Side;
use crate::rigidbody::math::Pose;
use crate::rigidbody::{Kinematics, RobotModel, RobotState};
use crate::wbc::foot_frame;

const MAX_CONDITION: f64 = 1e12;

fn index(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdometryState {
    /// Foot assumed not to move.
    pub fixed: Side,
    pub world_h_fixed: Pose,
    /// Left, right.
    pub contacts: [ContactState; 2],
    pub triggers: [SchmittTrigger; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOutput {
    pub time: f64,
    pub fixed: Side,
    /// The fixed frame changed on this update.
    pub switched: bool,
    pub contacts: [ContactState; 2],
    pub base_pose: Pose,
    /// `(v_B; omega_B)` in the inertial frame.
    pub base_velocity: Vector6<f64>,
}

/// Pose of a foot sole relative to the base for joint positions `s`.
fn base_h_foot(model: &RobotModel, s: &DVector<f64>, side: Side) -> Result<Pose, EstimationError> {
    let mut state = RobotState::zero(model);
    state.joint_positions = s.clone();
    Ok(Kinematics::new(model, &state)?.frame_pose(foot_frame(model, side))?)
}

/// Legged odometry: the base pose is composed from the pose of a fixed foot,
/// which is handed over to the other foot on contact switches.
#[derive(Debug, Clone, PartialEq)]
pub struct LeggedOdometry {
    settings: SchmittSettings,
    state: OdometryState,
}

impl LeggedOdometry {
    /// Both feet start in contact; the inertial frame coincides with the
    /// initial left sole.
    pub fn new(settings: SchmittSettings) -> Result<Self, EstimationError> {
        Self::anchored(settings, Side::Left, Pose::identity())
    }

    /// Both feet start in contact with the `fixed` sole at `world_h_fixed`.
    pub fn anchored(settings: SchmittSettings, fixed: Side, world_h_fixed: Pose) -> Result<Self, EstimationError> {
        settings.validate()?;
        Ok(Self {
            settings,
            state: OdometryState {
                fixed,
                world_h_fixed,
                contacts: [ContactState::Active; 2],
                triggers: [SchmittTrigger::new(ContactState::Active); 2],
            },
        })
    }

    pub fn state(&self) -> &OdometryState {
        &self.state
    }

    pub fn settings(&self) -> &SchmittSettings {
        &self.settings
    }

    /// `world_H_base = world_H_fixed * fixed_H_base(s)`.
    pub fn base_pose(&self, model: &RobotModel, s: &DVector<f64>) -> Result<Pose, EstimationError> {
        Ok(self.state.world_h_fixed * base_h_foot(model, s, self.state.fixed)?.inverse())
    }

    /// Feeds one sample of the sole normal forces `[left, right]` and the
    /// joint state, switches the fixed frame if needed and returns the base
    /// estimate.
    ///
    /// The fixed frame moves to the other foot when that foot touches down,
    /// or when the fixed foot lifts off while the other is in contact. With
    /// both feet in contact it is kept.
    pub fn update(
        &mut self,
        model: &RobotModel,
        s: &DVector<f64>,
        s_dot: &DVector<f64>,
        forces: [f64; 2],
        time: f64,
    ) -> Result<EstimatorOutput, EstimationError> {
        let previous = self.state.contacts;
        let mut contacts = previous;
        for side in [Side::Left, Side::Right] {
            let k = index(side);
            contacts[k] = self.state.triggers[k].update(forces[k], time, &self.settings)?;
        }
        self.state.contacts = contacts;
        let fixed = self.state.fixed;
        let other = fixed.other();
        let touchdown = previous[index(other)] == ContactState::Inactive && contacts[index(other)] == ContactState::Active;
        let fixed_lost = contacts[index(fixed)] == ContactState::Inactive;
        let switched = if touchdown || (fixed_lost && contacts[index(other)] == ContactState::Active) {
            self.switch_to(model, s, other)?;
            true
        } else if fixed_lost {
            return Err(EstimationError::NoFixedFrame);
        } else {
            false
        };
        let base_pose = self.base_pose(model, s)?;
        let velocity = base_velocity(model, &base_pose, s, s_dot, self.state.fixed)?;
        Ok(EstimatorOutput {
            time,
            fixed: self.state.fixed,
            switched,
            contacts,
            base_pose,
            base_velocity: velocity,
        })
    }

    /// `world_H_new = world_H_old * old_H_new(s)`.
    fn switch_to(&mut self, model: &RobotModel, s: &DVector<f64>, side: Side) -> Result<(), EstimationError> {
        let old = base_h_foot(model, s, self.state.fixed)?;
        let new = base_h_foot(model, s, side)?;
        self.state.world_h_fixed = self.state.world_h_fixed * old.inverse() * new;
        self.state.fixed = side;
        Ok(())
    }
}

/// Base twist that keeps the fixed sole still: `J_b v_B + J_s s_dot = 0`.
pub fn base_velocity(
    model: &RobotModel,
    base_pose: &Pose,
    s: &DVector<f64>,
    s_dot: &DVector<f64>,
    fixed: Side,
) -> Result<Vector6<f64>, EstimationError> {
    let mut state = RobotState::zero(model);
    state.set_base_pose(base_pose);
    state.joint_positions = s.clone();
    state.joint_velocities = s_dot.clone();
    let j = Kinematics::new(model, &state)?.frame_jacobian(foot_frame(model, fixed))?;
    let jb = j.fixed_columns::<6>(0).into_owned();
    let sv = jb.singular_values();
    let condition = sv.max() / sv.min();
    if !(condition <= MAX_CONDITION) {
        return Err(EstimationError::NumericallySingular { condition });
    }
    let rhs = -(j.columns(6, model.dof()) * s_dot);
    let rhs = Vector6::from_column_slice(rhs.as_slice());
    jb.lu().solve(&rhs).ok_or(EstimationError::NumericallySingular { condition: f64::INFINITY })
}
