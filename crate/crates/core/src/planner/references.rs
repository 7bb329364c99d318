use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub use super::swing::FootSample;

use super::dcm::{double_support_windows, plan_dcm, smooth_dcm, DcmPiece, DcmTrajectory, InitialBlend, TerminalRule};
use super::footsteps::{plan_footsteps, Footstep, FootstepBounds, Pose2, UnicycleCommand};
use super::swing::{swing_trajectory, FootTrajectory};
use super::{PendulumConstants, PlannerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContactPhase {
    LeftSS,
    RightSS,
    DS,
}

impl ContactPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            ContactPhase::LeftSS => "LeftSS",
            ContactPhase::RightSS => "RightSS",
            ContactPhase::DS => "DS",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "LeftSS" => Some(ContactPhase::LeftSS),
            "RightSS" => Some(ContactPhase::RightSS),
            "DS" => Some(ContactPhase::DS),
            _ => None,
        }
    }

    pub fn from_contacts(left: bool, right: bool) -> Self {
        match (left, right) {
            (true, false) => ContactPhase::LeftSS,
            (false, true) => ContactPhase::RightSS,
            _ => ContactPhase::DS,
        }
    }

    pub fn left_in_contact(self) -> bool {
        self != ContactPhase::RightSS
    }

    pub fn right_in_contact(self) -> bool {
        self != ContactPhase::LeftSS
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefSample {
    pub t: f64,
    pub dcm: Vector2<f64>,
    pub dcm_rate: Vector2<f64>,
    pub zmp: Vector2<f64>,
    pub com: Vector2<f64>,
    pub com_velocity: Vector2<f64>,
    pub left: FootSample,
    pub right: FootSample,
    pub phase: ContactPhase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectories {
    pub period: f64,
    /// Constant CoM height above the ground.
    pub com_height: f64,
    pub samples: Vec<RefSample>,
}

/// Derives `r_zmp = xi - b xi_dot` and integrates `p_dot = (xi - p) / b` with
/// classical RK4 at `period`, starting from `com0`. Returns
/// `(zmp, com, com_velocity)` per sample `t = k * period`, `k < count`.
pub fn derive_zmp_com(
    dcm: &DcmTrajectory,
    constants: &PendulumConstants,
    com0: Vector2<f64>,
    period: f64,
    count: usize,
) -> Vec<(Vector2<f64>, Vector2<f64>, Vector2<f64>)> {
    let b = constants.b;
    let f = |t: f64, p: &Vector2<f64>| (dcm.eval(t).0 - p) / b;
    let mut p = com0;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let t = k as f64 * period;
        let (xi, xid) = dcm.eval(t);
        out.push((xi - xid * b, p, (xi - p) / b));
        let k1 = f(t, &p);
        let k2 = f(t + period / 2.0, &(p + k1 * (period / 2.0)));
        let k3 = f(t + period / 2.0, &(p + k2 * (period / 2.0)));
        let k4 = f(t + period, &(p + k3 * period));
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (period / 6.0);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkSettings {
    /// Forward speed (m/s).
    pub speed: f64,
    /// Turning rate (rad/s).
    pub turn_rate: f64,
    /// Time of the first impact (the initial right stance); the unicycle
    /// starts moving then.
    pub first_impact: f64,
    /// Double-support window as a fraction of the shorter adjacent step.
    pub ds_fraction: f64,
    pub apex_height: f64,
    pub terminal: TerminalRule,
    /// Blend from the initial CoM at rest into the first DCM piece.
    pub initial_blend: bool,
    pub bounds: FootstepBounds,
}

impl Default for WalkSettings {
    fn default() -> Self {
        Self {
            speed: 0.15,
            turn_rate: 0.0,
            first_impact: 1.0,
            ds_fraction: 0.2,
            apex_height: 0.03,
            terminal: TerminalRule::LastFootstep,
            initial_blend: true,
            bounds: FootstepBounds::default(),
        }
    }
}

/// Everything the controllers need from the planning layer.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPlan {
    pub constants: PendulumConstants,
    pub footsteps: Vec<Footstep>,
    pub pieces: Vec<DcmPiece>,
    pub windows: Vec<f64>,
    pub dcm: DcmTrajectory,
    pub left: FootTrajectory,
    pub right: FootTrajectory,
    pub refs: ReferenceTrajectories,
}

impl WalkPlan {
    /// DCM reference at an arbitrary time (holds the terminal value).
    pub fn dcm_at(&self, t: f64) -> (Vector2<f64>, Vector2<f64>) {
        self.dcm.eval(t)
    }

    /// Contact phase at an arbitrary time.
    pub fn phase_at(&self, t: f64) -> ContactPhase {
        ContactPhase::from_contacts(self.left.sample(t).in_contact, self.right.sample(t).in_contact)
    }

    pub fn com_position(&self, k: usize) -> Vector3<f64> {
        let s = &self.refs.samples[k.min(self.refs.samples.len() - 1)];
        Vector3::new(s.com.x, s.com.y, self.refs.com_height)
    }
}

/// Full planning pipeline over `duration` seconds sampled at `period`.
/// `com0` is the initial horizontal CoM position (robot at rest).
pub fn plan_walk(
    settings: &WalkSettings,
    constants: PendulumConstants,
    left: Pose2,
    right: Pose2,
    com0: Vector2<f64>,
    period: f64,
    duration: f64,
) -> Result<WalkPlan, PlannerError> {
    if !(period > 0.0 && duration > 0.0) {
        return Err(PlannerError::InvalidInput("period and duration must be > 0".into()));
    }
    if !(0.0..1.0).contains(&settings.ds_fraction) {
        return Err(PlannerError::InvalidInput("ds_fraction must be in [0, 1)".into()));
    }
    let cmd = UnicycleCommand {
        speed: settings.speed,
        turn_rate: settings.turn_rate,
    };
    let footsteps = plan_footsteps(left, right, cmd, settings.first_impact, duration, &settings.bounds)?;
    let pieces = plan_dcm(&footsteps, &constants, settings.terminal)?;
    let windows = double_support_windows(&footsteps, settings.ds_fraction);
    let initial = settings.initial_blend.then(|| InitialBlend {
        xi: com0,
        xi_rate: Vector2::zeros(),
        until: settings.first_impact - windows[1] / 2.0,
    });
    let dcm = smooth_dcm(&pieces, &windows, constants.b, initial)?;
    let (left_traj, right_traj) = swing_trajectory(&footsteps, &windows, settings.apex_height)?;

    let count = (duration / period).round() as usize;
    let zmp_com = derive_zmp_com(&dcm, &constants, com0, period, count);
    let samples = (0..count)
        .map(|k| {
            let t = k as f64 * period;
            let (xi, xid) = dcm.eval(t);
            let (zmp, com, com_velocity) = zmp_com[k];
            let l = left_traj.sample(t);
            let r = right_traj.sample(t);
            RefSample {
                t,
                dcm: xi,
                dcm_rate: xid,
                zmp,
                com,
                com_velocity,
                left: l,
                right: r,
                phase: ContactPhase::from_contacts(l.in_contact, r.in_contact),
            }
        })
        .collect();
    Ok(WalkPlan {
        constants,
        footsteps,
        pieces,
        windows,
        dcm,
        left: left_traj,
        right: right_traj,
        refs: ReferenceTrajectories {
            period,
            com_height: constants.z0,
            samples,
        },
    })
}
