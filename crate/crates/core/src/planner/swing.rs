use nalgebra::Vector3;

use super::footsteps::{wrap_angle, Footstep, Pose2, Side};
use super::PlannerError;

/// Position, yaw and their first two derivatives of one foot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FootSample {
    pub position: Vector3<f64>,
    pub yaw: f64,
    pub velocity: Vector3<f64>,
    pub yaw_rate: f64,
    pub acceleration: Vector3<f64>,
    pub yaw_acceleration: f64,
    pub in_contact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Segment {
    Stance { pose: Pose2, until: f64 },
    Swing { from: Pose2, to: Pose2, t0: f64, t1: f64 },
}

/// Piecewise foot trajectory: constant stance poses joined by swing cubics.
#[derive(Debug, Clone, PartialEq)]
pub struct FootTrajectory {
    pub side: Side,
    pub apex_height: f64,
    segments: Vec<Segment>,
}

/// `3 tau^2 - 2 tau^3` and its derivatives with respect to time.
fn smoothstep(t: f64, t0: f64, t1: f64) -> (f64, f64, f64) {
    let d = t1 - t0;
    let tau = ((t - t0) / d).clamp(0.0, 1.0);
    let s = tau * tau * (3.0 - 2.0 * tau);
    let sd = 6.0 * tau * (1.0 - tau) / d;
    let sdd = (6.0 - 12.0 * tau) / (d * d);
    (s, sd, sdd)
}

impl FootTrajectory {
    pub fn sample(&self, t: f64) -> FootSample {
        let seg = self
            .segments
            .iter()
            .find(|s| match s {
                Segment::Stance { until, .. } => t < *until,
                Segment::Swing { t1, .. } => t < *t1,
            })
            .unwrap_or_else(|| self.segments.last().expect("at least one segment"));
        match *seg {
            Segment::Stance { pose, .. } => FootSample {
                position: Vector3::new(pose.position.x, pose.position.y, 0.0),
                yaw: pose.yaw,
                in_contact: true,
                ..Default::default()
            },
            Segment::Swing { from, to, t0, t1 } => {
                let (s, sd, sdd) = smoothstep(t, t0, t1);
                let dp = to.position - from.position;
                let dyaw = wrap_angle(to.yaw - from.yaw);
                let mid = 0.5 * (t0 + t1);
                let (z, zd, zdd) = if t < mid {
                    let (s, sd, sdd) = smoothstep(t, t0, mid);
                    (self.apex_height * s, self.apex_height * sd, self.apex_height * sdd)
                } else {
                    let (s, sd, sdd) = smoothstep(t, mid, t1);
                    (self.apex_height * (1.0 - s), -self.apex_height * sd, -self.apex_height * sdd)
                };
                let p = from.position + dp * s;
                FootSample {
                    position: Vector3::new(p.x, p.y, z),
                    yaw: from.yaw + dyaw * s,
                    velocity: Vector3::new(dp.x * sd, dp.y * sd, zd),
                    yaw_rate: dyaw * sd,
                    acceleration: Vector3::new(dp.x * sdd, dp.y * sdd, zdd),
                    yaw_acceleration: dyaw * sdd,
                    in_contact: false,
                }
            }
        }
    }

    /// Swing intervals `(liftoff, touchdown)`.
    pub fn swings(&self) -> Vec<(f64, f64)> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Swing { t0, t1, .. } => Some((*t0, *t1)),
                _ => None,
            })
            .collect()
    }
}

/// Builds both foot trajectories. `windows[k]` is the double-support window
/// width centred on the impact of `footsteps[k]` (entry 0 unused). A foot
/// lifts off when the window of the previous impact closes and touches down
/// when the window of its own impact opens.
pub fn swing_trajectory(
    footsteps: &[Footstep],
    windows: &[f64],
    apex_height: f64,
) -> Result<(FootTrajectory, FootTrajectory), PlannerError> {
    if footsteps.len() < 2 || windows.len() != footsteps.len() {
        return Err(PlannerError::InvalidInput("need two footsteps and one window per footstep".into()));
    }
    let mut left = FootTrajectory {
        side: Side::Left,
        apex_height,
        segments: Vec::new(),
    };
    let mut right = FootTrajectory {
        side: Side::Right,
        apex_height,
        segments: Vec::new(),
    };
    let pose = |f: &Footstep| Pose2 {
        position: f.position,
        yaw: f.yaw,
    };
    let mut current = [pose(&footsteps[0]), pose(&footsteps[1])];
    for i in 2..footsteps.len() {
        let f = &footsteps[i];
        let t0 = footsteps[i - 1].impact_time + windows[i - 1] / 2.0;
        let t1 = f.impact_time - windows[i] / 2.0;
        if !(t1 > t0) {
            return Err(PlannerError::InvalidTiming(format!(
                "no single-support time before impact {i} at {:.3} s",
                f.impact_time
            )));
        }
        let k = if f.side == Side::Left { 0 } else { 1 };
        let traj = if k == 0 { &mut left } else { &mut right };
        traj.segments.push(Segment::Stance {
            pose: current[k],
            until: t0,
        });
        traj.segments.push(Segment::Swing {
            from: current[k],
            to: pose(f),
            t0,
            t1,
        });
        current[k] = pose(f);
    }
    left.segments.push(Segment::Stance {
        pose: current[0],
        until: f64::INFINITY,
    });
    right.segments.push(Segment::Stance {
        pose: current[1],
        until: f64::INFINITY,
    });
    Ok((left, right))
}
