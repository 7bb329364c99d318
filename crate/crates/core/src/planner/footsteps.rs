use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::PlannerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// +1 for left, -1 for right (lateral offset sign).
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Planar pose on the ground.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose2 {
    pub position: Vector2<f64>,
    pub yaw: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            position: Vector2::new(x, y),
            yaw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footstep {
    pub side: Side,
    pub position: Vector2<f64>,
    pub yaw: f64,
    /// Centre of the double-support transition onto this foot (s).
    pub impact_time: f64,
    /// Time since the previous impact; zero for the initial left stance.
    pub step_duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FootstepBounds {
    pub t_min: f64,
    pub t_max: f64,
    pub l_min: f64,
    pub l_max: f64,
    /// Distance between the feet centres across the walking direction.
    pub lateral_offset: f64,
    /// Spacing of the candidate impact-time grid (s).
    pub time_grid: f64,
    /// Unicycle integration step (s).
    pub unicycle_dt: f64,
}

impl Default for FootstepBounds {
    fn default() -> Self {
        Self {
            t_min: 0.5,
            t_max: 1.2,
            l_min: 0.0,
            l_max: 0.28,
            lateral_offset: 0.16,
            time_grid: 0.1,
            unicycle_dt: 1e-3,
        }
    }
}

impl FootstepBounds {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let ok = self.t_min > 0.0
            && self.t_min < self.t_max
            && self.l_min >= 0.0
            && self.l_min < self.l_max
            && self.lateral_offset >= 0.0
            && self.time_grid > 0.0
            && self.unicycle_dt > 0.0;
        if ok {
            Ok(())
        } else {
            Err(PlannerError::InvalidInput(format!("inconsistent footstep bounds {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnicycleCommand {
    /// Forward speed (m/s).
    pub speed: f64,
    /// Turning rate (rad/s).
    pub turn_rate: f64,
}

/// Unicycle state sampled on a fixed grid, starting from `t0`.
struct Unicycle {
    t0: f64,
    dt: f64,
    states: Vec<(Vector2<f64>, f64)>,
}

impl Unicycle {
    fn integrate(start: Pose2, cmd: UnicycleCommand, t0: f64, t_end: f64, dt: f64) -> Self {
        let steps = (((t_end - t0) / dt).ceil().max(0.0) as usize) + 1;
        let mut states = Vec::with_capacity(steps + 1);
        let (mut p, mut th) = (start.position, start.yaw);
        states.push((p, th));
        for _ in 0..steps {
            // Midpoint heading keeps arcs accurate at 1 ms.
            let mid = th + 0.5 * cmd.turn_rate * dt;
            p += Vector2::new(mid.cos(), mid.sin()) * (cmd.speed * dt);
            th += cmd.turn_rate * dt;
            states.push((p, th));
        }
        Self { t0, dt, states }
    }

    fn at(&self, t: f64) -> (Vector2<f64>, f64) {
        let k = ((t - self.t0) / self.dt).round().max(0.0) as usize;
        self.states[k.min(self.states.len() - 1)]
    }
}

fn foot_on(center: Vector2<f64>, yaw: f64, side: Side, d: f64) -> Vector2<f64> {
    center + Vector2::new(-yaw.sin(), yaw.cos()) * (side.sign() * d / 2.0)
}

/// Plans alternating footsteps by sampling a unicycle that starts at the
/// mid-point of the feet and moves from the first impact on.
///
/// The first two entries are the current left and right stance poses with
/// impacts at `0` and `first_impact`. Each later impact time is the first
/// point of the grid `t_prev + t_min + k * time_grid` (up to `t_max`) at which
/// the unicycle has travelled a step length in `[l_min, l_max]`. Steps are
/// added while the impact time stays within `horizon`.
pub fn plan_footsteps(
    left: Pose2,
    right: Pose2,
    cmd: UnicycleCommand,
    first_impact: f64,
    horizon: f64,
    bounds: &FootstepBounds,
) -> Result<Vec<Footstep>, PlannerError> {
    bounds.validate()?;
    if !(cmd.speed >= 0.0) || !cmd.turn_rate.is_finite() {
        return Err(PlannerError::InvalidInput(format!("invalid command {cmd:?}")));
    }
    if !(first_impact > 0.0) {
        return Err(PlannerError::InvalidInput("first impact time must be > 0".into()));
    }
    let mut steps = vec![
        Footstep {
            side: Side::Left,
            position: left.position,
            yaw: left.yaw,
            impact_time: 0.0,
            step_duration: 0.0,
        },
        Footstep {
            side: Side::Right,
            position: right.position,
            yaw: right.yaw,
            impact_time: first_impact,
            step_duration: first_impact,
        },
    ];
    if horizon < first_impact {
        return Ok(steps);
    }

    let mean_yaw = left.yaw + 0.5 * wrap_angle(right.yaw - left.yaw);
    let start = Pose2 {
        position: (left.position + right.position) / 2.0,
        yaw: mean_yaw,
    };
    let uni = Unicycle::integrate(start, cmd, first_impact, horizon + bounds.t_max, bounds.unicycle_dt);
    let candidates = ((bounds.t_max - bounds.t_min) / bounds.time_grid + 1e-9).floor() as usize;

    let mut t_prev = first_impact;
    let mut side = Side::Left;
    loop {
        let (c_prev, _) = uni.at(t_prev);
        let mut chosen = None;
        for k in 0..=candidates {
            let dur = bounds.t_min + k as f64 * bounds.time_grid;
            let (c, _) = uni.at(t_prev + dur);
            let len = (c - c_prev).norm();
            if len > bounds.l_max + 1e-12 {
                break;
            }
            if len >= bounds.l_min - 1e-12 {
                chosen = Some(dur);
                break;
            }
        }
        let Some(dur) = chosen else {
            return Err(PlannerError::PlanInfeasible(format!(
                "speed {} m/s cannot be met with step length in [{}, {}] m and duration in [{}, {}] s",
                cmd.speed, bounds.l_min, bounds.l_max, bounds.t_min, bounds.t_max
            )));
        };
        let t = t_prev + dur;
        if t > horizon + 1e-9 {
            break;
        }
        let (c, yaw) = uni.at(t);
        steps.push(Footstep {
            side,
            position: foot_on(c, yaw, side, bounds.lateral_offset),
            yaw,
            impact_time: t,
            step_duration: dur,
        });
        side = side.other();
        t_prev = t;
    }
    Ok(steps)
}

/// Wraps to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut x = a % two_pi;
    if x <= -std::f64::consts::PI {
        x += two_pi;
    } else if x > std::f64::consts::PI {
        x -= two_pi;
    }
    x
}

/// Unicycle centre of a footstep: the foot position with its lateral offset
/// `d / 2` removed.
pub fn step_center(step: &Footstep, d: f64) -> Vector2<f64> {
    foot_on(step.position, step.yaw, step.side.other(), d)
}
