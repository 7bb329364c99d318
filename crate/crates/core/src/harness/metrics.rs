use std::fmt::Write as _;

use nalgebra::Vector2;

use super::log::TickRow;
use crate::planner::{step_center, ContactPhase, Footstep, Side};

/// Net planar CoM displacement below which velocity and cost of transport are
/// not reported (m).
pub const MIN_DISTANCE: f64 = 0.01;

/// Per-tick tracking errors (m).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorSeries {
    pub dcm: Vec<f64>,
    pub com: Vec<f64>,
    /// Commanded vs. measured ZMP.
    pub zmp: Vec<f64>,
    /// Worse of the two feet, position only.
    pub foot: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub ticks: usize,
    pub series: ErrorSeries,
    pub max_dcm_error: f64,
    pub max_com_error: f64,
    pub max_zmp_error: f64,
    pub max_foot_error: f64,
    /// Positive joint work (J).
    pub energy: f64,
    /// Net planar CoM displacement (m).
    pub distance: f64,
    pub mass: f64,
    /// `E / (m D)` (J/kg/m); `None` when `D` is below [`MIN_DISTANCE`].
    pub cost_of_transport: Option<f64>,
    /// Mean of step length over step duration across realized steps; `None`
    /// when undefined.
    pub walking_velocity: Option<f64>,
    pub steps: Vec<Footstep>,
    pub fell: bool,
    pub fall_time: Option<f64>,
}

fn in_contact(phase: &str, side: Side) -> bool {
    match ContactPhase::parse(phase) {
        Some(p) => match side {
            Side::Left => p.left_in_contact(),
            Side::Right => p.right_in_contact(),
        },
        None => false,
    }
}

/// Footsteps as they happened: the initial feet, then one entry per touchdown
/// (a foot going from swing to contact) with the pose it landed at.
pub fn realized_footsteps(log: &[TickRow]) -> Vec<Footstep> {
    let Some(first) = log.first() else {
        return Vec::new();
    };
    let step = |row: &TickRow, side: Side, duration: f64| {
        let (x, y, yaw) = match side {
            Side::Left => (row.left_x, row.left_y, row.left_yaw),
            Side::Right => (row.right_x, row.right_y, row.right_yaw),
        };
        Footstep {
            side,
            position: Vector2::new(x, y),
            yaw,
            impact_time: row.t,
            step_duration: duration,
        }
    };
    let mut steps = vec![step(first, Side::Left, 0.0), step(first, Side::Right, 0.0)];
    let mut last_touchdown: Option<f64> = None;
    for w in log.windows(2) {
        for side in [Side::Left, Side::Right] {
            if in_contact(&w[1].phase, side) && !in_contact(&w[0].phase, side) {
                let duration = last_touchdown.map_or(0.0, |t0| w[1].t - t0);
                steps.push(step(&w[1], side, duration));
                last_touchdown = Some(w[1].t);
            }
        }
    }
    steps
}

/// Mean of `l / dt` over consecutive touchdowns, `l` being the distance
/// between unicycle centres (`d` the lateral foot offset).
fn mean_step_velocity(steps: &[Footstep], d: f64) -> Option<f64> {
    let touchdowns = steps.get(2..)?;
    let ratios: Vec<f64> = touchdowns
        .windows(2)
        .map(|w| (step_center(&w[1], d) - step_center(&w[0], d)).norm() / (w[1].impact_time - w[0].impact_time))
        .collect();
    (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Metrics of a complete or fall-truncated log. `period` weighs the joint
/// power into energy; `lateral_offset` is the nominal distance between the
/// feet.
pub fn compute_metrics(log: &[TickRow], mass: f64, period: f64, lateral_offset: f64) -> Metrics {
    let norm = |x: f64, y: f64| x.hypot(y);
    let mut series = ErrorSeries::default();
    for r in log {
        series.dcm.push(norm(r.dcm_x - r.dcm_ref_x, r.dcm_y - r.dcm_ref_y));
        series.com.push(norm(r.com_x - r.com_ref_x, r.com_y - r.com_ref_y));
        series.zmp.push(norm(r.zmp_x - r.zmp_cmd_x, r.zmp_y - r.zmp_cmd_y));
        let l = (r.left_x - r.left_ref_x).hypot(r.left_y - r.left_ref_y).hypot(r.left_z - r.left_ref_z);
        let rt = (r.right_x - r.right_ref_x).hypot(r.right_y - r.right_ref_y).hypot(r.right_z - r.right_ref_z);
        series.foot.push(l.max(rt));
    }
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let energy = log.iter().map(|r| r.joint_power.max(0.0)).sum::<f64>() * period;
    let distance = match (log.first(), log.last()) {
        (Some(a), Some(b)) => norm(b.com_x - a.com_x, b.com_y - a.com_y),
        _ => 0.0,
    };
    let moved = distance >= MIN_DISTANCE;
    let steps = realized_footsteps(log);
    let fall_time = log.iter().find(|r| r.flags.split('|').any(|f| f == "fall")).map(|r| r.t);
    Metrics {
        ticks: log.len(),
        max_dcm_error: max(&series.dcm),
        max_com_error: max(&series.com),
        max_zmp_error: max(&series.zmp),
        max_foot_error: max(&series.foot),
        series,
        energy,
        distance,
        mass,
        cost_of_transport: moved.then(|| energy / (mass * distance)),
        walking_velocity: if moved { mean_step_velocity(&steps, lateral_offset) } else { None },
        steps,
        fell: fall_time.is_some(),
        fall_time,
    }
}

/// `key = value` summary; undefined quantities are written as `"undefined"`.
pub fn format_metrics(m: &Metrics) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "\"undefined\"".to_string(), |x| x.to_string());
    let mut out = String::new();
    let mut line = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("string write");
    line("ticks", m.ticks.to_string());
    line("fell", m.fell.to_string());
    line("fall_time", opt(m.fall_time));
    line("max_dcm_error", m.max_dcm_error.to_string());
    line("max_com_error", m.max_com_error.to_string());
    line("max_zmp_error", m.max_zmp_error.to_string());
    line("max_foot_error", m.max_foot_error.to_string());
    line("energy", m.energy.to_string());
    line("distance", m.distance.to_string());
    line("mass", m.mass.to_string());
    line("cost_of_transport", opt(m.cost_of_transport));
    line("walking_velocity", opt(m.walking_velocity));
    line("realized_steps", m.steps.len().saturating_sub(2).to_string());
    out
}
