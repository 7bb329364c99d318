use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::footsteps::Footstep;
use super::{PendulumConstants, PlannerError};

/// One exponential DCM segment `xi(t) = r + exp((t - t0) / b) (xi_ios - r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcmPiece {
    pub r_zmp: Vector2<f64>,
    pub xi_ios: Vector2<f64>,
    pub duration: f64,
    pub start_time: f64,
}

impl DcmPiece {
    /// DCM and its rate at absolute time `t` (extrapolates outside the piece).
    pub fn eval(&self, t: f64, b: f64) -> (Vector2<f64>, Vector2<f64>) {
        let e = ((t - self.start_time) / b).exp();
        let xi = self.r_zmp + (self.xi_ios - self.r_zmp) * e;
        (xi, (xi - self.r_zmp) / b)
    }

    pub fn xi_eos(&self, b: f64) -> Vector2<f64> {
        self.eval(self.start_time + self.duration, b).0
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalRule {
    /// The last piece ends on the last footstep.
    #[default]
    LastFootstep,
    /// The last piece ends half-way between the last two footsteps.
    FeetMidpoint,
}

/// Backward DCM recursion over the footsteps; piece `i` keeps the ZMP on
/// footstep `i` from its impact until the next one.
pub fn plan_dcm(footsteps: &[Footstep], constants: &PendulumConstants, rule: TerminalRule) -> Result<Vec<DcmPiece>, PlannerError> {
    if footsteps.len() < 2 {
        return Err(PlannerError::InvalidInput("at least two footsteps are required".into()));
    }
    let b = constants.b;
    let last = footsteps.len() - 1;
    let mut xi_eos = match rule {
        TerminalRule::LastFootstep => footsteps[last].position,
        TerminalRule::FeetMidpoint => (footsteps[last].position + footsteps[last - 1].position) / 2.0,
    };
    let mut pieces = Vec::with_capacity(last);
    for i in (0..last).rev() {
        let duration = footsteps[i + 1].impact_time - footsteps[i].impact_time;
        if !(duration > 0.0) {
            return Err(PlannerError::InvalidTiming(format!("piece {i} has non-positive duration {duration}")));
        }
        let r = footsteps[i].position;
        let xi_ios = r + (xi_eos - r) * (-duration / b).exp();
        pieces.push(DcmPiece {
            r_zmp: r,
            xi_ios,
            duration,
            start_time: footsteps[i].impact_time,
        });
        xi_eos = xi_ios;
    }
    pieces.reverse();
    Ok(pieces)
}

/// Double-support window widths: `fraction` of the shorter adjacent piece,
/// one entry per footstep (entry 0 is unused and zero).
pub fn double_support_windows(footsteps: &[Footstep], fraction: f64) -> Vec<f64> {
    let n = footsteps.len();
    let dur = |i: usize| footsteps[i + 1].impact_time - footsteps[i].impact_time;
    (0..n)
        .map(|k| match k {
            0 => 0.0,
            k if k + 1 < n => fraction * dur(k - 1).min(dur(k)),
            k => fraction * dur(k - 1),
        })
        .collect()
}

/// Cubic blend from the robot's initial DCM state into the first piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialBlend {
    pub xi: Vector2<f64>,
    pub xi_rate: Vector2<f64>,
    pub until: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Hermite {
    t0: f64,
    t1: f64,
    x0: Vector2<f64>,
    v0: Vector2<f64>,
    x1: Vector2<f64>,
    v1: Vector2<f64>,
}

impl Hermite {
    fn eval(&self, t: f64) -> (Vector2<f64>, Vector2<f64>) {
        let d = self.t1 - self.t0;
        let s = (t - self.t0) / d;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let x = self.x0 * h00 + self.v0 * (d * h10) + self.x1 * h01 + self.v1 * (d * h11);
        let dh00 = (6.0 * s2 - 6.0 * s) / d;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh01 = (-6.0 * s2 + 6.0 * s) / d;
        let dh11 = 3.0 * s2 - 2.0 * s;
        let v = self.x0 * dh00 + self.v0 * dh10 + self.x1 * dh01 + self.v1 * dh11;
        (x, v)
    }
}

/// Continuous DCM reference: exponential pieces joined by C1 cubics.
#[derive(Debug, Clone, PartialEq)]
pub struct DcmTrajectory {
    pub b: f64,
    pub pieces: Vec<DcmPiece>,
    terminal: Vector2<f64>,
    blends: Vec<Hermite>,
}

impl DcmTrajectory {
    /// Unsmoothed evaluation of the recursion.
    pub fn raw(&self, t: f64) -> (Vector2<f64>, Vector2<f64>) {
        let last = self.pieces.last().expect("non-empty");
        if t >= last.end_time() {
            return (self.terminal, Vector2::zeros());
        }
        let i = self.pieces.partition_point(|p| p.start_time <= t).saturating_sub(1);
        self.pieces[i].eval(t, self.b)
    }

    pub fn eval(&self, t: f64) -> (Vector2<f64>, Vector2<f64>) {
        match self.blends.iter().find(|h| t >= h.t0 && t <= h.t1) {
            Some(h) => h.eval(t),
            None => self.raw(t),
        }
    }

    pub fn terminal(&self) -> Vector2<f64> {
        self.terminal
    }

    pub fn end_time(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.end_time())
    }

    /// `(t, xi, xi_dot)` at `t = k * period` for `k < count`.
    pub fn sample(&self, period: f64, count: usize) -> Vec<(f64, Vector2<f64>, Vector2<f64>)> {
        (0..count)
            .map(|k| {
                let t = k as f64 * period;
                let (x, v) = self.eval(t);
                (t, x, v)
            })
            .collect()
    }
}

/// Joins consecutive pieces with cubics over windows centred on the piece
/// boundaries. `windows[k]` is the width around the start of piece `k`
/// (`k = pieces.len()` is the end of the last piece; entry 0 is ignored).
pub fn smooth_dcm(
    pieces: &[DcmPiece],
    windows: &[f64],
    b: f64,
    initial: Option<InitialBlend>,
) -> Result<DcmTrajectory, PlannerError> {
    let n = pieces.len();
    if n == 0 || windows.len() != n + 1 {
        return Err(PlannerError::InvalidInput(format!(
            "{n} pieces need {} window widths, got {}",
            n + 1,
            windows.len()
        )));
    }
    let terminal = pieces[n - 1].xi_eos(b);
    let mut blends = Vec::new();
    let mut previous_end = match initial {
        Some(init) => {
            if !(init.until > 0.0) {
                return Err(PlannerError::InvalidTiming("initial blend must end after t = 0".into()));
            }
            let (x1, v1) = pieces[0].eval(init.until, b);
            blends.push(Hermite {
                t0: 0.0,
                t1: init.until,
                x0: init.xi,
                v0: init.xi_rate,
                x1,
                v1,
            });
            init.until
        }
        None => f64::NEG_INFINITY,
    };
    for k in 1..=n {
        let w = windows[k];
        if w < 0.0 {
            return Err(PlannerError::InvalidTiming(format!("negative window at boundary {k}")));
        }
        let c = pieces[k - 1].end_time();
        let (t0, t1) = (c - w / 2.0, c + w / 2.0);
        if t0 < previous_end - 1e-12 || t0 < pieces[k - 1].start_time - 1e-12 {
            return Err(PlannerError::InvalidTiming(format!(
                "window at {c:.3} s overlaps the previous window or piece start"
            )));
        }
        if k < n && t1 > pieces[k].end_time() - windows[k + 1] / 2.0 + 1e-12 {
            return Err(PlannerError::InvalidTiming(format!("window at {c:.3} s overlaps the next window")));
        }
        previous_end = t1;
        if w == 0.0 {
            continue;
        }
        let (x0, v0) = pieces[k - 1].eval(t0, b);
        let (x1, v1) = if k < n {
            pieces[k].eval(t1, b)
        } else {
            (terminal, Vector2::zeros())
        };
        blends.push(Hermite { t0, t1, x0, v0, x1, v1 });
    }
    Ok(DcmTrajectory {
        b,
        pieces: pieces.to_vec(),
        terminal,
        blends,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::footsteps::Side;

    fn step(x: f64, t: f64) -> Footstep {
        Footstep {
            side: Side::Left,
            position: Vector2::new(x, 0.0),
            yaw: 0.0,
            impact_time: t,
            step_duration: 0.0,
        }
    }

    #[test]
    fn pieces_chain_and_end_on_last_zmp() {
        let c = PendulumConstants::new(0.53, 9.81);
        let steps = [step(0.0, 0.0), step(0.1, 0.7), step(0.25, 1.5), step(0.3, 2.2)];
        let pieces = plan_dcm(&steps, &c, TerminalRule::LastFootstep).unwrap();
        assert_eq!(pieces.len(), 3);
        for w in pieces.windows(2) {
            assert!((w[0].xi_eos(c.b) - w[1].xi_ios).norm() < 1e-12);
        }
        assert!((pieces[2].xi_eos(c.b) - Vector2::new(0.3, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn coincident_footsteps_are_a_fixed_point() {
        let c = PendulumConstants::new(0.53, 9.81);
        let steps = [step(0.2, 0.0), step(0.2, 0.8), step(0.2, 1.6)];
        for p in plan_dcm(&steps, &c, TerminalRule::LastFootstep).unwrap() {
            assert!((p.xi_ios - p.r_zmp).norm() < 1e-15);
        }
    }

    #[test]
    fn overlapping_windows_are_rejected() {
        let c = PendulumConstants::new(0.53, 9.81);
        let steps = [step(0.0, 0.0), step(0.1, 0.5), step(0.2, 1.0)];
        let pieces = plan_dcm(&steps, &c, TerminalRule::LastFootstep).unwrap();
        assert!(matches!(
            smooth_dcm(&pieces, &[0.0, 0.6, 0.6], c.b, None),
            Err(PlannerError::InvalidTiming(_))
        ));
    }
}
