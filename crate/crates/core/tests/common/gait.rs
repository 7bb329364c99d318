//! Synthetic two-step gait with rigid contacts and its ground-truth base.

use dcmwalk::planner::Side;
use dcmwalk::rigidbody::{RobotModel, RobotState};
use nalgebra::{DVector, Matrix4};

/// Sole pose relative to the base, from the test-side chain product.
pub fn base_h_sole(model: &RobotModel, s: &DVector<f64>, side: Side) -> Matrix4<f64> {
    let mut state = RobotState::zero(model);
    state.joint_positions = s.clone();
    let links = super::chain_oracle(model, &state);
    let frame = match side {
        Side::Left => model.left_foot_frame,
        Side::Right => model.right_foot_frame,
    };
    let f = &model.frames[frame.0];
    links[f.link] * f.offset.to_homogeneous()
}

pub fn inverse(h: &Matrix4<f64>) -> Matrix4<f64> {
    let r = h.fixed_view::<3, 3>(0, 0).transpose();
    let p = h.fixed_view::<3, 1>(0, 3).into_owned();
    super::homogeneous(&r, &(-(r * p)))
}

/// Two steps: double support, left stance while every joint moves, double
/// support, right stance, double support. Ground truth keeps the stance sole
/// fixed in the world; the world is the initial left sole.
pub struct Gait {
    pub s0: DVector<f64>,
    pub d1: DVector<f64>,
    pub d2: DVector<f64>,
}

impl Gait {
    /// Joint positions and rates at time `t`.
    pub fn joints(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        let blend = |t0: f64| {
            let u = ((t - t0) / 1.0).clamp(0.0, 1.0);
            let rate = if (0.0..1.0).contains(&((t - t0) / 1.0)) {
                0.5 * std::f64::consts::PI * (std::f64::consts::PI * u).sin()
            } else {
                0.0
            };
            (0.5 * (1.0 - (std::f64::consts::PI * u).cos()), rate)
        };
        let (a, ad) = blend(0.3);
        let (b, bd) = blend(1.6);
        (&self.s0 + &self.d1 * a + &self.d2 * b, &self.d1 * ad + &self.d2 * bd)
    }

    pub fn forces(t: f64) -> [f64; 2] {
        match t {
            t if t < 0.3 => [160.0, 160.0],
            t if t < 1.3 => [330.0, 0.0],
            t if t < 1.6 => [160.0, 160.0],
            t if t < 2.6 => [0.0, 330.0],
            _ => [160.0, 160.0],
        }
    }

    pub fn true_base(&self, model: &RobotModel, t: f64) -> Matrix4<f64> {
        let (s, _) = self.joints(t);
        if t < 1.3 {
            return inverse(&base_h_sole(model, &s, Side::Left));
        }
        let (s1, _) = self.joints(1.3);
        let world_right = inverse(&base_h_sole(model, &s1, Side::Left)) * base_h_sole(model, &s1, Side::Right);
        world_right * inverse(&base_h_sole(model, &s, Side::Right))
    }
}
