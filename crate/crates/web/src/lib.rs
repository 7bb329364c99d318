//! Browser bindings: plan a walk, push the robot under either DCM controller,
//! and check a pair of DCM gains for closed-loop stability.

use dcmwalk::control::DcmGains;
use dcmwalk::harness::{run_experiment, ExperimentConfig, Impulse, ImpulseTarget, Outcome, PlantKind};
use dcmwalk::planner::{plan_walk, Pose2, Side, WalkSettings};
use dcmwalk::rigidbody::mini_biped;
use nalgebra::{Matrix2, Matrix4, Vector2};
use wasm_bindgen::prelude::*;

/// CoM height of the demo pendulum (m).
const COM_HEIGHT: f64 = 0.53;
const PERIOD: f64 = 0.01;
/// Preview used by the MPC in the browser; shorter than the harness default
/// to keep a push interactive.
const DEMO_HORIZON: usize = 80;

fn flat(points: impl Iterator<Item = Vector2<f64>>) -> Vec<f64> {
    points.flat_map(|p| [p.x, p.y]).collect()
}

#[wasm_bindgen]
pub struct Plan {
    times: Vec<f64>,
    dcm: Vec<f64>,
    zmp: Vec<f64>,
    com: Vec<f64>,
    footsteps: Vec<f64>,
}

#[wasm_bindgen]
impl Plan {
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }
    /// Interleaved `x, y` per sample.
    pub fn dcm(&self) -> Vec<f64> {
        self.dcm.clone()
    }
    pub fn zmp(&self) -> Vec<f64> {
        self.zmp.clone()
    }
    pub fn com(&self) -> Vec<f64> {
        self.com.clone()
    }
    /// `x, y, yaw, side` per footstep, side 0 = left, 1 = right.
    pub fn footsteps(&self) -> Vec<f64> {
        self.footsteps.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn foot_length(&self) -> f64 {
        mini_biped().foot.length
    }
    #[wasm_bindgen(getter)]
    pub fn foot_width(&self) -> f64 {
        mini_biped().foot.width
    }
}

/// Plans footsteps and DCM/ZMP/CoM references for a unicycle command.
#[wasm_bindgen]
pub fn plan(speed: f64, turn_rate: f64, duration: f64) -> Result<Plan, String> {
    let settings = WalkSettings {
        speed,
        turn_rate,
        ..WalkSettings::default()
    };
    let d = settings.bounds.lateral_offset / 2.0;
    let constants = dcmwalk::planner::PendulumConstants::new(COM_HEIGHT, 9.81);
    let p = plan_walk(
        &settings,
        constants,
        Pose2::new(0.0, d, 0.0),
        Pose2::new(0.0, -d, 0.0),
        Vector2::zeros(),
        PERIOD,
        duration,
    )
    .map_err(|e| e.to_string())?;
    let s = &p.refs.samples;
    Ok(Plan {
        times: s.iter().map(|r| r.t).collect(),
        dcm: flat(s.iter().map(|r| r.dcm)),
        zmp: flat(s.iter().map(|r| r.zmp)),
        com: flat(s.iter().map(|r| r.com)),
        footsteps: p
            .footsteps
            .iter()
            .flat_map(|f| [f.position.x, f.position.y, f.yaw, if f.side == Side::Left { 0.0 } else { 1.0 }])
            .collect(),
    })
}

#[wasm_bindgen]
pub struct PushResult {
    dcm: Vec<f64>,
    dcm_ref: Vec<f64>,
    zmp_cmd: Vec<f64>,
    outside: usize,
    fall_time: Option<f64>,
    worst_margin: f64,
}

#[wasm_bindgen]
impl PushResult {
    pub fn dcm(&self) -> Vec<f64> {
        self.dcm.clone()
    }
    pub fn dcm_ref(&self) -> Vec<f64> {
        self.dcm_ref.clone()
    }
    pub fn zmp_cmd(&self) -> Vec<f64> {
        self.zmp_cmd.clone()
    }
    /// Ticks whose commanded ZMP left the support polygon.
    #[wasm_bindgen(getter)]
    pub fn outside(&self) -> usize {
        self.outside
    }
    #[wasm_bindgen(getter)]
    pub fn fell(&self) -> bool {
        self.fall_time.is_some()
    }
    /// Fall time (s), or -1 without a fall.
    #[wasm_bindgen(getter)]
    pub fn fall_time(&self) -> f64 {
        self.fall_time.unwrap_or(-1.0)
    }
    /// Largest signed distance of the commanded ZMP to the polygon (m).
    #[wasm_bindgen(getter)]
    pub fn worst_margin(&self) -> f64 {
        self.worst_margin
    }
}

/// Walks 5 s on the pendulum plant and pushes the DCM by `(dx, dy)` at
/// `time`; `mpc` picks the receding-horizon controller over the
/// instantaneous law.
#[wasm_bindgen]
pub fn push(mpc: bool, dx: f64, dy: f64, time: f64, speed: f64) -> Result<PushResult, String> {
    let mut config = ExperimentConfig {
        plant: PlantKind::Lipm,
        duration: 5.0,
        ..ExperimentConfig::default()
    };
    config.architecture = if mpc { "mpcxpos" } else { "instxpos" }.parse()?;
    config.walk.speed = speed;
    config.mpc.horizon = DEMO_HORIZON;
    config.mpc.polygon_margin = 0.02;
    config.disturbance.impulses = vec![Impulse {
        time,
        target: ImpulseTarget::Dcm,
        offset: [dx, dy],
    }];
    let run = run_experiment(&config).map_err(|e| e.to_string())?;
    let log = &run.log;
    Ok(PushResult {
        dcm: log.iter().flat_map(|r| [r.dcm_x, r.dcm_y]).collect(),
        dcm_ref: log.iter().flat_map(|r| [r.dcm_ref_x, r.dcm_ref_y]).collect(),
        zmp_cmd: log.iter().flat_map(|r| [r.zmp_cmd_x, r.zmp_cmd_y]).collect(),
        outside: log.iter().filter(|r| r.zmp_cmd_margin > 1e-6).count(),
        fall_time: match run.outcome {
            Outcome::Fell { time } => Some(time),
            _ => None,
        },
        worst_margin: log.iter().map(|r| r.zmp_cmd_margin).fold(f64::NEG_INFINITY, f64::max),
    })
}

#[wasm_bindgen]
pub struct GainReport {
    accepted: bool,
    message: String,
    eigenvalues: Vec<f64>,
}

#[wasm_bindgen]
impl GainReport {
    /// Whether the gains satisfy the stability condition.
    #[wasm_bindgen(getter)]
    pub fn accepted(&self) -> bool {
        self.accepted
    }
    #[wasm_bindgen(getter)]
    pub fn message(&self) -> String {
        self.message.clone()
    }
    /// Interleaved `re, im` of the error-system eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn max_real(&self) -> f64 {
        self.eigenvalues.iter().step_by(2).copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Eigenvalues of the closed-loop DCM error system for diagonal gains. The
/// matrix is built even for gains the controller would reject.
#[wasm_bindgen]
pub fn gain_stability(kp_x: f64, kp_y: f64, ki_x: f64, ki_y: f64) -> GainReport {
    let kp = Matrix2::new(kp_x, 0.0, 0.0, kp_y);
    let ki = Matrix2::new(ki_x, 0.0, 0.0, ki_y);
    let b = (COM_HEIGHT / 9.81).sqrt();
    let (accepted, message) = match DcmGains::new(kp, ki, Vector2::repeat(0.05)) {
        Ok(_) => (true, "accepted".to_string()),
        Err(e) => (false, e.to_string()),
    };
    // d/dt [integral; error] = [0, I; -K_i / b, (I - K_p) / b] [integral; error]
    let mut a = Matrix4::zeros();
    a.fixed_view_mut::<2, 2>(0, 2).copy_from(&Matrix2::identity());
    a.fixed_view_mut::<2, 2>(2, 0).copy_from(&(-ki / b));
    a.fixed_view_mut::<2, 2>(2, 2).copy_from(&((Matrix2::identity() - kp) / b));
    let eigenvalues = a
        .complex_eigenvalues()
        .iter()
        .flat_map(|c| [c.re, c.im])
        .collect();
    GainReport {
        accepted,
        message,
        eigenvalues,
    }
}
