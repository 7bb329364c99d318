use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{ExperimentConfig, ImpulseTarget, PlantKind, Simplified, WholeBody};
use super::lipm::LipmDiscretization;
use super::log::TickRow;
use super::metrics::{compute_metrics, Metrics};
use super::HarnessError;
use crate::control::{instantaneous_dcm, support_polygon, zmp_com_control, ConvexPolygon, DcmGains, DcmIntegral, MpcDcm, ZmpComGains};
use crate::estimation::{base_velocity, LeggedOdometry};
use crate::planner::{plan_walk, wrap_angle, ContactPhase, FootSample, PendulumConstants, Pose2, RefSample, Side, WalkPlan};
use crate::rigidbody::math::{rot_z, yaw_of, Pose};
use crate::rigidbody::{load_model, mini_biped, standing_state, Kinematics, RobotModel, RobotState, GRAVITY};
use crate::wbc::{
    foot_frame, integrate_joint_positions, FootMotionReference, FootReference, KinematicGains, KinematicIntegrals, KinematicTaskReferences,
    KinematicWbc, RotationReference, TorqueGains, TorqueOutput, TorqueTaskReferences, TorqueWbc, WbcError,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    /// DCM error exceeded the fall threshold at `time`; the log ends there.
    Fell { time: f64 },
    /// A plant-side error stopped the run; the log ends at `time`.
    Aborted { time: f64, reason: String },
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub plan: WalkPlan,
    pub log: Vec<TickRow>,
    pub outcome: Outcome,
    pub mass: f64,
}

impl RunOutput {
    pub fn metrics(&self) -> Metrics {
        compute_metrics(&self.log, self.mass, self.config.period, self.config.walk.bounds.lateral_offset)
    }
}

/// What the torque controller saw and returned on one tick of a
/// torque-mode run.
pub struct TorqueTick<'a> {
    pub tick: usize,
    pub time: f64,
    pub model: &'a RobotModel,
    pub state: &'a RobotState,
    pub refs: &'a TorqueTaskReferences,
    pub gains: &'a TorqueGains,
    pub result: &'a Result<TorqueOutput, WbcError>,
}

/// Bent-knee stance used as posture reference and initial configuration.
/// Joints not named like the built-in biped stay at zero.
pub fn nominal_posture(model: &RobotModel) -> DVector<f64> {
    let mut s = DVector::zeros(model.dof());
    for side in ["l", "r"] {
        for (joint, q) in [("hip_pitch", -0.3), ("knee", 0.6), ("ankle_pitch", -0.3)] {
            if let Some(i) = model.joint_index(&format!("{side}_{joint}")) {
                s[i] = q;
            }
        }
    }
    s
}

pub fn load_experiment_model(config: &ExperimentConfig) -> Result<RobotModel, HarnessError> {
    Ok(match &config.model {
        Some(p) => load_model(p)?,
        None => mini_biped(),
    })
}

fn pose2_of(p: &Pose) -> Pose2 {
    Pose2::new(p.translation.x, p.translation.y, yaw_of(p.rotation.matrix()))
}

fn foot_pose2(f: &FootSample) -> Pose2 {
    Pose2::new(f.position.x, f.position.y, f.yaw)
}

fn mid_yaw(rs: &RefSample) -> (f64, f64) {
    let yaw = rs.left.yaw + 0.5 * wrap_angle(rs.right.yaw - rs.left.yaw);
    (yaw, 0.5 * (rs.left.yaw_rate + rs.right.yaw_rate))
}

fn contact(phase: ContactPhase, side: Side) -> bool {
    match side {
        Side::Left => phase.left_in_contact(),
        Side::Right => phase.right_in_contact(),
    }
}

/// Sole pose relative to the base.
fn base_h_foot(model: &RobotModel, s: &DVector<f64>, side: Side) -> Result<Pose, HarnessError> {
    let mut state = RobotState::zero(model);
    state.joint_positions = s.clone();
    Ok(Kinematics::new(model, &state)?.frame_pose(foot_frame(model, side))?)
}

/// Ground-truth normal forces: the weight on the stance foot, or split in
/// double support by where the ZMP falls between the feet.
fn normal_forces(phase: ContactPhase, zmp: &Vector2<f64>, left: &Vector2<f64>, right: &Vector2<f64>, weight: f64) -> [f64; 2] {
    match phase {
        ContactPhase::LeftSS => [weight, 0.0],
        ContactPhase::RightSS => [0.0, weight],
        ContactPhase::DS => {
            let d = right - left;
            let s = ((zmp - left).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
            [weight * (1.0 - s), weight * s]
        }
    }
}

/// Joint torques consistent with `M nu_dot + h = B tau + J_c' f` for the
/// given stance feet. The wrenches come from the six base rows: solved
/// directly with one contact, minimum-norm with two.
pub fn inverse_dynamics(
    model: &RobotModel,
    state: &RobotState,
    nu_dot: &DVector<f64>,
    stance: &[Side],
) -> Result<DVector<f64>, HarnessError> {
    let n = model.dof();
    let kin = Kinematics::new(model, state)?;
    let rhs = kin.mass_matrix() * nu_dot + kin.bias_forces(&GRAVITY);
    if stance.is_empty() {
        return Ok(rhs.rows(6, n).into_owned());
    }
    let mut jc = DMatrix::zeros(6 * stance.len(), n + 6);
    for (k, &side) in stance.iter().enumerate() {
        jc.view_mut((6 * k, 0), (6, n + 6)).copy_from(&kin.frame_jacobian(foot_frame(model, side))?);
    }
    let a = jc.columns(0, 6).transpose();
    let rb = rhs.rows(0, 6).into_owned();
    let gram = &a * a.transpose();
    let y = gram
        .lu()
        .solve(&rb)
        .ok_or_else(|| HarnessError::Config("stance Jacobian is singular".into()))?;
    let f = a.transpose() * y;
    Ok(rhs.rows(6, n) - jc.columns(6, n).transpose() * f)
}

const UNBOUNDED_VELOCITY: f64 = 1e6;

pub fn positive_power(tau: &DVector<f64>, s_dot: &DVector<f64>) -> f64 {
    tau.iter().zip(s_dot.iter()).map(|(t, v)| (t * v).max(0.0)).sum()
}

struct Setup {
    model: RobotModel,
    posture: DVector<f64>,
    state0: RobotState,
    plan: WalkPlan,
    polygons: Vec<ConvexPolygon>,
    b: f64,
}

fn setup(config: &ExperimentConfig) -> Result<Setup, HarnessError> {
    config.validate()?;
    let model = load_experiment_model(config)?;
    let posture = nominal_posture(&model);
    let state0 = standing_state(&model, &posture)?;
    let kin = Kinematics::new(&model, &state0)?;
    let left = kin.frame_pose(model.left_foot_frame)?;
    let right = kin.frame_pose(model.right_foot_frame)?;
    let com = kin.com_position();
    let constants = PendulumConstants::new(com.z, -GRAVITY.z);
    let plan = plan_walk(
        &config.walk,
        constants,
        pose2_of(&left),
        pose2_of(&right),
        com.xy(),
        config.period,
        config.duration,
    )?;
    let margin = config.mpc.polygon_margin;
    let polygons = plan
        .refs
        .samples
        .iter()
        .map(|s| {
            support_polygon(s.phase, &foot_pose2(&s.left), &foot_pose2(&s.right), model.foot.length, model.foot.width, margin)
                .ok_or_else(|| HarnessError::Config(format!("polygon margin {margin} leaves no support area")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Setup {
        b: constants.b,
        model,
        posture,
        state0,
        plan,
        polygons,
    })
}

enum Law {
    Instantaneous { gains: DcmGains, integral: DcmIntegral },
    Predictive { mpc: Box<MpcDcm> },
}

/// The simplified-model layer: a DCM law producing the commanded ZMP.
struct SimplifiedLayer {
    law: Law,
    project: bool,
    previous: Vector2<f64>,
}

struct Command {
    zmp: Vector2<f64>,
    status: String,
    iterations: usize,
    integral: Vector2<f64>,
    fallback: bool,
}

impl SimplifiedLayer {
    fn new(config: &ExperimentConfig, b: f64, start: Vector2<f64>) -> Result<Self, HarnessError> {
        let law = match config.architecture.simplified {
            Simplified::Instantaneous => Law::Instantaneous {
                gains: config.dcm_gains()?,
                integral: DcmIntegral::default(),
            },
            Simplified::Predictive => Law::Predictive {
                mpc: Box::new(MpcDcm::new(config.mpc_settings(), b)?),
            },
        };
        Ok(Self {
            law,
            project: config.dcm.project_zmp,
            previous: start,
        })
    }

    fn command(&mut self, k: usize, xi: &Vector2<f64>, setup: &Setup, period: f64) -> Command {
        let rs = &setup.plan.refs.samples[k];
        let cmd = match &mut self.law {
            Law::Instantaneous { gains, integral } => {
                let (mut r, next) = instantaneous_dcm(xi, &rs.dcm, &rs.dcm_rate, integral, gains, setup.b, period);
                *integral = next;
                if self.project && !setup.polygons[k].contains(&r, 0.0) {
                    r = setup.polygons[k].project(&r);
                }
                Command {
                    zmp: r,
                    status: "solved".into(),
                    iterations: 0,
                    integral: next.value,
                    fallback: false,
                }
            }
            Law::Predictive { mpc } => {
                let n = mpc.settings().horizon;
                let last = setup.polygons.len() - 1;
                let xi_ref: Vec<Vector2<f64>> = (0..=n).map(|j| setup.plan.dcm_at((k + j) as f64 * period).0).collect();
                let polygons: Vec<ConvexPolygon> = (0..n).map(|j| setup.polygons[(k + j).min(last)].clone()).collect();
                match mpc.solve(xi, &xi_ref, &self.previous, &polygons) {
                    Ok(out) => Command {
                        zmp: out.zmp,
                        status: out.status.as_str().into(),
                        iterations: out.iterations,
                        integral: Vector2::zeros(),
                        fallback: false,
                    },
                    Err(e) => Command {
                        zmp: self.previous,
                        status: e.to_string(),
                        iterations: 0,
                        integral: Vector2::zeros(),
                        fallback: true,
                    },
                }
            }
        };
        self.previous = cmd.zmp;
        cmd
    }
}

/// Measured-ZMP disturbances: Gaussian noise and scheduled offsets.
struct Disturbances {
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    zmp: Vec<(usize, Vector2<f64>)>,
    dcm: Vec<(usize, Vector2<f64>)>,
}

impl Disturbances {
    fn new(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        let std = config.disturbance.zmp_noise_std;
        let noise = if std > 0.0 {
            Some(Normal::new(0.0, std).map_err(|e| HarnessError::Config(e.to_string()))?)
        } else {
            None
        };
        let tick = |t: f64| (t / config.period).round() as usize;
        let pick = |target| {
            config
                .disturbance
                .impulses
                .iter()
                .filter(|i| i.target == target)
                .map(|i| (tick(i.time), Vector2::from(i.offset)))
                .collect()
        };
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            noise,
            zmp: pick(ImpulseTarget::Zmp),
            dcm: pick(ImpulseTarget::Dcm),
        })
    }

    fn zmp_offset(&mut self, k: usize) -> Vector2<f64> {
        let mut d: Vector2<f64> = self.zmp.iter().filter(|(i, _)| *i == k).map(|(_, v)| v).sum();
        if let Some(n) = &self.noise {
            d += Vector2::new(n.sample(&mut self.rng), n.sample(&mut self.rng));
        }
        d
    }

    fn dcm_offset(&self, k: usize) -> Vector2<f64> {
        self.dcm.iter().filter(|(i, _)| *i == k).map(|(_, v)| v).sum()
    }
}

fn reference_columns(row: &mut TickRow, rs: &RefSample) {
    row.t = rs.t;
    row.phase = rs.phase.as_str().into();
    row.dcm_ref_x = rs.dcm.x;
    row.dcm_ref_y = rs.dcm.y;
    row.zmp_ref_x = rs.zmp.x;
    row.zmp_ref_y = rs.zmp.y;
    row.com_ref_x = rs.com.x;
    row.com_ref_y = rs.com.y;
    row.left_ref_x = rs.left.position.x;
    row.left_ref_y = rs.left.position.y;
    row.left_ref_z = rs.left.position.z;
    row.right_ref_x = rs.right.position.x;
    row.right_ref_y = rs.right.position.y;
    row.right_ref_z = rs.right.position.z;
}

fn command_columns(row: &mut TickRow, cmd: &Command, polygon: &ConvexPolygon) {
    row.zmp_cmd_x = cmd.zmp.x;
    row.zmp_cmd_y = cmd.zmp.y;
    row.zmp_cmd_margin = polygon.signed_distance(&cmd.zmp);
    row.simplified_status = cmd.status.clone();
    row.simplified_iterations = cmd.iterations;
    row.dcm_integral_x = cmd.integral.x;
    row.dcm_integral_y = cmd.integral.y;
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    run_experiment_observed(config, &mut |_| {})
}

/// Like [`run_experiment`], handing every torque-controller tick to
/// `observer`.
pub fn run_experiment_observed(
    config: &ExperimentConfig,
    observer: &mut dyn FnMut(&TorqueTick),
) -> Result<RunOutput, HarnessError> {
    let setup = setup(config)?;
    let mass = setup.model.total_mass();
    let (log, outcome) = match config.plant {
        PlantKind::Lipm => run_lipm(config, &setup)?,
        PlantKind::Kinematic => run_kinematic(config, &setup, observer)?,
    };
    Ok(RunOutput {
        config: config.clone(),
        plan: setup.plan,
        log,
        outcome,
        mass,
    })
}

fn run_lipm(config: &ExperimentConfig, setup: &Setup) -> Result<(Vec<TickRow>, Outcome), HarnessError> {
    let t_s = config.period;
    let b = setup.b;
    let lipm = LipmDiscretization::new(b, t_s);
    let samples = &setup.plan.refs.samples;
    let mut p = samples[0].com;
    let mut v = Vector2::zeros();
    let mut applied = p;
    let mut layer = SimplifiedLayer::new(config, b, p)?;
    let mut dist = Disturbances::new(config)?;
    let mut log = Vec::with_capacity(samples.len());
    for (k, rs) in samples.iter().enumerate() {
        let mut row = TickRow::default();
        reference_columns(&mut row, rs);
        v += dist.dcm_offset(k) / b;
        let xi = p + v * b;
        let zmp = applied + dist.zmp_offset(k);
        row.dcm_x = xi.x;
        row.dcm_y = xi.y;
        row.zmp_x = zmp.x;
        row.zmp_y = zmp.y;
        row.com_x = p.x;
        row.com_y = p.y;
        row.com_z = setup.plan.refs.com_height;
        row.left_x = rs.left.position.x;
        row.left_y = rs.left.position.y;
        row.left_z = rs.left.position.z;
        row.left_yaw = rs.left.yaw;
        row.right_x = rs.right.position.x;
        row.right_y = rs.right.position.y;
        row.right_z = rs.right.position.z;
        row.right_yaw = rs.right.yaw;
        row.wbc_status = "-".into();
        row.torque_status = "-".into();
        row.fixed_foot = "-".into();
        if (xi - rs.dcm).norm() > config.fall_threshold {
            row.flags = "fall".into();
            log.push(row);
            return Ok((log, Outcome::Fell { time: rs.t }));
        }
        let cmd = layer.command(k, &xi, setup, t_s);
        command_columns(&mut row, &cmd, &setup.polygons[k]);
        if cmd.fallback {
            row.flags = "mpc_fallback".into();
        }
        (p, v) = lipm.step(&p, &v, &cmd.zmp);
        applied = cmd.zmp;
        log.push(row);
    }
    Ok((log, Outcome::Completed))
}

fn foot_reference(f: &FootSample) -> FootReference {
    FootReference {
        position: f.position,
        rotation: rot_z(f.yaw),
        twist: nalgebra::Vector6::new(f.velocity.x, f.velocity.y, f.velocity.z, 0.0, 0.0, f.yaw_rate),
        in_contact: f.in_contact,
    }
}

/// Swing feet follow the plan; stance feet are in contact with the ground
/// where they actually are, so their contact frame is the sole pose dropped
/// onto the ground plane.
fn foot_motion_reference(f: &FootSample, actual: &Pose) -> FootMotionReference {
    let (position, yaw) = if f.in_contact {
        let p = actual.translation.vector;
        (Vector3::new(p.x, p.y, 0.0), yaw_of(actual.rotation.matrix()))
    } else {
        (f.position, f.yaw)
    };
    FootMotionReference {
        position,
        velocity: f.velocity,
        acceleration: f.acceleration,
        orientation: RotationReference {
            rotation: rot_z(yaw),
            omega: Vector3::new(0.0, 0.0, f.yaw_rate),
            omega_dot: Vector3::new(0.0, 0.0, f.yaw_acceleration),
        },
        in_contact: f.in_contact,
    }
}

fn with_velocity(state: &RobotState, base: &nalgebra::Vector6<f64>, s_dot: &DVector<f64>) -> RobotState {
    let mut out = state.clone();
    out.base_linear_velocity = base.fixed_rows::<3>(0).into_owned();
    out.base_angular_velocity = base.fixed_rows::<3>(3).into_owned();
    out.joint_velocities = s_dot.clone();
    out
}

struct KinematicSim<'a> {
    config: &'a ExperimentConfig,
    setup: &'a Setup,
    kin_gains: KinematicGains,
    torque_gains: TorqueGains,
    zmp_com: ZmpComGains,
    kin_wbc: KinematicWbc,
    torque_wbc: TorqueWbc,
    integrals: KinematicIntegrals,
    layer: SimplifiedLayer,
    dist: Disturbances,
    s: DVector<f64>,
    /// Joint velocity applied over the previous tick.
    s_dot: DVector<f64>,
    anchor: Side,
    world_h_anchor: Pose,
    odometry: LeggedOdometry,
    com_des: Vector3<f64>,
    true_v_prev: Option<Vector2<f64>>,
    nu_prev: DVector<f64>,
}

impl<'a> KinematicSim<'a> {
    fn new(config: &'a ExperimentConfig, setup: &'a Setup) -> Result<Self, HarnessError> {
        let model = &setup.model;
        let n = model.dof();
        let kin0 = Kinematics::new(model, &setup.state0)?;
        let world_h_anchor = kin0.frame_pose(model.left_foot_frame)?;
        Ok(Self {
            config,
            setup,
            kin_gains: config.kinematic_gains(n),
            torque_gains: config.torque_gains(model),
            zmp_com: config.zmp_com_gains(setup.b)?,
            kin_wbc: KinematicWbc::new(),
            torque_wbc: TorqueWbc::new(),
            integrals: KinematicIntegrals::default(),
            layer: SimplifiedLayer::new(config, setup.b, setup.plan.refs.samples[0].com)?,
            dist: Disturbances::new(config)?,
            s: setup.state0.joint_positions.clone(),
            s_dot: DVector::zeros(n),
            anchor: Side::Left,
            world_h_anchor,
            odometry: LeggedOdometry::anchored(config.estimation, Side::Left, world_h_anchor)?,
            com_des: kin0.com_position(),
            true_v_prev: None,
            nu_prev: DVector::zeros(n + 6),
        })
    }

    fn tick(&mut self, k: usize, observer: &mut dyn FnMut(&TorqueTick)) -> Result<TickRow, HarnessError> {
        let setup = self.setup;
        let config = self.config;
        let model = &setup.model;
        let n = model.dof();
        let t_s = config.period;
        let b = setup.b;
        let rs = &setup.plan.refs.samples[k];
        let z0 = setup.plan.refs.com_height;
        let replay = config.architecture.wholebody == WholeBody::TorqueOpenLoop;
        let mut row = TickRow::default();
        let mut flags: Vec<String> = Vec::new();
        reference_columns(&mut row, rs);
        row.torque_status = "-".into();

        // Plant: the stance foot stays where it is and carries the base.
        if !contact(rs.phase, self.anchor) {
            let other = self.anchor.other();
            self.world_h_anchor =
                self.world_h_anchor * base_h_foot(model, &self.s, self.anchor)?.inverse() * base_h_foot(model, &self.s, other)?;
            self.anchor = other;
        }
        let base = self.world_h_anchor * base_h_foot(model, &self.s, self.anchor)?.inverse();
        let mut truth = RobotState::zero(model);
        truth.set_base_pose(&base);
        truth.joint_positions = self.s.clone();
        let truth = with_velocity(&truth, &base_velocity(model, &base, &self.s, &self.s_dot, self.anchor)?, &self.s_dot);
        let tk = Kinematics::new(model, &truth)?;
        let left = tk.frame_pose(model.left_foot_frame)?;
        let right = tk.frame_pose(model.right_foot_frame)?;
        let true_com = tk.com_position();
        let true_v = tk.com_velocity().xy();
        let true_zmp = true_com.xy() - (true_v - self.true_v_prev.unwrap_or(true_v)) * (b * b / t_s);
        self.true_v_prev = Some(true_v);
        let (lp, rp) = (left.translation.vector, right.translation.vector);
        (row.left_x, row.left_y, row.left_z, row.left_yaw) = (lp.x, lp.y, lp.z, yaw_of(left.rotation.matrix()));
        (row.right_x, row.right_y, row.right_z, row.right_yaw) = (rp.x, rp.y, rp.z, yaw_of(right.rotation.matrix()));
        (row.base_x, row.base_y, row.base_z) = (base.translation.x, base.translation.y, base.translation.z);

        // Estimation from joint encoders and ground-truth normal forces.
        let weight = model.total_mass() * -GRAVITY.z;
        let forces = normal_forces(rs.phase, &true_zmp, &lp.xy(), &rp.xy(), weight);
        let mut est = truth.clone();
        match self.odometry.update(model, &self.s, &self.s_dot, forces, rs.t) {
            Ok(out) => {
                est.set_base_pose(&out.base_pose);
                est = with_velocity(&est, &out.base_velocity, &self.s_dot);
                row.fixed_foot = out.fixed.as_str().into();
            }
            Err(e) => {
                flags.push(format!("estimator: {e}"));
                row.fixed_foot = "-".into();
            }
        }
        let eb = est.base_pose();
        (row.base_est_x, row.base_est_y, row.base_est_z) = (eb.translation.x, eb.translation.y, eb.translation.z);

        // Measurements.
        let ek = Kinematics::new(model, &est)?;
        let com = ek.com_position();
        let v = ek.com_velocity().xy();
        // The ZMP over the coming tick follows from the CoM velocity it ends
        // with: r = p - (b^2 / T) (v_next - v). `zmp_base` is r at v_next = 0.
        let c = b * b / t_s;
        let zmp_base = com.xy() + v * c + self.dist.zmp_offset(k);
        let xi = com.xy() + v * b;
        (row.dcm_x, row.dcm_y) = (xi.x, xi.y);
        (row.com_x, row.com_y, row.com_z) = (com.x, com.y, com.z);
        if (xi - rs.dcm).norm() > config.fall_threshold {
            let zmp = zmp_base - v * c;
            (row.zmp_x, row.zmp_y) = (zmp.x, zmp.y);
            flags.push("fall".into());
            row.flags = flags.join("|");
            return Ok(row);
        }

        // Simplified-model layer; torque runs follow the planned CoM instead.
        let (com_position, com_velocity) = if replay {
            (row.zmp_cmd_x, row.zmp_cmd_y) = (rs.zmp.x, rs.zmp.y);
            row.zmp_cmd_margin = setup.polygons[k].signed_distance(&rs.zmp);
            row.simplified_status = "bypassed".into();
            (Vector3::new(rs.com.x, rs.com.y, z0), Vector3::new(rs.com_velocity.x, rs.com_velocity.y, 0.0))
        } else {
            let cmd = self.layer.command(k, &xi, setup, t_s);
            command_columns(&mut row, &cmd, &setup.polygons[k]);
            if cmd.fallback {
                flags.push("mpc_fallback".into());
            }
            // Solved implicitly in the ZMP its own command produces; the
            // one-tick-delayed form diverges once K_zmp b^2 / T exceeds ~1.
            let explicit = zmp_com_control(&cmd.zmp, &zmp_base, &rs.com, &com.xy(), &rs.com_velocity, &self.zmp_com);
            let v_star = (Matrix2::identity() + self.zmp_com.k_zmp() * c)
                .lu()
                .solve(&explicit)
                .expect("I + c K_zmp is positive definite");
            let p_star = self.com_des;
            self.com_des += Vector3::new(v_star.x, v_star.y, 0.0) * t_s;
            (p_star, Vector3::new(v_star.x, v_star.y, 0.0))
        };
        (row.com_vel_cmd_x, row.com_vel_cmd_y) = (com_velocity.x, com_velocity.y);
        let zmp = zmp_base - com_velocity.xy() * c;
        (row.zmp_x, row.zmp_y) = (zmp.x, zmp.y);

        // Velocity-level whole-body layer.
        let (yaw, yaw_rate) = mid_yaw(rs);
        let refs = KinematicTaskReferences {
            com_position,
            com_velocity,
            left: foot_reference(&rs.left),
            right: foot_reference(&rs.right),
            torso_rotation: rot_z(yaw),
            posture: setup.posture.clone(),
        };
        let s_dot_cmd = match self.kin_wbc.build_and_solve(model, &est, &refs, &self.kin_gains, &self.integrals, t_s) {
            Ok(out) => {
                self.integrals = out.integrals;
                row.wbc_status = out.status.as_str().into();
                row.wbc_iterations = out.iterations;
                out.nu.rows(6, n).into_owned()
            }
            Err(e @ WbcError::IkInfeasible { .. }) => {
                // Saturate instead: solve without bounds, then clamp.
                flags.push(format!("wbc: {e}"));
                let unbounded = KinematicGains {
                    velocity_lower: DVector::repeat(n, -UNBOUNDED_VELOCITY),
                    velocity_upper: DVector::repeat(n, UNBOUNDED_VELOCITY),
                    ..self.kin_gains.clone()
                };
                match self.kin_wbc.build_and_solve(model, &est, &refs, &unbounded, &self.integrals, t_s) {
                    Ok(out) => {
                        self.integrals = out.integrals;
                        row.wbc_status = "saturated".into();
                        row.wbc_iterations = out.iterations;
                        let (lo, hi) = (&self.kin_gains.velocity_lower, &self.kin_gains.velocity_upper);
                        DVector::from_fn(n, |i, _| out.nu[6 + i].clamp(lo[i], hi[i]))
                    }
                    Err(e) => {
                        row.wbc_status = "failed".into();
                        flags.push(format!("wbc: {e}"));
                        self.s_dot.clone()
                    }
                }
            }
            Err(e) => {
                row.wbc_status = "failed".into();
                flags.push(format!("wbc: {e}"));
                self.s_dot.clone()
            }
        };
        let applied = if config.architecture.wholebody == WholeBody::Velocity {
            let lag = 1.0 - (-t_s / config.kinematic.velocity_lag).exp();
            &self.s_dot + (&s_dot_cmd - &self.s_dot) * lag
        } else {
            s_dot_cmd
        };

        // Joint power over this tick, at the state moving with `applied`.
        let moving = with_velocity(&truth, &base_velocity(model, &base, &self.s, &applied, self.anchor)?, &applied);
        let nu = moving.velocity();
        if replay {
            let trefs = TorqueTaskReferences {
                torso: RotationReference {
                    rotation: rot_z(yaw),
                    omega: Vector3::new(0.0, 0.0, yaw_rate),
                    omega_dot: Vector3::zeros(),
                },
                left: foot_motion_reference(&rs.left, &left),
                right: foot_motion_reference(&rs.right, &right),
                com_height: Vector3::new(z0, 0.0, 0.0),
                posture: setup.posture.clone(),
                posture_velocity: DVector::zeros(n),
                posture_acceleration: DVector::zeros(n),
                zmp: rs.zmp,
            };
            let result = self.torque_wbc.build_and_solve(model, &moving, &trefs, &self.torque_gains);
            observer(&TorqueTick {
                tick: k,
                time: rs.t,
                model,
                state: &moving,
                refs: &trefs,
                gains: &self.torque_gains,
                result: &result,
            });
            match &result {
                Ok(out) => {
                    row.torque_status = out.status.as_str().into();
                    row.torque_iterations = out.iterations;
                    row.torque_dynamics_residual = out.residuals.dynamics;
                    row.torque_zmp_projected = out.zmp_projected;
                    row.joint_power = positive_power(&out.tau, &applied);
                }
                Err(e) => {
                    row.torque_status = "failed".into();
                    flags.push(format!("torque: {e}"));
                }
            }
        } else {
            let stance: Vec<Side> = [Side::Left, Side::Right].into_iter().filter(|&sd| contact(rs.phase, sd)).collect();
            let nu_dot = (&nu - &self.nu_prev) / t_s;
            let tau = inverse_dynamics(model, &moving, &nu_dot, &stance)?;
            row.joint_power = positive_power(&tau, &applied);
        }
        self.nu_prev = nu;

        self.s = integrate_joint_positions(model, &self.s, &applied, t_s);
        self.s_dot = applied;
        row.flags = flags.join("|");
        Ok(row)
    }
}

fn run_kinematic(
    config: &ExperimentConfig,
    setup: &Setup,
    observer: &mut dyn FnMut(&TorqueTick),
) -> Result<(Vec<TickRow>, Outcome), HarnessError> {
    let mut sim = KinematicSim::new(config, setup)?;
    let samples = &setup.plan.refs.samples;
    let mut log = Vec::with_capacity(samples.len());
    for (k, rs) in samples.iter().enumerate() {
        match sim.tick(k, observer) {
            Ok(row) => {
                let fell = row.flags.split('|').any(|f| f == "fall");
                log.push(row);
                if fell {
                    return Ok((log, Outcome::Fell { time: rs.t }));
                }
            }
            Err(e) => {
                return Ok((
                    log,
                    Outcome::Aborted {
                        time: rs.t,
                        reason: e.to_string(),
                    },
                ))
            }
        }
    }
    Ok((log, Outcome::Completed))
}
