use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DVector, Matrix2, Matrix3, Vector2, Vector6};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::control::{DcmGains, MpcSettings, ZmpComGains};
use crate::estimation::SchmittSettings;
use crate::planner::WalkSettings;
use crate::rigidbody::RobotModel;
use crate::wbc::{KinematicGains, TorqueGains, WrenchRegularization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Simplified {
    Instantaneous,
    Predictive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WholeBody {
    Position,
    Velocity,
    TorqueOpenLoop,
}

/// One cell of the controller matrix, written `inst|mpc` `x` `pos|vel|trq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Architecture {
    pub simplified: Simplified,
    pub wholebody: WholeBody,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            simplified: Simplified::Instantaneous,
            wholebody: WholeBody::Position,
        }
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once('x')
            .ok_or_else(|| format!("architecture `{s}` is not of the form <inst|mpc>x<pos|vel|trq>"))?;
        let simplified = match a {
            "inst" => Simplified::Instantaneous,
            "mpc" => Simplified::Predictive,
            _ => return Err(format!("unknown simplified controller `{a}`")),
        };
        let wholebody = match b {
            "pos" => WholeBody::Position,
            "vel" => WholeBody::Velocity,
            "trq" => WholeBody::TorqueOpenLoop,
            _ => return Err(format!("unknown whole-body controller `{b}`")),
        };
        Ok(Self { simplified, wholebody })
    }
}

impl TryFrom<String> for Architecture {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Architecture> for String {
    fn from(a: Architecture) -> String {
        a.to_string()
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.simplified {
            Simplified::Instantaneous => "inst",
            Simplified::Predictive => "mpc",
        };
        let b = match self.wholebody {
            WholeBody::Position => "pos",
            WholeBody::Velocity => "vel",
            WholeBody::TorqueOpenLoop => "trq",
        };
        write!(f, "{a}x{b}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    /// Point-mass LIPM driven by the commanded ZMP.
    Lipm,
    /// Full kinematic model with rigid stance contact.
    #[default]
    Kinematic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcmConfig {
    pub kp: [f64; 2],
    pub ki: [f64; 2],
    pub integral_limit: [f64; 2],
    /// Project the instantaneous command onto the support polygon.
    pub project_zmp: bool,
}

impl Default for DcmConfig {
    fn default() -> Self {
        Self {
            kp: [2.0, 2.0],
            ki: [0.5, 0.5],
            integral_limit: [0.05, 0.05],
            project_zmp: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpcConfig {
    pub horizon: usize,
    pub q: [f64; 2],
    pub q_terminal: [f64; 2],
    pub r: [f64; 2],
    /// Inward shrink of the foot rectangles used as ZMP constraints.
    pub polygon_margin: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon: 200,
            q: [5.0, 5.0],
            q_terminal: [50.0, 50.0],
            r: [1.0, 1.0],
            polygon_margin: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZmpComConfig {
    pub k_zmp: [f64; 2],
    pub k_com: [f64; 2],
}

impl Default for ZmpComConfig {
    fn default() -> Self {
        Self {
            k_zmp: [2.0, 2.0],
            k_com: [6.0, 6.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KinematicConfig {
    pub torso_weight: f64,
    pub posture_weight: f64,
    pub posture_gain: f64,
    pub torso_gain: f64,
    pub foot_kp: f64,
    pub foot_ki: f64,
    pub foot_kw: f64,
    pub com_kp: f64,
    pub com_ki: f64,
    pub velocity_limit: f64,
    pub integral_limit: f64,
    /// Time constant of the joint velocity loop in velocity mode (s).
    pub velocity_lag: f64,
}

impl Default for KinematicConfig {
    fn default() -> Self {
        let d = KinematicGains::defaults(1);
        Self {
            torso_weight: d.torso_weight[(0, 0)],
            posture_weight: d.posture_weight[0],
            posture_gain: d.posture_gain[0],
            torso_gain: d.torso_gain[(0, 0)],
            foot_kp: d.foot_kp[(0, 0)],
            foot_ki: d.foot_ki[(0, 0)],
            foot_kw: d.foot_kw[(0, 0)],
            com_kp: d.com_kp[(0, 0)],
            com_ki: d.com_ki[(0, 0)],
            velocity_limit: d.velocity_upper[0],
            integral_limit: d.foot_integral_limit,
            velocity_lag: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TorqueConfig {
    pub torso_weight: f64,
    pub posture_weight: f64,
    pub torque_weight: f64,
    pub wrench_weight: [f64; 6],
    pub wrench_mode: WrenchRegularization,
    pub torso_pid: [f64; 3],
    pub foot_pid: [f64; 3],
    pub posture_kp: f64,
    pub posture_kd: f64,
    pub foot_kp: f64,
    pub foot_kd: f64,
    pub com_kp: f64,
    pub com_kd: f64,
    pub friction: f64,
    pub project_zmp: bool,
}

impl Default for TorqueConfig {
    fn default() -> Self {
        Self {
            torso_weight: 10.0,
            posture_weight: 1.0,
            torque_weight: 1e-2,
            wrench_weight: [1e-3, 1e-3, 1e-4, 1e-2, 1e-2, 1e-2],
            wrench_mode: WrenchRegularization::NominalShare,
            torso_pid: [1.0, 20.0, 100.0],
            foot_pid: [1.0, 20.0, 100.0],
            posture_kp: 50.0,
            posture_kd: 14.0,
            foot_kp: 100.0,
            foot_kd: 20.0,
            com_kp: 100.0,
            com_kd: 20.0,
            friction: 1.0 / 3.0,
            project_zmp: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpulseTarget {
    /// Instantaneous jump of the plant DCM (LIPM plant only).
    Dcm,
    /// One-tick offset on the measured ZMP.
    Zmp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Impulse {
    pub time: f64,
    pub target: ImpulseTarget,
    pub offset: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceConfig {
    /// Standard deviation of the Gaussian noise on the measured ZMP (m).
    pub zmp_noise_std: f64,
    pub impulses: Vec<Impulse>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub speeds: Vec<f64>,
    pub architectures: Vec<Architecture>,
    /// Worker threads; 0 picks the available parallelism.
    pub threads: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            speeds: vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            architectures: vec![Architecture::default()],
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub architecture: Architecture,
    pub plant: PlantKind,
    pub period: f64,
    pub duration: f64,
    pub seed: u64,
    /// Robot model file; the built-in mini-biped when absent.
    pub model: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// `|xi - xi_ref|` above which the run counts as a fall (m).
    pub fall_threshold: f64,
    pub walk: WalkSettings,
    pub dcm: DcmConfig,
    pub mpc: MpcConfig,
    pub zmp_com: ZmpComConfig,
    pub kinematic: KinematicConfig,
    pub torque: TorqueConfig,
    pub estimation: SchmittSettings,
    pub disturbance: DisturbanceConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::default(),
            plant: PlantKind::default(),
            period: 0.01,
            duration: 10.0,
            seed: 0,
            model: None,
            output: None,
            fall_threshold: 0.3,
            walk: WalkSettings::default(),
            dcm: DcmConfig::default(),
            mpc: MpcConfig::default(),
            zmp_com: ZmpComConfig::default(),
            kinematic: KinematicConfig::default(),
            torque: TorqueConfig::default(),
            estimation: SchmittSettings::default(),
            disturbance: DisturbanceConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

fn diag(v: [f64; 2]) -> Matrix2<f64> {
    Matrix2::from_diagonal(&Vector2::from(v))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            HarnessError::Config(format!("{}:{line}: {}", origin.display(), e.message()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if !(self.period > 0.0) {
            return bad("period must be > 0");
        }
        if !(self.duration > 0.0) {
            return bad("duration must be > 0");
        }
        if !(self.fall_threshold > 0.0) {
            return bad("fall_threshold must be > 0");
        }
        if !(self.disturbance.zmp_noise_std >= 0.0) {
            return bad("zmp_noise_std must be >= 0");
        }
        if !(self.kinematic.velocity_lag > 0.0) {
            return bad("velocity_lag must be > 0");
        }
        if self.plant == PlantKind::Lipm && self.architecture.wholebody != WholeBody::Position {
            return bad("the LIPM plant only supports the position cell (inst|mpc x pos)");
        }
        if self.plant == PlantKind::Kinematic && self.disturbance.impulses.iter().any(|i| i.target == ImpulseTarget::Dcm) {
            return bad("DCM impulses need the LIPM plant");
        }
        self.estimation
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn dcm_gains(&self) -> Result<DcmGains, HarnessError> {
        Ok(DcmGains::new(
            diag(self.dcm.kp),
            diag(self.dcm.ki),
            Vector2::from(self.dcm.integral_limit),
        )?)
    }

    pub fn mpc_settings(&self) -> MpcSettings {
        MpcSettings {
            horizon: self.mpc.horizon,
            period: self.period,
            q: diag(self.mpc.q),
            q_terminal: diag(self.mpc.q_terminal),
            r: diag(self.mpc.r),
        }
    }

    pub fn zmp_com_gains(&self, b: f64) -> Result<ZmpComGains, HarnessError> {
        Ok(ZmpComGains::new(diag(self.zmp_com.k_zmp), diag(self.zmp_com.k_com), b)?)
    }

    pub fn kinematic_gains(&self, n: usize) -> KinematicGains {
        let k = &self.kinematic;
        let i = Matrix3::identity();
        KinematicGains {
            torso_weight: i * k.torso_weight,
            posture_weight: DVector::repeat(n, k.posture_weight),
            posture_gain: DVector::repeat(n, k.posture_gain),
            torso_gain: i * k.torso_gain,
            foot_kp: i * k.foot_kp,
            foot_ki: i * k.foot_ki,
            foot_kw: i * k.foot_kw,
            com_kp: i * k.com_kp,
            com_ki: i * k.com_ki,
            velocity_lower: DVector::repeat(n, -k.velocity_limit),
            velocity_upper: DVector::repeat(n, k.velocity_limit),
            foot_integral_limit: k.integral_limit,
            com_integral_limit: k.integral_limit,
            ..KinematicGains::defaults(n)
        }
    }

    pub fn torque_gains(&self, model: &RobotModel) -> TorqueGains {
        let t = &self.torque;
        let n = model.dof();
        let i = Matrix3::identity();
        TorqueGains {
            torso_weight: i * t.torso_weight,
            posture_weight: DVector::repeat(n, t.posture_weight),
            torque_weight: DVector::repeat(n, t.torque_weight),
            wrench_weight: Vector6::from(t.wrench_weight),
            wrench_mode: t.wrench_mode,
            torso_pid: t.torso_pid,
            foot_pid: t.foot_pid,
            posture_kp: DVector::repeat(n, t.posture_kp),
            posture_kd: DVector::repeat(n, t.posture_kd),
            foot_kp: i * t.foot_kp,
            foot_kd: i * t.foot_kd,
            com_kp: t.com_kp,
            com_kd: t.com_kd,
            friction: t.friction,
            project_zmp: t.project_zmp,
            ..TorqueGains::defaults(model)
        }
    }
}
