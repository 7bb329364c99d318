//! TOML model description.
//!
//! ```toml
//! name = "robot"
//! base = "pelvis"
//! [foot]
//! length = 0.19
//! width = 0.09
//! [roles]
//! torso = "torso"
//! left_foot = "l_sole"
//! right_foot = "r_sole"
//! [[link]]            # name, mass, com, inertia = [ixx, iyy, izz, ixy, ixz, iyz]
//! [[joint]]           # name, parent, child, axis, xyz, rpy, limits = { lower, upper, velocity, torque }
//! [[frame]]           # name, link, xyz, rpy
//! ```

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;
use toml::Spanned;

use super::math::pose_xyz_rpy;
use super::model::{FootGeometry, Frame, Joint, JointLimits, Link, ModelItem, ModelSpec, RobotModel};
use super::RigidBodyError;

const MINI_BIPED: &str = include_str!("../../models/mini_biped.toml");

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: String,
    base: Spanned<String>,
    foot: Spanned<RawFoot>,
    roles: Spanned<RawRoles>,
    #[serde(default)]
    link: Vec<Spanned<RawLink>>,
    #[serde(default)]
    joint: Vec<Spanned<RawJoint>>,
    #[serde(default)]
    frame: Vec<Spanned<RawFrame>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFoot {
    length: f64,
    width: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoles {
    torso: String,
    left_foot: String,
    right_foot: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    name: String,
    mass: f64,
    #[serde(default)]
    com: [f64; 3],
    inertia: [f64; 6],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJoint {
    name: String,
    parent: String,
    child: String,
    axis: [f64; 3],
    #[serde(default)]
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
    limits: RawLimits,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimits {
    lower: f64,
    upper: f64,
    velocity: f64,
    torque: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    name: String,
    link: String,
    #[serde(default)]
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parses a model description; `origin` names the source in error messages.
pub fn parse_model(text: &str, origin: &str) -> Result<RobotModel, RigidBodyError> {
    let err = |offset: usize, message: String| RigidBodyError::ModelFile {
        path: origin.to_string(),
        line: line_of(text, offset),
        message,
    };
    let raw: RawModel = toml::from_str(text).map_err(|e| {
        let at = e.span().map(|s| s.start).unwrap_or(0);
        err(at, e.message().to_string())
    })?;

    let mut links = Vec::with_capacity(raw.link.len());
    for l in &raw.link {
        let r = l.get_ref();
        if links.iter().any(|x: &Link| x.name == r.name) {
            return Err(err(l.span().start, format!("duplicate link '{}'", r.name)));
        }
        let [ixx, iyy, izz, ixy, ixz, iyz] = r.inertia;
        links.push(Link {
            name: r.name.clone(),
            mass: r.mass,
            com: Vector3::from(r.com),
            inertia: Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz),
        });
    }
    let link_index = |name: &str, at: usize| {
        links
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| err(at, format!("unknown link '{name}'")))
    };
    let base = link_index(raw.base.get_ref(), raw.base.span().start)?;

    let mut joints = Vec::with_capacity(raw.joint.len());
    for j in &raw.joint {
        let r = j.get_ref();
        let at = j.span().start;
        if joints.iter().any(|x: &Joint| x.name == r.name) {
            return Err(err(at, format!("duplicate joint '{}'", r.name)));
        }
        joints.push(Joint {
            name: r.name.clone(),
            parent: link_index(&r.parent, at)?,
            child: link_index(&r.child, at)?,
            axis: Vector3::from(r.axis),
            origin: pose_xyz_rpy(r.xyz, r.rpy),
            limits: JointLimits {
                lower: r.limits.lower,
                upper: r.limits.upper,
                velocity: r.limits.velocity,
                torque: r.limits.torque,
            },
        });
    }

    let mut frames = Vec::with_capacity(raw.frame.len());
    for f in &raw.frame {
        let r = f.get_ref();
        let at = f.span().start;
        if frames.iter().any(|x: &Frame| x.name == r.name) {
            return Err(err(at, format!("duplicate frame '{}'", r.name)));
        }
        frames.push(Frame {
            name: r.name.clone(),
            link: link_index(&r.link, at)?,
            offset: pose_xyz_rpy(r.xyz, r.rpy),
        });
    }

    let foot = raw.foot.get_ref();
    let roles = raw.roles.get_ref();
    let spec = ModelSpec {
        name: raw.name.clone(),
        links,
        joints,
        base,
        frames,
        foot: FootGeometry {
            length: foot.length,
            width: foot.width,
        },
        torso: roles.torso.clone(),
        left_foot: roles.left_foot.clone(),
        right_foot: roles.right_foot.clone(),
    };
    RobotModel::new(spec).map_err(|(item, message)| {
        let at = match item {
            ModelItem::Model => 0,
            ModelItem::Link(i) => raw.link[i].span().start,
            ModelItem::Joint(k) => raw.joint[k].span().start,
            ModelItem::Frame(i) => raw.frame[i].span().start,
            ModelItem::Foot => raw.foot.span().start,
            ModelItem::Roles => raw.roles.span().start,
        };
        err(at, message)
    })
}

pub fn load_model(path: &Path) -> Result<RobotModel, RigidBodyError> {
    let text = std::fs::read_to_string(path).map_err(|e| RigidBodyError::ModelFile {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    parse_model(&text, &path.display().to_string())
}

/// The bundled fifteen-joint biped.
pub fn mini_biped() -> RobotModel {
    parse_model(MINI_BIPED, "mini_biped.toml").expect("bundled model is valid")
}
