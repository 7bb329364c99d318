//! DCM-based bipedal walking: trajectory optimization, simplified-model
//! control, whole-body QP control, floating-base estimation, and a desk-scale
//! simulation harness for comparing controller architectures.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod qp;
pub mod control;
pub mod planner;
pub mod rigidbody;
pub mod wbc;
pub mod estimation;
pub mod harness;
