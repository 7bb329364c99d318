mod common;

use common::gait::{base_h_sole, inverse, Gait};
use dcmwalk::estimation::*;
use dcmwalk::planner::Side;
use dcmwalk::rigidbody::{mini_biped, Kinematics};
use nalgebra::{DVector, Matrix4, Rotation3, Vector3, Vector6};
use rand::Rng;

const T: f64 = 0.01;

fn trace(forces: &[f64], initial: ContactState) -> Vec<ContactState> {
    let settings = SchmittSettings::default();
    let mut trigger = SchmittTrigger::new(initial);
    forces
        .iter()
        .enumerate()
        .map(|(k, &f)| trigger.update(f, k as f64 * T, &settings).unwrap())
        .collect()
}

#[test]
fn constant_load_switches_after_one_dwell() {
    let states = trace(&[100.0; 20], ContactState::Inactive);
    let first = states.iter().position(|&s| s == ContactState::Active).unwrap();
    assert_eq!(first, 5);
}

#[test]
fn forces_inside_the_band_never_switch() {
    let forces: Vec<f64> = (0..500).map(|k| 20.0 + 9.0 * (k as f64 * 0.37).sin()).collect();
    for initial in [ContactState::Active, ContactState::Inactive] {
        assert!(trace(&forces, initial).iter().all(|&s| s == initial));
    }
}

#[test]
fn square_wave_switches_lag_edges_by_one_dwell() {
    // 100 N during the first half of each second, 0 N otherwise.
    let forces: Vec<f64> = (0..300).map(|k| if k % 100 < 50 { 100.0 } else { 0.0 }).collect();
    let states = trace(&forces, ContactState::Inactive);
    let switches: Vec<(usize, ContactState)> = (1..states.len())
        .filter(|&k| states[k] != states[k - 1])
        .map(|k| (k, states[k]))
        .collect();
    // Hand-simulated: on at 0.05 (sample 0 is already loaded), off 0.05 after
    // each falling edge, on 0.05 after each rising edge.
    let expected = [
        (5, ContactState::Active),
        (55, ContactState::Inactive),
        (105, ContactState::Active),
        (155, ContactState::Inactive),
        (205, ContactState::Active),
        (255, ContactState::Inactive),
    ];
    assert_eq!(switches, expected);
}

#[test]
fn trigger_is_invariant_to_scaling_above_the_thresholds() {
    let mut rng = common::rng(5);
    let forces: Vec<f64> = (0..400)
        .map(|_| {
            if rng.random_bool(0.5) {
                rng.random_range(40.0..200.0)
            } else {
                rng.random_range(0.0..3.0)
            }
        })
        .collect();
    let base = trace(&forces, ContactState::Inactive);
    for c in [1.0, 1.7, 3.0] {
        let scaled: Vec<f64> = forces.iter().map(|f| f * c).collect();
        assert_eq!(trace(&scaled, ContactState::Inactive), base);
    }
}

#[test]
fn settings_are_validated() {
    let bad = SchmittSettings {
        off_threshold: 40.0,
        ..Default::default()
    };
    assert!(LeggedOdometry::new(bad).is_err());
}

#[test]
fn unchanged_joints_reproduce_the_anchored_pose() {
    let model = mini_biped();
    let s = common::walking_posture(&model);
    let mut odo = LeggedOdometry::new(SchmittSettings::default()).unwrap();
    let z = DVector::zeros(model.dof());
    let a = odo.update(&model, &s, &z, [200.0, 200.0], 0.0).unwrap();
    let b = odo.update(&model, &s, &z, [200.0, 200.0], 0.5).unwrap();
    assert_eq!(a.base_pose, b.base_pose);
    assert_eq!(a.base_velocity, Vector6::zeros());
    let expect = inverse(&base_h_sole(&model, &s, Side::Left));
    assert!((a.base_pose.to_homogeneous() - expect).amax() < 1e-12);
}

#[test]
fn switching_the_fixed_frame_does_not_move_the_base() {
    let model = mini_biped();
    let mut rng = common::rng(9);
    let s = common::walking_posture(&model).map(|x| x + rng.random_range(-0.2..0.2));
    let z = DVector::zeros(model.dof());
    let mut odo = LeggedOdometry::new(SchmittSettings::default()).unwrap();
    let before = odo.update(&model, &s, &z, [200.0, 200.0], 0.0).unwrap();
    // Left lifts off; after the dwell the right foot takes over.
    let mut after = before.clone();
    for k in 1..=10 {
        after = odo.update(&model, &s, &z, [0.0, 200.0], k as f64 * T).unwrap();
        if after.switched {
            break;
        }
    }
    assert!(after.switched);
    assert_eq!(after.fixed, Side::Right);
    assert!((after.base_pose.to_homogeneous() - before.base_pose.to_homogeneous()).amax() < 1e-12);
}

#[test]
fn losing_every_contact_is_an_error() {
    let model = mini_biped();
    let s = common::walking_posture(&model);
    let z = DVector::zeros(model.dof());
    let mut odo = LeggedOdometry::new(SchmittSettings::default()).unwrap();
    let mut result = Ok(());
    for k in 0..20 {
        if let Err(e) = odo.update(&model, &s, &z, [0.0, 0.0], k as f64 * T) {
            result = Err(e);
            break;
        }
    }
    assert_eq!(result, Err(EstimationError::NoFixedFrame));
}

#[test]
fn base_velocity_keeps_the_fixed_sole_still() {
    let model = mini_biped();
    let mut rng = common::rng(21);
    for _ in 0..20 {
        let state = common::random_state(&mut rng, &model);
        for side in [Side::Left, Side::Right] {
            let vb = base_velocity(&model, &state.base_pose(), &state.joint_positions, &state.joint_velocities, side).unwrap();
            let mut est = state.clone();
            est.base_linear_velocity = vb.fixed_rows::<3>(0).into_owned();
            est.base_angular_velocity = vb.fixed_rows::<3>(3).into_owned();
            let kin = Kinematics::new(&model, &est).unwrap();
            let frame = match side {
                Side::Left => model.left_foot_frame,
                Side::Right => model.right_foot_frame,
            };
            assert!(kin.frame_velocity(frame).unwrap().amax() < 1e-9);
        }
        let zero = DVector::zeros(model.dof());
        let vb = base_velocity(&model, &state.base_pose(), &state.joint_positions, &zero, Side::Left).unwrap();
        assert_eq!(vb, Vector6::zeros());
    }
}


#[test]
fn two_step_gait_has_no_drift_and_matching_velocity() {
    let model = mini_biped();
    let mut rng = common::rng(13);
    let n = model.dof();
    let gait = Gait {
        s0: common::walking_posture(&model),
        d1: DVector::from_fn(n, |_, _| rng.random_range(-0.1..0.1)),
        d2: DVector::from_fn(n, |_, _| rng.random_range(-0.1..0.1)),
    };
    let mut odo = LeggedOdometry::new(SchmittSettings::default()).unwrap();
    let mut fixed = Vec::new();
    let ticks = 300;
    let mut worst_pose = 0.0f64;
    let mut worst_vel = 0.0f64;
    for k in 0..=ticks {
        let t = k as f64 * T;
        let (s, sd) = gait.joints(t);
        let out = odo.update(&model, &s, &sd, Gait::forces(t), t).unwrap();
        if out.switched {
            fixed.push((k, out.fixed));
        }
        let truth = gait.true_base(&model, t);
        worst_pose = worst_pose.max((out.base_pose.to_homogeneous() - truth).amax());

        // Central differences away from the phase edges.
        let near_edge = [0.3, 1.3, 1.6, 2.6].iter().any(|&e| (t - e).abs() < 1.5 * T);
        if k > 0 && k < ticks && !near_edge {
            let (hp, hm) = (gait.true_base(&model, t + T), gait.true_base(&model, t - T));
            let pos = |h: &Matrix4<f64>| Vector3::new(h[(0, 3)], h[(1, 3)], h[(2, 3)]);
            let rot = |h: &Matrix4<f64>| Rotation3::from_matrix_unchecked(h.fixed_view::<3, 3>(0, 0).into_owned());
            let v = (pos(&hp) - pos(&hm)) / (2.0 * T);
            let w = (rot(&hp) * rot(&hm).inverse()).scaled_axis() / (2.0 * T);
            let est = out.base_velocity;
            worst_vel = worst_vel
                .max((est.fixed_rows::<3>(0) - v).amax())
                .max((est.fixed_rows::<3>(3) - w).amax());
        }
    }
    // Right takes over 0.05 s after its touchdown, left 0.05 s after its own.
    assert_eq!(fixed, vec![(135, Side::Right), (265, Side::Left)]);
    assert!(worst_pose <= 1e-9, "{worst_pose:e}");
    assert!(worst_vel <= 1e-4, "{worst_vel:e}");
}
