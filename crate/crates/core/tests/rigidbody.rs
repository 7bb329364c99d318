mod common;

use common::{advance, chain_oracle, link_velocities_oracle, random_state, rng, small_rotation_vector};
use dcmwalk::rigidbody::math::{pose_xyz_rpy, Pose};
use dcmwalk::rigidbody::{
    bias_forces, com_state, frame_jacobian, frame_pose, global_zmp, mass_matrix, mini_biped, ContactWrench,
    FootGeometry, Frame, FrameId, Joint, JointLimits, Kinematics, Link, ModelSpec, RobotModel, RobotState,
    ZmpContact, GRAVITY,
};
use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, Vector3, Vector6};

fn rel(diff: f64, reference: f64) -> f64 {
    if reference > 1e-3 {
        diff / reference
    } else {
        diff
    }
}

fn twist_fd(model: &RobotModel, state: &RobotState, frame: FrameId, h: f64) -> Vector6<f64> {
    let plus = frame_pose(model, &advance(state, h), frame).unwrap();
    let minus = frame_pose(model, &advance(state, -h), frame).unwrap();
    let v = (plus.translation.vector - minus.translation.vector) / (2.0 * h);
    let dr = plus.rotation.matrix() * minus.rotation.matrix().transpose();
    let w = small_rotation_vector(&dr) / (2.0 * h);
    Vector6::new(v.x, v.y, v.z, w.x, w.y, w.z)
}

fn limits() -> JointLimits {
    JointLimits {
        lower: -3.0,
        upper: 3.0,
        velocity: 10.0,
        torque: 100.0,
    }
}

fn link(name: &str, mass: f64, com: [f64; 3]) -> Link {
    Link {
        name: name.into(),
        mass,
        com: Vector3::from(com),
        inertia: Matrix3::from_diagonal(&Vector3::new(0.01, 0.02, 0.03)),
    }
}

fn frame(name: &str, link: usize, xyz: [f64; 3]) -> Frame {
    Frame {
        name: name.into(),
        link,
        offset: pose_xyz_rpy(xyz, [0.0; 3]),
    }
}

/// Base plus one revolute joint about z, with a frame at radius `r` on x.
fn lever(r: f64) -> RobotModel {
    RobotModel::new(ModelSpec {
        name: "lever".into(),
        links: vec![link("base", 1.0, [0.0; 3]), link("arm", 1.0, [r / 2.0, 0.0, 0.0])],
        joints: vec![Joint {
            name: "j".into(),
            parent: 0,
            child: 1,
            axis: Vector3::z(),
            origin: Pose::identity(),
            limits: limits(),
        }],
        base: 0,
        frames: vec![frame("tip", 1, [r, 0.0, 0.0]), frame("root", 0, [0.0; 3])],
        foot: FootGeometry { length: 0.1, width: 0.1 },
        torso: "root".into(),
        left_foot: "tip".into(),
        right_foot: "tip".into(),
    })
    .unwrap()
}

fn single_box(mass: f64) -> RobotModel {
    RobotModel::new(ModelSpec {
        name: "box".into(),
        links: vec![link("box", mass, [0.1, -0.2, 0.3])],
        joints: vec![],
        base: 0,
        frames: vec![frame("c", 0, [0.0; 3])],
        foot: FootGeometry { length: 0.1, width: 0.1 },
        torso: "c".into(),
        left_foot: "c".into(),
        right_foot: "c".into(),
    })
    .unwrap()
}

#[test]
fn zero_configuration_composes_fixed_origins() {
    let model = mini_biped();
    let state = RobotState::zero(&model);
    let sole = frame_pose(&model, &state, model.left_foot_frame).unwrap();
    // hip (0, 0.08, 0) + knee -0.22 + ankle -0.22 + sole -0.06
    assert!((sole.translation.vector - Vector3::new(0.0, 0.08, -0.5)).amax() < 1e-15);
    assert!((sole.rotation.matrix() - Matrix3::identity()).amax() < 1e-15);
    let torso = frame_pose(&model, &state, model.torso_frame).unwrap();
    assert!((torso.translation.vector - Vector3::new(0.0, 0.0, 0.25)).amax() < 1e-15);
    let com = com_state(&model, &state).unwrap().position;
    assert!((com.z + 0.5 - 0.532).abs() < 1e-3, "com height above soles {}", com.z + 0.5);
}

#[test]
fn translation_equivariance() {
    let model = mini_biped();
    let mut state = random_state(&mut rng(1), &model);
    let before: Vec<_> = (0..model.frames.len())
        .map(|f| frame_pose(&model, &state, FrameId(f)).unwrap())
        .collect();
    state.base_position += Vector3::new(1.0, 0.0, 0.0);
    for (f, b) in before.iter().enumerate() {
        let a = frame_pose(&model, &state, FrameId(f)).unwrap();
        assert!((a.translation.vector - b.translation.vector - Vector3::x()).amax() < 1e-14);
    }
}

#[test]
fn knee_bend_matches_chain_multiplication() {
    let model = mini_biped();
    let mut state = RobotState::zero(&model);
    state.joint_positions[model.joint_index("l_knee").unwrap()] = 0.1;
    let oracle = chain_oracle(&model, &state);
    for (i, f) in model.frames.iter().enumerate() {
        let expected = oracle[f.link] * f.offset.to_homogeneous();
        let got = frame_pose(&model, &state, FrameId(i)).unwrap().to_homogeneous();
        assert!((got - expected).amax() < 1e-14, "frame {}", f.name);
    }
    let mut rnd = rng(2);
    for _ in 0..20 {
        let state = random_state(&mut rnd, &model);
        let oracle = chain_oracle(&model, &state);
        for (i, f) in model.frames.iter().enumerate() {
            let expected = oracle[f.link] * f.offset.to_homogeneous();
            let got = frame_pose(&model, &state, FrameId(i)).unwrap();
            assert!((got.to_homogeneous() - expected).amax() < 1e-12);
            assert!(dcmwalk::rigidbody::math::orthonormality_error(got.rotation.matrix()) < 1e-9);
        }
    }
}

#[test]
fn unknown_frame_is_reported() {
    let model = mini_biped();
    assert!(model.frame_id("nose").is_err());
    let state = RobotState::zero(&model);
    assert!(frame_pose(&model, &state, FrameId(99)).is_err());
}

#[test]
fn angular_base_block_is_identity() {
    let model = mini_biped();
    let state = random_state(&mut rng(3), &model);
    for f in 0..model.frames.len() {
        let j = frame_jacobian(&model, &state, FrameId(f)).unwrap();
        assert_eq!(j.view((3, 0), (3, 3)).amax(), 0.0);
        assert!((j.view((3, 3), (3, 3)) - Matrix3::identity()).amax() == 0.0);
    }
}

#[test]
fn lever_column_and_centripetal_term() {
    let r = 0.3;
    let model = lever(r);
    let tip = model.frame_id("tip").unwrap();
    let mut state = RobotState::zero(&model);
    let j = frame_jacobian(&model, &state, tip).unwrap();
    assert!((j.fixed_view::<3, 1>(0, 6) - Vector3::new(0.0, r, 0.0)).amax() < 1e-15);
    let omega = 2.0;
    state.joint_velocities[0] = omega;
    let kin = Kinematics::new(&model, &state).unwrap();
    let a = kin.bias_acceleration(tip).unwrap();
    assert!((a.fixed_rows::<3>(0) - Vector3::new(-r * omega * omega, 0.0, 0.0)).amax() < 1e-14);
    let still = RobotState::zero(&model);
    assert_eq!(Kinematics::new(&model, &still).unwrap().bias_acceleration(tip).unwrap(), Vector6::zeros());
}

#[test]
fn jacobians_match_finite_differences() {
    let model = mini_biped();
    let mut rnd = rng(4);
    for _ in 0..20 {
        let state = random_state(&mut rnd, &model);
        let nu = state.velocity();
        for f in 0..model.frames.len() {
            let j = frame_jacobian(&model, &state, FrameId(f)).unwrap();
            let fd = twist_fd(&model, &state, FrameId(f), 1e-6);
            let err = (j * &nu - fd).amax();
            assert!(rel(err, fd.amax()) <= 1e-5, "frame {f}: {err:e}");
        }
    }
}

#[test]
fn bias_acceleration_matches_finite_differences() {
    let model = mini_biped();
    let mut rnd = rng(5);
    let h = 1e-5;
    for _ in 0..20 {
        let state = random_state(&mut rnd, &model);
        let nu = state.velocity();
        for f in 0..model.frames.len() {
            let jp = frame_jacobian(&model, &advance(&state, h), FrameId(f)).unwrap() * &nu;
            let jm = frame_jacobian(&model, &advance(&state, -h), FrameId(f)).unwrap() * &nu;
            let fd = (jp - jm) / (2.0 * h);
            let a = Kinematics::new(&model, &state).unwrap().bias_acceleration(FrameId(f)).unwrap();
            let err = (a - &fd).amax();
            assert!(rel(err, fd.amax()) <= 1e-4, "frame {f}: {err:e}");
        }
    }
}

#[test]
fn com_jacobian_and_bias_match_finite_differences() {
    let model = mini_biped();
    let mut rnd = rng(6);
    let h = 1e-6;
    for _ in 0..20 {
        let state = random_state(&mut rnd, &model);
        let nu = state.velocity();
        let com = com_state(&model, &state).unwrap();
        let fd = (com_state(&model, &advance(&state, h)).unwrap().position
            - com_state(&model, &advance(&state, -h)).unwrap().position)
            / (2.0 * h);
        let err = (&com.jacobian * &nu - fd).amax();
        assert!(rel(err, fd.amax()) <= 1e-5, "{err:e}");

        let h2 = 1e-5;
        let vp = com_state(&model, &advance(&state, h2)).unwrap().jacobian * &nu;
        let vm = com_state(&model, &advance(&state, -h2)).unwrap().jacobian * &nu;
        let fd_acc = (vp - vm) / (2.0 * h2);
        let bias = Kinematics::new(&model, &state).unwrap().com_bias_acceleration();
        assert!(rel((bias - &fd_acc).amax(), fd_acc.amax()) <= 1e-4);
    }
}

#[test]
fn com_of_simple_bodies() {
    let model = single_box(2.0);
    let mut state = RobotState::zero(&model);
    state.base_position = Vector3::new(1.0, 2.0, 3.0);
    let com = com_state(&model, &state).unwrap().position;
    assert!((com - Vector3::new(1.1, 1.8, 3.3)).amax() < 1e-15);

    // Two equal point-like masses at 0 and x = 0.3.
    let mut spec_model = lever(0.6);
    spec_model.links[0].com = Vector3::zeros();
    spec_model.links[1].com = Vector3::new(0.3, 0.0, 0.0);
    let com = com_state(&spec_model, &RobotState::zero(&spec_model)).unwrap().position;
    assert!((com - Vector3::new(0.15, 0.0, 0.0)).amax() < 1e-15);
}

#[test]
fn free_box_mass_block() {
    let model = single_box(3.5);
    let state = random_state(&mut rng(7), &model);
    let m = mass_matrix(&model, &state).unwrap();
    assert!((m.view((0, 0), (3, 3)) - Matrix3::identity() * 3.5).amax() < 1e-14);
}

#[test]
fn mass_matrix_symmetric_positive_definite_and_energy_oracle() {
    let model = mini_biped();
    let mut rnd = rng(8);
    for _ in 0..100 {
        let state = random_state(&mut rnd, &model);
        let m = mass_matrix(&model, &state).unwrap();
        assert!((&m - m.transpose()).amax() <= 1e-10);
        let eig = m.clone().symmetric_eigenvalues();
        assert!(eig.min() > 0.0);

        let nu = state.velocity();
        let ke = 0.5 * nu.dot(&(&m * &nu));
        let vel = link_velocities_oracle(&model, &state);
        let poses = chain_oracle(&model, &state);
        let oracle: f64 = model
            .links
            .iter()
            .zip(vel.iter().zip(&poses))
            .map(|(l, ((v, w), h))| {
                let r = h.fixed_view::<3, 3>(0, 0);
                let iw = r * l.inertia * r.transpose();
                0.5 * l.mass * v.norm_squared() + 0.5 * w.dot(&(iw * w))
            })
            .sum();
        assert!(((ke - oracle) / oracle).abs() <= 1e-8, "{ke} vs {oracle}");
    }
}

#[test]
fn gravity_vector_at_rest() {
    let model = mini_biped();
    let mut state = random_state(&mut rng(9), &model);
    state.set_velocity(&DVector::zeros(model.dof() + 6));
    let g = bias_forces(&model, &state, &GRAVITY).unwrap();
    let weight = model.total_mass() * 9.81;
    assert!((g.fixed_rows::<3>(0) - Vector3::new(0.0, 0.0, weight)).amax() < 1e-10);
    let zero = bias_forces(&model, &state, &Vector3::zeros()).unwrap();
    assert!(zero.amax() < 1e-12);
}

/// Integrates `M nu_dot + h = B tau + J' f` with RK4 and checks that the
/// kinetic energy change equals the accumulated power of the applied and
/// gravity forces.
#[test]
fn energy_balance_over_a_tenth_of_a_second() {
    let model = mini_biped();
    let n = model.dof();
    let sole = model.left_foot_frame;
    let state0 = random_state(&mut rng(10), &model);
    let wrench = DVector::from_vec(vec![5.0, -3.0, 40.0, 0.5, -0.2, 0.1]);
    let tau_at = |t: f64| DVector::from_fn(n, |k, _| 2.0 * ((k as f64) + 3.0 * t).sin());

    let gen_force = |s: &RobotState, t: f64| -> (DVector<f64>, DVector<f64>) {
        let kin = Kinematics::new(&model, s).unwrap();
        let m = kin.mass_matrix();
        let h = kin.bias_forces(&GRAVITY);
        let g = kin.gravity_forces(&GRAVITY);
        let j = kin.frame_jacobian(sole).unwrap();
        let mut q = j.transpose() * &wrench;
        { let mut tail = q.rows_mut(6, n); tail += tau_at(t); }
        let nu_dot = m.cholesky().unwrap().solve(&(&q - h));
        let nu = s.velocity();
        let power = nu.dot(&(q - g));
        (nu_dot, DVector::from_element(1, power))
    };
    // State layout: p(3) R(9) s(n) nu(n+6) work(1)
    let pack = |s: &RobotState, w: f64| {
        let mut x = DVector::zeros(12 + n + n + 6 + 1);
        x.rows_mut(0, 3).copy_from(&s.base_position);
        x.rows_mut(3, 9).copy_from_slice(s.base_rotation.as_slice());
        x.rows_mut(12, n).copy_from(&s.joint_positions);
        x.rows_mut(12 + n, n + 6).copy_from(&s.velocity());
        x[12 + 2 * n + 6] = w;
        x
    };
    let unpack = |x: &DVector<f64>| {
        let mut s = RobotState::zero(&model);
        s.base_position = x.fixed_rows::<3>(0).into_owned();
        let r = Matrix3::from_column_slice(x.rows(3, 9).as_slice());
        s.base_rotation = *Rotation3::from_matrix_eps(&r, 1e-16, 50, Rotation3::identity()).matrix();
        s.joint_positions = x.rows(12, n).into_owned();
        s.set_velocity(&x.rows(12 + n, n + 6).into_owned());
        s
    };
    let deriv = |x: &DVector<f64>, t: f64| {
        let s = unpack(x);
        let (nu_dot, power) = gen_force(&s, t);
        let mut d = DVector::zeros(x.len());
        d.rows_mut(0, 3).copy_from(&s.base_linear_velocity);
        let rdot = dcmwalk::rigidbody::math::skew(&s.base_angular_velocity) * s.base_rotation;
        d.rows_mut(3, 9).copy_from_slice(rdot.as_slice());
        d.rows_mut(12, n).copy_from(&s.joint_velocities);
        d.rows_mut(12 + n, n + 6).copy_from(&nu_dot);
        d[12 + 2 * n + 6] = power[0];
        d
    };
    let ke = |s: &RobotState| Kinematics::new(&model, s).unwrap().kinetic_energy();

    let dt = 1e-3;
    let mut x = pack(&state0, 0.0);
    for k in 0..100 {
        let t = k as f64 * dt;
        let k1 = deriv(&x, t);
        let k2 = deriv(&(&x + &k1 * (dt / 2.0)), t + dt / 2.0);
        let k3 = deriv(&(&x + &k2 * (dt / 2.0)), t + dt / 2.0);
        let k4 = deriv(&(&x + &k3 * dt), t + dt);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    let s1 = unpack(&x);
    let delta = ke(&s1) - ke(&state0);
    let work = x[12 + 2 * n + 6];
    let scale = work.abs().max(ke(&state0));
    assert!(((delta - work) / scale).abs() <= 1e-5, "dKE {delta} vs work {work}");
}

#[test]
fn kinetic_energy_equals_quadratic_form() {
    let model = mini_biped();
    let state = random_state(&mut rng(11), &model);
    let kin = Kinematics::new(&model, &state).unwrap();
    let nu = state.velocity();
    let m: DMatrix<f64> = kin.mass_matrix();
    assert!((kin.kinetic_energy() - 0.5 * nu.dot(&(m * &nu))).abs() < 1e-12);
}

#[test]
fn global_zmp_single_contact_and_hull() {
    let model = mini_biped();
    let state = RobotState::zero(&model);
    let pose = frame_pose(&model, &state, model.left_foot_frame).unwrap();
    let w = ContactWrench {
        frame: model.left_foot_frame,
        force: Vector3::new(0.0, 0.0, 200.0),
        torque: Vector3::new(2.0, -4.0, 0.0),
    };
    let z = global_zmp(&[ZmpContact { wrench: w, pose }], 1.0).unwrap();
    assert!((z - nalgebra::Vector2::new(0.02, 0.08 + 0.01)).amax() < 1e-15);

    let mut rnd = rng(12);
    use rand::Rng;
    for _ in 0..50 {
        let contacts: Vec<ZmpContact> = (0..2)
            .map(|k| ZmpContact {
                wrench: ContactWrench {
                    frame: FrameId(k),
                    force: Vector3::new(0.0, 0.0, rnd.random_range(1.0..300.0)),
                    torque: Vector3::new(rnd.random_range(-5.0..5.0), rnd.random_range(-5.0..5.0), 0.0),
                },
                pose: pose_xyz_rpy([rnd.random_range(-1.0..1.0), rnd.random_range(-1.0..1.0), 0.0], [0.0, 0.0, rnd.random_range(-3.0..3.0)]),
            })
            .collect();
        let locals: Vec<nalgebra::Vector2<f64>> = contacts
            .iter()
            .map(|c| {
                let l = dcmwalk::rigidbody::local_zmp(&c.wrench, 1.0).unwrap();
                let p = c.pose * nalgebra::Point3::new(l.x, l.y, 0.0);
                nalgebra::Vector2::new(p.x, p.y)
            })
            .collect();
        let z = global_zmp(&contacts, 1.0).unwrap();
        // Inside the segment between the two local ZMPs.
        let d = locals[1] - locals[0];
        let t = (z - locals[0]).dot(&d) / d.norm_squared();
        assert!((-1e-12..=1.0 + 1e-12).contains(&t));
        assert!((locals[0] + d * t - z).norm() < 1e-9);
    }
}
