use dcmwalk::planner::*;
use nalgebra::{Matrix4, Vector2, Vector4};
use proptest::prelude::*;

const B: f64 = 0.2325;

fn constants() -> PendulumConstants {
    // z0 chosen so that b = 0.2325 s.
    PendulumConstants::new(B * B * 9.81, 9.81)
}

fn feet() -> (Pose2, Pose2) {
    (Pose2::new(0.0, 0.08, 0.0), Pose2::new(0.0, -0.08, 0.0))
}

fn smooth_settings() -> WalkSettings {
    let mut s = WalkSettings::default();
    s.bounds.t_min = 1.0;
    s.ds_fraction = 0.7;
    s.first_impact = 1.2;
    s
}

fn walk(settings: &WalkSettings, duration: f64) -> WalkPlan {
    let (l, r) = feet();
    plan_walk(settings, constants(), l, r, Vector2::zeros(), 0.01, duration).unwrap()
}

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
fn pendulum_time_constant() {
    let c = PendulumConstants::new(0.53, 9.81);
    assert!((c.b - (0.53f64 / 9.81).sqrt()).abs() <= 1e-12);
}

#[test]
fn step_ratio_at_long_short_bounds() {
    let (l, r) = feet();
    let bounds = FootstepBounds {
        t_min: 0.83,
        l_max: 0.28,
        ..FootstepBounds::default()
    };
    let cmd = UnicycleCommand { speed: 0.337, turn_rate: 0.0 };
    let steps = plan_footsteps(l, r, cmd, 1.0, 12.0, &bounds).unwrap();
    for w in steps[1..].windows(2) {
        let len = (w[1].position.x - w[0].position.x).abs();
        let ratio = len / w[1].step_duration;
        assert!((ratio - 0.3372).abs() < 5e-4, "{ratio}");
        assert!(len <= 0.28 && (w[1].step_duration - 0.83).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn planned_steps_respect_bounds(speed in 0.0f64..0.55, turn in -0.3f64..0.3) {
        let (l, r) = feet();
        let bounds = FootstepBounds::default();
        let cmd = UnicycleCommand { speed, turn_rate: turn };
        let steps = plan_footsteps(l, r, cmd, 1.0, 10.0, &bounds).unwrap();
        prop_assert_eq!(steps[0].side, Side::Left);
        prop_assert_eq!(steps[1].side, Side::Right);
        for w in steps[1..].windows(2) {
            prop_assert_ne!(w[0].side, w[1].side);
            let d = w[1].step_duration;
            prop_assert!(d >= bounds.t_min - 1e-9 && d <= bounds.t_max + 1e-9);
            // Step length between unicycle centres.
            let c = |s: &Footstep| s.position - Vector2::new(-s.yaw.sin(), s.yaw.cos()) * (s.side.sign() * 0.08);
            let len = (c(&w[1]) - c(&w[0])).norm();
            prop_assert!(len >= bounds.l_min - 1e-9 && len <= bounds.l_max + 1e-9, "len {}", len);
        }
    }
}

#[test]
fn swing_boundary_and_apex() {
    let plan = walk(&smooth_settings(), 8.0);
    let mut checked = 0;
    for traj in [&plan.left, &plan.right] {
        for (t0, t1) in traj.swings() {
            let a = traj.sample(t0);
            let b = traj.sample(t1 - 1e-12);
            assert!(a.velocity.norm() + a.yaw_rate.abs() <= 1e-9);
            assert!(b.velocity.norm() + b.yaw_rate.abs() <= 1e-9);
            let mid = traj.sample(0.5 * (t0 + t1));
            assert!((mid.position.z - 0.03).abs() <= 1e-9);
            let start = traj.sample(t0).position;
            let end = traj.sample(t1).position;
            assert!((mid.position.x - (start.x + end.x) / 2.0).abs() < 1e-12);
            assert!(end.z.abs() < 1e-12);
            checked += 1;
        }
    }
    assert!(checked >= 4);
}

#[test]
fn two_step_recursion_matches_scalar_evaluation() {
    let c = constants();
    let steps = [step(0.0, 0.0), step(0.2, 0.8)];
    let pieces = plan_dcm(&steps, &c, TerminalRule::LastFootstep).unwrap();
    // exp(-0.8 / 0.2325) = 0.0320371146628982
    assert!((pieces[0].xi_ios.x - 0.0064074229325796405).abs() < 1e-15);
    assert!((pieces[0].xi_eos(c.b) - Vector2::new(0.2, 0.0)).norm() < 1e-12);
}

#[test]
fn zero_window_equals_raw_recursion() {
    let c = constants();
    let steps = [step(0.0, 0.0), step(0.1, 0.8), step(0.3, 1.6), step(0.4, 2.4)];
    let pieces = plan_dcm(&steps, &c, TerminalRule::LastFootstep).unwrap();
    let traj = smooth_dcm(&pieces, &[0.0; 4], c.b, None).unwrap();
    for k in 0..300 {
        let t = k as f64 * 0.01;
        assert_eq!(traj.eval(t), traj.raw(t));
        let i = ((t / 0.8).floor() as usize).min(2);
        let (x, _) = pieces[i].eval(t, c.b);
        assert!(t >= 2.4 || (traj.eval(t).0 - x).norm() < 1e-12);
    }
}

#[test]
fn window_boundaries_and_mid_value_match_cubic_solve() {
    let c = constants();
    let steps = [step(0.0, 0.0), step(0.1, 0.8), step(0.3, 1.6)];
    let pieces = plan_dcm(&steps, &c, TerminalRule::LastFootstep).unwrap();
    let w = 0.2;
    let traj = smooth_dcm(&pieces, &[0.0, w, 0.0], c.b, None).unwrap();
    let (t0, t1) = (0.8 - w / 2.0, 0.8 + w / 2.0);
    let (x0, v0) = pieces[0].eval(t0, c.b);
    let (x1, v1) = pieces[1].eval(t1, c.b);
    for (t, x, v) in [(t0, x0, v0), (t1, x1, v1)] {
        let (xs, vs) = traj.eval(t);
        assert!((xs - x).norm() < 1e-10 && (vs - v).norm() < 1e-10);
    }
    // a + b t + c t^2 + d t^3 through the boundary values, solved as a 4x4 system.
    let m = Matrix4::new(
        1.0, t0, t0 * t0, t0 * t0 * t0,
        0.0, 1.0, 2.0 * t0, 3.0 * t0 * t0,
        1.0, t1, t1 * t1, t1 * t1 * t1,
        0.0, 1.0, 2.0 * t1, 3.0 * t1 * t1,
    );
    let coef = m.lu().solve(&Vector4::new(x0.x, v0.x, x1.x, v1.x)).unwrap();
    let tm = 0.8;
    let expected = coef[0] + coef[1] * tm + coef[2] * tm * tm + coef[3] * tm * tm * tm;
    assert!((traj.eval(tm).0.x - expected).abs() < 1e-10);
}

#[test]
fn stationary_dcm_pulls_com_exponentially() {
    let c = constants();
    let steps = [step(0.1, 0.0), step(0.1, 5.0)];
    let pieces = plan_dcm(&steps, &c, TerminalRule::LastFootstep).unwrap();
    let traj = smooth_dcm(&pieces, &[0.0, 0.0], c.b, None).unwrap();
    let out = derive_zmp_com(&traj, &c, Vector2::zeros(), 0.01, 200);
    for (k, (zmp, com, _)) in out.iter().enumerate() {
        let t = k as f64 * 0.01;
        assert!((zmp.x - 0.1).abs() < 1e-15);
        let exact = 0.1 - 0.1 * (-t / c.b).exp();
        // RK4 truncation at T / b = 0.043 stays around 1e-9.
        assert!((com.x - exact).abs() < 1e-8, "{t}: {} vs {exact}", com.x);
    }
}

#[test]
fn com_matches_ten_times_finer_integration() {
    let c = constants();
    let plan = walk(&smooth_settings(), 4.0);
    let fine = derive_zmp_com(&plan.dcm, &c, Vector2::zeros(), 0.001, 4001);
    for (k, s) in plan.refs.samples.iter().enumerate() {
        assert!((s.com - fine[10 * k].1).norm() <= 1e-5);
    }
}

#[test]
fn reference_invariants() {
    let plan = walk(&smooth_settings(), 10.0);
    let b = plan.constants.b;
    let t = plan.refs.period;
    let samples = &plan.refs.samples;
    let max_dd = samples
        .windows(2)
        .map(|w| (w[1].dcm_rate - w[0].dcm_rate).norm() / t)
        .fold(0.0, f64::max);
    let half_l = 0.19 / 2.0;
    let half_w = 0.09 / 2.0;
    for (k, s) in samples.iter().enumerate() {
        assert!((s.dcm_rate - (s.dcm - s.zmp) / b).norm() <= 1e-9);
        if k + 1 < samples.len() {
            let n = &samples[k + 1];
            assert!((n.zmp - s.zmp).norm() <= 0.5 * t, "zmp jump at {}", s.t);
            let fd = (n.dcm - s.dcm) / t;
            assert!((fd - s.dcm_rate).norm() <= 10.0 * t * max_dd + 1e-12);
        }
        let stance = match s.phase {
            ContactPhase::LeftSS => Some(&s.left),
            ContactPhase::RightSS => Some(&s.right),
            ContactPhase::DS => None,
        };
        if let Some(foot) = stance {
            let d = s.zmp - foot.position.xy();
            let (c, sn) = (foot.yaw.cos(), foot.yaw.sin());
            let local = Vector2::new(c * d.x + sn * d.y, -sn * d.x + c * d.y);
            assert!(local.x.abs() <= half_l && local.y.abs() <= half_w);
            // Pure single support follows the exponential exactly.
            assert!(d.norm() < 1e-9, "{} {}", s.t, d.norm());
        }
    }
}

#[test]
fn unsmoothed_recursion_has_zmp_jumps() {
    let plan = walk(&smooth_settings(), 10.0);
    let raw = smooth_dcm(&plan.pieces, &vec![0.0; plan.pieces.len() + 1], plan.constants.b, None).unwrap();
    let t = plan.refs.period;
    let zmp = |k: usize| {
        let (x, v) = raw.raw(k as f64 * t);
        x - v * plan.constants.b
    };
    let max_jump = (0..999).map(|k| (zmp(k + 1) - zmp(k)).norm()).fold(0.0, f64::max);
    assert!(max_jump > 0.5 * t, "{max_jump}");
}

#[test]
fn plan_csv_and_footsteps_files() {
    let plan = walk(&smooth_settings(), 3.0);
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("plan.csv");
    write_plan_csv(&plan.refs, &csv_path).unwrap();
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().count(), 1 + plan.refs.samples.len());
    assert!(text.starts_with("t,xi_x,xi_y"));
    let fs_path = dir.path().join("footsteps.txt");
    write_footsteps(&plan.footsteps, &fs_path).unwrap();
    let back = parse_footsteps(&std::fs::read_to_string(&fs_path).unwrap()).unwrap();
    assert_eq!(back, plan.footsteps);
}
