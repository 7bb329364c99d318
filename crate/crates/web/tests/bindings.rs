use dcmwalk_web::{gain_stability, plan, push};

#[test]
fn plan_returns_matching_series() {
    let p = plan(0.15, 0.0, 6.0).unwrap();
    let n = p.times().len();
    assert_eq!(n, 600);
    for s in [p.dcm(), p.zmp(), p.com()] {
        assert_eq!(s.len(), 2 * n);
    }
    let steps = p.footsteps();
    assert_eq!(steps.len() % 4, 0);
    assert!(steps.len() / 4 > 4);
    // Walking forward: the last footstep is ahead of the first.
    assert!(steps[steps.len() - 4] > steps[0] + 0.3);
    assert!(plan(10.0, 0.0, 6.0).is_err());
}

#[test]
fn mpc_keeps_the_pushed_zmp_inside() {
    let inst = push(false, 0.08, 0.0, 2.0, 0.15).unwrap();
    let mpc = push(true, 0.08, 0.0, 2.0, 0.15).unwrap();
    assert!(inst.outside() > 0);
    assert_eq!(mpc.outside(), 0);
    assert!(!inst.fell() && !mpc.fell());
    assert_eq!(mpc.zmp_cmd().len(), 1000);
    let big = push(false, 0.4, 0.0, 2.0, 0.15).unwrap();
    assert!(big.fell() && big.fall_time() >= 2.0);
}

#[test]
fn gain_report_matches_the_stability_condition() {
    let ok = gain_stability(2.0, 2.0, 0.5, 0.5);
    assert!(ok.accepted() && ok.max_real() < 0.0);
    assert_eq!(ok.eigenvalues().len(), 8);
    let bad = gain_stability(0.5, 0.5, 0.5, 0.5);
    assert!(!bad.accepted() && bad.max_real() > 0.0);
}
