mod common;

use common::{enumerate_active_sets, random_box_qp, random_qp, rng};
use dcmwalk::qp::{solve, QpProblem, QpSettings, QpStatus};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn complementarity(p: &QpProblem, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let ax = &p.constraint_matrix * x;
    (0..p.num_constraints())
        .map(|i| {
            let slack = if y[i] > 0.0 {
                p.upper_bounds[i] - ax[i]
            } else {
                ax[i] - p.lower_bounds[i]
            };
            if y[i] == 0.0 {
                0.0
            } else {
                (y[i] * slack).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[test]
fn box_constrained_qps_match_enumeration() {
    let mut r = rng(7);
    for _ in 0..20 {
        let p = random_box_qp(&mut r, 6, 5);
        let sol = solve(&p, &QpSettings::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        let oracle = enumerate_active_sets(&p).expect("feasible");
        assert!((&sol.primal - &oracle).amax() <= 1e-6);
        assert!(p.dual_residual(&sol.primal, &sol.dual) <= 1e-6);
        assert!(complementarity(&p, &sol.primal, &sol.dual) <= 1e-6);
    }
}

#[test]
fn general_rows_match_enumeration() {
    let mut r = rng(11);
    for k in 0..30 {
        let n = 2 + k % 7;
        let m = 1 + k % 8;
        let p = random_qp(&mut r, n, m);
        let sol = solve(&p, &QpSettings::default()).unwrap();
        match enumerate_active_sets(&p) {
            Some(oracle) => {
                assert_eq!(sol.status, QpStatus::Solved, "case {k}");
                assert!((&sol.primal - &oracle).amax() <= 1e-6, "case {k}");
                assert!(complementarity(&p, &sol.primal, &sol.dual) <= 1e-6);
            }
            None => assert_eq!(sol.status, QpStatus::PrimalInfeasible, "case {k}"),
        }
    }
}

#[test]
fn inactive_inequalities_reduce_to_equality_kkt() {
    let mut r = rng(3);
    let mut p = random_qp(&mut r, 6, 2);
    // One equality row plus inequalities far away.
    p.lower_bounds[0] = 0.25;
    p.upper_bounds[0] = 0.25;
    p.upper_bounds[1] = 1e6;
    let sol = solve(&p, &QpSettings::default()).unwrap();
    assert_eq!(sol.status, QpStatus::Solved);

    let n = 6;
    let mut kkt = DMatrix::zeros(n + 1, n + 1);
    kkt.view_mut((0, 0), (n, n)).copy_from(&p.hessian);
    let mut rhs = DVector::zeros(n + 1);
    for j in 0..n {
        kkt[(n, j)] = p.constraint_matrix[(0, j)];
        kkt[(j, n)] = p.constraint_matrix[(0, j)];
        rhs[j] = -p.gradient[j];
    }
    rhs[n] = 0.25;
    let x = kkt.lu().solve(&rhs).unwrap().rows(0, n).into_owned();
    assert!((&sol.primal - x).amax() <= 1e-8);
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let mut r = rng(5);
    let p = random_qp(&mut r, 12, 8);
    let a = solve(&p, &QpSettings::default()).unwrap();
    let b = solve(&p, &QpSettings::default()).unwrap();
    assert_eq!(a, b);
    for (u, v) in a.primal.iter().zip(b.primal.iter()) {
        assert_eq!(u.to_bits(), v.to_bits());
    }
}

#[test]
fn warm_start_reaches_the_same_optimum() {
    let mut r = rng(9);
    let p = random_qp(&mut r, 10, 8);
    let mut ws = dcmwalk::qp::Solver::new();
    let settings = QpSettings {
        warm_start: true,
        ..QpSettings::default()
    };
    let cold = ws.solve(&p, &settings).unwrap();
    let warm = ws.solve(&p, &settings).unwrap();
    assert!((&cold.primal - &warm.primal).amax() <= 1e-9);
    assert!(warm.iterations <= cold.iterations);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solved_returns_satisfy_kkt(seed in 0u64..10_000, n in 1usize..10, m in 0usize..10) {
        let mut r = rng(seed);
        let p = random_qp(&mut r, n, m);
        let sol = solve(&p, &QpSettings::default()).unwrap();
        if sol.status == QpStatus::Solved {
            prop_assert!(p.dual_residual(&sol.primal, &sol.dual) <= 1e-6);
            prop_assert!(p.primal_residual(&sol.primal) <= 1e-8);
            prop_assert!(complementarity(&p, &sol.primal, &sol.dual) <= 1e-6);
            prop_assert!(sol.primal_residual <= 1e-8 && sol.dual_residual <= 1e-6);
        }
    }
}
