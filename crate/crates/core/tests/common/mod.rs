//! Test-only oracles shared by the integration suites.
#![allow(dead_code)]

pub mod gait;

use dcmwalk::qp::QpProblem;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brute-force QP oracle: for every assignment of each constraint row to
/// {inactive, at lower, at upper}, solve the equality KKT system and keep the
/// feasible point with the lowest objective.
pub fn enumerate_active_sets(p: &QpProblem) -> Option<DVector<f64>> {
    let n = p.num_variables();
    let m = p.num_constraints();
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut choice = vec![0u8; m];
    loop {
        let rows: Vec<(usize, f64)> = choice
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| match c {
                1 => Some((i, p.lower_bounds[i])),
                2 => Some((i, p.upper_bounds[i])),
                _ => None,
            })
            .collect();
        if rows.iter().all(|(_, b)| b.is_finite()) && rows.len() <= n {
            let k = rows.len();
            let mut kkt = DMatrix::zeros(n + k, n + k);
            let mut rhs = DVector::zeros(n + k);
            kkt.view_mut((0, 0), (n, n)).copy_from(&p.hessian);
            for j in 0..n {
                rhs[j] = -p.gradient[j];
            }
            for (r, &(i, b)) in rows.iter().enumerate() {
                for j in 0..n {
                    kkt[(n + r, j)] = p.constraint_matrix[(i, j)];
                    kkt[(j, n + r)] = p.constraint_matrix[(i, j)];
                }
                rhs[n + r] = b;
            }
            if let Some(sol) = kkt.lu().solve(&rhs) {
                let x = sol.rows(0, n).into_owned();
                if p.primal_residual(&x) <= 1e-9 {
                    let f = p.objective(&x);
                    if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                        best = Some((f, x));
                    }
                }
            }
        }
        // Next assignment (base-3 counter).
        let mut i = 0;
        loop {
            if i == m {
                return best.map(|(_, x)| x);
            }
            choice[i] += 1;
            if choice[i] < 3 {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Random strictly convex QP: `H = B'B + 0.1 I`, general one-sided rows
/// `a'x <= u` whose bounds cut through the unconstrained optimum region.
pub fn random_qp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> QpProblem {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let hessian = b.transpose() * &b + DMatrix::identity(n, n) * 0.1;
    let hessian = (&hessian + hessian.transpose()) * 0.5;
    let gradient = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    let lower = DVector::from_element(m, f64::NEG_INFINITY);
    let upper = DVector::from_fn(m, |_, _| rng.random_range(-0.5..1.0));
    QpProblem {
        hessian,
        gradient,
        constraint_matrix: a,
        lower_bounds: lower,
        upper_bounds: upper,
    }
}

/// Random strictly convex QP with two-sided box constraints on the first
/// `boxes` variables.
pub fn random_box_qp(rng: &mut ChaCha8Rng, n: usize, boxes: usize) -> QpProblem {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let hessian = b.transpose() * &b + DMatrix::identity(n, n) * 0.1;
    let hessian = (&hessian + hessian.transpose()) * 0.5;
    let gradient = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
    let a = DMatrix::from_fn(boxes, n, |i, j| if i == j { 1.0 } else { 0.0 });
    let lower = DVector::from_fn(boxes, |_, _| rng.random_range(-1.0..-0.1));
    let upper = DVector::from_fn(boxes, |_, _| rng.random_range(0.1..1.0));
    QpProblem {
        hessian,
        gradient,
        constraint_matrix: a,
        lower_bounds: lower,
        upper_bounds: upper,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniformly random configuration inside the joint limits, random base pose
/// and velocities in [-1, 1].
pub fn random_state(rng: &mut ChaCha8Rng, model: &dcmwalk::rigidbody::RobotModel) -> dcmwalk::rigidbody::RobotState {
    use nalgebra::{Rotation3, Vector3};
    let mut s = dcmwalk::rigidbody::RobotState::zero(model);
    let v3 = |rng: &mut ChaCha8Rng, k: f64| Vector3::new(rng.random_range(-k..k), rng.random_range(-k..k), rng.random_range(-k..k));
    s.base_position = v3(rng, 1.0);
    s.base_rotation = *Rotation3::new(v3(rng, 2.0)).matrix();
    s.base_linear_velocity = v3(rng, 1.0);
    s.base_angular_velocity = v3(rng, 1.0);
    for (k, j) in model.joints.iter().enumerate() {
        s.joint_positions[k] = rng.random_range(j.limits.lower..j.limits.upper);
        s.joint_velocities[k] = rng.random_range(-1.0..1.0);
    }
    s
}

/// Rodrigues rotation written out explicitly, independent of the library.
pub fn rodrigues(axis: &nalgebra::Vector3<f64>, angle: f64) -> nalgebra::Matrix3<f64> {
    let k = nalgebra::Matrix3::new(0.0, -axis.z, axis.y, axis.z, 0.0, -axis.x, -axis.y, axis.x, 0.0);
    nalgebra::Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

pub fn homogeneous(r: &nalgebra::Matrix3<f64>, p: &nalgebra::Vector3<f64>) -> nalgebra::Matrix4<f64> {
    let mut h = nalgebra::Matrix4::identity();
    h.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    h.fixed_view_mut::<3, 1>(0, 3).copy_from(p);
    h
}

/// World 4x4 transforms of every link by multiplying joint transforms along
/// the chain, looked up by link name.
pub fn chain_oracle(model: &dcmwalk::rigidbody::RobotModel, state: &dcmwalk::rigidbody::RobotState) -> Vec<nalgebra::Matrix4<f64>> {
    let mut out = vec![nalgebra::Matrix4::zeros(); model.links.len()];
    out[model.base] = homogeneous(&state.base_rotation, &state.base_position);
    let mut done = vec![false; model.links.len()];
    done[model.base] = true;
    while !done.iter().all(|&d| d) {
        for (k, j) in model.joints.iter().enumerate() {
            if done[j.parent] && !done[j.child] {
                let origin = j.origin.to_homogeneous();
                let rot = homogeneous(&rodrigues(&j.axis, state.joint_positions[k]), &nalgebra::Vector3::zeros());
                out[j.child] = out[j.parent] * origin * rot;
                done[j.child] = true;
            }
        }
    }
    out
}

/// Per-link (CoM velocity, angular velocity) by classical propagation of
/// point velocities along the chain.
pub fn link_velocities_oracle(
    model: &dcmwalk::rigidbody::RobotModel,
    state: &dcmwalk::rigidbody::RobotState,
) -> Vec<(nalgebra::Vector3<f64>, nalgebra::Vector3<f64>)> {
    use nalgebra::Vector3;
    let poses = chain_oracle(model, state);
    let pos = |h: &nalgebra::Matrix4<f64>| Vector3::new(h[(0, 3)], h[(1, 3)], h[(2, 3)]);
    let rot = |h: &nalgebra::Matrix4<f64>| h.fixed_view::<3, 3>(0, 0).into_owned();
    let nl = model.links.len();
    let mut origin_vel = vec![Vector3::zeros(); nl];
    let mut omega = vec![Vector3::zeros(); nl];
    let mut done = vec![false; nl];
    origin_vel[model.base] = state.base_linear_velocity;
    omega[model.base] = state.base_angular_velocity;
    done[model.base] = true;
    while !done.iter().all(|&d| d) {
        for (k, j) in model.joints.iter().enumerate() {
            if done[j.parent] && !done[j.child] {
                let (pp, pc) = (pos(&poses[j.parent]), pos(&poses[j.child]));
                origin_vel[j.child] = origin_vel[j.parent] + omega[j.parent].cross(&(pc - pp));
                omega[j.child] = omega[j.parent] + rot(&poses[j.child]) * j.axis * state.joint_velocities[k];
                done[j.child] = true;
            }
        }
    }
    (0..nl)
        .map(|i| {
            let c = rot(&poses[i]) * model.links[i].com;
            (origin_vel[i] + omega[i].cross(&c), omega[i])
        })
        .collect()
}

/// Configuration reached after moving for `eps` seconds with constant `nu`.
pub fn advance(state: &dcmwalk::rigidbody::RobotState, eps: f64) -> dcmwalk::rigidbody::RobotState {
    let mut s = state.clone();
    s.base_position += state.base_linear_velocity * eps;
    s.base_rotation = rodrigues_vec(&(state.base_angular_velocity * eps)) * state.base_rotation;
    s.joint_positions += &state.joint_velocities * eps;
    s
}

pub fn rodrigues_vec(w: &nalgebra::Vector3<f64>) -> nalgebra::Matrix3<f64> {
    let angle = w.norm();
    if angle == 0.0 {
        nalgebra::Matrix3::identity()
    } else {
        rodrigues(&(w / angle), angle)
    }
}

/// Rotation vector of a small rotation from its skew part. Relative error is
/// O(angle^2), well below what acos-based logs achieve for tiny angles.
pub fn small_rotation_vector(r: &nalgebra::Matrix3<f64>) -> nalgebra::Vector3<f64> {
    let a = (r - r.transpose()) * 0.5;
    nalgebra::Vector3::new(a[(2, 1)], a[(0, 2)], a[(1, 0)])
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

/// Walking posture of the mini-biped: bent knees, feet flat.
pub fn walking_posture(model: &dcmwalk::rigidbody::RobotModel) -> DVector<f64> {
    let mut s = DVector::zeros(model.dof());
    for side in ["l", "r"] {
        s[model.joint_index(&format!("{side}_hip_pitch")).unwrap()] = -0.3;
        s[model.joint_index(&format!("{side}_knee")).unwrap()] = 0.6;
        s[model.joint_index(&format!("{side}_ankle_pitch")).unwrap()] = -0.3;
    }
    s
}

/// Active-set enumeration with a cap on the number of active inequality
/// sides. Equality rows are eliminated first through a null-space basis
/// (tolerating redundant rows); each candidate set is then a small KKT solve
/// in the reduced coordinates.
pub fn enumerate_bounded(p: &QpProblem, max_active: usize) -> Option<DVector<f64>> {
    let n = p.num_variables();
    let m = p.num_constraints();
    let is_eq = |i: usize| p.lower_bounds[i] == p.upper_bounds[i];
    let eq: Vec<usize> = (0..m).filter(|&i| is_eq(i)).collect();
    let e = DMatrix::from_fn(eq.len(), n, |r, j| p.constraint_matrix[(eq[r], j)]);
    let b = DVector::from_fn(eq.len(), |r, _| p.lower_bounds[eq[r]]);
    let x0 = e.clone().svd(true, true).solve(&b, 1e-10).ok()?;
    if (&e * &x0 - &b).amax() > 1e-8 * (1.0 + b.amax()) {
        return None;
    }
    let gram = e.transpose() * &e;
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.amax().max(1.0);
    let null: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k].abs() < 1e-12 * top).collect();
    let z = DMatrix::from_fn(n, null.len(), |i, k| eig.eigenvectors[(i, null[k])]);
    let d = z.ncols();
    let hr = z.transpose() * &p.hessian * &z;
    let gr = z.transpose() * (&p.hessian * &x0 + &p.gradient);

    let mut sides: Vec<(usize, f64)> = Vec::new();
    for i in (0..m).filter(|&i| !is_eq(i)) {
        if p.lower_bounds[i].is_finite() {
            sides.push((i, p.lower_bounds[i]));
        }
        if p.upper_bounds[i].is_finite() {
            sides.push((i, p.upper_bounds[i]));
        }
    }
    let ar: Vec<DVector<f64>> = sides
        .iter()
        .map(|&(i, _)| (p.constraint_matrix.row(i) * &z).transpose())
        .collect();
    let br: Vec<f64> = sides
        .iter()
        .map(|&(i, v)| v - (p.constraint_matrix.row(i) * &x0)[0])
        .collect();

    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut solve = |active: &[usize]| {
        let k = active.len();
        let mut kkt = DMatrix::zeros(d + k, d + k);
        let mut rhs = DVector::zeros(d + k);
        kkt.view_mut((0, 0), (d, d)).copy_from(&hr);
        rhs.rows_mut(0, d).copy_from(&(-&gr));
        for (r, &s) in active.iter().enumerate() {
            for j in 0..d {
                kkt[(d + r, j)] = ar[s][j];
                kkt[(j, d + r)] = ar[s][j];
            }
            rhs[d + r] = br[s];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            return;
        };
        let x = &x0 + &z * sol.rows(0, d);
        let tol = 1e-7 * (1.0 + p.constraint_matrix.amax() * x.amax());
        if p.primal_residual(&x) <= tol {
            let f = p.objective(&x);
            if best.as_ref().is_none_or(|(bf, _)| f < *bf - 1e-12) {
                best = Some((f, x));
            }
        }
    };
    // Subsets of increasing index, each constraint row used at most once.
    let mut stack: Vec<usize> = Vec::new();
    solve(&[]);
    loop {
        let next_start = stack.last().map_or(0, |&l| l + 1);
        if stack.len() < max_active.min(d) && next_start < sides.len() {
            stack.push(next_start);
        } else {
            loop {
                let Some(last) = stack.pop() else {
                    return best.map(|(_, x)| x);
                };
                if last + 1 < sides.len() {
                    stack.push(last + 1);
                    break;
                }
            }
        }
        let mut rows: Vec<usize> = stack.iter().map(|&s| sides[s].0).collect();
        rows.sort_unstable();
        rows.dedup();
        if rows.len() == stack.len() {
            solve(&stack);
        }
    }
}
