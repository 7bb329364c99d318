use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::problem::{QpError, QpProblem, QpSettings, QpSolution, QpStatus};

/// Solves `problem` with a fresh workspace.
pub fn solve(problem: &QpProblem, settings: &QpSettings) -> Result<QpSolution, QpError> {
    Solver::new().solve(problem, settings)
}

/// Reusable solver workspace.
///
/// The factorization of the (reduced) Hessian is kept between calls and reused
/// whenever the Hessian and the equality rows are bitwise unchanged, which is
/// the common case for receding-horizon problems. A workspace is single-owner.
#[derive(Debug, Default)]
pub struct Solver {
    cache: Option<Factorization>,
    last_active: Vec<usize>,
}

#[derive(Debug)]
struct Elimination {
    /// Null-space basis of the equality rows, `n x p`.
    basis: DMatrix<f64>,
    /// `A_e^+`, maps equality right-hand sides to the minimum-norm particular solution.
    pinv: DMatrix<f64>,
    /// `(A_e^T)^+`, recovers equality multipliers from a stationarity residual.
    pinv_t: DMatrix<f64>,
}

#[derive(Debug)]
struct Factorization {
    hessian: DMatrix<f64>,
    eq_rows: Vec<usize>,
    eq_matrix: DMatrix<f64>,
    regularization: f64,
    elimination: Option<Elimination>,
    /// `H Z` (only with equalities).
    hz: Option<DMatrix<f64>>,
    /// Cholesky factor `L` of the regularized reduced Hessian.
    chol_l: DMatrix<f64>,
    /// `L^{-T}`, the initial Goldfarb-Idnani basis.
    j0: DMatrix<f64>,
    /// Directions of (near) zero curvature of the unregularized reduced Hessian.
    null_dirs: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct OneSided {
    /// Index into the inequality list.
    ineq: usize,
    /// +1 for `c'y >= lo`, -1 for `-c'y >= -hi`.
    sign: f64,
}

enum GiOutcome {
    Optimal,
    Infeasible,
    MaxIterations,
}

struct GiResult {
    y: DVector<f64>,
    active: Vec<OneSided>,
    multipliers: Vec<f64>,
    iterations: usize,
    outcome: GiOutcome,
}

/// Row of the reduced inequality system, stored sparsely.
struct SparseRow {
    idx: Vec<usize>,
    val: Vec<f64>,
    norm: f64,
}

impl SparseRow {
    fn from_dense(row: impl Iterator<Item = f64>) -> Self {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (j, v) in row.enumerate() {
            if v != 0.0 {
                idx.push(j);
                val.push(v);
            }
        }
        let norm = val.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self { idx, val, norm }
    }

    fn dot(&self, y: &DVector<f64>) -> f64 {
        self.idx.iter().zip(&self.val).map(|(&j, &v)| v * y[j]).sum()
    }
}

fn is_equality(l: f64, u: f64) -> bool {
    l.is_finite() && u.is_finite() && (u - l).abs() <= 1e-13 * (1.0 + l.abs().max(u.abs()))
}

impl Solver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(
        &mut self,
        problem: &QpProblem,
        settings: &QpSettings,
    ) -> Result<QpSolution, QpError> {
        problem.validate()?;
        let n = problem.num_variables();
        let m = problem.num_constraints();
        let a = &problem.constraint_matrix;
        let lower = &problem.lower_bounds;
        let upper = &problem.upper_bounds;

        // Contradictory bounds on a single row.
        if (0..m).any(|i| lower[i] > upper[i] && !is_equality(lower[i], upper[i])) {
            return Ok(self.infeasible(n, m, QpStatus::PrimalInfeasible, 0));
        }

        let mut eq_rows = Vec::new();
        let mut ineq_rows = Vec::new();
        for i in 0..m {
            if is_equality(lower[i], upper[i]) {
                eq_rows.push(i);
            } else if lower[i].is_finite() || upper[i].is_finite() {
                ineq_rows.push(i);
            }
        }

        let reuse = self.cache.as_ref().is_some_and(|f| {
            f.regularization == settings.regularization
                && f.eq_rows == eq_rows
                && f.hessian == problem.hessian
                && eq_rows
                    .iter()
                    .enumerate()
                    .all(|(k, &i)| f.eq_matrix.row(k) == a.row(i))
        });
        if !reuse {
            self.cache = Some(Factorization::new(
                problem,
                &eq_rows,
                settings.regularization,
            )?);
        }
        let fact = self.cache.as_ref().expect("factorization present");

        // Particular solution of the equalities.
        let x0 = match &fact.elimination {
            Some(elim) => {
                let b_e = DVector::from_iterator(eq_rows.len(), eq_rows.iter().map(|&i| lower[i]));
                let x0 = &elim.pinv * &b_e;
                let res = (&fact.eq_matrix * &x0 - &b_e).amax();
                if res > 1e-9 * (1.0 + b_e.amax()) {
                    return Ok(self.infeasible(n, m, QpStatus::PrimalInfeasible, 0));
                }
                x0
            }
            None => DVector::zeros(n),
        };

        // Reduced gradient and inequality rows.
        let (g_red, rows): (DVector<f64>, Vec<SparseRow>) = match &fact.elimination {
            Some(elim) => {
                let hz = fact.hz.as_ref().expect("hz present with elimination");
                let g_red = hz.tr_mul(&x0) + elim.basis.tr_mul(&problem.gradient);
                let rows = ineq_rows
                    .iter()
                    .map(|&i| {
                        let c = a.row(i) * &elim.basis;
                        SparseRow::from_dense(c.iter().copied())
                    })
                    .collect();
                (g_red, rows)
            }
            None => {
                let rows = ineq_rows
                    .iter()
                    .map(|&i| SparseRow::from_dense(a.row(i).iter().copied()))
                    .collect();
                (problem.gradient.clone(), rows)
            }
        };
        let offsets: Vec<f64> = ineq_rows.iter().map(|&i| a.row(i).dot(&x0.transpose())).collect();
        let lo: Vec<f64> = ineq_rows
            .iter()
            .zip(&offsets)
            .map(|(&i, o)| lower[i] - o)
            .collect();
        let hi: Vec<f64> = ineq_rows
            .iter()
            .zip(&offsets)
            .map(|(&i, o)| upper[i] - o)
            .collect();

        // Unbounded directions: zero curvature, untouched by inequalities, and
        // a nonzero gradient component.
        let g_scale = g_red.amax().max(1.0);
        for dir in &fact.null_dirs {
            let slope = g_red.dot(dir);
            let constrained = rows.iter().any(|r| r.dot(dir).abs() > 1e-9 * r.norm.max(1.0));
            if !constrained && slope.abs() > 1e-9 * g_scale {
                return Ok(self.infeasible(n, m, QpStatus::DualInfeasible, 0));
            }
        }

        let preferred: Vec<bool> = if settings.warm_start {
            ineq_rows
                .iter()
                .map(|i| self.last_active.contains(i))
                .collect()
        } else {
            vec![false; ineq_rows.len()]
        };

        let gi = goldfarb_idnani(
            fact,
            &g_red,
            &rows,
            &lo,
            &hi,
            &preferred,
            settings.max_iterations,
        );

        let x = match &fact.elimination {
            Some(elim) => &x0 + &elim.basis * &gi.y,
            None => gi.y.clone(),
        };

        // Row duals, sign convention H x + g + A' y = 0.
        let mut dual = DVector::zeros(m);
        for (act, &mult) in gi.active.iter().zip(&gi.multipliers) {
            dual[ineq_rows[act.ineq]] = -act.sign * mult;
        }
        if let Some(elim) = &fact.elimination {
            let stat = &problem.hessian * &x + &problem.gradient + a.tr_mul(&dual);
            let lambda = -(&elim.pinv_t * stat);
            for (k, &i) in eq_rows.iter().enumerate() {
                dual[i] = lambda[k];
            }
        }

        let primal_residual = problem.primal_residual(&x);
        let dual_residual = problem.dual_residual(&x, &dual);

        let mut active_set: Vec<usize> = eq_rows.clone();
        active_set.extend(gi.active.iter().map(|act| ineq_rows[act.ineq]));
        active_set.sort_unstable();

        let status = match gi.outcome {
            GiOutcome::Infeasible => QpStatus::PrimalInfeasible,
            GiOutcome::MaxIterations => QpStatus::MaxIterations,
            GiOutcome::Optimal => {
                let ax = (a * &x).amax();
                let bound_scale = lower
                    .iter()
                    .chain(upper.iter())
                    .filter(|v| v.is_finite())
                    .fold(0.0_f64, |acc, v| acc.max(v.abs()));
                let prim_tol = settings.eps_abs + settings.eps_rel * ax.max(bound_scale);
                let dual_scale = (&problem.hessian * &x)
                    .amax()
                    .max(problem.gradient.amax())
                    .max(a.tr_mul(&dual).amax());
                let dual_tol = settings.eps_abs + settings.eps_rel * dual_scale;
                if primal_residual <= prim_tol && dual_residual <= dual_tol {
                    QpStatus::Solved
                } else {
                    QpStatus::MaxIterations
                }
            }
        };

        if status == QpStatus::Solved {
            self.last_active = gi.active.iter().map(|act| ineq_rows[act.ineq]).collect();
        }

        Ok(QpSolution {
            primal: x,
            dual,
            status,
            iterations: gi.iterations,
            primal_residual,
            dual_residual,
            active_set,
        })
    }

    fn infeasible(&mut self, n: usize, m: usize, status: QpStatus, iterations: usize) -> QpSolution {
        self.last_active.clear();
        QpSolution {
            primal: DVector::zeros(n),
            dual: DVector::zeros(m),
            status,
            iterations,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            active_set: Vec::new(),
        }
    }
}

impl Factorization {
    fn new(problem: &QpProblem, eq_rows: &[usize], regularization: f64) -> Result<Self, QpError> {
        let n = problem.num_variables();
        let h = &problem.hessian;
        let eq_matrix = DMatrix::from_fn(eq_rows.len(), n, |k, j| {
            problem.constraint_matrix[(eq_rows[k], j)]
        });

        let elimination = if eq_rows.is_empty() {
            None
        } else {
            Some(eliminate(&eq_matrix))
        };

        let (h_red, hz) = match &elimination {
            Some(elim) => {
                let hz = h * &elim.basis;
                let h_red = elim.basis.tr_mul(&hz);
                // Symmetrize against round-off.
                let h_red = (&h_red + h_red.transpose()) * 0.5;
                (h_red, Some(hz))
            }
            None => (h.clone(), None),
        };
        let p = h_red.nrows();

        let h_norm = h.amax().max(1.0);
        let mut shift = regularization;
        let mut null_dirs = Vec::new();

        let mut chol = (&h_red + DMatrix::identity(p, p) * shift).cholesky();
        let needs_eigen = match &chol {
            None => true,
            Some(c) => {
                let l = c.l_dirty();
                let max_diag = h_red.diagonal().amax().max(f64::MIN_POSITIVE);
                (0..p).any(|i| l[(i, i)] * l[(i, i)] < 1e-9 * max_diag)
            }
        };
        if needs_eigen && p > 0 {
            let eig = SymmetricEigen::new(h_red.clone());
            let min_eig = eig.eigenvalues.min();
            if min_eig < -1e-9 * h_norm {
                return Err(QpError::InvalidProblem(format!(
                    "hessian not positive semidefinite (eigenvalue {min_eig:e})"
                )));
            }
            for (k, &lam) in eig.eigenvalues.iter().enumerate() {
                if lam <= 1e-9 * h_norm {
                    null_dirs.push(eig.eigenvectors.column(k).into_owned());
                }
            }
            if chol.is_none() {
                shift = regularization + (-min_eig).max(0.0);
                chol = (&h_red + DMatrix::identity(p, p) * shift).cholesky();
            }
        }
        let chol = chol.ok_or_else(|| {
            QpError::InvalidProblem("reduced hessian factorization failed".into())
        })?;
        let chol_l = chol.l();
        let l_inv = chol_l
            .solve_lower_triangular(&DMatrix::identity(p, p))
            .ok_or_else(|| QpError::InvalidProblem("singular cholesky factor".into()))?;
        let j0 = l_inv.transpose();

        Ok(Self {
            hessian: h.clone(),
            eq_rows: eq_rows.to_vec(),
            eq_matrix,
            regularization,
            elimination,
            hz,
            chol_l,
            j0,
            null_dirs,
        })
    }

    fn unconstrained_minimizer(&self, g: &DVector<f64>) -> DVector<f64> {
        if g.is_empty() {
            return DVector::zeros(0);
        }
        let w = self
            .chol_l
            .solve_lower_triangular(&(-g))
            .expect("nonsingular factor");
        self.chol_l
            .tr_solve_lower_triangular(&w)
            .expect("nonsingular factor")
    }
}

/// Rank-revealing elimination of `A_e x = b_e` through an SVD of the padded
/// square system.
fn eliminate(a_e: &DMatrix<f64>) -> Elimination {
    let (m_e, n) = a_e.shape();
    let rows = m_e.max(n);
    let padded = DMatrix::from_fn(rows, n, |i, j| if i < m_e { a_e[(i, j)] } else { 0.0 });
    let svd = padded.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let sigma = &svd.singular_values;
    let s_max = sigma.amax();
    let tol = 1e-10 * s_max.max(1e-300) * (rows as f64);
    let rank_idx: Vec<usize> = (0..sigma.len()).filter(|&k| sigma[k] > tol).collect();
    let null_idx: Vec<usize> = (0..sigma.len()).filter(|&k| sigma[k] <= tol).collect();

    // v_t is n x n for a padded square-or-tall system.
    let basis = DMatrix::from_fn(n, null_idx.len(), |i, k| v_t[(null_idx[k], i)]);
    // A_e^+ = V_r S_r^{-1} U_r^T restricted to the first m_e rows of U.
    let pinv = DMatrix::from_fn(n, m_e, |i, r| {
        rank_idx
            .iter()
            .map(|&k| v_t[(k, i)] * u[(r, k)] / sigma[k])
            .sum()
    });
    let pinv_t = pinv.transpose();
    Elimination {
        basis,
        pinv,
        pinv_t,
    }
}

/// Goldfarb-Idnani dual active-set method on `min 1/2 y'Hy + g'y`,
/// `lo <= c_k'y <= hi` with `H = L L'` factored in `fact`.
fn goldfarb_idnani(
    fact: &Factorization,
    g: &DVector<f64>,
    rows: &[SparseRow],
    lo: &[f64],
    hi: &[f64],
    preferred: &[bool],
    max_iterations: usize,
) -> GiResult {
    let p = g.len();
    let mut y = fact.unconstrained_minimizer(g);
    let mut jm = fact.j0.clone();
    let mut r = DMatrix::<f64>::zeros(p, p);
    let mut active: Vec<OneSided> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let mut iterations = 0;

    let slack = |c: &OneSided, y: &DVector<f64>| -> f64 {
        let v = rows[c.ineq].dot(y);
        if c.sign > 0.0 {
            v - lo[c.ineq]
        } else {
            hi[c.ineq] - v
        }
    };
    let tolerance = |c: &OneSided| -> f64 {
        let b = if c.sign > 0.0 { lo[c.ineq] } else { hi[c.ineq] };
        1e-11 * (1.0 + b.abs())
    };

    let mut d = DVector::<f64>::zeros(p);
    let mut z = DVector::<f64>::zeros(p);

    loop {
        // Most violated constraint, scaled by row norm; warm-start rows first.
        let mut best: Option<(OneSided, f64, bool)> = None;
        for (k, row) in rows.iter().enumerate() {
            if row.norm == 0.0 {
                continue;
            }
            for sign in [1.0, -1.0] {
                let bound = if sign > 0.0 { lo[k] } else { hi[k] };
                if !bound.is_finite() {
                    continue;
                }
                let c = OneSided { ineq: k, sign };
                if active.iter().any(|a| a.ineq == k) {
                    continue;
                }
                let s = slack(&c, &y);
                if s >= -tolerance(&c) {
                    continue;
                }
                let score = s / row.norm;
                let pref = preferred.get(k).copied().unwrap_or(false);
                let better = match &best {
                    None => true,
                    Some((_, bs, bp)) => (pref && !bp) || (pref == *bp && score < *bs),
                };
                if better {
                    best = Some((c, score, pref));
                }
            }
        }
        let Some((new_c, _, _)) = best else {
            return GiResult {
                y,
                active,
                multipliers: mult,
                iterations,
                outcome: GiOutcome::Optimal,
            };
        };

        let row = &rows[new_c.ineq];
        let mut new_mult = 0.0;
        let mut s_p = slack(&new_c, &y);

        loop {
            iterations += 1;
            if iterations > max_iterations {
                return GiResult {
                    y,
                    active,
                    multipliers: mult,
                    iterations,
                    outcome: GiOutcome::MaxIterations,
                };
            }
            let q = active.len();
            // d = J' n_p
            for j in 0..p {
                let mut acc = 0.0;
                for (&i, &v) in row.idx.iter().zip(&row.val) {
                    acc += jm[(i, j)] * v;
                }
                d[j] = new_c.sign * acc;
            }
            // z = J_2 d_2
            z.fill(0.0);
            for j in q..p {
                let dj = d[j];
                if dj != 0.0 {
                    z.axpy(dj, &jm.column(j), 1.0);
                }
            }
            // r = R^{-1} d_1
            let mut rv = vec![0.0; q];
            for i in (0..q).rev() {
                let mut acc = d[i];
                for k in i + 1..q {
                    acc -= r[(i, k)] * rv[k];
                }
                rv[i] = acc / r[(i, i)];
            }

            let mut t1 = f64::INFINITY;
            let mut drop_k = None;
            for (k, &rk) in rv.iter().enumerate() {
                if rk > 1e-14 {
                    let ratio = mult[k] / rk;
                    if ratio < t1 {
                        t1 = ratio;
                        drop_k = Some(k);
                    }
                }
            }

            let d_norm2: f64 = d.iter().map(|v| v * v).sum();
            let d2_norm2: f64 = d.iter().skip(q).map(|v| v * v).sum();
            let t2 = if d2_norm2 <= 1e-22 * d_norm2 {
                f64::INFINITY
            } else {
                let zn = new_c.sign * row.dot(&z);
                -s_p / zn
            };

            if t1.is_infinite() && t2.is_infinite() {
                return GiResult {
                    y,
                    active,
                    multipliers: mult,
                    iterations,
                    outcome: GiOutcome::Infeasible,
                };
            }

            if t2.is_infinite() {
                // Dual step only.
                for (k, rk) in rv.iter().enumerate() {
                    mult[k] -= t1 * rk;
                }
                new_mult += t1;
                let k = drop_k.expect("finite t1 has an index");
                drop_constraint(&mut jm, &mut r, &mut active, &mut mult, k);
                continue;
            }

            let t = t1.min(t2);
            y.axpy(t, &z, 1.0);
            for (k, rk) in rv.iter().enumerate() {
                mult[k] -= t * rk;
            }
            new_mult += t;

            if t2 <= t1 {
                add_constraint(&mut jm, &mut r, &mut d, q);
                active.push(new_c);
                mult.push(new_mult);
                break;
            }
            let k = drop_k.expect("partial step has an index");
            drop_constraint(&mut jm, &mut r, &mut active, &mut mult, k);
            s_p = slack(&new_c, &y);
        }
    }
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let h = a.hypot(b);
    if h == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (a / h, b / h, h)
    }
}

/// Rotates `d = J' n` so that only its first `q + 1` entries are nonzero and
/// appends the new column to `R`.
fn add_constraint(jm: &mut DMatrix<f64>, r: &mut DMatrix<f64>, d: &mut DVector<f64>, q: usize) {
    let p = d.len();
    for j in (q + 1..p).rev() {
        if d[j] == 0.0 {
            continue;
        }
        let (c, s, h) = givens(d[j - 1], d[j]);
        d[j - 1] = h;
        d[j] = 0.0;
        for i in 0..p {
            let a = jm[(i, j - 1)];
            let b = jm[(i, j)];
            jm[(i, j - 1)] = c * a + s * b;
            jm[(i, j)] = -s * a + c * b;
        }
    }
    for i in 0..=q {
        r[(i, q)] = d[i];
    }
}

fn drop_constraint(
    jm: &mut DMatrix<f64>,
    r: &mut DMatrix<f64>,
    active: &mut Vec<OneSided>,
    mult: &mut Vec<f64>,
    k: usize,
) {
    let q = active.len();
    let p = jm.nrows();
    for col in k..q - 1 {
        for i in 0..q {
            r[(i, col)] = r[(i, col + 1)];
        }
    }
    for i in 0..q {
        r[(i, q - 1)] = 0.0;
    }
    for j in k..q - 1 {
        let (c, s, h) = givens(r[(j, j)], r[(j + 1, j)]);
        r[(j, j)] = h;
        r[(j + 1, j)] = 0.0;
        for col in j + 1..q - 1 {
            let a = r[(j, col)];
            let b = r[(j + 1, col)];
            r[(j, col)] = c * a + s * b;
            r[(j + 1, col)] = -s * a + c * b;
        }
        for i in 0..p {
            let a = jm[(i, j)];
            let b = jm[(i, j + 1)];
            jm[(i, j)] = c * a + s * b;
            jm[(i, j + 1)] = -s * a + c * b;
        }
    }
    for col in 0..q {
        r[(q - 1, col)] = 0.0;
    }
    active.remove(k);
    mult.remove(k);
}
