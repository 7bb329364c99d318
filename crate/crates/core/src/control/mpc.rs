use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::polygon::ConvexPolygon;
use super::{is_positive_definite, is_positive_semidefinite, ControlError};
use crate::qp::{QpProblem, QpSettings, QpStatus, Solver};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcSettings {
    /// Number of predicted inputs `N`.
    pub horizon: usize,
    /// Sample period `T` (s).
    pub period: f64,
    /// Running DCM tracking weight.
    pub q: Matrix2<f64>,
    /// Terminal DCM tracking weight.
    pub q_terminal: Matrix2<f64>,
    /// Weight on consecutive ZMP differences.
    pub r: Matrix2<f64>,
}

impl Default for MpcSettings {
    fn default() -> Self {
        let q_terminal = Matrix2::identity() * 50.0;
        Self {
            horizon: 200,
            period: 0.01,
            q: q_terminal * 0.1,
            q_terminal,
            r: Matrix2::identity(),
        }
    }
}

impl MpcSettings {
    pub fn validate(&self) -> Result<(), ControlError> {
        let sym = |m: &Matrix2<f64>| (m - m.transpose()).amax() <= 1e-12 * (1.0 + m.amax());
        if self.horizon == 0 || !(self.period > 0.0) {
            return Err(ControlError::InvalidInput("MPC needs horizon >= 1 and period > 0".into()));
        }
        if !sym(&self.q) || !sym(&self.q_terminal) || !sym(&self.r) {
            return Err(ControlError::InvalidGains("MPC weights must be symmetric".into()));
        }
        if !is_positive_semidefinite(&self.q) || !is_positive_semidefinite(&self.q_terminal) || !is_positive_definite(&self.r) {
            return Err(ControlError::InvalidGains("MPC needs Q, Q_N >= 0 and R > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcOutput {
    /// First optimal input.
    pub zmp: Vector2<f64>,
    /// Optimal inputs `r_k .. r_{k+N-1}`.
    pub inputs: Vec<Vector2<f64>>,
    /// Predicted DCM `xi_k .. xi_{k+N}` under the optimal inputs.
    pub predicted: Vec<Vector2<f64>>,
    pub status: QpStatus,
    pub iterations: usize,
}

/// Receding-horizon DCM controller over the discrete model
/// `xi_{j+1} = F xi_j + G r_j`, `F = exp(T / b)`, `G = 1 - F`.
///
/// States are eliminated, so the QP is dense in the `2N` ZMP inputs. Its
/// Hessian only depends on the settings and is built once; the solver keeps
/// the factorization between ticks.
#[derive(Debug)]
pub struct MpcDcm {
    settings: MpcSettings,
    f: f64,
    g: f64,
    hessian: DMatrix<f64>,
    solver: Solver,
    qp_settings: QpSettings,
}

impl MpcDcm {
    pub fn new(settings: MpcSettings, b: f64) -> Result<Self, ControlError> {
        settings.validate()?;
        if !(b > 0.0) {
            return Err(ControlError::InvalidInput("pendulum constant b must be > 0".into()));
        }
        let f = (settings.period / b).exp();
        let g = 1.0 - f;
        let n = settings.horizon;
        let gamma = input_to_state(n, f, g);

        // Running and terminal parts of Gamma' Qbar Gamma, as scalar matrices.
        let mut run = DMatrix::zeros(n, n);
        for j in 1..n {
            let row = gamma.row(j - 1);
            run.ger(1.0, &row.transpose(), &row.transpose(), 1.0);
        }
        let last = gamma.row(n - 1).transpose();
        let term = &last * last.transpose();

        let mut hessian = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for l in 0..n {
                let block = settings.q * (2.0 * run[(i, l)]) + settings.q_terminal * (2.0 * term[(i, l)]);
                hessian.fixed_view_mut::<2, 2>(2 * i, 2 * l).copy_from(&block);
            }
        }
        for i in 0..n {
            let diag = if i + 1 < n { 4.0 } else { 2.0 };
            let mut d = hessian.fixed_view_mut::<2, 2>(2 * i, 2 * i);
            d += settings.r * diag;
            if i + 1 < n {
                let mut o = hessian.fixed_view_mut::<2, 2>(2 * i, 2 * i + 2);
                o -= settings.r * 2.0;
                let mut o = hessian.fixed_view_mut::<2, 2>(2 * i + 2, 2 * i);
                o -= settings.r * 2.0;
            }
        }
        Ok(Self {
            settings,
            f,
            g,
            hessian,
            solver: Solver::new(),
            qp_settings: QpSettings {
                warm_start: true,
                ..QpSettings::default()
            },
        })
    }

    pub fn settings(&self) -> &MpcSettings {
        &self.settings
    }

    /// `(F, G)` of the discrete model.
    pub fn model(&self) -> (f64, f64) {
        (self.f, self.g)
    }

    /// QP over `(r_k, .., r_{k+N-1})` stacked as `[x0, y0, x1, y1, ..]`.
    /// `xi_ref` holds `xi_ref_k .. xi_ref_{k+N}` and `polygons` one region
    /// per input.
    pub fn problem(
        &self,
        xi: &Vector2<f64>,
        xi_ref: &[Vector2<f64>],
        previous: &Vector2<f64>,
        polygons: &[ConvexPolygon],
    ) -> Result<QpProblem, ControlError> {
        let n = self.settings.horizon;
        if xi_ref.len() != n + 1 || polygons.len() != n {
            return Err(ControlError::InvalidInput(format!(
                "horizon {n} needs {} references and {n} polygons, got {} and {}",
                n + 1,
                xi_ref.len(),
                polygons.len()
            )));
        }
        // Free response error Q_j (F^j xi - xi_ref_j), j = 1..N.
        let mut weighted = Vec::with_capacity(n);
        let mut free = *xi;
        for j in 1..=n {
            free *= self.f;
            let w = if j < n { self.settings.q } else { self.settings.q_terminal };
            weighted.push(w * (free - xi_ref[j]));
        }
        let mut gradient = DVector::zeros(2 * n);
        for i in 0..n {
            // d xi_j / d r_i = F^{j-1-i} G for j > i.
            let mut acc = Vector2::zeros();
            let mut coef = self.g;
            for wj in &weighted[i..] {
                acc += wj * coef;
                coef *= self.f;
            }
            gradient.fixed_rows_mut::<2>(2 * i).copy_from(&(acc * 2.0));
        }
        let mut head = gradient.fixed_rows_mut::<2>(0);
        head -= self.settings.r * previous * 2.0;

        let rows: usize = polygons.iter().map(|p| p.vertices().len()).sum();
        let mut a = DMatrix::zeros(rows, 2 * n);
        let mut upper = DVector::zeros(rows);
        let mut k = 0;
        for (i, poly) in polygons.iter().enumerate() {
            for (nrm, off) in poly.half_planes() {
                a[(k, 2 * i)] = nrm.x;
                a[(k, 2 * i + 1)] = nrm.y;
                upper[k] = off;
                k += 1;
            }
        }
        Ok(QpProblem {
            hessian: self.hessian.clone(),
            gradient,
            constraint_matrix: a,
            lower_bounds: DVector::from_element(rows, f64::NEG_INFINITY),
            upper_bounds: upper,
        })
    }

    /// Solves one tick. Returns [`ControlError::MpcInfeasible`] when the
    /// solver does not converge; callers then hold the previous input.
    pub fn solve(
        &mut self,
        xi: &Vector2<f64>,
        xi_ref: &[Vector2<f64>],
        previous: &Vector2<f64>,
        polygons: &[ConvexPolygon],
    ) -> Result<MpcOutput, ControlError> {
        let problem = self.problem(xi, xi_ref, previous, polygons)?;
        let sol = self
            .solver
            .solve(&problem, &self.qp_settings)
            .map_err(|e| ControlError::InvalidInput(e.to_string()))?;
        if !sol.is_solved() {
            return Err(ControlError::MpcInfeasible(sol.status));
        }
        let inputs: Vec<Vector2<f64>> = (0..self.settings.horizon)
            .map(|i| Vector2::new(sol.primal[2 * i], sol.primal[2 * i + 1]))
            .collect();
        let mut predicted = Vec::with_capacity(inputs.len() + 1);
        predicted.push(*xi);
        for r in &inputs {
            let last = *predicted.last().expect("non-empty");
            predicted.push(last * self.f + r * self.g);
        }
        Ok(MpcOutput {
            zmp: inputs[0],
            inputs,
            predicted,
            status: sol.status,
            iterations: sol.iterations,
        })
    }
}

/// Scalar `N x N` lower-triangular map from inputs to states `xi_1 .. xi_N`.
fn input_to_state(n: usize, f: f64, g: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |j, i| if i <= j { f.powi((j - i) as i32) * g } else { 0.0 })
}
