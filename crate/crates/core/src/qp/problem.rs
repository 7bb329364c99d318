use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

/// `min 1/2 x'Hx + g'x  s.t.  l <= Ax <= u`. Unbounded sides use `±inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub gradient: DVector<f64>,
    pub constraint_matrix: DMatrix<f64>,
    pub lower_bounds: DVector<f64>,
    pub upper_bounds: DVector<f64>,
}

impl QpProblem {
    /// Problem without constraints.
    pub fn unconstrained(hessian: DMatrix<f64>, gradient: DVector<f64>) -> Self {
        let n = gradient.len();
        Self {
            hessian,
            gradient,
            constraint_matrix: DMatrix::zeros(0, n),
            lower_bounds: DVector::zeros(0),
            upper_bounds: DVector::zeros(0),
        }
    }

    pub fn num_variables(&self) -> usize {
        self.gradient.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.lower_bounds.len()
    }

    /// Checks dimensions, finiteness and Hessian symmetry.
    pub fn validate(&self) -> Result<(), QpError> {
        let n = self.gradient.len();
        let m = self.lower_bounds.len();
        if n == 0 {
            return Err(QpError::InvalidProblem("no variables".into()));
        }
        if self.hessian.shape() != (n, n) {
            return Err(QpError::InvalidProblem(format!(
                "hessian is {}x{}, expected {n}x{n}",
                self.hessian.nrows(),
                self.hessian.ncols()
            )));
        }
        if self.constraint_matrix.shape() != (m, n) || self.upper_bounds.len() != m {
            return Err(QpError::InvalidProblem(format!(
                "constraint matrix is {}x{} with {} lower / {} upper bounds, expected {m}x{n}",
                self.constraint_matrix.nrows(),
                self.constraint_matrix.ncols(),
                m,
                self.upper_bounds.len()
            )));
        }
        if self.hessian.iter().any(|v| !v.is_finite())
            || self.gradient.iter().any(|v| !v.is_finite())
            || self.constraint_matrix.iter().any(|v| !v.is_finite())
        {
            return Err(QpError::InvalidProblem("non-finite problem data".into()));
        }
        if self
            .lower_bounds
            .iter()
            .chain(self.upper_bounds.iter())
            .any(|v| v.is_nan())
        {
            return Err(QpError::InvalidProblem("NaN bound".into()));
        }
        let scale = self.hessian.amax().max(1.0);
        let asym = (&self.hessian - self.hessian.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(QpError::InvalidProblem(format!(
                "hessian not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(())
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.gradient.dot(x)
    }

    /// Largest bound violation of `Ax`.
    pub fn primal_residual(&self, x: &DVector<f64>) -> f64 {
        let ax = &self.constraint_matrix * x;
        ax.iter()
            .zip(self.lower_bounds.iter().zip(self.upper_bounds.iter()))
            .map(|(&v, (&l, &u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max)
    }

    /// `|| H x + g + A' y ||_inf`.
    pub fn dual_residual(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (&self.hessian * x + &self.gradient + self.constraint_matrix.tr_mul(y)).amax()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSettings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iterations: usize,
    /// Added to the diagonal of the (reduced) Hessian before factorization so
    /// that semidefinite problems with zero-weight directions stay solvable.
    pub regularization: f64,
    /// Let the dual active-set iteration visit constraints that were active in
    /// the previous solve of the same [`Solver`] first.
    pub warm_start: bool,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            max_iterations: 4000,
            regularization: 1e-10,
            warm_start: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QpStatus {
    Solved,
    MaxIterations,
    PrimalInfeasible,
    DualInfeasible,
}

impl QpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            QpStatus::Solved => "solved",
            QpStatus::MaxIterations => "max_iterations",
            QpStatus::PrimalInfeasible => "primal_infeasible",
            QpStatus::DualInfeasible => "dual_infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub primal: DVector<f64>,
    pub dual: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Rows active at a bound (equalities included).
    pub active_set: Vec<usize>,
}

impl QpSolution {
    pub fn is_solved(&self) -> bool {
        self.status == QpStatus::Solved
    }
}
