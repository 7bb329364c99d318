//! Dense convex quadratic programming.
//!
//! Problems have the form
//!
//! ```text
//!     minimize     1/2 x' H x + g' x
//!     subject to   l <= A x <= u
//! ```
//!
//! Rows with `l == u` are equalities. They are eliminated with a rank-revealing
//! SVD before the remaining inequalities are handled by a Goldfarb-Idnani dual
//! active-set iteration on the reduced, regularized Hessian. Duals follow the
//! sign convention `H x + g + A' y = 0`, with `y_i <= 0` on rows active at their
//! lower bound and `y_i >= 0` on rows active at their upper bound.

mod dump;
mod problem;
mod solver;

pub use dump::{read_problem, write_problem};
pub use problem::{QpError, QpProblem, QpSettings, QpSolution, QpStatus};
pub use solver::{solve, Solver};
