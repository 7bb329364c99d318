//! Plain-text dump of a [`QpProblem`] for offline reproduction.
//!
//! Layout, whitespace separated, row-major:
//!
//! ```text
//! qp <n> <m>
//! <H: n rows of n values>
//! <g: n values>
//! <A: m rows of n values>
//! <l: m values>
//! <u: m values>
//! ```
//!
//! Infinite bounds are written as `inf` / `-inf`. Values use Rust's shortest
//! round-trip formatting, so a dump reloads bit-exactly.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::problem::QpProblem;

pub fn write_problem(problem: &QpProblem, path: &Path) -> io::Result<()> {
    std::fs::write(path, format_problem(problem))
}

pub fn read_problem(path: &Path) -> io::Result<QpProblem> {
    let text = std::fs::read_to_string(path)?;
    parse_problem(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

pub(crate) fn format_problem(problem: &QpProblem) -> String {
    let n = problem.num_variables();
    let m = problem.num_constraints();
    let mut out = format!("qp {n} {m}\n");
    let mut line = |vals: &mut dyn Iterator<Item = f64>| {
        let row: Vec<String> = vals.map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    };
    for i in 0..n {
        line(&mut problem.hessian.row(i).iter().copied());
    }
    line(&mut problem.gradient.iter().copied());
    for i in 0..m {
        line(&mut problem.constraint_matrix.row(i).iter().copied());
    }
    line(&mut problem.lower_bounds.iter().copied());
    line(&mut problem.upper_bounds.iter().copied());
    out
}

pub(crate) fn parse_problem(text: &str) -> Result<QpProblem, String> {
    let mut tokens = text.split_whitespace();
    if tokens.next() != Some("qp") {
        return Err("missing 'qp' header".into());
    }
    let mut dim = |name: &str| -> Result<usize, String> {
        tokens
            .next()
            .ok_or_else(|| format!("missing {name}"))?
            .parse()
            .map_err(|e| format!("bad {name}: {e}"))
    };
    let n = dim("n")?;
    let m = dim("m")?;
    let values: Vec<f64> = tokens
        .map(|t| t.parse::<f64>().map_err(|e| format!("bad value '{t}': {e}")))
        .collect::<Result<_, _>>()?;
    let expected = n * n + n + m * n + 2 * m;
    if values.len() != expected {
        return Err(format!("expected {expected} values, found {}", values.len()));
    }
    let mut at = 0;
    let mut take = |len: usize| {
        let s = &values[at..at + len];
        at += len;
        s.to_vec()
    };
    let hessian = DMatrix::from_row_slice(n, n, &take(n * n));
    let gradient = DVector::from_vec(take(n));
    let constraint_matrix = DMatrix::from_row_slice(m, n, &take(m * n));
    let lower_bounds = DVector::from_vec(take(m));
    let upper_bounds = DVector::from_vec(take(m));
    Ok(QpProblem {
        hessian,
        gradient,
        constraint_matrix,
        lower_bounds,
        upper_bounds,
    })
}
