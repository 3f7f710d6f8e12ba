use serde::Serialize;

use crate::error::EvalError;
use crate::problems::DiscretizedProblem;
use crate::Scalar;

/// Default activity tolerance.
pub const ACTIVITY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "by")]
pub enum ActiveComparison {
    Equal,
    Shortfall(usize),
    Excess(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActiveSetReport<T> {
    pub active_ineq_count: usize,
    /// `n_u (N - 1)`.
    pub threshold: usize,
    pub tolerance: T,
    pub comparison: ActiveComparison,
    /// Indices into the inequality block of the active components.
    pub active: Vec<usize>,
}

/// Counts inequality components (path constraints and control bounds) with
/// `|g_i(z)| <= tol` and compares the count with `n_u (N - 1)`.
pub fn active_set_report<T: Scalar>(
    problem: &DiscretizedProblem<T>,
    z: &[T],
    tol: T,
) -> Result<ActiveSetReport<T>, EvalError> {
    let g = problem.inequality_values(z)?;
    let active: Vec<usize> = (0..g.len()).filter(|&i| g[i].abs() <= tol).collect();
    let threshold = problem.layout.n_u * (problem.layout.nodes - 1);
    let count = active.len();
    let comparison = match count.cmp(&threshold) {
        std::cmp::Ordering::Equal => ActiveComparison::Equal,
        std::cmp::Ordering::Less => ActiveComparison::Shortfall(threshold - count),
        std::cmp::Ordering::Greater => ActiveComparison::Excess(count - threshold),
    };
    Ok(ActiveSetReport {
        active_ineq_count: count,
        threshold,
        tolerance: tol,
        comparison,
        active,
    })
}
