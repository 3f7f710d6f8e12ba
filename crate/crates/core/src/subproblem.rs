//! Trust-region subproblem `min L(d) s.t. ||d||_inf <= r`, solved exactly as
//! an epigraph LP.
//!
//! Each equality component `|c_i|` becomes an auxiliary `t_i` with the two
//! rows `+-c_i(d) <= t_i`; each inequality component `max(0, c_i)` becomes an
//! auxiliary `t_i >= 0` with the row `c_i(d) <= t_i`; the trust region is a
//! box on `d`.

use thiserror::Error;

use crate::composite::Linearization;
use crate::error::EvalError;
use crate::linalg::{norm_inf, Matrix};
use crate::lp::{lp_solve, LpError, LpStandardForm, LpStatus, VariableMap};
use crate::scalar::tol;
use crate::Scalar;

/// Scale of the quasi-infinite radius relative to `1 + ||z||_inf`.
pub const INFINITE_RADIUS_SCALE: f64 = 1e6;

#[derive(Clone, Debug)]
pub struct TrustRegionSubproblem<T> {
    pub lin: Linearization<T>,
    pub radius: T,
    /// Replace `radius` by `1e6 * (1 + ||z||_inf)`.
    pub radius_infinite: bool,
}

impl<T: Scalar> TrustRegionSubproblem<T> {
    pub fn new(lin: Linearization<T>, radius: T) -> Self {
        assert!(radius > T::zero(), "trust-region radius must be positive");
        Self {
            lin,
            radius,
            radius_infinite: false,
        }
    }

    pub fn unbounded(lin: Linearization<T>) -> Self {
        Self {
            lin,
            radius: T::infinity(),
            radius_infinite: true,
        }
    }

    pub fn effective_radius(&self) -> T {
        if self.radius_infinite {
            T::lit(INFINITE_RADIUS_SCALE) * (T::one() + norm_inf(&self.lin.base_point))
        } else {
            self.radius
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubproblemStatus {
    Optimal,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct SubproblemSolution<T> {
    pub step: Vec<T>,
    pub model_value: T,
    /// `J(z) - L(step)`, never negative.
    pub predicted_decrease: T,
    pub status: SubproblemStatus,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SubproblemError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Epigraph LP whose optimum equals `min L(d)` over the trust box.
pub fn build_lp<T: Scalar>(sub: &TrustRegionSubproblem<T>) -> LpStandardForm<T> {
    let lin = &sub.lin;
    let psi = &lin.psi;
    let n_z = lin.n_z();
    let eq = psi.eq_range();
    let ineq = psi.ineq_range();
    let n_eq = eq.len();
    let n_ineq = ineq.len();
    let n = n_z + n_eq + n_ineq;
    let radius = sub.effective_radius();
    let jac = &lin.g_jacobian;

    let mut cost = vec![T::zero(); n];
    let mut constant = T::zero();
    for i in psi.cost_range() {
        constant += lin.g_value[i];
        for (c, &a) in cost[..n_z].iter_mut().zip(jac.row(i)) {
            *c += a;
        }
    }
    for c in &mut cost[n_z..] {
        *c = psi.lambda();
    }

    let n_rows = 2 * n_eq + n_ineq;
    let mut a = Matrix::zeros(n_rows, n);
    let mut b = Vec::with_capacity(n_rows);
    let mut row = 0;
    for (k, i) in eq.enumerate() {
        let t = n_z + k;
        for sign in [T::one(), -T::one()] {
            let dst = a.row_mut(row);
            for (v, &g) in dst[..n_z].iter_mut().zip(jac.row(i)) {
                *v = sign * g;
            }
            dst[t] = -T::one();
            b.push(-sign * lin.g_value[i]);
            row += 1;
        }
    }
    for (k, i) in ineq.enumerate() {
        let t = n_z + n_eq + k;
        let dst = a.row_mut(row);
        dst[..n_z].copy_from_slice(jac.row(i));
        dst[t] = -T::one();
        b.push(-lin.g_value[i]);
        row += 1;
    }

    let mut lower = vec![-radius; n_z];
    let mut upper = vec![radius; n_z];
    lower.extend(std::iter::repeat(T::neg_infinity()).take(n_eq));
    upper.extend(std::iter::repeat(T::infinity()).take(n_eq));
    lower.extend(std::iter::repeat(T::zero()).take(n_ineq));
    upper.extend(std::iter::repeat(T::infinity()).take(n_ineq));

    LpStandardForm {
        cost,
        constant,
        a_ub: a,
        b_ub: b,
        lower,
        upper,
        map: VariableMap {
            step: 0..n_z,
            eq_aux: n_z..n_z + n_eq,
            ineq_aux: n_z + n_eq..n,
        },
    }
}

fn finish<T: Scalar>(
    sub: &TrustRegionSubproblem<T>,
    mut step: Vec<T>,
    status: SubproblemStatus,
) -> Result<SubproblemSolution<T>, SubproblemError> {
    let radius = sub.effective_radius();
    for d in &mut step {
        *d = d.max(-radius).min(radius);
    }
    let base = sub.lin.base_value();
    let mut model_value = sub.lin.evaluate(&step)?;
    if model_value > base {
        // Rounding left the vertex marginally worse than staying put.
        step.iter_mut().for_each(|d| *d = T::zero());
        model_value = base;
    }
    Ok(SubproblemSolution {
        step,
        model_value,
        predicted_decrease: base - model_value,
        status,
    })
}

/// Solves the trust-region subproblem to a vertex optimum.
pub fn solve_subproblem<T: Scalar>(
    sub: &TrustRegionSubproblem<T>,
) -> Result<SubproblemSolution<T>, SubproblemError> {
    let lp = build_lp(sub);
    let sol = lp_solve(&lp)?;
    let status = match sol.status {
        LpStatus::Optimal => SubproblemStatus::Optimal,
        LpStatus::Unbounded => SubproblemStatus::Unbounded,
    };
    finish(sub, sol.x[lp.map.step.clone()].to_vec(), status)
}

/// Among optimizers of the subproblem, one with (near) minimum `||d||_inf`.
///
/// A second LP minimizes `s` subject to `|d_i| <= s` and a model value within
/// `1e-9 (1 + |L*|)` of the optimum `L*` from the first solve.
pub fn solve_min_norm<T: Scalar>(
    sub: &TrustRegionSubproblem<T>,
) -> Result<SubproblemSolution<T>, SubproblemError> {
    let first = solve_subproblem(sub)?;
    if first.status == SubproblemStatus::Unbounded {
        return Ok(first);
    }
    let base = build_lp(sub);
    let n = base.n_vars();
    let n_z = base.map.step.len();
    let rows = base.n_rows();
    let slack = tol::<T>(1e-9) * (T::one() + first.model_value.abs());

    let mut a = Matrix::zeros(rows + 1 + 2 * n_z, n + 1);
    let mut b = base.b_ub.clone();
    for i in 0..rows {
        a.row_mut(i)[..n].copy_from_slice(base.a_ub.row(i));
    }
    a.row_mut(rows)[..n].copy_from_slice(&base.cost);
    b.push(first.model_value - base.constant + slack);
    for j in 0..n_z {
        let r = rows + 1 + 2 * j;
        a.set(r, j, T::one());
        a.set(r, n, -T::one());
        a.set(r + 1, j, -T::one());
        a.set(r + 1, n, -T::one());
        b.extend([T::zero(), T::zero()]);
    }
    let mut cost = vec![T::zero(); n + 1];
    cost[n] = T::one();
    let mut lower = base.lower.clone();
    let mut upper = base.upper.clone();
    lower.push(T::zero());
    upper.push(sub.effective_radius());
    let lp = LpStandardForm {
        cost,
        constant: T::zero(),
        a_ub: a,
        b_ub: b,
        lower,
        upper,
        map: base.map.clone(),
    };
    match lp_solve(&lp) {
        Ok(sol) => {
            let candidate = finish(sub, sol.x[..n_z].to_vec(), SubproblemStatus::Optimal)?;
            if candidate.model_value <= first.model_value + slack
                && norm_inf(&candidate.step) <= norm_inf(&first.step)
            {
                Ok(candidate)
            } else {
                Ok(first)
            }
        }
        Err(LpError::Infeasible { .. }) => Ok(first),
        Err(e) => Err(e.into()),
    }
}
