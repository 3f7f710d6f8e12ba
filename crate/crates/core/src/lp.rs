//! Dense two-phase simplex for small linear programs.
//!
//! Problems are stated as
//!
//! ```text
//! minimize    constant + cost' x
//! subject to  A x <= b
//!             lower <= x <= upper      (bounds may be infinite)
//! ```
//!
//! Bounds are folded into a nonnegative standard form, phase one drives a set
//! of artificial variables to zero, phase two optimizes the real cost. Pivots
//! use Dantzig's rule until a run of degenerate pivots is observed, after
//! which Bland's rule takes over for the rest of the phase.

use std::ops::Range;

use thiserror::Error;

use crate::linalg::{dot, Matrix};
use crate::scalar::tol;
use crate::Scalar;

/// Degenerate pivots in a row before switching to Bland's rule.
const DEGENERATE_RUN_LIMIT: usize = 30;

/// Iteration cap per variable of the internal standard form.
const ITERATIONS_PER_VARIABLE: usize = 50;

/// Roles of LP columns when the LP encodes a trust-region subproblem.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VariableMap {
    pub step: Range<usize>,
    pub eq_aux: Range<usize>,
    pub ineq_aux: Range<usize>,
}

#[derive(Clone, Debug)]
pub struct LpStandardForm<T> {
    pub cost: Vec<T>,
    pub constant: T,
    pub a_ub: Matrix<T>,
    pub b_ub: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub map: VariableMap,
}

impl<T: Scalar> LpStandardForm<T> {
    /// LP over `n` variables with no rows and free bounds.
    pub fn new(cost: Vec<T>) -> Self {
        let n = cost.len();
        Self {
            cost,
            constant: T::zero(),
            a_ub: Matrix::zeros(0, n),
            b_ub: Vec::new(),
            lower: vec![T::neg_infinity(); n],
            upper: vec![T::infinity(); n],
            map: VariableMap {
                step: 0..n,
                ..VariableMap::default()
            },
        }
    }

    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn n_rows(&self) -> usize {
        self.b_ub.len()
    }

    /// Number of finite entries among `lower` and `upper`.
    pub fn n_finite_bounds(&self) -> usize {
        self.lower.iter().chain(&self.upper).filter(|b| b.is_finite()).count()
    }

    pub fn objective(&self, x: &[T]) -> T {
        self.constant + dot(&self.cost, x)
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let rows = (0..self.n_rows()).map(|i| dot(self.a_ub.row(i), x) - self.b_ub[i]);
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .flat_map(|(&v, (&l, &u))| [l - v, v - u]);
        rows.chain(bounds).fold(T::zero(), |acc, v| acc.max(v))
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.a_ub.cols() != n || self.a_ub.rows() != self.b_ub.len() {
            return Err(LpError::InvalidInput("constraint matrix shape".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::InvalidInput("bound vector length".into()));
        }
        let finite = self.cost.iter().chain(self.a_ub.as_slice()).chain(&self.b_ub);
        if finite.into_iter().any(|x| !x.is_finite()) || !self.constant.is_finite() {
            return Err(LpError::InvalidInput("non-finite coefficient".into()));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == T::infinity() || u == T::neg_infinity() {
                return Err(LpError::InvalidInput(format!("empty bound interval for variable {j}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Optimal vertex, or the last basic feasible point when unbounded.
    pub x: Vec<T>,
    /// Objective including the constant; `-inf` when unbounded.
    pub objective: T,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LpError {
    #[error("simplex iteration limit {limit} reached")]
    IterationLimit {
        limit: usize,
        best_feasible: Option<Vec<f64>>,
    },
    #[error("linear program is infeasible (phase-one residual {residual:e})")]
    Infeasible { residual: f64 },
    #[error("invalid linear program: {0}")]
    InvalidInput(String),
}

/// How an original variable is expressed through standard-form columns.
#[derive(Clone, Copy)]
enum Substitution<T> {
    /// `x = offset + sign * y[col]`
    Shifted { col: usize, offset: T, sign: T },
    /// `x = y[pos] - y[neg]`
    Split { pos: usize, neg: usize },
}

struct Tableau<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
    basis: Vec<usize>,
}

impl<T: Scalar> Tableau<T> {
    #[inline]
    fn width(&self) -> usize {
        self.cols + 1
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.width() + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> T {
        self.at(i, self.cols)
    }

    fn objective_row(&self) -> usize {
        self.rows
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width();
        let p = self.at(r, q);
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<T> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.at(i, q);
            if f == T::zero() {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                if pv != T::zero() {
                    *v -= f * pv;
                }
            }
            row[q] = T::zero();
        }
        self.basis[r] = q;
    }

    fn basic_values(&self) -> Vec<T> {
        let mut y = vec![T::zero(); self.cols];
        for (i, &b) in self.basis.iter().enumerate() {
            y[b] = self.rhs(i).max(T::zero());
        }
        y
    }
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

struct Simplex<T> {
    tab: Tableau<T>,
    pivot_tol: T,
    opt_tol: T,
    iterations: usize,
    limit: usize,
}

impl<T: Scalar> Simplex<T> {
    fn run_phase(&mut self, can_enter: &[bool]) -> Result<PhaseOutcome, usize> {
        let obj = self.tab.objective_row();
        let mut bland = false;
        let mut degenerate_run = 0;
        loop {
            if self.iterations >= self.limit {
                return Err(self.iterations);
            }
            let entering = (0..self.tab.cols)
                .filter(|&j| can_enter[j])
                .map(|j| (j, self.tab.at(obj, j)))
                .filter(|&(_, rc)| rc < -self.opt_tol);
            let entering = if bland {
                entering.map(|(j, _)| j).next()
            } else {
                entering
                    .fold(None, |best: Option<(usize, T)>, (j, rc)| match best {
                        Some((_, b)) if b <= rc => best,
                        _ => Some((j, rc)),
                    })
                    .map(|(j, _)| j)
            };
            let Some(q) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };

            let mut leaving: Option<(usize, T, T)> = None;
            for i in 0..self.tab.rows {
                let a = self.tab.at(i, q);
                if a <= self.pivot_tol {
                    continue;
                }
                let ratio = self.tab.rhs(i).max(T::zero()) / a;
                leaving = match leaving {
                    None => Some((i, ratio, a)),
                    Some((r, best, pa)) => {
                        let slack = T::lit(1e-12) * (T::one() + best.abs());
                        if ratio < best - slack {
                            Some((i, ratio, a))
                        } else if ratio <= best + slack {
                            let prefer = if bland {
                                self.tab.basis[i] < self.tab.basis[r]
                            } else {
                                a > pa
                            };
                            if prefer {
                                Some((i, ratio, a))
                            } else {
                                Some((r, best, pa))
                            }
                        } else {
                            Some((r, best, pa))
                        }
                    }
                };
            }
            let Some((r, ratio, _)) = leaving else {
                return Ok(PhaseOutcome::Unbounded);
            };

            if ratio <= self.pivot_tol {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.tab.pivot(r, q);
            self.iterations += 1;
        }
    }
}

/// Solves `lp` to an optimal vertex.
pub fn lp_solve<T: Scalar>(lp: &LpStandardForm<T>) -> Result<LpSolution<T>, LpError> {
    lp.validate()?;
    let n = lp.n_vars();

    // Substitute bounded variables by nonnegative columns.
    let mut subs = Vec::with_capacity(n);
    let mut n_y = 0;
    let mut upper_rows: Vec<(usize, T)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let sub = if l.is_finite() && u.is_finite() && l < T::zero() && u > T::zero() {
            // Split around zero so the initial basis sits at x_j = 0 rather
            // than at a far corner of a wide box.
            upper_rows.push((n_y, u));
            upper_rows.push((n_y + 1, -l));
            n_y += 1;
            Substitution::Split {
                pos: n_y - 1,
                neg: n_y,
            }
        } else if l.is_finite() {
            if u.is_finite() {
                upper_rows.push((n_y, u - l));
            }
            Substitution::Shifted {
                col: n_y,
                offset: l,
                sign: T::one(),
            }
        } else if u.is_finite() {
            Substitution::Shifted {
                col: n_y,
                offset: u,
                sign: -T::one(),
            }
        } else {
            n_y += 1;
            Substitution::Split {
                pos: n_y - 1,
                neg: n_y,
            }
        };
        n_y += 1;
        subs.push(sub);
    }

    // Rows over y: coefficients and right-hand sides.
    let m = lp.n_rows() + upper_rows.len();
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut rhs: Vec<T> = Vec::with_capacity(m);
    for i in 0..lp.n_rows() {
        let mut row = vec![T::zero(); n_y];
        let mut b = lp.b_ub[i];
        for (j, sub) in subs.iter().enumerate() {
            let a = lp.a_ub.get(i, j);
            if a == T::zero() {
                continue;
            }
            match *sub {
                Substitution::Shifted { col, offset, sign } => {
                    row[col] += a * sign;
                    b -= a * offset;
                }
                Substitution::Split { pos, neg } => {
                    row[pos] += a;
                    row[neg] -= a;
                }
            }
        }
        rows.push(row);
        rhs.push(b);
    }
    for &(col, width) in &upper_rows {
        let mut row = vec![T::zero(); n_y];
        row[col] = T::one();
        rows.push(row);
        rhs.push(width);
    }

    let mut cost_y = vec![T::zero(); n_y];
    let mut constant = lp.constant;
    for (j, sub) in subs.iter().enumerate() {
        let c = lp.cost[j];
        match *sub {
            Substitution::Shifted { col, offset, sign } => {
                cost_y[col] += c * sign;
                constant += c * offset;
            }
            Substitution::Split { pos, neg } => {
                cost_y[pos] += c;
                cost_y[neg] -= c;
            }
        }
    }

    // Columns: y | slacks | artificials.
    let artificial_rows: Vec<usize> = (0..m).filter(|&i| rhs[i] < T::zero()).collect();
    let n_art = artificial_rows.len();
    let cols = n_y + m + n_art;
    let width = cols + 1;
    let mut data = vec![T::zero(); (m + 1) * width];
    let mut basis = vec![0; m];
    let mut art_col = n_y + m;
    for i in 0..m {
        let flip = if rhs[i] < T::zero() { -T::one() } else { T::one() };
        let row = &mut data[i * width..(i + 1) * width];
        for (dst, &a) in row[..n_y].iter_mut().zip(&rows[i]) {
            *dst = flip * a;
        }
        row[n_y + i] = flip;
        row[cols] = flip * rhs[i];
        if flip < T::zero() {
            row[art_col] = T::one();
            basis[i] = art_col;
            art_col += 1;
        } else {
            basis[i] = n_y + i;
        }
    }

    // Shifted right-hand sides carry the bound magnitudes.
    let scale = rhs
        .iter()
        .chain(&lp.b_ub)
        .chain(&lp.cost)
        .fold(T::one(), |acc, x| acc.max(x.abs()));
    let cost_scale = cost_y.iter().fold(T::one(), |acc, x| acc.max(x.abs()));
    let mut simplex = Simplex {
        tab: Tableau {
            rows: m,
            cols,
            data,
            basis,
        },
        pivot_tol: tol::<T>(1e-9),
        opt_tol: tol::<T>(1e-9) * cost_scale,
        iterations: 0,
        limit: ITERATIONS_PER_VARIABLE * (n_y + m).max(1),
    };

    let limit_error = |limit: usize, best: Option<Vec<f64>>| LpError::IterationLimit {
        limit,
        best_feasible: best,
    };

    if n_art > 0 {
        // Phase one objective: sum of artificials, expressed in nonbasic terms.
        let obj = m * width;
        for &i in &artificial_rows {
            for j in 0..width {
                let v = simplex.tab.data[i * width + j];
                simplex.tab.data[obj + j] -= v;
            }
        }
        for j in n_y + m..cols {
            simplex.tab.data[obj + j] = T::zero();
        }
        let can_enter = vec![true; cols];
        let saved_opt_tol = simplex.opt_tol;
        simplex.opt_tol = tol::<T>(1e-9);
        simplex
            .run_phase(&can_enter)
            .map_err(|limit| limit_error(limit, None))?;
        simplex.opt_tol = saved_opt_tol;
        let residual = -simplex.tab.rhs(m);
        if residual > tol::<T>(1e-9) * scale {
            return Err(LpError::Infeasible {
                residual: residual.as_f64(),
            });
        }
        // Pivot remaining artificials out of the basis where possible.
        for r in 0..m {
            if simplex.tab.basis[r] < n_y + m {
                continue;
            }
            let q = (0..n_y + m)
                .filter(|&j| simplex.tab.at(r, j).abs() > simplex.pivot_tol)
                .max_by(|&a, &b| {
                    simplex
                        .tab
                        .at(r, a)
                        .abs()
                        .partial_cmp(&simplex.tab.at(r, b).abs())
                        .unwrap()
                });
            if let Some(q) = q {
                simplex.tab.pivot(r, q);
            }
        }
    }

    // Phase two objective row.
    let obj = m * width;
    for j in 0..width {
        simplex.tab.data[obj + j] = if j < n_y { cost_y[j] } else { T::zero() };
    }
    for r in 0..m {
        let q = simplex.tab.basis[r];
        let c = simplex.tab.data[obj + q];
        if c == T::zero() {
            continue;
        }
        for j in 0..width {
            let v = simplex.tab.data[r * width + j];
            simplex.tab.data[obj + j] -= c * v;
        }
    }
    let can_enter: Vec<bool> = (0..cols).map(|j| j < n_y + m).collect();

    let recover = |y: &[T]| -> Vec<T> {
        subs.iter()
            .map(|sub| match *sub {
                Substitution::Shifted { col, offset, sign } => offset + sign * y[col],
                Substitution::Split { pos, neg } => y[pos] - y[neg],
            })
            .collect()
    };

    let outcome = match simplex.run_phase(&can_enter) {
        Ok(outcome) => outcome,
        Err(limit) => {
            let x = recover(&simplex.tab.basic_values());
            return Err(limit_error(limit, Some(x.iter().map(|v| v.as_f64()).collect())));
        }
    };
    let x = recover(&simplex.tab.basic_values());
    let _ = constant;
    Ok(match outcome {
        PhaseOutcome::Optimal => LpSolution {
            status: LpStatus::Optimal,
            objective: lp.objective(&x),
            x,
            iterations: simplex.iterations,
        },
        PhaseOutcome::Unbounded => LpSolution {
            status: LpStatus::Unbounded,
            objective: T::neg_infinity(),
            x,
            iterations: simplex.iterations,
        },
    })
}
