use std::ops::Range;
use std::sync::Arc;

use crate::composite::{CompositeObjective, ConvexOuter, DecisionVector, SmoothMap};
use crate::error::{EvalError, ModelError};
use crate::linalg::Matrix;
use crate::problems::ocp::OptimalControlProblem;
use crate::Scalar;

/// Index bookkeeping between `(node, component)` pairs and positions in `z`
/// and in the output of `G`.
///
/// `z = [x_0, ..., x_{N-1}, u_0, ..., u_{N-2}]`. The outputs of `G` are
/// stacked as
/// `[stage costs | dynamics defects | initial | final | path | control bounds]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub n_x: usize,
    pub n_u: usize,
    pub nodes: usize,
    pub n_path: usize,
    pub has_final: bool,
}

impl Layout {
    pub fn n_z(&self) -> usize {
        self.n_x * self.nodes + self.n_u * (self.nodes - 1)
    }

    pub fn state(&self, k: usize) -> Range<usize> {
        k * self.n_x..(k + 1) * self.n_x
    }

    pub fn control(&self, k: usize) -> Range<usize> {
        let start = self.n_x * self.nodes + k * self.n_u;
        start..start + self.n_u
    }

    pub fn n_cost(&self) -> usize {
        self.nodes
    }

    pub fn n_eq(&self) -> usize {
        self.n_x * (self.nodes - 1) + self.n_x + if self.has_final { self.n_x } else { 0 }
    }

    pub fn n_ineq(&self) -> usize {
        self.n_path * self.nodes + 2 * self.n_u * (self.nodes - 1)
    }

    pub fn n_outputs(&self) -> usize {
        self.n_cost() + self.n_eq() + self.n_ineq()
    }

    pub fn cost_row(&self, k: usize) -> usize {
        k
    }

    pub fn defect_rows(&self, k: usize) -> Range<usize> {
        let start = self.nodes + k * self.n_x;
        start..start + self.n_x
    }

    pub fn initial_rows(&self) -> Range<usize> {
        let start = self.nodes + (self.nodes - 1) * self.n_x;
        start..start + self.n_x
    }

    pub fn final_rows(&self) -> Option<Range<usize>> {
        self.has_final.then(|| {
            let start = self.initial_rows().end;
            start..start + self.n_x
        })
    }

    fn ineq_start(&self) -> usize {
        self.n_cost() + self.n_eq()
    }

    pub fn path_row(&self, k: usize, p: usize) -> usize {
        self.ineq_start() + k * self.n_path + p
    }

    /// Row of `u_k[j] - hi <= 0` (`upper`) or `lo - u_k[j] <= 0`.
    pub fn bound_row(&self, k: usize, j: usize, upper: bool) -> usize {
        self.ineq_start() + self.n_path * self.nodes + 2 * (k * self.n_u + j) + usize::from(!upper)
    }

    /// Rows holding control-bound residuals.
    pub fn bound_rows(&self) -> Range<usize> {
        let start = self.ineq_start() + self.n_path * self.nodes;
        start..self.n_outputs()
    }
}

struct TranscribedMap<T: Scalar> {
    ocp: Arc<OptimalControlProblem<T>>,
    layout: Layout,
}

impl<T: Scalar> TranscribedMap<T> {
    fn control_at<'a>(&self, z: &'a [T], k: usize) -> Option<&'a [T]> {
        (k + 1 < self.layout.nodes).then(|| &z[self.layout.control(k)])
    }
}

impl<T: Scalar> SmoothMap<T> for TranscribedMap<T> {
    fn input_dim(&self) -> usize {
        self.layout.n_z()
    }

    fn output_dim(&self) -> usize {
        self.layout.n_outputs()
    }

    fn evaluate(&self, z: &[T]) -> Vec<T> {
        let l = &self.layout;
        let ocp = &self.ocp;
        let mut out = vec![T::zero(); l.n_outputs()];
        for k in 0..l.nodes {
            let x = &z[l.state(k)];
            let u = self.control_at(z, k);
            out[l.cost_row(k)] = ocp.stage_cost.cost(k, x, u);
            for (p, c) in ocp.path_constraints.iter().enumerate() {
                out[l.path_row(k, p)] = c.value(x, u);
            }
        }
        for k in 0..l.nodes - 1 {
            let next = ocp.dynamics.step(&z[l.state(k)], &z[l.control(k)]);
            let actual = &z[l.state(k + 1)];
            for (row, i) in l.defect_rows(k).zip(0..) {
                out[row] = actual[i] - next[i];
            }
            let u = &z[l.control(k)];
            for (j, &(lo, hi)) in ocp.control_bounds.iter().enumerate() {
                out[l.bound_row(k, j, true)] = u[j] - hi;
                out[l.bound_row(k, j, false)] = lo - u[j];
            }
        }
        let x0 = &z[l.state(0)];
        for (row, i) in l.initial_rows().zip(0..) {
            out[row] = x0[i] - ocp.initial_state[i];
        }
        if let (Some(rows), Some(target)) = (l.final_rows(), ocp.final_state.as_ref()) {
            let xf = &z[l.state(l.nodes - 1)];
            for (row, i) in rows.zip(0..) {
                out[row] = xf[i] - target[i];
            }
        }
        out
    }

    fn jacobian(&self, z: &[T]) -> Matrix<T> {
        let l = &self.layout;
        let ocp = &self.ocp;
        let mut jac = Matrix::zeros(l.n_outputs(), l.n_z());
        for k in 0..l.nodes {
            let x = &z[l.state(k)];
            let u = self.control_at(z, k);
            let (gx, gu) = ocp.stage_cost.gradient(k, x, u);
            let row = l.cost_row(k);
            for (c, &v) in l.state(k).zip(&gx) {
                jac.set(row, c, v);
            }
            if u.is_some() {
                for (c, &v) in l.control(k).zip(&gu) {
                    jac.set(row, c, v);
                }
            }
            for (p, con) in ocp.path_constraints.iter().enumerate() {
                let (gx, gu) = con.gradient(x, u);
                let row = l.path_row(k, p);
                for (c, &v) in l.state(k).zip(&gx) {
                    jac.set(row, c, v);
                }
                if u.is_some() {
                    for (c, &v) in l.control(k).zip(&gu) {
                        jac.set(row, c, v);
                    }
                }
            }
        }
        for k in 0..l.nodes - 1 {
            let (a, b) = ocp.dynamics.step_jacobians(&z[l.state(k)], &z[l.control(k)]);
            for (row, i) in l.defect_rows(k).zip(0..) {
                jac.set(row, l.state(k + 1).start + i, T::one());
                for (c, j) in l.state(k).zip(0..) {
                    jac.set(row, c, -a.get(i, j));
                }
                for (c, j) in l.control(k).zip(0..) {
                    jac.set(row, c, -b.get(i, j));
                }
            }
            for j in 0..l.n_u {
                let c = l.control(k).start + j;
                jac.set(l.bound_row(k, j, true), c, T::one());
                jac.set(l.bound_row(k, j, false), c, -T::one());
            }
        }
        for (row, c) in l.initial_rows().zip(l.state(0)) {
            jac.set(row, c, T::one());
        }
        if let Some(rows) = l.final_rows() {
            for (row, c) in rows.zip(l.state(l.nodes - 1)) {
                jac.set(row, c, T::one());
            }
        }
        jac
    }
}

/// An optimal control problem transcribed into a composite objective.
#[derive(Clone, Debug)]
pub struct DiscretizedProblem<T: Scalar> {
    pub composite: CompositeObjective<T>,
    pub layout: Layout,
    pub ocp: Arc<OptimalControlProblem<T>>,
}

/// Builds `G` (stage costs, dynamics defects, boundary defects, path
/// constraints, control-bound residuals) and `psi` with weight `lambda`.
pub fn transcribe<T: Scalar>(
    ocp: Arc<OptimalControlProblem<T>>,
    lambda: T,
) -> Result<DiscretizedProblem<T>, ModelError> {
    ocp.validate()?;
    let layout = Layout {
        n_x: ocp.n_x,
        n_u: ocp.n_u,
        nodes: ocp.nodes,
        n_path: ocp.path_constraints.len(),
        has_final: ocp.final_state.is_some(),
    };
    let psi = ConvexOuter::new(layout.n_cost(), layout.n_eq(), layout.n_ineq(), lambda)?;
    let map = TranscribedMap {
        ocp: Arc::clone(&ocp),
        layout,
    };
    let composite = CompositeObjective::new(Arc::new(map), psi)?;
    Ok(DiscretizedProblem {
        composite,
        layout,
        ocp,
    })
}

impl<T: Scalar> DiscretizedProblem<T> {
    /// Forward-simulates `controls` (stacked `u_0..u_{N-2}`) from the initial state.
    pub fn simulate_rollout(&self, controls: &[T]) -> Result<DecisionVector<T>, EvalError> {
        simulate_rollout(&self.ocp, controls)
    }

    /// Controls of `z`, stacked.
    pub fn controls<'a>(&self, z: &'a [T]) -> &'a [T] {
        &z[self.layout.control(0).start..]
    }

    /// Smooth cost part of `J`.
    pub fn smooth_cost(&self, z: &[T]) -> Result<T, EvalError> {
        let g = self.composite.constraint_values(z)?;
        Ok(self.composite.psi().terms(&g).0)
    }

    /// Values of the inequality components (path constraints and bounds).
    pub fn inequality_values(&self, z: &[T]) -> Result<Vec<T>, EvalError> {
        let g = self.composite.constraint_values(z)?;
        Ok(g[self.composite.psi().ineq_range()].to_vec())
    }
}

/// Iterates the dynamics from the initial state; the result satisfies every
/// defect and the initial condition by construction.
pub fn simulate_rollout<T: Scalar>(
    ocp: &OptimalControlProblem<T>,
    controls: &[T],
) -> Result<DecisionVector<T>, EvalError> {
    let expected = (ocp.nodes - 1) * ocp.n_u;
    if controls.len() != expected {
        return Err(EvalError::DimensionMismatch {
            expected,
            found: controls.len(),
        });
    }
    let mut z = Vec::with_capacity(ocp.nodes * ocp.n_x + expected);
    let mut x = ocp.initial_state.clone();
    z.extend_from_slice(&x);
    for k in 0..ocp.nodes - 1 {
        x = ocp.dynamics.step(&x, &controls[k * ocp.n_u..(k + 1) * ocp.n_u]);
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(EvalError::NonFiniteValue {
                component: (k + 1) * ocp.n_x + i,
            });
        }
        z.extend_from_slice(&x);
    }
    z.extend_from_slice(controls);
    DecisionVector::new(z)
}
