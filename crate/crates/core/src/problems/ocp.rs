use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::linalg::Matrix;
use crate::Scalar;

/// One-step discrete dynamics `x_{k+1} = F(x_k, u_k)`.
pub trait Dynamics<T: Scalar>: Send + Sync {
    fn state_dim(&self) -> usize;

    fn control_dim(&self) -> usize;

    fn step(&self, x: &[T], u: &[T]) -> Vec<T>;

    /// `(dF/dx, dF/du)`.
    fn step_jacobians(&self, x: &[T], u: &[T]) -> (Matrix<T>, Matrix<T>);
}

/// Continuous-time vector field `x' = f(x, u)`.
pub trait VectorField<T: Scalar>: Send + Sync {
    fn state_dim(&self) -> usize;

    fn control_dim(&self) -> usize;

    fn rate(&self, x: &[T], u: &[T]) -> Vec<T>;

    /// `(df/dx, df/du)`.
    fn rate_jacobians(&self, x: &[T], u: &[T]) -> (Matrix<T>, Matrix<T>);
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Euler,
    Rk4,
}

/// Fixed-step discretization of a [`VectorField`].
#[derive(Clone, Debug)]
pub struct Discretization<F, T> {
    pub field: F,
    pub dt: T,
    pub integrator: Integrator,
}

fn axpy<T: Scalar>(x: &[T], alpha: T, v: &[T]) -> Vec<T> {
    x.iter().zip(v).map(|(&a, &b)| a + alpha * b).collect()
}

impl<T: Scalar, F: VectorField<T>> Dynamics<T> for Discretization<F, T> {
    fn state_dim(&self) -> usize {
        self.field.state_dim()
    }

    fn control_dim(&self) -> usize {
        self.field.control_dim()
    }

    fn step(&self, x: &[T], u: &[T]) -> Vec<T> {
        let h = self.dt;
        match self.integrator {
            Integrator::Euler => axpy(x, h, &self.field.rate(x, u)),
            Integrator::Rk4 => {
                let half = h / T::lit(2.0);
                let k1 = self.field.rate(x, u);
                let k2 = self.field.rate(&axpy(x, half, &k1), u);
                let k3 = self.field.rate(&axpy(x, half, &k2), u);
                let k4 = self.field.rate(&axpy(x, h, &k3), u);
                let sixth = h / T::lit(6.0);
                (0..x.len())
                    .map(|i| x[i] + sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]))
                    .collect()
            }
        }
    }

    fn step_jacobians(&self, x: &[T], u: &[T]) -> (Matrix<T>, Matrix<T>) {
        let n = x.len();
        let h = self.dt;
        let eye = Matrix::identity(n);
        match self.integrator {
            Integrator::Euler => {
                let (fx, fu) = self.field.rate_jacobians(x, u);
                (eye.add_scaled(h, &fx), Matrix::zeros(n, u.len()).add_scaled(h, &fu))
            }
            Integrator::Rk4 => {
                // Chain rule through the four stages.
                let half = h / T::lit(2.0);
                let k1 = self.field.rate(x, u);
                let (a1, b1) = self.field.rate_jacobians(x, u);
                let x2 = axpy(x, half, &k1);
                let k2 = self.field.rate(&x2, u);
                let (fx2, fu2) = self.field.rate_jacobians(&x2, u);
                let a2 = fx2.matmul(&eye.add_scaled(half, &a1));
                let b2 = fx2.matmul(&b1).add_scaled(T::one() / half, &fu2);
                let b2 = scale(&b2, half);
                let x3 = axpy(x, half, &k2);
                let k3 = self.field.rate(&x3, u);
                let (fx3, fu3) = self.field.rate_jacobians(&x3, u);
                let a3 = fx3.matmul(&eye.add_scaled(half, &a2));
                let b3 = scale(&fx3.matmul(&b2), half).add_scaled(T::one(), &fu3);
                let x4 = axpy(x, h, &k3);
                let (fx4, fu4) = self.field.rate_jacobians(&x4, u);
                let a4 = fx4.matmul(&eye.add_scaled(h, &a3));
                let b4 = scale(&fx4.matmul(&b3), h).add_scaled(T::one(), &fu4);
                let sixth = h / T::lit(6.0);
                let two = T::lit(2.0);
                let a = eye.add_scaled(sixth, &a1.add_scaled(two, &a2).add_scaled(two, &a3).add_scaled(T::one(), &a4));
                let b = scale(&b1.add_scaled(two, &b2).add_scaled(two, &b3).add_scaled(T::one(), &b4), sixth);
                (a, b)
            }
        }
    }
}

fn scale<T: Scalar>(m: &Matrix<T>, alpha: T) -> Matrix<T> {
    Matrix::zeros(m.rows(), m.cols()).add_scaled(alpha, m)
}

/// Stage cost `l_k(x_k, u_k)`. The last node has no control.
pub trait StageCost<T: Scalar>: Send + Sync {
    fn cost(&self, k: usize, x: &[T], u: Option<&[T]>) -> T;

    /// `(dl/dx, dl/du)`; `dl/du` is empty when `u` is `None`.
    fn gradient(&self, k: usize, x: &[T], u: Option<&[T]>) -> (Vec<T>, Vec<T>);
}

/// Smooth path constraint `g(x_k, u_k) <= 0`, imposed at every node.
pub trait PathConstraint<T: Scalar>: Send + Sync {
    fn value(&self, x: &[T], u: Option<&[T]>) -> T;

    fn gradient(&self, x: &[T], u: Option<&[T]>) -> (Vec<T>, Vec<T>);
}

/// Discrete-time optimal control problem over `nodes` states and
/// `nodes - 1` controls.
#[derive(Clone)]
pub struct OptimalControlProblem<T: Scalar> {
    pub n_x: usize,
    pub n_u: usize,
    pub nodes: usize,
    pub dynamics: Arc<dyn Dynamics<T>>,
    pub initial_state: Vec<T>,
    pub final_state: Option<Vec<T>>,
    pub stage_cost: Arc<dyn StageCost<T>>,
    pub path_constraints: Vec<Arc<dyn PathConstraint<T>>>,
    pub control_bounds: Vec<(T, T)>,
}

impl<T: Scalar> fmt::Debug for OptimalControlProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OptimalControlProblem")
            .field("n_x", &self.n_x)
            .field("n_u", &self.n_u)
            .field("nodes", &self.nodes)
            .field("path_constraints", &self.path_constraints.len())
            .field("control_bounds", &self.control_bounds)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> OptimalControlProblem<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::InvalidProblem(msg));
        if self.nodes < 2 {
            return fail(format!("need at least 2 nodes, got {}", self.nodes));
        }
        if self.n_x == 0 || self.n_u == 0 {
            return fail("state and control dimensions must be positive".into());
        }
        if self.dynamics.state_dim() != self.n_x || self.dynamics.control_dim() != self.n_u {
            return fail("dynamics dimensions disagree with the problem".into());
        }
        if self.initial_state.len() != self.n_x {
            return fail("initial state has the wrong length".into());
        }
        if self.final_state.as_ref().is_some_and(|x| x.len() != self.n_x) {
            return fail("final state has the wrong length".into());
        }
        if self.control_bounds.len() != self.n_u {
            return fail("one bound interval per control component is required".into());
        }
        for (j, &(lo, hi)) in self.control_bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return fail(format!("control bound {j} is not a finite nonempty interval"));
            }
        }
        Ok(())
    }
}

/// Planar double integrator: state `(p, v)` per axis, control is acceleration.
#[derive(Clone, Copy, Debug)]
pub struct DoubleIntegrator {
    pub axes: usize,
}

impl<T: Scalar> VectorField<T> for DoubleIntegrator {
    fn state_dim(&self) -> usize {
        2 * self.axes
    }

    fn control_dim(&self) -> usize {
        self.axes
    }

    /// State layout `[p_0..p_{a-1}, v_0..v_{a-1}]`.
    fn rate(&self, x: &[T], u: &[T]) -> Vec<T> {
        let a = self.axes;
        x[a..].iter().chain(u).copied().collect()
    }

    fn rate_jacobians(&self, _x: &[T], _u: &[T]) -> (Matrix<T>, Matrix<T>) {
        let a = self.axes;
        let mut fx = Matrix::zeros(2 * a, 2 * a);
        let mut fu = Matrix::zeros(2 * a, a);
        for i in 0..a {
            fx.set(i, a + i, T::one());
            fu.set(a + i, i, T::one());
        }
        (fx, fu)
    }
}

/// Constant-speed Dubins car: state `(p_x, p_y, heading)`, control is turn rate.
#[derive(Clone, Copy, Debug)]
pub struct DubinsCar<T> {
    pub speed: T,
}

impl<T: Scalar> VectorField<T> for DubinsCar<T> {
    fn state_dim(&self) -> usize {
        3
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn rate(&self, x: &[T], u: &[T]) -> Vec<T> {
        vec![self.speed * x[2].cos(), self.speed * x[2].sin(), u[0]]
    }

    fn rate_jacobians(&self, x: &[T], _u: &[T]) -> (Matrix<T>, Matrix<T>) {
        let mut fx = Matrix::zeros(3, 3);
        fx.set(0, 2, -self.speed * x[2].sin());
        fx.set(1, 2, self.speed * x[2].cos());
        let mut fu = Matrix::zeros(3, 1);
        fu.set(2, 0, T::one());
        (fx, fu)
    }
}

/// Linear stage cost `q_k' x + r_k' u`, with weights given per node.
#[derive(Clone, Debug)]
pub struct LinearCost<T> {
    /// `state_weights[k]`, one vector per node.
    pub state_weights: Vec<Vec<T>>,
    /// `control_weights[k]`, one vector per control node.
    pub control_weights: Vec<Vec<T>>,
}

impl<T: Scalar> LinearCost<T> {
    /// `weights' x_{N-1}`, zero elsewhere.
    pub fn terminal(nodes: usize, n_u: usize, weights: Vec<T>) -> Self {
        let n_x = weights.len();
        let mut state_weights = vec![vec![T::zero(); n_x]; nodes];
        state_weights[nodes - 1] = weights;
        Self {
            state_weights,
            control_weights: vec![vec![T::zero(); n_u]; nodes - 1],
        }
    }

    /// Uses `weights` as the control weight at every control node.
    pub fn with_control_weights(mut self, weights: Vec<T>) -> Self {
        for w in &mut self.control_weights {
            w.clone_from(&weights);
        }
        self
    }
}

impl<T: Scalar> StageCost<T> for LinearCost<T> {
    fn cost(&self, k: usize, x: &[T], u: Option<&[T]>) -> T {
        let mut c = crate::linalg::dot(&self.state_weights[k], x);
        if let Some(u) = u {
            c += crate::linalg::dot(&self.control_weights[k], u);
        }
        c
    }

    fn gradient(&self, k: usize, _x: &[T], u: Option<&[T]>) -> (Vec<T>, Vec<T>) {
        let gu = match u {
            Some(_) => self.control_weights[k].clone(),
            None => Vec::new(),
        };
        (self.state_weights[k].clone(), gu)
    }
}

/// Quadratic control effort `weight * ||u||^2`.
#[derive(Clone, Copy, Debug)]
pub struct ControlEffort<T> {
    pub weight: T,
}

impl<T: Scalar> StageCost<T> for ControlEffort<T> {
    fn cost(&self, _k: usize, _x: &[T], u: Option<&[T]>) -> T {
        u.map_or(T::zero(), |u| self.weight * crate::linalg::dot(u, u))
    }

    fn gradient(&self, _k: usize, x: &[T], u: Option<&[T]>) -> (Vec<T>, Vec<T>) {
        let gu = u.map_or(Vec::new(), |u| {
            u.iter().map(|&v| T::lit(2.0) * self.weight * v).collect()
        });
        (vec![T::zero(); x.len()], gu)
    }
}

/// Keep-out disk `r^2 - ||p - c||^2 <= 0` on the position components
/// `x[position.0]`, `x[position.1]`.
#[derive(Clone, Copy, Debug)]
pub struct DiskObstacle<T> {
    pub center: (T, T),
    pub radius: T,
    pub position: (usize, usize),
}

impl<T: Scalar> PathConstraint<T> for DiskObstacle<T> {
    fn value(&self, x: &[T], _u: Option<&[T]>) -> T {
        let dx = x[self.position.0] - self.center.0;
        let dy = x[self.position.1] - self.center.1;
        self.radius * self.radius - (dx * dx + dy * dy)
    }

    fn gradient(&self, x: &[T], u: Option<&[T]>) -> (Vec<T>, Vec<T>) {
        let mut gx = vec![T::zero(); x.len()];
        gx[self.position.0] = -T::lit(2.0) * (x[self.position.0] - self.center.0);
        gx[self.position.1] = -T::lit(2.0) * (x[self.position.1] - self.center.1);
        (gx, vec![T::zero(); u.map_or(0, <[T]>::len)])
    }
}
