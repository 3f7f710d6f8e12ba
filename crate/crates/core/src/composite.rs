//! Exact-penalty composite objective `J(z) = psi(G(z))` and its convex model.
//!
//! `G` is a smooth vector map and `psi` is the structured convex outer
//! function
//!
//! ```text
//! psi(c) = sum_{i in cost} c_i + lambda * sum_{i in eq} |c_i| + lambda * sum_{i in ineq} max(0, c_i)
//! ```
//!
//! Linearizing only `G` gives the convex model `L(d) = psi(G(z) + DG(z) d)`
//! whose trust-region minimizer drives the outer iteration.

use std::fmt;
use std::ops::{Deref, Range};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, ModelError};
use crate::linalg::{dot, Matrix};
use crate::Scalar;

/// Stacked decision variables. Entries are finite by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionVector<T>(Vec<T>);

impl<T: Scalar> DecisionVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self, EvalError> {
        if let Some(index) = values.iter().position(|x| !x.is_finite()) {
            return Err(EvalError::NonFiniteInput { index });
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T> Deref for DecisionVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> AsRef<[T]> for DecisionVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

/// Smooth map `G: R^n -> R^m` with an analytic Jacobian.
///
/// Implementations return raw values; finiteness and dimensions are checked
/// by the callers in this module.
pub trait SmoothMap<T: Scalar>: Send + Sync {
    fn input_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    fn evaluate(&self, z: &[T]) -> Vec<T>;

    /// Dense `output_dim x input_dim` Jacobian.
    fn jacobian(&self, z: &[T]) -> Matrix<T>;
}

fn check_input<T: Scalar>(expected: usize, z: &[T]) -> Result<(), EvalError> {
    if z.len() != expected {
        return Err(EvalError::DimensionMismatch {
            expected,
            found: z.len(),
        });
    }
    match z.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(EvalError::NonFiniteInput { index }),
        None => Ok(()),
    }
}

/// Evaluates `map` at `z` with dimension and finiteness checks.
pub fn evaluate_checked<T: Scalar>(map: &dyn SmoothMap<T>, z: &[T]) -> Result<Vec<T>, EvalError> {
    check_input(map.input_dim(), z)?;
    let value = map.evaluate(z);
    if value.len() != map.output_dim() {
        return Err(EvalError::DimensionMismatch {
            expected: map.output_dim(),
            found: value.len(),
        });
    }
    match value.iter().position(|x| !x.is_finite()) {
        Some(component) => Err(EvalError::NonFiniteValue { component }),
        None => Ok(value),
    }
}

/// Jacobian of `map` at `z` with dimension and finiteness checks.
pub fn jacobian_checked<T: Scalar>(map: &dyn SmoothMap<T>, z: &[T]) -> Result<Matrix<T>, EvalError> {
    check_input(map.input_dim(), z)?;
    let jac = map.jacobian(z);
    if jac.rows() != map.output_dim() || jac.cols() != map.input_dim() {
        return Err(EvalError::DimensionMismatch {
            expected: map.output_dim() * map.input_dim(),
            found: jac.rows() * jac.cols(),
        });
    }
    match jac.first_non_finite() {
        Some((row, col)) => Err(EvalError::NonFiniteJacobian { row, col }),
        None => Ok(jac),
    }
}

/// Affine map `G(z) = A z + b`.
#[derive(Clone, Debug)]
pub struct AffineMap<T> {
    pub matrix: Matrix<T>,
    pub offset: Vec<T>,
}

impl<T: Scalar> AffineMap<T> {
    pub fn new(matrix: Matrix<T>, offset: Vec<T>) -> Self {
        assert_eq!(matrix.rows(), offset.len());
        Self { matrix, offset }
    }
}

impl<T: Scalar> SmoothMap<T> for AffineMap<T> {
    fn input_dim(&self) -> usize {
        self.matrix.cols()
    }

    fn output_dim(&self) -> usize {
        self.matrix.rows()
    }

    fn evaluate(&self, z: &[T]) -> Vec<T> {
        (0..self.matrix.rows())
            .map(|i| dot(self.matrix.row(i), z) + self.offset[i])
            .collect()
    }

    fn jacobian(&self, _z: &[T]) -> Matrix<T> {
        self.matrix.clone()
    }
}

type ValueFn<T> = dyn Fn(&[T]) -> Vec<T> + Send + Sync;
type JacobianFn<T> = dyn Fn(&[T]) -> Matrix<T> + Send + Sync;

/// Smooth map assembled from a pair of closures.
pub struct ClosureMap<T> {
    input_dim: usize,
    output_dim: usize,
    value: Box<ValueFn<T>>,
    jacobian: Box<JacobianFn<T>>,
}

impl<T: Scalar> ClosureMap<T> {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        value: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
        jacobian: impl Fn(&[T]) -> Matrix<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            input_dim,
            output_dim,
            value: Box::new(value),
            jacobian: Box::new(jacobian),
        }
    }
}

impl<T> fmt::Debug for ClosureMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureMap")
            .field("input_dim", &self.input_dim)
            .field("output_dim", &self.output_dim)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> SmoothMap<T> for ClosureMap<T> {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn evaluate(&self, z: &[T]) -> Vec<T> {
        (self.value)(z)
    }

    fn jacobian(&self, z: &[T]) -> Matrix<T> {
        (self.jacobian)(z)
    }
}

/// Structured convex outer function. The components of `G` are laid out as
/// `[cost | equalities | inequalities]`, so the three ranges partition the
/// output indices by construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexOuter<T> {
    n_cost: usize,
    n_eq: usize,
    n_ineq: usize,
    lambda: T,
}

impl<T: Scalar> ConvexOuter<T> {
    pub fn new(n_cost: usize, n_eq: usize, n_ineq: usize, lambda: T) -> Result<Self, ModelError> {
        if !(lambda.is_finite() && lambda > T::zero()) {
            return Err(ModelError::InvalidLambda(lambda.as_f64()));
        }
        Ok(Self {
            n_cost,
            n_eq,
            n_ineq,
            lambda,
        })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn with_lambda(self, lambda: T) -> Result<Self, ModelError> {
        Self::new(self.n_cost, self.n_eq, self.n_ineq, lambda)
    }

    pub fn output_dim(&self) -> usize {
        self.n_cost + self.n_eq + self.n_ineq
    }

    pub fn cost_range(&self) -> Range<usize> {
        0..self.n_cost
    }

    pub fn eq_range(&self) -> Range<usize> {
        self.n_cost..self.n_cost + self.n_eq
    }

    pub fn ineq_range(&self) -> Range<usize> {
        self.n_cost + self.n_eq..self.output_dim()
    }

    /// Lipschitz constant of `psi` with respect to the 1-norm.
    pub fn lipschitz_bound(&self) -> T {
        if self.n_eq + self.n_ineq == 0 {
            T::one()
        } else {
            self.lambda.max(T::one())
        }
    }

    /// Splits `psi(c)` into `(cost, sum |eq|, sum max(0, ineq))`.
    pub fn terms(&self, c: &[T]) -> (T, T, T) {
        debug_assert_eq!(c.len(), self.output_dim());
        let cost = c[self.cost_range()].iter().copied().fold(T::zero(), |a, x| a + x);
        let eq = c[self.eq_range()].iter().fold(T::zero(), |a, x| a + x.abs());
        let ineq = c[self.ineq_range()]
            .iter()
            .fold(T::zero(), |a, &x| a + x.max(T::zero()));
        (cost, eq, ineq)
    }

    /// `psi(c)`.
    pub fn value(&self, c: &[T]) -> T {
        let (cost, eq, ineq) = self.terms(c);
        cost + self.lambda * (eq + ineq)
    }
}

/// `J(z) = psi(G(z))`. Immutable; clones share the underlying map.
#[derive(Clone)]
pub struct CompositeObjective<T: Scalar> {
    g: Arc<dyn SmoothMap<T>>,
    psi: ConvexOuter<T>,
}

impl<T: Scalar> fmt::Debug for CompositeObjective<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeObjective")
            .field("n_z", &self.g.input_dim())
            .field("psi", &self.psi)
            .finish()
    }
}

impl<T: Scalar> CompositeObjective<T> {
    pub fn new(g: Arc<dyn SmoothMap<T>>, psi: ConvexOuter<T>) -> Result<Self, ModelError> {
        if g.output_dim() != psi.output_dim() {
            return Err(ModelError::OutputMismatch {
                psi: psi.output_dim(),
                map: g.output_dim(),
            });
        }
        Ok(Self { g, psi })
    }

    pub fn map(&self) -> &dyn SmoothMap<T> {
        self.g.as_ref()
    }

    pub fn psi(&self) -> &ConvexOuter<T> {
        &self.psi
    }

    /// Same map, different penalty weight.
    pub fn with_lambda(&self, lambda: T) -> Result<Self, ModelError> {
        Ok(Self {
            g: Arc::clone(&self.g),
            psi: self.psi.with_lambda(lambda)?,
        })
    }

    pub fn n_z(&self) -> usize {
        self.g.input_dim()
    }

    pub fn evaluate(&self, z: &[T]) -> Result<T, EvalError> {
        let c = evaluate_checked(self.map(), z)?;
        Ok(self.psi.value(&c))
    }

    /// `G(z)` with checks.
    pub fn constraint_values(&self, z: &[T]) -> Result<Vec<T>, EvalError> {
        evaluate_checked(self.map(), z)
    }

    /// Largest violation of the penalized components, `max(|eq_i|, max(0, ineq_i))`.
    pub fn max_violation(&self, z: &[T]) -> Result<T, EvalError> {
        let c = evaluate_checked(self.map(), z)?;
        let eq = c[self.psi.eq_range()].iter().map(|x| x.abs());
        let ineq = c[self.psi.ineq_range()].iter().map(|&x| x.max(T::zero()));
        Ok(eq.chain(ineq).fold(T::zero(), T::max))
    }

    pub fn linearize(&self, z: &[T]) -> Result<Linearization<T>, EvalError> {
        let g_value = evaluate_checked(self.map(), z)?;
        let g_jacobian = jacobian_checked(self.map(), z)?;
        let value = self.psi.value(&g_value);
        Ok(Linearization {
            base_point: DecisionVector(z.to_vec()),
            g_value,
            g_jacobian,
            psi: self.psi,
            value,
        })
    }
}

/// `J(z)`.
pub fn evaluate_objective<T: Scalar>(obj: &CompositeObjective<T>, z: &[T]) -> Result<T, EvalError> {
    obj.evaluate(z)
}

/// Linearization of `G` at a base point together with `psi`.
#[derive(Clone, Debug)]
pub struct Linearization<T> {
    pub base_point: DecisionVector<T>,
    pub g_value: Vec<T>,
    pub g_jacobian: Matrix<T>,
    pub psi: ConvexOuter<T>,
    value: T,
}

impl<T: Scalar> Linearization<T> {
    pub fn n_z(&self) -> usize {
        self.g_jacobian.cols()
    }

    /// `J(base_point)`, computed through the same path as `L(0)`.
    pub fn base_value(&self) -> T {
        self.value
    }

    /// `G(z) + DG(z) d`.
    pub fn model_components(&self, d: &[T]) -> Vec<T> {
        self.g_value
            .iter()
            .enumerate()
            .map(|(i, &g)| g + dot(self.g_jacobian.row(i), d))
            .collect()
    }

    pub fn evaluate(&self, d: &[T]) -> Result<T, EvalError> {
        check_input(self.n_z(), d)?;
        Ok(self.psi.value(&self.model_components(d)))
    }
}

/// `L(d) = psi(G(z) + DG(z) d)`.
pub fn evaluate_model<T: Scalar>(lin: &Linearization<T>, d: &[T]) -> Result<T, EvalError> {
    lin.evaluate(d)
}

/// Max over Jacobian entries of `|analytic - central difference| / (1 + |analytic|)`.
///
/// The perturbation of coordinate `i` is `step * (1 + |z_i|)`.
pub fn fd_check_jacobian<T: Scalar>(
    map: &dyn SmoothMap<T>,
    z: &[T],
    step: T,
) -> Result<T, EvalError> {
    assert!(step > T::zero(), "finite-difference step must be positive");
    let analytic = jacobian_checked(map, z)?;
    let mut probe = z.to_vec();
    let two = T::lit(2.0);
    let mut worst = T::zero();
    for j in 0..z.len() {
        let h = step * (T::one() + z[j].abs());
        probe[j] = z[j] + h;
        let plus = evaluate_checked(map, &probe)?;
        probe[j] = z[j] - h;
        let minus = evaluate_checked(map, &probe)?;
        probe[j] = z[j];
        for i in 0..analytic.rows() {
            let fd = (plus[i] - minus[i]) / (two * h);
            let a = analytic.get(i, j);
            worst = worst.max((a - fd).abs() / (T::one() + a.abs()));
        }
    }
    Ok(worst)
}
