use thiserror::Error;

/// Failure while evaluating `G`, its Jacobian, or `psi(G(z))`.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite input entry at index {index}")]
    NonFiniteInput { index: usize },
    #[error("non-finite value in output component {component}")]
    NonFiniteValue { component: usize },
    #[error("non-finite jacobian entry at ({row}, {col})")]
    NonFiniteJacobian { row: usize, col: usize },
}

/// Structural problems detected when assembling an objective or a problem.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum ModelError {
    #[error("penalty weight must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("outer function expects {psi} components but the map produces {map}")]
    OutputMismatch { psi: usize, map: usize },
    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),
    #[error("unknown builtin problem `{0}`")]
    UnknownBuiltin(String),
}
