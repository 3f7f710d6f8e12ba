//! Sequential convex programming for discrete-time optimal control.
//!
//! A constrained problem is turned into the exact-penalty composite
//! objective `J(z) = psi(G(z))` ([`composite`]). The outer loop ([`solver`])
//! linearizes `G`, solves the trust-region LP subproblem ([`subproblem`],
//! [`lp`]) and accepts steps by the actual-to-predicted decrease ratio. The
//! [`diagnostics`] module probes a finished run for sharpness, growth,
//! small-step behaviour, whole-sequence convergence and rate. [`problems`]
//! holds the benchmark instances.
//!
//! All numerics are generic over [`Scalar`] (`f32`/`f64`); the aliases at
//! the crate root fix `f64`.

pub mod composite;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod problems;
mod scalar;
pub mod solver;
pub mod subproblem;

pub use composite::{
    evaluate_model, evaluate_objective, fd_check_jacobian, AffineMap, ClosureMap,
    CompositeObjective, ConvexOuter, DecisionVector, Linearization, SmoothMap,
};
pub use error::{EvalError, ModelError};
pub use linalg::{Matrix, Norm};
pub use lp::{lp_solve, LpError, LpSolution, LpStandardForm, LpStatus};
pub use scalar::Scalar;
pub use solver::{
    check_stationarity, run_scvx, trust_region_ratio, update_radius, IterationRecord, SolveError,
    SolveResult, SolveStatus, StopReason, TrustRegionParams,
};
pub use subproblem::{
    build_lp, solve_min_norm, solve_subproblem, SubproblemError, SubproblemSolution,
    SubproblemStatus, TrustRegionSubproblem,
};

pub type Objective = CompositeObjective<f64>;
pub type Model = Linearization<f64>;
pub type Params = TrustRegionParams<f64>;
pub type Solution = SolveResult<f64>;
pub type Record = IterationRecord<f64>;
pub type Point = DecisionVector<f64>;
