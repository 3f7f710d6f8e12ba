//! Benchmark library: discrete-time optimal control problems, their
//! exact-penalty transcription, and synthetic composite toys.

mod builtin;
mod ocp;
mod transcribe;

pub use builtin::{builtin, builtin_with, BuiltinOptions, BuiltinProblem, KnownSolution, BUILTIN_NAMES};
pub use ocp::{
    ControlEffort, Discretization, DiskObstacle, DoubleIntegrator, DubinsCar, Dynamics, Integrator,
    LinearCost, OptimalControlProblem, PathConstraint, StageCost, VectorField,
};
pub use transcribe::{simulate_rollout, transcribe, DiscretizedProblem, Layout};
