//! Named benchmark instances.
//!
//! | name | kind | notes |
//! |------|------|-------|
//! | `convex-lqr-box` | OCP | 1-axis double integrator, cost `-p_{N-1} - 0.1 sum u_k`, `|u| <= 1`. `G` is affine, so the convex model is exact; every control sits at its upper bound. |
//! | `double-integrator-obstacle` | OCP | 2-axis double integrator, cost `-p_x(N-1) - 0.1 sum u_x`, pushing forward past a keep-out disk centred at `(2, -0.3)` with radius `0.75`, `|u_i| <= 1`. Penalty threshold `dt (N - 1)`. |
//! | `dubins-car` | OCP | unit-speed car, cost `-p_y(N-1) - 0.1 sum omega_k`, `|omega| <= 1`, penalty threshold `dt (N - 1)`. The default horizon keeps the heading below `pi/2`, so turning at the bound is optimal at every node. |
//! | `toy-sharp-1d` | toy | `J(z) = z^2 + 10 |z - 1|`; minimizer `1`, sharpness `beta = 8`, growth `gamma = 8` (inf-norm); multiplier `2`. |
//! | `toy-sharp-2d` | toy | `J(z) = (z_1 - 2)^2 + (z_2 + 1)^2 + 10 |z_1 + z_2 - 1| + 10 max(0, z_1 - z_2)`; minimizer `(1/2, 1/2)`, `beta = gamma = 6` (inf-norm); multipliers `(0, 3)`. |
//! | `noncompact-levelset` | toy | `J(z) = e^z`; no minimizer, level sets unbounded. |

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::composite::{ClosureMap, CompositeObjective, ConvexOuter};
use crate::error::ModelError;
use crate::linalg::Matrix;
use crate::problems::ocp::{
    Discretization, DiskObstacle, DoubleIntegrator, DubinsCar, Integrator, LinearCost,
    OptimalControlProblem,
};
use crate::problems::transcribe::{simulate_rollout, transcribe, DiscretizedProblem};
use crate::solver::TrustRegionParams;
use crate::Scalar;

pub const BUILTIN_NAMES: [&str; 6] = [
    "convex-lqr-box",
    "double-integrator-obstacle",
    "dubins-car",
    "toy-sharp-1d",
    "toy-sharp-2d",
    "noncompact-levelset",
];

/// Linear reward on the pushing control at every node. Without it the last
/// control only moves the final velocity (or heading), which the terminal
/// cost ignores, and the minimizer is not unique.
const CONTROL_REWARD: f64 = 0.1;

/// Parameter overrides. Discretization options only apply to OCP instances.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinOptions {
    pub nodes: Option<usize>,
    pub dt: Option<f64>,
    pub integrator: Option<Integrator>,
    pub lambda: Option<f64>,
}

/// Analytically known minimizer and constants of a toy instance.
#[derive(Clone, Debug)]
pub struct KnownSolution<T> {
    pub z_bar: Vec<T>,
    /// Sharp-minimum constant in the inf-norm.
    pub beta: T,
    /// Model growth constant at `z_bar` in the inf-norm.
    pub gamma: T,
}

#[derive(Clone, Debug)]
pub struct BuiltinProblem<T: Scalar> {
    pub name: &'static str,
    pub objective: CompositeObjective<T>,
    pub discretized: Option<DiscretizedProblem<T>>,
    pub z0: Vec<T>,
    pub params: TrustRegionParams<T>,
    /// Penalty weights above this recover constrained minimizers.
    pub lambda_threshold: Option<T>,
    pub known: Option<KnownSolution<T>>,
    /// False for instances built to violate the level-set assumption.
    pub expect_convergence: bool,
}

impl<T: Scalar> BuiltinProblem<T> {
    /// Starting point for seed `seed`. Seed 0 is the documented default;
    /// other seeds roll out random admissible controls (OCPs) or perturb the
    /// default by up to one unit per coordinate (toys).
    pub fn initial_guess(&self, seed: u64) -> Vec<T> {
        if seed == 0 {
            return self.z0.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match &self.discretized {
            Some(prob) => {
                let controls: Vec<T> = (0..prob.layout.nodes - 1)
                    .flat_map(|_| prob.ocp.control_bounds.iter())
                    .map(|&(lo, hi)| {
                        let t: f64 = rng.gen();
                        lo + T::lit(t) * (hi - lo)
                    })
                    .collect();
                prob.simulate_rollout(&controls)
                    .map(|z| z.into_inner())
                    .unwrap_or_else(|_| self.z0.clone())
            }
            None => self
                .z0
                .iter()
                .map(|&v| v + T::lit(rng.gen_range(-1.0..1.0)))
                .collect(),
        }
    }
}

pub fn builtin<T: Scalar>(name: &str) -> Result<BuiltinProblem<T>, ModelError> {
    builtin_with(name, &BuiltinOptions::default())
}

pub fn builtin_with<T: Scalar>(
    name: &str,
    opts: &BuiltinOptions,
) -> Result<BuiltinProblem<T>, ModelError> {
    match name {
        "convex-lqr-box" => convex_lqr_box(opts),
        "double-integrator-obstacle" => double_integrator_obstacle(opts),
        "dubins-car" => dubins_car(opts),
        "toy-sharp-1d" | "toy-sharp-2d" | "noncompact-levelset" => {
            if opts.nodes.is_some() || opts.dt.is_some() || opts.integrator.is_some() {
                return Err(ModelError::InvalidProblem(format!(
                    "`{name}` accepts only the lambda override"
                )));
            }
            match name {
                "toy-sharp-1d" => Ok(toy_sharp_1d(opts)),
                "toy-sharp-2d" => Ok(toy_sharp_2d(opts)),
                _ => Ok(noncompact_levelset(opts)),
            }
        }
        other => Err(ModelError::UnknownBuiltin(other.to_string())),
    }
}

fn lambda_or<T: Scalar>(opts: &BuiltinOptions, default: f64) -> T {
    T::lit(opts.lambda.unwrap_or(default))
}

fn from_ocp<T: Scalar>(
    name: &'static str,
    ocp: OptimalControlProblem<T>,
    lambda: T,
    lambda_threshold: T,
    params: TrustRegionParams<T>,
) -> Result<BuiltinProblem<T>, ModelError> {
    let controls = vec![T::zero(); (ocp.nodes - 1) * ocp.n_u];
    let prob = transcribe(Arc::new(ocp), lambda)?;
    let z0 = simulate_rollout(&prob.ocp, &controls)
        .map_err(|e| ModelError::InvalidProblem(e.to_string()))?
        .into_inner();
    Ok(BuiltinProblem {
        name,
        objective: prob.composite.clone(),
        discretized: Some(prob),
        z0,
        params,
        lambda_threshold: Some(lambda_threshold),
        known: None,
        expect_convergence: true,
    })
}

fn check_discretization(nodes: usize, dt: f64) -> Result<(), ModelError> {
    if nodes < 2 || !(dt.is_finite() && dt > 0.0) {
        return Err(ModelError::InvalidProblem(format!(
            "need nodes >= 2 and dt > 0, got nodes={nodes}, dt={dt}"
        )));
    }
    Ok(())
}

fn convex_lqr_box<T: Scalar>(opts: &BuiltinOptions) -> Result<BuiltinProblem<T>, ModelError> {
    let nodes = opts.nodes.unwrap_or(8);
    let dt = opts.dt.unwrap_or(0.5);
    check_discretization(nodes, dt)?;
    let ocp = OptimalControlProblem {
        n_x: 2,
        n_u: 1,
        nodes,
        dynamics: Arc::new(Discretization {
            field: DoubleIntegrator { axes: 1 },
            dt: T::lit(dt),
            integrator: opts.integrator.unwrap_or_default(),
        }),
        initial_state: vec![T::zero(); 2],
        final_state: None,
        stage_cost: Arc::new(
            LinearCost::terminal(nodes, 1, vec![-T::one(), T::zero()])
                .with_control_weights(vec![T::lit(-CONTROL_REWARD)]),
        ),
        path_constraints: vec![],
        control_bounds: vec![(-T::one(), T::one())],
    };
    let threshold = T::lit(dt * (nodes - 1) as f64);
    from_ocp(
        "convex-lqr-box",
        ocp,
        lambda_or(opts, 10.0),
        threshold,
        TrustRegionParams::default(),
    )
}

fn double_integrator_obstacle<T: Scalar>(
    opts: &BuiltinOptions,
) -> Result<BuiltinProblem<T>, ModelError> {
    let nodes = opts.nodes.unwrap_or(10);
    let dt = opts.dt.unwrap_or(0.5);
    check_discretization(nodes, dt)?;
    let ocp = OptimalControlProblem {
        n_x: 4,
        n_u: 2,
        nodes,
        dynamics: Arc::new(Discretization {
            field: DoubleIntegrator { axes: 2 },
            dt: T::lit(dt),
            integrator: opts.integrator.unwrap_or_default(),
        }),
        initial_state: vec![T::zero(); 4],
        final_state: None,
        stage_cost: Arc::new(
            LinearCost::terminal(nodes, 2, vec![-T::one(), T::zero(), T::zero(), T::zero()])
                .with_control_weights(vec![T::lit(-CONTROL_REWARD), T::zero()]),
        ),
        path_constraints: vec![Arc::new(DiskObstacle {
            center: (T::lit(2.0), T::lit(-0.3)),
            radius: T::lit(0.75),
            position: (0, 1),
        })],
        control_bounds: vec![(-T::one(), T::one()); 2],
    };
    // Found by sweeping lambda; it coincides with the unobstructed bound.
    let threshold = T::lit(dt * (nodes - 1) as f64);
    from_ocp(
        "double-integrator-obstacle",
        ocp,
        lambda_or(opts, 30.0),
        threshold,
        TrustRegionParams::default(),
    )
}

fn dubins_car<T: Scalar>(opts: &BuiltinOptions) -> Result<BuiltinProblem<T>, ModelError> {
    let nodes = opts.nodes.unwrap_or(8);
    let dt = opts.dt.unwrap_or(0.2);
    check_discretization(nodes, dt)?;
    let ocp = OptimalControlProblem {
        n_x: 3,
        n_u: 1,
        nodes,
        dynamics: Arc::new(Discretization {
            field: DubinsCar { speed: T::one() },
            dt: T::lit(dt),
            integrator: opts.integrator.unwrap_or_default(),
        }),
        initial_state: vec![T::zero(); 3],
        final_state: None,
        stage_cost: Arc::new(
            LinearCost::terminal(nodes, 1, vec![T::zero(), -T::one(), T::zero()])
                .with_control_weights(vec![T::lit(-CONTROL_REWARD)]),
        ),
        path_constraints: vec![],
        control_bounds: vec![(-T::one(), T::one())],
    };
    let threshold = T::lit(dt * (nodes - 1) as f64);
    from_ocp(
        "dubins-car",
        ocp,
        lambda_or(opts, 10.0),
        threshold,
        TrustRegionParams::default(),
    )
}

fn toy_sharp_1d<T: Scalar>(opts: &BuiltinOptions) -> BuiltinProblem<T> {
    let g = ClosureMap::new(
        1,
        2,
        |z: &[T]| vec![z[0] * z[0], z[0] - T::one()],
        |z: &[T]| Matrix::from_rows(&[vec![T::lit(2.0) * z[0]], vec![T::one()]]),
    );
    let psi = ConvexOuter::new(1, 1, 0, lambda_or(opts, 10.0)).expect("valid lambda");
    BuiltinProblem {
        name: "toy-sharp-1d",
        objective: CompositeObjective::new(Arc::new(g), psi).expect("consistent dims"),
        discretized: None,
        z0: vec![T::lit(-2.0)],
        params: TrustRegionParams::default(),
        lambda_threshold: Some(T::lit(2.0)),
        known: Some(KnownSolution {
            z_bar: vec![T::one()],
            beta: T::lit(8.0),
            gamma: T::lit(8.0),
        }),
        expect_convergence: true,
    }
}

fn toy_sharp_2d<T: Scalar>(opts: &BuiltinOptions) -> BuiltinProblem<T> {
    let two = T::lit(2.0);
    let g = ClosureMap::new(
        2,
        3,
        move |z: &[T]| {
            let a = z[0] - two;
            let b = z[1] + T::one();
            vec![a * a + b * b, z[0] + z[1] - T::one(), z[0] - z[1]]
        },
        move |z: &[T]| {
            Matrix::from_rows(&[
                vec![two * (z[0] - two), two * (z[1] + T::one())],
                vec![T::one(), T::one()],
                vec![T::one(), -T::one()],
            ])
        },
    );
    let psi = ConvexOuter::new(1, 1, 1, lambda_or(opts, 10.0)).expect("valid lambda");
    BuiltinProblem {
        name: "toy-sharp-2d",
        objective: CompositeObjective::new(Arc::new(g), psi).expect("consistent dims"),
        discretized: None,
        z0: vec![T::lit(-1.0), T::lit(2.0)],
        params: TrustRegionParams::default(),
        lambda_threshold: Some(T::lit(3.0)),
        known: Some(KnownSolution {
            z_bar: vec![T::lit(0.5), T::lit(0.5)],
            beta: T::lit(6.0),
            gamma: T::lit(6.0),
        }),
        expect_convergence: true,
    }
}

fn noncompact_levelset<T: Scalar>(opts: &BuiltinOptions) -> BuiltinProblem<T> {
    let g = ClosureMap::new(
        1,
        1,
        |z: &[T]| vec![z[0].exp()],
        |z: &[T]| Matrix::from_rows(&[vec![z[0].exp()]]),
    );
    let psi = ConvexOuter::new(1, 0, 0, lambda_or(opts, 1.0)).expect("valid lambda");
    BuiltinProblem {
        name: "noncompact-levelset",
        objective: CompositeObjective::new(Arc::new(g), psi).expect("consistent dims"),
        discretized: None,
        z0: vec![T::zero()],
        params: TrustRegionParams {
            norm_budget: T::lit(10.0),
            ..TrustRegionParams::default()
        },
        lambda_threshold: None,
        known: None,
        expect_convergence: false,
    }
}
