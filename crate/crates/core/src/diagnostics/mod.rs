//! Empirical checks of the convergence conditions at a computed solution.
//!
//! The reference point `z_bar` is always the final iterate of a run; every
//! report is a statement about that point and the stored samples only.
//! Sampling is seeded, so reports are reproducible.

mod activity;
mod probes;
mod sampling;
mod sharpness;
mod trace;

pub use activity::{active_set_report, ActiveComparison, ActiveSetReport, ACTIVITY_TOL};
pub use probes::{
    check_small_step, check_subdifferential_inequality, find_small_step_radius,
    DirectionalEstimate, SmallStepReport, SubdifferentialReport, DIRECTIONAL_STEPS,
};
pub use sharpness::{
    estimate_growth_constant, estimate_sharp_minimum, GrowthEstimate, SharpMinimumCertificate,
    SharpSample,
};
pub use trace::{
    check_level_set, check_ratio_limit, check_strong_convergence, estimate_rate, rate_from_errors,
    ratio_tail, ConvergenceLabel, LevelSetReport, RateEstimate, RatioTailReport,
    StrongConvergenceReport, MIN_RATIO_TAIL, TAIL_INEQUALITY_TOL,
};

use serde::{Deserialize, Serialize};

use crate::composite::CompositeObjective;
use crate::linalg::Norm;
use crate::problems::DiscretizedProblem;
use crate::solver::{check_stationarity, SolveResult, SolveStatus, TrustRegionParams};
use crate::Scalar;

/// Knobs of [`diagnose`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsOptions {
    /// Neighbourhood radius for the sharpness and tail checks.
    pub delta: f64,
    pub sharp_samples: usize,
    pub growth_directions: usize,
    pub subgradient_directions: usize,
    pub small_step_probes: usize,
    /// Bisection rounds when searching for the small-step radius.
    pub small_step_refine: usize,
    pub m_tail: usize,
    pub activity_tol: f64,
    pub norm: Norm,
    pub seed: u64,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            delta: 1e-2,
            sharp_samples: 192,
            growth_directions: 64,
            subgradient_directions: 64,
            small_step_probes: 64,
            small_step_refine: 3,
            m_tail: 5,
            activity_tol: ACTIVITY_TOL,
            norm: Norm::Inf,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsReport<T> {
    pub status: SolveStatus,
    pub j_final: T,
    /// Predicted decrease at radius 1 from the final iterate.
    pub stationarity: Option<T>,
    pub stationarity_tol: T,
    pub sharpness: Option<SharpMinimumCertificate<T>>,
    pub small_step: Option<SmallStepReport<T>>,
    pub strong_convergence: StrongConvergenceReport<T>,
    pub ratio_tail: RatioTailReport<T>,
    pub rate: RateEstimate<T>,
    pub subdifferential: Option<SubdifferentialReport<T>>,
    pub level_set: LevelSetReport<T>,
    pub active_set: Option<ActiveSetReport<T>>,
    /// Probes that could not run.
    pub errors: Vec<String>,
}

/// Runs every check against a finished solve. Point probes (sharpness,
/// growth, small steps, subgradients, stationarity) only run for converged
/// runs; the trace checks always run.
pub fn diagnose<T: Scalar>(
    obj: &CompositeObjective<T>,
    discretized: Option<&DiscretizedProblem<T>>,
    result: &SolveResult<T>,
    params: &TrustRegionParams<T>,
    opts: &DiagnosticsOptions,
) -> DiagnosticsReport<T> {
    let z_bar = result.final_z.as_slice();
    let j_bar = result.j_final;
    let delta = T::lit(opts.delta);
    let converged = result.status == SolveStatus::ConvergedStationary;
    let mut errors = Vec::new();
    let iterates = result.iterates();

    let mut stationarity = None;
    let mut sharpness = None;
    let mut small_step = None;
    let mut subdifferential = None;
    if converged {
        match check_stationarity(obj, z_bar, T::one()) {
            Ok(v) => stationarity = Some(v),
            Err(e) => errors.push(format!("stationarity: {e}")),
        }
        let cert = estimate_sharp_minimum(obj, z_bar, delta, opts.sharp_samples, opts.norm, opts.seed)
            .and_then(|c| {
                estimate_growth_constant(obj, z_bar, opts.growth_directions, opts.norm, opts.seed)
                    .map(|g| c.with_growth(&g))
            });
        match cert {
            Ok(c) => sharpness = Some(c),
            Err(e) => errors.push(format!("sharpness: {e}")),
        }
        let epsilon = delta / T::lit(2.0);
        small_step = find_small_step_radius(
            obj,
            z_bar,
            epsilon,
            delta,
            opts.small_step_probes,
            opts.small_step_refine,
            opts.seed,
        );
        if small_step.is_none() {
            errors.push("small-step: no tried radius passed".to_string());
        }
        match check_subdifferential_inequality(
            obj,
            z_bar,
            opts.subgradient_directions,
            opts.norm,
            opts.seed,
        ) {
            Ok(r) => subdifferential = Some(r),
            Err(e) => errors.push(format!("subdifferential: {e}")),
        }
    }

    let beta_hat = sharpness.as_ref().and_then(|c| c.beta_hat);
    let strong_convergence = check_strong_convergence(
        &iterates,
        z_bar,
        j_bar,
        beta_hat,
        delta,
        opts.m_tail,
        opts.norm,
    );
    let active_set = match discretized {
        Some(p) => match active_set_report(p, z_bar, T::lit(opts.activity_tol)) {
            Ok(r) => Some(r),
            Err(e) => {
                errors.push(format!("active set: {e}"));
                None
            }
        },
        None => None,
    };

    DiagnosticsReport {
        status: result.status,
        j_final: j_bar,
        stationarity,
        stationarity_tol: T::lit(1e-6) * (T::one() + j_bar.abs()),
        sharpness,
        small_step,
        strong_convergence,
        ratio_tail: check_ratio_limit(&result.trace, opts.m_tail),
        rate: estimate_rate(&iterates, z_bar, delta, opts.m_tail, opts.norm),
        subdifferential,
        level_set: check_level_set(&result.trace, Some(z_bar), result.j_initial, params.norm_budget),
        active_set,
        errors,
    }
}
