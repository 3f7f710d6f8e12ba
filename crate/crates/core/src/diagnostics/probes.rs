//! Local probes around a computed solution: small-step behaviour of the
//! unbounded subproblem and one-sided directional derivatives of `J`.

use serde::Serialize;

use super::sampling::{axpy, ball_points, unit_directions};
use crate::composite::CompositeObjective;
use crate::error::EvalError;
use crate::linalg::{norm_inf, Norm};
use crate::subproblem::{solve_min_norm, SubproblemStatus, TrustRegionSubproblem};
use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmallStepReport<T> {
    pub eta: T,
    pub epsilon: T,
    pub probes: usize,
    /// Largest `||d||_inf` of the minimum-norm optimizer over solved probes.
    pub max_step_norm: T,
    /// Probes whose subproblem failed or came back unbounded.
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Solves the subproblem with the quasi-infinite radius at `n_probes` random
/// points with `||z - z_bar||_inf < eta` and records the minimum-norm
/// optimizer's step length. Passes iff every probe solved and every step is
/// shorter than `epsilon`.
pub fn check_small_step<T: Scalar>(
    obj: &CompositeObjective<T>,
    z_bar: &[T],
    eta: T,
    epsilon: T,
    n_probes: usize,
    seed: u64,
) -> SmallStepReport<T> {
    let mut max_step_norm = T::zero();
    let mut failures = Vec::new();
    for (i, z) in ball_points(z_bar, eta, n_probes, seed).into_iter().enumerate() {
        let outcome = obj
            .linearize(&z)
            .map_err(|e| e.to_string())
            .and_then(|lin| {
                solve_min_norm(&TrustRegionSubproblem::unbounded(lin)).map_err(|e| e.to_string())
            });
        match outcome {
            Ok(sol) if sol.status == SubproblemStatus::Optimal => {
                max_step_norm = max_step_norm.max(norm_inf(&sol.step));
            }
            Ok(_) => failures.push(format!("probe {i}: model unbounded below")),
            Err(e) => failures.push(format!("probe {i}: {e}")),
        }
    }
    SmallStepReport {
        eta,
        epsilon,
        probes: n_probes,
        max_step_norm,
        pass: failures.is_empty() && max_step_norm < epsilon,
        failures,
    }
}

/// Finds a perturbation radius for which [`check_small_step`] passes.
///
/// Starting from `eta_max` the radius is halved until the probe passes (at
/// most 40 times); then `refine` bisection steps between the passing radius
/// and the last failing one enlarge it. Returns `None` when no tried radius
/// passes.
pub fn find_small_step_radius<T: Scalar>(
    obj: &CompositeObjective<T>,
    z_bar: &[T],
    epsilon: T,
    eta_max: T,
    n_probes: usize,
    refine: usize,
    seed: u64,
) -> Option<SmallStepReport<T>> {
    let two = T::lit(2.0);
    let mut fail_eta = None;
    let mut eta = eta_max;
    let mut passing = None;
    for _ in 0..=40 {
        let report = check_small_step(obj, z_bar, eta, epsilon, n_probes, seed);
        if report.pass {
            passing = Some(report);
            break;
        }
        fail_eta = Some(eta);
        eta /= two;
    }
    let mut best = passing?;
    if let Some(mut hi) = fail_eta {
        let mut lo = best.eta;
        for _ in 0..refine {
            let mid = (lo + hi) / two;
            let report = check_small_step(obj, z_bar, mid, epsilon, n_probes, seed);
            if report.pass {
                lo = mid;
                best = report;
            } else {
                hi = mid;
            }
        }
    }
    Some(best)
}

/// Step sizes of the one-sided difference quotients.
pub const DIRECTIONAL_STEPS: [f64; 3] = [1e-4, 1e-5, 1e-6];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionalEstimate<T> {
    pub direction: Vec<T>,
    /// Quotients `(J(z + h s) - J(z)) / h` for each step in [`DIRECTIONAL_STEPS`].
    pub quotients: Vec<T>,
    /// Value at the smallest step.
    pub derivative: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubdifferentialReport<T> {
    pub directions: usize,
    pub min_derivative: Option<T>,
    /// Pass threshold `-1e-6 (1 + |J(z_bar)|)`.
    pub threshold: T,
    pub estimates: Vec<DirectionalEstimate<T>>,
    pub pass: bool,
}

/// Estimates `dJ(z_bar; s)` for `n_directions` unit directions and checks
/// that none is negative beyond tolerance, i.e. that `0` lies in the
/// subdifferential.
pub fn check_subdifferential_inequality<T: Scalar>(
    obj: &CompositeObjective<T>,
    z_bar: &[T],
    n_directions: usize,
    norm: Norm,
    seed: u64,
) -> Result<SubdifferentialReport<T>, EvalError> {
    let j_bar = obj.evaluate(z_bar)?;
    let threshold = -T::lit(1e-6) * (T::one() + j_bar.abs());
    let mut estimates = Vec::with_capacity(n_directions);
    for s in unit_directions::<T>(z_bar.len(), n_directions, norm, seed) {
        let mut quotients = Vec::with_capacity(DIRECTIONAL_STEPS.len());
        for h in DIRECTIONAL_STEPS {
            let h = T::lit(h);
            quotients.push((obj.evaluate(&axpy(z_bar, h, &s))? - j_bar) / h);
        }
        estimates.push(DirectionalEstimate {
            derivative: quotients[quotients.len() - 1],
            direction: s,
            quotients,
        });
    }
    let min_derivative = estimates.iter().map(|e| e.derivative).reduce(T::min);
    Ok(SubdifferentialReport {
        directions: estimates.len(),
        pass: min_derivative.map_or(true, |m| m >= threshold),
        min_derivative,
        threshold,
        estimates,
    })
}
