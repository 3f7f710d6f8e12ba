//! The SCvx outer iteration.
//!
//! Each iteration solves the trust-region subproblem at the current iterate,
//! compares the actual decrease of `J` with the decrease predicted by the
//! convex model, and accepts or rejects the step. Only steps that strictly
//! decrease `J` are accepted, so `J` over accepted iterates is monotone and
//! every iterate stays in the initial level set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composite::{CompositeObjective, DecisionVector, Linearization};
use crate::error::EvalError;
use crate::linalg::norm_inf;
use crate::subproblem::{
    solve_subproblem, SubproblemError, SubproblemSolution, TrustRegionSubproblem,
};
use crate::Scalar;

/// Consecutive small accepted steps that end a run.
const SMALL_STEP_STREAK: usize = 3;

/// Relative decrease an accepted step must exceed.
const STRICT_DECREASE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrustRegionParams<T> {
    pub rho0: T,
    pub rho1: T,
    pub rho2: T,
    pub shrink_factor: T,
    pub grow_factor: T,
    pub r_init: T,
    pub r_min: T,
    pub r_max: T,
    /// Relative: the run stops once the predicted decrease is below
    /// `stop_predicted_decrease * (1 + |J|)`.
    pub stop_predicted_decrease: T,
    pub stop_step_norm: T,
    pub max_iterations: usize,
    /// Iterates with `||z||_inf` above this are treated as escaping the level set.
    pub norm_budget: T,
    /// Re-linearize after a rejected step. The base point is unchanged, so this
    /// only matters for maps whose Jacobian is not a pure function of `z`.
    pub relinearize_after_reject: bool,
}

impl<T: Scalar> Default for TrustRegionParams<T> {
    fn default() -> Self {
        Self {
            rho0: T::zero(),
            rho1: T::lit(0.25),
            rho2: T::lit(0.7),
            shrink_factor: T::lit(2.0),
            grow_factor: T::lit(3.2),
            r_init: T::one(),
            r_min: T::lit(1e-10),
            r_max: T::lit(1e3),
            stop_predicted_decrease: T::lit(1e-8),
            stop_step_norm: T::lit(1e-10),
            max_iterations: 200,
            norm_budget: T::lit(1e12),
            relinearize_after_reject: false,
        }
    }
}

impl<T: Scalar> TrustRegionParams<T> {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: &str| Err(SolveError::InvalidParams(msg.to_string()));
        if !(T::zero() <= self.rho0 && self.rho0 < self.rho1 && self.rho1 < self.rho2 && self.rho2 < T::one()) {
            return bad("thresholds must satisfy 0 <= rho0 < rho1 < rho2 < 1");
        }
        if !(self.shrink_factor > T::one() && self.grow_factor > T::one()) {
            return bad("shrink and grow factors must exceed 1");
        }
        if !(T::zero() < self.r_min && self.r_min <= self.r_init && self.r_init <= self.r_max)
            || !self.r_max.is_finite()
        {
            return bad("radii must satisfy 0 < r_min <= r_init <= r_max < inf");
        }
        if !(self.stop_predicted_decrease > T::zero() && self.stop_step_norm > T::zero()) {
            return bad("stopping tolerances must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.norm_budget > T::zero()) {
            return bad("norm budget must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid trust-region parameters: {0}")]
    InvalidParams(String),
    #[error("initial point: {0}")]
    InitialPoint(#[from] EvalError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord<T> {
    pub k: usize,
    /// Base point of this iteration.
    pub z: DecisionVector<T>,
    pub j: T,
    pub step_norm: T,
    pub model_value: T,
    pub predicted_decrease: T,
    pub actual_decrease: T,
    /// `None` when the predicted decrease is below the stationarity tolerance.
    pub rho: Option<T>,
    pub radius: T,
    pub accepted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    ConvergedStationary,
    IterationLimit,
    LevelSetViolation,
    SubproblemFailure,
}

/// Which test ended a converged run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Predicted decrease at `min(r, 1)` below tolerance.
    StationaryModel,
    /// Several consecutive accepted steps below `stop_step_norm`.
    SmallSteps,
}

#[derive(Clone, Debug)]
pub struct SolveResult<T> {
    pub final_z: DecisionVector<T>,
    pub status: SolveStatus,
    pub stop_reason: Option<StopReason>,
    pub trace: Vec<IterationRecord<T>>,
    pub j_initial: T,
    pub j_final: T,
    /// Error message when `status` is `SubproblemFailure`.
    pub failure: Option<String>,
}

impl<T: Scalar> SolveResult<T> {
    /// The accepted iterate sequence `z^0, z^1, ...` with objective values,
    /// ending at `final_z`.
    pub fn iterates(&self) -> Vec<(DecisionVector<T>, T)> {
        let Some(first) = self.trace.first() else {
            return vec![(self.final_z.clone(), self.j_final)];
        };
        let mut out = vec![(first.z.clone(), first.j)];
        for (i, rec) in self.trace.iter().enumerate() {
            if !rec.accepted {
                continue;
            }
            match self.trace.get(i + 1) {
                Some(next) => out.push((next.z.clone(), next.j)),
                None => out.push((self.final_z.clone(), self.j_final)),
            }
        }
        out
    }

    pub fn accepted_count(&self) -> usize {
        self.trace.iter().filter(|r| r.accepted).count()
    }
}

/// `(J_current - J_candidate) / predicted`, or `None` when `predicted` is at
/// or below `stationary_tol` (a stationarity signal rather than a ratio).
pub fn trust_region_ratio<T: Scalar>(
    j_current: T,
    j_candidate: T,
    predicted_decrease: T,
    stationary_tol: T,
) -> Option<T> {
    if predicted_decrease <= stationary_tol {
        None
    } else {
        Some((j_current - j_candidate) / predicted_decrease)
    }
}

/// Acceptance flag and next radius for ratio `rho` at radius `r`.
pub fn update_radius<T: Scalar>(rho: T, r: T, params: &TrustRegionParams<T>) -> (bool, T) {
    let shrink = (r / params.shrink_factor).max(params.r_min);
    if !(rho >= params.rho0) {
        (false, shrink)
    } else if rho < params.rho1 {
        (true, shrink)
    } else if rho < params.rho2 {
        (true, r)
    } else {
        (true, (r * params.grow_factor).min(params.r_max))
    }
}

/// `J(z) - min_{||d||_inf <= probe_radius} L(d)`; zero certifies
/// first-order stationarity of the composite model.
pub fn check_stationarity<T: Scalar>(
    obj: &CompositeObjective<T>,
    z: &[T],
    probe_radius: T,
) -> Result<T, SubproblemError> {
    let lin = obj.linearize(z)?;
    let sol = solve_subproblem(&TrustRegionSubproblem::new(lin, probe_radius))?;
    Ok(sol.predicted_decrease)
}

fn solve_at<T: Scalar>(
    lin: &Linearization<T>,
    radius: T,
) -> Result<SubproblemSolution<T>, SubproblemError> {
    solve_subproblem(&TrustRegionSubproblem::new(lin.clone(), radius))
}

/// Runs SCvx from `z0`.
pub fn run_scvx<T: Scalar>(
    obj: &CompositeObjective<T>,
    z0: &[T],
    params: &TrustRegionParams<T>,
) -> Result<SolveResult<T>, SolveError> {
    params.validate()?;
    let mut z = DecisionVector::new(z0.to_vec())?;
    let mut lin = obj.linearize(&z)?;
    let mut j = lin.base_value();
    let j_initial = j;
    let level_tol = T::lit(STRICT_DECREASE) * (T::one() + j_initial.abs());
    let mut radius = params.r_init;
    let mut trace: Vec<IterationRecord<T>> = Vec::new();
    let mut small_streak = 0;

    let result = |z: DecisionVector<T>,
                      j: T,
                      status: SolveStatus,
                      stop_reason: Option<StopReason>,
                      failure: Option<String>,
                      trace: Vec<IterationRecord<T>>| SolveResult {
        final_z: z,
        status,
        stop_reason,
        trace,
        j_initial,
        j_final: j,
        failure,
    };

    for k in 0..params.max_iterations {
        let sol = match solve_at(&lin, radius) {
            Ok(sol) => sol,
            Err(e) => {
                return Ok(result(z, j, SolveStatus::SubproblemFailure, None, Some(e.to_string()), trace));
            }
        };
        let stop_tol = params.stop_predicted_decrease * (T::one() + j.abs());

        // Stationarity is judged at radius min(r, 1). For r > 1 convexity gives
        // pred(r) <= r * pred(1), so the extra probe is only needed when
        // pred(r) is already small.
        let mut probe = None;
        if sol.predicted_decrease <= stop_tol {
            probe = Some((sol.clone(), radius));
        } else if radius > T::one() && sol.predicted_decrease <= radius * stop_tol {
            match solve_at(&lin, T::one()) {
                Ok(p) if p.predicted_decrease <= stop_tol => probe = Some((p, T::one())),
                Ok(_) => {}
                Err(e) => {
                    return Ok(result(z, j, SolveStatus::SubproblemFailure, None, Some(e.to_string()), trace));
                }
            }
        }
        if let Some((p, probe_radius)) = probe {
            trace.push(IterationRecord {
                k,
                z: z.clone(),
                j,
                step_norm: norm_inf(&p.step),
                model_value: p.model_value,
                predicted_decrease: p.predicted_decrease,
                actual_decrease: T::zero(),
                rho: None,
                radius: probe_radius,
                accepted: false,
            });
            return Ok(result(
                z,
                j,
                SolveStatus::ConvergedStationary,
                Some(StopReason::StationaryModel),
                None,
                trace,
            ));
        }

        let candidate: Vec<T> = z.iter().zip(&sol.step).map(|(&a, &b)| a + b).collect();
        let j_candidate = obj.evaluate(&candidate).unwrap_or(T::infinity());
        let actual = j - j_candidate;
        let rho = trust_region_ratio(j, j_candidate, sol.predicted_decrease, stop_tol);
        let (mut accepted, mut next_radius) =
            update_radius(rho.unwrap_or(T::zero()), radius, params);
        if accepted && !(actual > T::lit(STRICT_DECREASE) * (T::one() + j.abs())) {
            accepted = false;
            next_radius = (radius / params.shrink_factor).max(params.r_min);
        }
        let step_norm = norm_inf(&sol.step);
        trace.push(IterationRecord {
            k,
            z: z.clone(),
            j,
            step_norm,
            model_value: sol.model_value,
            predicted_decrease: sol.predicted_decrease,
            actual_decrease: actual,
            rho,
            radius,
            accepted,
        });
        radius = next_radius;

        if accepted {
            z = DecisionVector::new(candidate).expect("finite objective implies finite iterate");
            j = j_candidate;
            if j > j_initial + level_tol || norm_inf(&z) > params.norm_budget {
                return Ok(result(z, j, SolveStatus::LevelSetViolation, None, None, trace));
            }
            lin = match obj.linearize(&z) {
                Ok(lin) => lin,
                Err(e) => {
                    return Ok(result(z, j, SolveStatus::SubproblemFailure, None, Some(e.to_string()), trace));
                }
            };
            if step_norm <= params.stop_step_norm {
                small_streak += 1;
                if small_streak >= SMALL_STEP_STREAK {
                    return Ok(result(
                        z,
                        j,
                        SolveStatus::ConvergedStationary,
                        Some(StopReason::SmallSteps),
                        None,
                        trace,
                    ));
                }
            } else {
                small_streak = 0;
            }
        } else if params.relinearize_after_reject {
            lin = match obj.linearize(&z) {
                Ok(lin) => lin,
                Err(e) => {
                    return Ok(result(z, j, SolveStatus::SubproblemFailure, None, Some(e.to_string()), trace));
                }
            };
        }
    }
    Ok(result(z, j, SolveStatus::IterationLimit, None, None, trace))
}
