//! Checks on a finished iterate sequence: whole-sequence convergence, the
//! ratio tail, the empirical rate and the level-set assumption.

use serde::Serialize;

use crate::composite::DecisionVector;
use crate::linalg::{norm_inf, Norm};
use crate::solver::IterationRecord;
use crate::Scalar;

/// Additive slack of the tail inequality.
pub const TAIL_INEQUALITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceLabel {
    StrongConvergent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongConvergenceReport<T> {
    /// Number of trailing accepted iterates inside the `delta` ball.
    pub tail_len: usize,
    /// `||z^k - z_bar||` over the tail.
    pub errors: Vec<T>,
    /// `(J(z^k) - J(z_bar)) / beta_hat` over the tail.
    pub bounds: Vec<T>,
    pub errors_nonincreasing: bool,
    pub inequality_holds: bool,
    /// Largest `error - bound`; the inequality holds when it is at most the tolerance.
    pub worst_excess: Option<T>,
    pub label: ConvergenceLabel,
}

/// Tail evidence that the whole iterate sequence converges to `z_bar`.
///
/// The tail is the longest run of trailing iterates within `delta` of
/// `z_bar`, capped at `m_tail`. The run is labelled strong-convergent when
/// the tail has at least two points, the errors do not increase, `beta_hat`
/// is positive and `||z^k - z_bar|| <= (J(z^k) - J(z_bar)) / beta_hat + 1e-8`
/// on every tail point.
pub fn check_strong_convergence<T: Scalar>(
    iterates: &[(DecisionVector<T>, T)],
    z_bar: &[T],
    j_bar: T,
    beta_hat: Option<T>,
    delta: T,
    m_tail: usize,
    norm: Norm,
) -> StrongConvergenceReport<T> {
    let all: Vec<T> = iterates.iter().map(|(z, _)| norm.dist(z, z_bar)).collect();
    let inside = all.iter().rev().take_while(|&&e| e <= delta).count();
    let tail_len = inside.min(m_tail);
    let start = iterates.len() - tail_len;
    let errors = all[start..].to_vec();
    let slack = T::lit(1e-12);
    let errors_nonincreasing = errors.windows(2).all(|w| w[1] <= w[0] + slack);

    let beta = beta_hat.filter(|&b| b > T::zero());
    let bounds: Vec<T> = match beta {
        Some(b) => iterates[start..].iter().map(|(_, j)| (*j - j_bar) / b).collect(),
        None => Vec::new(),
    };
    let worst_excess = errors
        .iter()
        .zip(&bounds)
        .map(|(&e, &b)| e - b)
        .reduce(T::max);
    let inequality_holds =
        beta.is_some() && worst_excess.map_or(true, |w| w <= T::lit(TAIL_INEQUALITY_TOL));
    let label = if tail_len >= 2 && errors_nonincreasing && inequality_holds {
        ConvergenceLabel::StrongConvergent
    } else {
        ConvergenceLabel::Inconclusive
    };
    StrongConvergenceReport {
        tail_len,
        errors,
        bounds,
        errors_nonincreasing,
        inequality_holds,
        worst_excess,
        label,
    }
}

/// Minimum number of defined ratios for the tail statistics to mean anything.
pub const MIN_RATIO_TAIL: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioTailReport<T> {
    /// Last defined `rho` values of accepted steps, oldest first.
    pub tail: Vec<T>,
    pub deviations: Vec<T>,
    /// `|rho - 1|` is nonincreasing along the tail.
    pub trending_to_one: bool,
    /// At least [`MIN_RATIO_TAIL`] defined ratios were available.
    pub sufficient: bool,
}

/// Observed behaviour of `rho^k` along the last `m_tail` accepted steps.
/// Reported, never asserted.
pub fn check_ratio_limit<T: Scalar>(trace: &[IterationRecord<T>], m_tail: usize) -> RatioTailReport<T> {
    let defined: Vec<T> = trace
        .iter()
        .filter(|r| r.accepted)
        .filter_map(|r| r.rho)
        .collect();
    ratio_tail(&defined, m_tail)
}

/// [`check_ratio_limit`] on a bare sequence of ratios.
pub fn ratio_tail<T: Scalar>(rhos: &[T], m_tail: usize) -> RatioTailReport<T> {
    let tail = rhos[rhos.len().saturating_sub(m_tail)..].to_vec();
    let deviations: Vec<T> = tail.iter().map(|&r| (r - T::one()).abs()).collect();
    RatioTailReport {
        trending_to_one: deviations.windows(2).all(|w| w[1] <= w[0]),
        sufficient: rhos.len() >= MIN_RATIO_TAIL,
        tail,
        deviations,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateEstimate<T> {
    /// Fitted exponent `q` in `e_{k+1} ~ C e_k^q`.
    pub order_q: Option<T>,
    pub errors: Vec<T>,
    pub error_ratios: Vec<T>,
    pub superlinear_evidence: bool,
    /// Why `order_q` is missing, if it is.
    pub undefined: Option<String>,
}

/// Rate estimate from the accepted iterates, measured against `z_bar`.
///
/// The final iterate is `z_bar` itself and carries no rate information, so
/// it is dropped. The tail is the trailing run of the remaining iterates
/// within `delta` of `z_bar`, capped at `m_tail + 1` points. A run that jumps
/// into `z_bar` from outside the neighbourhood has too short a tail and the
/// estimate is undefined.
pub fn estimate_rate<T: Scalar>(
    iterates: &[(DecisionVector<T>, T)],
    z_bar: &[T],
    delta: T,
    m_tail: usize,
    norm: Norm,
) -> RateEstimate<T> {
    let mut errors: Vec<T> = iterates.iter().map(|(z, _)| norm.dist(z, z_bar)).collect();
    if errors.last().is_some_and(|&e| e == T::zero()) {
        errors.pop();
    }
    let inside = errors.iter().rev().take_while(|&&e| e <= delta).count();
    let tail = errors[errors.len() - inside.min(m_tail + 1)..].to_vec();
    rate_from_errors(&tail)
}

/// Least-squares fit of `log e_{k+1}` against `log e_k`.
pub fn rate_from_errors<T: Scalar>(errors: &[T]) -> RateEstimate<T> {
    let undefined = |why: &str, ratios: Vec<T>| RateEstimate {
        order_q: None,
        errors: errors.to_vec(),
        error_ratios: ratios,
        superlinear_evidence: false,
        undefined: Some(why.to_string()),
    };
    if errors.len() < 3 {
        return undefined("fewer than three tail errors", Vec::new());
    }
    if errors.iter().any(|&e| !(e > T::zero()) || !e.is_finite()) {
        return undefined("zero or non-finite error on the tail", Vec::new());
    }
    let ratios: Vec<T> = errors.windows(2).map(|w| w[1] / w[0]).collect();
    let xs: Vec<f64> = errors[..errors.len() - 1].iter().map(|e| e.as_f64().ln()).collect();
    let ys: Vec<f64> = errors[1..].iter().map(|e| e.as_f64().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= f64::EPSILON * (1.0 + mx * mx) {
        return undefined("tail errors do not vary", ratios);
    }
    let superlinear_evidence = ratios.windows(2).all(|w| w[1] < w[0])
        && ratios.last().is_some_and(|&r| r < T::lit(0.1));
    RateEstimate {
        order_q: Some(T::lit(sxy / sxx)),
        errors: errors.to_vec(),
        error_ratios: ratios,
        superlinear_evidence,
        undefined: None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSetReport<T> {
    pub j_initial: T,
    pub max_j: Option<T>,
    pub max_norm: Option<T>,
    pub norm_budget: T,
    /// First trace index whose `J` exceeded the initial level.
    pub first_j_violation: Option<usize>,
    /// First trace index whose `||z||_inf` exceeded the budget.
    pub first_norm_violation: Option<usize>,
    pub pass: bool,
}

/// Every recorded `J` stays within `J0 + 1e-12 (1 + |J0|)` and every
/// `||z^k||_inf` within `norm_budget`. A failure is evidence that the
/// bounded-level-set assumption does not hold along this run.
pub fn check_level_set<T: Scalar>(
    trace: &[IterationRecord<T>],
    final_z: Option<&[T]>,
    j_initial: T,
    norm_budget: T,
) -> LevelSetReport<T> {
    let level = j_initial + T::lit(1e-12) * (T::one() + j_initial.abs());
    let norms: Vec<T> = trace
        .iter()
        .map(|r| norm_inf(&r.z))
        .chain(final_z.map(norm_inf))
        .collect();
    let first_j_violation = trace.iter().position(|r| r.j > level);
    let first_norm_violation = norms.iter().position(|&n| n > norm_budget);
    LevelSetReport {
        j_initial,
        max_j: trace.iter().map(|r| r.j).reduce(T::max),
        max_norm: norms.iter().copied().reduce(T::max),
        norm_budget,
        pass: first_j_violation.is_none() && first_norm_violation.is_none(),
        first_j_violation,
        first_norm_violation,
    }
}
