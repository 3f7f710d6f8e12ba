//! Sampled sharp-minimum and model-growth constants at a computed solution.

use serde::Serialize;

use super::sampling::{axpy, unit_directions};
use crate::composite::CompositeObjective;
use crate::error::EvalError;
use crate::linalg::Norm;
use crate::Scalar;

/// One sampled point of the sharpness probe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharpSample<T> {
    pub z: Vec<T>,
    pub distance: T,
    /// `(J(z) - J(z_bar)) / distance`.
    pub ratio: T,
}

/// Sampled lower-bound witnesses for the sharp-minimum constant `beta` and
/// the model growth constant `gamma`. Both are minima over the stored
/// samples, nothing more.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharpMinimumCertificate<T> {
    pub beta_hat: Option<T>,
    pub gamma_hat: Option<T>,
    pub delta: T,
    pub samples: usize,
    pub norm: Norm,
    pub j_bar: T,
    pub beta_samples: Vec<SharpSample<T>>,
}

impl<T: Scalar> SharpMinimumCertificate<T> {
    /// Positive `beta_hat`.
    pub fn is_sharp(&self) -> bool {
        self.beta_hat.is_some_and(|b| b > T::zero())
    }

    pub fn with_growth(mut self, growth: &GrowthEstimate<T>) -> Self {
        self.gamma_hat = growth.gamma_hat;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthEstimate<T> {
    pub gamma_hat: Option<T>,
    pub samples: usize,
    pub scales: Vec<T>,
    pub norm: Norm,
}

/// Shell radii as fractions of `delta`.
const SHELLS: [f64; 3] = [0.1, 1.0 / 3.0, 1.0];

/// Scales at which unit model directions are evaluated.
const GROWTH_SCALES: [f64; 3] = [1e-3, 1e-2, 1e-1];

/// `min (J(z) - J(z_bar)) / ||z - z_bar||` over `n_samples` points spread on
/// the shells `delta/10`, `delta/3` and `delta`. A non-positive value means
/// the point is not a sharp minimum at this resolution.
pub fn estimate_sharp_minimum<T: Scalar>(
    obj: &CompositeObjective<T>,
    z_bar: &[T],
    delta: T,
    n_samples: usize,
    norm: Norm,
    seed: u64,
) -> Result<SharpMinimumCertificate<T>, EvalError> {
    let j_bar = obj.evaluate(z_bar)?;
    let per_shell = n_samples.div_ceil(SHELLS.len()).max(1);
    let dirs = unit_directions::<T>(z_bar.len(), per_shell, norm, seed);
    let mut samples = Vec::with_capacity(per_shell * SHELLS.len());
    for shell in SHELLS {
        let t = delta * T::lit(shell);
        for d in &dirs {
            let z = axpy(z_bar, t, d);
            let distance = norm.dist(&z, z_bar);
            if distance <= T::zero() {
                continue;
            }
            let Ok(j) = obj.evaluate(&z) else { continue };
            samples.push(SharpSample {
                ratio: (j - j_bar) / distance,
                z,
                distance,
            });
        }
    }
    let beta_hat = samples.iter().map(|s| s.ratio).reduce(T::min);
    Ok(SharpMinimumCertificate {
        beta_hat,
        gamma_hat: None,
        delta,
        samples: samples.len(),
        norm,
        j_bar,
        beta_samples: samples,
    })
}

/// `min (L(d) - L(0)) / ||d||` for the convex model at `z_bar` over
/// `n_dirs` unit directions, each scaled by 1e-3, 1e-2 and 1e-1. The ratio
/// is nondecreasing in the scale, so the smallest scale dominates.
pub fn estimate_growth_constant<T: Scalar>(
    obj: &CompositeObjective<T>,
    z_bar: &[T],
    n_dirs: usize,
    norm: Norm,
    seed: u64,
) -> Result<GrowthEstimate<T>, EvalError> {
    let lin = obj.linearize(z_bar)?;
    let base = lin.base_value();
    let dirs = unit_directions::<T>(z_bar.len(), n_dirs, norm, seed);
    let scales: Vec<T> = GROWTH_SCALES.iter().map(|&s| T::lit(s)).collect();
    let mut gamma_hat: Option<T> = None;
    let mut samples = 0;
    for d in &dirs {
        for &s in &scales {
            let step: Vec<T> = d.iter().map(|&v| v * s).collect();
            let len = norm.of(&step);
            let ratio = (lin.evaluate(&step)? - base) / len;
            gamma_hat = Some(gamma_hat.map_or(ratio, |g| g.min(ratio)));
            samples += 1;
        }
    }
    Ok(GrowthEstimate {
        gamma_hat,
        samples,
        scales,
        norm,
    })
}
