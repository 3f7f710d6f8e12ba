//! Seeded direction sampling shared by the probes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Norm;
use crate::Scalar;

/// Cube corners are only enumerated up to this dimension.
const MAX_CORNER_DIM: usize = 6;

/// `count` directions with `norm.of(d) == 1`. The coordinate directions
/// `+-e_i` come first (as many as fit), then, in low dimension, the
/// corners of the cube, then uniform-cube samples rescaled onto the unit
/// sphere.
pub(crate) fn unit_directions<T: Scalar>(n: usize, count: usize, norm: Norm, seed: u64) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(count);
    'axes: for i in 0..n {
        for sign in [T::one(), -T::one()] {
            if out.len() == count {
                break 'axes;
            }
            let mut d = vec![T::zero(); n];
            d[i] = sign;
            out.push(d);
        }
    }
    if n <= MAX_CORNER_DIM {
        for mask in 0..1usize << n {
            if out.len() == count {
                break;
            }
            let d: Vec<T> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { -T::one() } else { T::one() })
                .collect();
            let len = norm.of(&d);
            out.push(d.into_iter().map(|v| v / len).collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let d: Vec<T> = (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
        let len = norm.of(&d);
        if len > T::lit(1e-3) {
            out.push(d.into_iter().map(|v| v / len).collect());
        }
    }
    out
}

/// `count` points in the open inf-ball of radius `radius` around `center`.
pub(crate) fn ball_points<T: Scalar>(center: &[T], radius: T, count: usize, seed: u64) -> Vec<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Keep strictly inside the ball.
    let scale = radius * T::lit(0.999);
    (0..count)
        .map(|_| {
            center
                .iter()
                .map(|&c| c + scale * T::lit(rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect()
}

pub(crate) fn axpy<T: Scalar>(z: &[T], t: T, d: &[T]) -> Vec<T> {
    z.iter().zip(d).map(|(&a, &b)| a + t * b).collect()
}
