#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scvx::problems::DiscretizedProblem;
use scvx::{AffineMap, CompositeObjective, ConvexOuter, Linearization, LpStandardForm, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Convex model with the given `G` value and Jacobian (`G` affine, base 0).
pub fn model(
    g: Vec<f64>,
    jac: Vec<Vec<f64>>,
    n_cost: usize,
    n_eq: usize,
    n_ineq: usize,
    lambda: f64,
) -> Linearization<f64> {
    let n = jac[0].len();
    let map = AffineMap::new(Matrix::from_rows(&jac), g);
    let psi = ConvexOuter::new(n_cost, n_eq, n_ineq, lambda).unwrap();
    let obj = CompositeObjective::new(Arc::new(map), psi).unwrap();
    obj.linearize(&vec![0.0; n]).unwrap()
}

/// Grid spacing of the brute-force oracle over `[-1, 1]^n` with 41 points per axis.
pub const GRID_POINTS: usize = 41;

/// Random model on `n` variables whose kink hyperplanes all have the form
/// `+-d_a +- d_b = c` or `d_a = c` with `c` a multiple of `0.1`. Every vertex
/// of the induced arrangement intersected with `[-1, 1]^n` then lies on the
/// 41-point grid (signed-graph incidence systems have determinant `0` or a
/// power of two), so the grid minimum is the exact model minimum.
pub fn planted_grid_model(rng: &mut ChaCha8Rng, n: usize) -> Linearization<f64> {
    let n_cost = rng.gen_range(0..=2);
    let n_eq = rng.gen_range(0..=3);
    let n_ineq = rng.gen_range(0..=3);
    let mut g = Vec::new();
    let mut jac = Vec::new();
    for _ in 0..n_cost {
        g.push(rng.gen_range(-1.0..1.0));
        jac.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    for _ in 0..n_eq + n_ineq {
        let w: f64 = rng.gen_range(0.2..2.0);
        let mut row = vec![0.0; n];
        let a = rng.gen_range(0..n);
        row[a] = if rng.gen_bool(0.5) { w } else { -w };
        if n > 1 && rng.gen_bool(0.6) {
            let mut b = rng.gen_range(0..n);
            while b == a {
                b = rng.gen_range(0..n);
            }
            row[b] = if rng.gen_bool(0.5) { w } else { -w };
        }
        let c = rng.gen_range(-8i32..=8) as f64 * 0.1;
        g.push(-w * c);
        jac.push(row);
    }
    // Keep at least one row so the Jacobian has a defined width.
    if g.is_empty() {
        g.push(0.0);
        jac.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        return model(g, jac, 1, 0, 0, 1.0);
    }
    let lambda = rng.gen_range(0.5..5.0);
    model(g, jac, n_cost, n_eq, n_ineq, lambda)
}

/// Minimum of the model over the 41-point grid on `[-r, r]^n`.
pub fn grid_min(lin: &Linearization<f64>, r: f64) -> (f64, Vec<f64>) {
    let n = lin.n_z();
    let h = 2.0 * r / (GRID_POINTS - 1) as f64;
    let total = GRID_POINTS.pow(n as u32);
    let mut best = (f64::INFINITY, vec![0.0; n]);
    let mut d = vec![0.0; n];
    for idx in 0..total {
        let mut rest = idx;
        for v in d.iter_mut() {
            *v = -r + h * (rest % GRID_POINTS) as f64;
            rest /= GRID_POINTS;
        }
        let value = lin.evaluate(&d).unwrap();
        if value < best.0 {
            best = (value, d.clone());
        }
    }
    best
}

/// Dense solve of a small square system by Gaussian elimination with
/// partial pivoting; `None` when (numerically) singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            for j in col..n {
                a[i][j] -= f * a[col][j];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Optimal value of a bounded LP by enumerating every basis of active
/// constraints (rows and finite bounds). Only for tiny instances.
pub fn vertex_enumeration(lp: &LpStandardForm<f64>) -> Option<f64> {
    let n = lp.n_vars();
    let mut cons: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..lp.n_rows() {
        cons.push((lp.a_ub.row(i).to_vec(), lp.b_ub[i]));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if lp.upper[j].is_finite() {
            cons.push((e.clone(), lp.upper[j]));
        }
        if lp.lower[j].is_finite() {
            cons.push((e.iter().map(|v| -v).collect(), -lp.lower[j]));
        }
    }
    let m = cons.len();
    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    if m < n {
        return None;
    }
    loop {
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| cons[i].0.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&i| cons[i].1).collect();
        if let Some(x) = solve_dense(a, b) {
            let feasible = cons.iter().all(|(row, rhs)| {
                row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() <= rhs + 1e-9 * (1.0 + rhs.abs())
            });
            if feasible {
                let v = lp.objective(&x);
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        // Next n-subset in lexicographic order.
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] < m - n + i {
                break;
            }
            if i == 0 && subset[0] >= m - n {
                return best;
            }
        }
        subset[i] += 1;
        for j in i + 1..n {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// Optimal value of the original (unpenalized) convex-lqr-box problem.
/// On feasible rollouts the cost is linear in the controls, with
/// coefficients found by simulating unit impulses, so the optimum over the
/// box `[-1, 1]` is `c_0 - sum |c_k|`.
pub fn lqr_box_optimum(prob: &DiscretizedProblem<f64>) -> f64 {
    let steps = prob.layout.nodes - 1;
    let cost = |controls: &[f64]| {
        let z = prob.simulate_rollout(controls).unwrap();
        prob.smooth_cost(&z).unwrap()
    };
    let base = cost(&vec![0.0; steps]);
    let mut total = base;
    for k in 0..steps {
        let mut u = vec![0.0; steps];
        u[k] = 1.0;
        total -= (cost(&u) - base).abs();
    }
    total
}

/// Argmin and minimum of `f` over `n` evenly spaced points of `[lo, hi]`.
pub fn dense_sweep(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let mut best = (lo, f(lo));
    for i in 1..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}
