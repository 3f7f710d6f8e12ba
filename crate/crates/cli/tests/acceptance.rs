//! Acceptance suite. One PASS/FAIL line per criterion; exits nonzero if any fail.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scvx::diagnostics::{
    check_strong_convergence, check_subdifferential_inequality, estimate_growth_constant,
    estimate_sharp_minimum, find_small_step_radius, rate_from_errors, ConvergenceLabel,
};
use scvx::problems::{builtin, builtin_with, BuiltinOptions, DiscretizedProblem, BUILTIN_NAMES};
use scvx::{
    check_stationarity, fd_check_jacobian, lp_solve, run_scvx, solve_subproblem, AffineMap,
    ClosureMap, CompositeObjective, ConvexOuter, Linearization, LpStandardForm, Matrix, Norm,
    SolveStatus, TrustRegionSubproblem,
};

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const SEEDS: std::ops::Range<u64> = 0..10;

fn converging_builtins() -> impl Iterator<Item = &'static str> {
    BUILTIN_NAMES.into_iter().filter(|n| *n != "noncompact-levelset")
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// 1
fn monotone_decrease() -> Outcome {
    let mut accepted = 0;
    for name in BUILTIN_NAMES {
        let b = builtin::<f64>(name).unwrap();
        for seed in SEEDS {
            let r = run_scvx(&b.objective, &b.initial_guess(seed), &b.params).map_err(|e| e.to_string())?;
            // Re-evaluate J at the accepted iterates rather than trusting the trace.
            let js: Vec<f64> = r
                .iterates()
                .iter()
                .map(|(z, _)| b.objective.evaluate(z).unwrap())
                .collect();
            for (i, w) in js.windows(2).enumerate() {
                if w[1] >= w[0] {
                    return Err(format!("{name} seed {seed}: step {i} went {} -> {}", w[0], w[1]));
                }
            }
            accepted += js.len() - 1;
        }
    }
    Ok(format!("{accepted} accepted steps over {} runs, all strictly decreasing", BUILTIN_NAMES.len() * 10))
}

fn model(g: Vec<f64>, jac: Vec<Vec<f64>>, counts: (usize, usize, usize), lambda: f64) -> Linearization<f64> {
    let n = jac[0].len();
    let map = AffineMap::new(Matrix::from_rows(&jac), g);
    let psi = ConvexOuter::new(counts.0, counts.1, counts.2, lambda).unwrap();
    let obj = CompositeObjective::new(Arc::new(map), psi).unwrap();
    obj.linearize(&vec![0.0; n]).unwrap()
}

/// Random model whose kink hyperplanes are `+-w d_a (+- w d_b) = w c` with
/// `c` a multiple of 0.1. Every vertex of the arrangement inside `[-1, 1]^n`
/// then lies on the 41-point grid (the incidence systems have power-of-two
/// determinants), and the model is affine between vertices, so the grid
/// minimum equals the true model minimum.
fn planted_grid_model(rng: &mut ChaCha8Rng, n: usize) -> Linearization<f64> {
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
    if g.is_empty() {
        g.push(0.0);
        jac.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        return model(g, jac, (1, 0, 0), 1.0);
    }
    model(g, jac, (n_cost, n_eq, n_ineq), rng.gen_range(0.5..5.0))
}

fn grid_min(lin: &Linearization<f64>) -> f64 {
    const POINTS: usize = 41;
    let n = lin.n_z();
    let h = 2.0 / (POINTS - 1) as f64;
    let mut best = f64::INFINITY;
    let mut d = vec![0.0; n];
    for idx in 0..POINTS.pow(n as u32) {
        let mut rest = idx;
        for v in d.iter_mut() {
            *v = -1.0 + h * (rest % POINTS) as f64;
            rest /= POINTS;
        }
        best = best.min(lin.evaluate(&d).unwrap());
    }
    best
}

// 2
fn subproblem_oracle() -> Outcome {
    let mut rng = rng(2024);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = 1 + case % 3;
        let lin = planted_grid_model(&mut rng, n);
        let sol = solve_subproblem(&TrustRegionSubproblem::new(lin.clone(), 1.0)).map_err(|e| e.to_string())?;
        let grid = grid_min(&lin);
        let gap = (sol.model_value - grid).abs();
        worst = worst.max(gap);
        if gap > 1e-6 {
            return Err(format!("case {case} (n={n}): LP {} vs grid {grid}", sol.model_value));
        }
    }
    Ok(format!("100 instances, worst |LP - grid| = {worst:.1e}"))
}

/// The unpenalized convex-lqr-box problem as one LP over all states and
/// controls: dynamics as paired inequalities, the control box as bounds.
fn lqr_box_direct(prob: &DiscretizedProblem<f64>) -> Result<f64, String> {
    let n = prob.layout.n_z();
    let lin = prob.composite.linearize(&vec![0.0; n]).map_err(|e| e.to_string())?;
    let psi = prob.composite.psi();
    let mut cost = vec![0.0; n];
    let mut constant = 0.0;
    for i in psi.cost_range() {
        for (c, a) in cost.iter_mut().zip(lin.g_jacobian.row(i)) {
            *c += a;
        }
        constant += lin.g_value[i];
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in psi.eq_range() {
        let row = lin.g_jacobian.row(i).to_vec();
        rows.push(row.iter().map(|v| -v).collect());
        rhs.push(lin.g_value[i]);
        rows.push(row);
        rhs.push(-lin.g_value[i]);
    }
    let mut lp = LpStandardForm::new(cost);
    lp.constant = constant;
    lp.a_ub = Matrix::from_rows(&rows);
    lp.b_ub = rhs;
    for k in 0..prob.layout.nodes - 1 {
        for j in prob.layout.control(k) {
            lp.lower[j] = -1.0;
            lp.upper[j] = 1.0;
        }
    }
    lp_solve(&lp).map(|s| s.objective).map_err(|e| e.to_string())
}

// 3
fn convex_exactness() -> Outcome {
    let b = builtin::<f64>("convex-lqr-box").unwrap();
    let direct = lqr_box_direct(b.discretized.as_ref().unwrap())?;
    let mut worst_rho: f64 = 0.0;
    for seed in SEEDS {
        let r = run_scvx(&b.objective, &b.initial_guess(seed), &b.params).map_err(|e| e.to_string())?;
        if r.status != SolveStatus::ConvergedStationary {
            return Err(format!("seed {seed}: {:?}", r.status));
        }
        if (r.j_final - direct).abs() > 1e-6 {
            return Err(format!("seed {seed}: J {} vs direct LP {direct}", r.j_final));
        }
        for rho in r.trace.iter().filter_map(|t| t.rho) {
            worst_rho = worst_rho.max((rho - 1.0).abs());
        }
    }
    if worst_rho > 1e-9 {
        return Err(format!("max |rho - 1| = {worst_rho:e}"));
    }
    Ok(format!("direct LP J = {direct:.6}, max |rho - 1| = {worst_rho:.1e}"))
}

// 4
fn exact_penalty() -> Outcome {
    let mut notes = Vec::new();
    for name in ["toy-sharp-1d", "double-integrator-obstacle"] {
        let base = builtin::<f64>(name).unwrap();
        let threshold = base.lambda_threshold.ok_or("no documented threshold")?;
        let default_lambda = base.objective.psi().lambda();
        for lambda in [default_lambda, 1.5 * threshold] {
            if lambda <= threshold {
                return Err(format!("{name}: lambda {lambda} not above threshold {threshold}"));
            }
            let opts = BuiltinOptions {
                lambda: Some(lambda),
                ..Default::default()
            };
            let b = builtin_with::<f64>(name, &opts).unwrap();
            for seed in SEEDS {
                let r = run_scvx(&b.objective, &b.initial_guess(seed), &b.params).map_err(|e| e.to_string())?;
                if r.status != SolveStatus::ConvergedStationary {
                    return Err(format!("{name} lambda {lambda} seed {seed}: {:?}", r.status));
                }
                let v = b.objective.max_violation(&r.final_z).unwrap();
                if v > 1e-6 {
                    return Err(format!("{name} lambda {lambda} seed {seed}: violation {v:e}"));
                }
            }
        }
        notes.push(format!("{name} (threshold {threshold})"));
    }
    Ok(format!("feasible within 1e-6 at default and 1.5x threshold: {}", notes.join(", ")))
}

// 5
fn jacobian_validation() -> Outcome {
    let mut rng = rng(5);
    let mut worst: f64 = 0.0;
    for name in BUILTIN_NAMES {
        let b = builtin::<f64>(name).unwrap();
        for seed in 0..20 {
            let z: Vec<f64> = b
                .initial_guess(seed)
                .iter()
                .map(|v| v + 0.1 * rng.gen_range(-1.0..1.0))
                .collect();
            let err = fd_check_jacobian(b.objective.map(), &z, 1e-6).map_err(|e| e.to_string())?;
            worst = worst.max(err);
            if err > 1e-5 {
                return Err(format!("{name} point {seed}: {err:e}"));
            }
        }
    }
    Ok(format!("120 points, worst error {worst:.1e}"))
}

// 6
fn sharpness_probes() -> Outcome {
    let b = builtin::<f64>("toy-sharp-1d").unwrap();
    let z_bar = 1.0;
    let delta = 0.1;
    let j_bar = b.objective.evaluate(&[z_bar]).unwrap();
    // Oracle: smallest (J(z) - J(z_bar)) / |z - z_bar| over a dense sweep of
    // the same punctured neighbourhood the estimator samples.
    let n = 20_001;
    let mut oracle = f64::INFINITY;
    for i in 0..n {
        let t = -delta + 2.0 * delta * i as f64 / (n - 1) as f64;
        if t.abs() >= delta / 10.0 {
            oracle = oracle.min((b.objective.evaluate(&[z_bar + t]).unwrap() - j_bar) / t.abs());
        }
    }
    let cert = estimate_sharp_minimum(&b.objective, &[z_bar], delta, 192, Norm::Inf, 0).map_err(|e| e.to_string())?;
    let growth = estimate_growth_constant(&b.objective, &[z_bar], 64, Norm::Inf, 0).map_err(|e| e.to_string())?;
    let beta = cert.beta_hat.ok_or("no beta_hat")?;
    let gamma = growth.gamma_hat.ok_or("no gamma_hat")?;
    if beta < 0.9 * oracle {
        return Err(format!("beta_hat {beta} < 0.9 * sweep {oracle}"));
    }
    if gamma <= 0.0 {
        return Err(format!("gamma_hat {gamma}"));
    }

    let quad = CompositeObjective::new(
        Arc::new(ClosureMap::new(
            2,
            1,
            |z: &[f64]| vec![z.iter().map(|v| v * v).sum()],
            |z: &[f64]| Matrix::from_rows(&[z.iter().map(|v| 2.0 * v).collect()]),
        )),
        ConvexOuter::new(1, 0, 0, 1.0).unwrap(),
    )
    .unwrap();
    let smooth = estimate_sharp_minimum(&quad, &[0.0, 0.0], 1e-3, 192, Norm::Inf, 0).map_err(|e| e.to_string())?;
    let smooth_beta = smooth.beta_hat.ok_or("no beta_hat for quadratic")?;
    if smooth_beta > 1e-2 {
        return Err(format!("quadratic beta_hat {smooth_beta} > 1e-2"));
    }
    Ok(format!(
        "toy-sharp-1d beta_hat {beta:.4} (sweep {oracle:.4}), gamma_hat {gamma:.4}; quadratic beta_hat {smooth_beta:.1e}"
    ))
}

// 7
fn small_step() -> Outcome {
    let delta = 1e-2;
    let mut notes = Vec::new();
    for name in ["toy-sharp-1d", "toy-sharp-2d"] {
        let b = builtin::<f64>(name).unwrap();
        let z_bar = b.known.as_ref().unwrap().z_bar.clone();
        let rep = find_small_step_radius(&b.objective, &z_bar, delta / 2.0, delta, 64, 3, 7)
            .ok_or(format!("{name}: no radius passed"))?;
        if !rep.pass || rep.probes < 64 || rep.eta <= 0.0 {
            return Err(format!("{name}: pass {} probes {} eta {}", rep.pass, rep.probes, rep.eta));
        }
        notes.push(format!("{name} eta {:.1e} max |d| {:.1e}", rep.eta, rep.max_step_norm));
    }
    Ok(format!("epsilon {:.0e}, 64 probes: {}", delta / 2.0, notes.join("; ")))
}

// 8
fn tail_inequality() -> Outcome {
    let delta = 1e-2;
    let (mut labelled, mut runs) = (0, 0);
    for name in converging_builtins() {
        let b = builtin::<f64>(name).unwrap();
        for seed in SEEDS {
            let r = run_scvx(&b.objective, &b.initial_guess(seed), &b.params).map_err(|e| e.to_string())?;
            if r.status != SolveStatus::ConvergedStationary {
                continue;
            }
            runs += 1;
            let cert = estimate_sharp_minimum(&b.objective, &r.final_z, delta, 192, Norm::Inf, 0)
                .map_err(|e| e.to_string())?;
            let iterates = r.iterates();
            let rep =
                check_strong_convergence(&iterates, &r.final_z, r.j_final, cert.beta_hat, delta, 5, Norm::Inf);
            if rep.label != ConvergenceLabel::StrongConvergent {
                continue;
            }
            labelled += 1;
            // Recheck every tail point independently of the report.
            let beta = cert.beta_hat.unwrap();
            for (z, _) in &iterates[iterates.len() - rep.tail_len..] {
                let err = dist_inf(z, &r.final_z);
                let bound = (b.objective.evaluate(z).unwrap() - r.j_final) / beta;
                if err > bound + 1e-8 {
                    return Err(format!("{name} seed {seed}: error {err:e} > bound {bound:e}"));
                }
            }
        }
    }
    Ok(format!("{labelled} of {runs} converged runs labelled strong-convergent; all satisfy the tail bound"))
}

// 9
fn stationarity() -> Outcome {
    let mut runs = 0;
    let mut worst: f64 = 0.0;
    for name in converging_builtins() {
        let b = builtin::<f64>(name).unwrap();
        for seed in SEEDS {
            let r = run_scvx(&b.objective, &b.initial_guess(seed), &b.params).map_err(|e| e.to_string())?;
            if r.status != SolveStatus::ConvergedStationary {
                continue;
            }
            runs += 1;
            let s = check_stationarity(&b.objective, &r.final_z, 1.0).map_err(|e| e.to_string())?;
            worst = worst.max(s / (1.0 + r.j_final.abs()));
            if s > 1e-6 * (1.0 + r.j_final.abs()) {
                return Err(format!("{name} seed {seed}: stationarity {s:e}"));
            }
            let sub = check_subdifferential_inequality(&b.objective, &r.final_z, 64, Norm::Inf, seed)
                .map_err(|e| e.to_string())?;
            if !sub.pass || sub.directions < 64 {
                return Err(format!("{name} seed {seed}: subgradient check failed ({:?})", sub.min_derivative));
            }
        }
    }
    Ok(format!("{runs} converged runs, worst relative stationarity {worst:.1e}"))
}

// 10
fn level_set_detection() -> Outcome {
    let b = builtin::<f64>("noncompact-levelset").unwrap();
    for seed in SEEDS {
        let r = run_scvx(&b.objective, &b.initial_guess(seed), &b.params).map_err(|e| e.to_string())?;
        if r.status != SolveStatus::LevelSetViolation {
            return Err(format!("seed {seed}: {:?}", r.status));
        }
    }
    Ok("10 seeds, all level-set-violation".to_string())
}

fn scvx_cmd() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scvx"));
    cmd.env_remove("SCVX_SEED");
    cmd
}

fn shipped_configs(into: &Path) -> Result<Vec<std::path::PathBuf>, String> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut out = Vec::new();
    for entry in fs::read_dir(&root).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let copy = into.join(path.file_name().unwrap());
            fs::copy(&path, &copy).map_err(|e| e.to_string())?;
            out.push(copy);
        }
    }
    out.sort();
    Ok(out)
}

// 11
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = shipped_configs(dir.path())?;
    for cfg in &configs {
        for seed in ["0", "3"] {
            let mut traces = Vec::new();
            for run in 0..2 {
                let trace = dir.path().join(format!("trace-{run}.jsonl"));
                scvx_cmd()
                    .env("SCVX_SEED", seed)
                    .args(["solve", "--config"])
                    .arg(cfg)
                    .arg("--trace")
                    .arg(&trace)
                    .output()
                    .map_err(|e| e.to_string())?;
                traces.push(fs::read(&trace).map_err(|e| format!("{}: {e}", cfg.display()))?);
            }
            if traces[0] != traces[1] || traces[0].is_empty() {
                return Err(format!("{} seed {seed}: traces differ", cfg.display()));
            }
        }
    }
    Ok(format!("{} configs x 2 seeds, byte-identical traces", configs.len()))
}

// 12
fn reports() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = shipped_configs(dir.path())?;
    let table = dir.path().join("bench.csv");
    let out = scvx_cmd()
        .args(["bench", "--dir"])
        .arg(dir.path())
        .arg("--out")
        .arg(&table)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.code() != Some(0) {
        return Err(format!("bench exited {:?}", out.status.code()));
    }
    let mut reader = csv::Reader::from_path(&table).map_err(|e| e.to_string())?;
    let rows: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    if rows.len() != configs.len() {
        return Err(format!("{} rows for {} configs", rows.len(), configs.len()));
    }
    let mut converged = 0;
    let mut observed = Vec::new();
    for row in &rows {
        let problem = &row[1];
        let expected = if problem == "noncompact-levelset" { "3" } else { "0" };
        if &row[4] != expected {
            return Err(format!("{problem}: exit {} (expected {expected})", &row[4]));
        }
        if &row[3] != "converged-stationary" {
            continue;
        }
        converged += 1;
        let report = dir.path().join("out").join(problem).join("report.json");
        let text = fs::read_to_string(&report).map_err(|e| format!("{}: {e}", report.display()))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let diag = &v["diagnostics"];
        if diag["ratio_tail"].is_null() || diag["rate"].is_null() {
            return Err(format!("{problem}: report lacks ratio tail or rate"));
        }
        let q = diag["rate"]["order_q"].as_f64().map_or("undefined".to_string(), |q| format!("{q:.2}"));
        observed.push(format!("{problem} q={q}"));
    }
    let quad: Vec<f64> = (0..6).map(|k| 2f64.powf(-(2f64.powi(k)))).collect();
    let q = rate_from_errors(&quad).order_q.ok_or("synthetic rate undefined")?;
    if (q - 2.0).abs() > 0.1 {
        return Err(format!("synthetic quadratic sequence gave q = {q}"));
    }
    Ok(format!("{converged} converged runs reported ({}); synthetic q = {q:.3}", observed.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("monotone decrease", monotone_decrease),
        ("subproblem oracle equivalence", subproblem_oracle),
        ("convex exactness", convex_exactness),
        ("exact-penalty recovery", exact_penalty),
        ("jacobian validation", jacobian_validation),
        ("sharpness and growth probes", sharpness_probes),
        ("small-step property", small_step),
        ("tail inequality", tail_inequality),
        ("stationarity at termination", stationarity),
        ("assumption-violation detection", level_set_detection),
        ("determinism", determinism),
        ("ratio-tail and rate reports", reports),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
