//! `solve` and `check`.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use scvx::diagnostics::{diagnose, ConvergenceLabel, DiagnosticsReport};
use scvx::{run_scvx, Solution, SolveStatus};

use crate::config::{ConfigError, RunConfig};
use crate::output::{self, PlotFiles, RunReport, SavedSolution, SummaryRow};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ITERATION_LIMIT: i32 = 2;
pub const EXIT_ASSUMPTION: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::ConvergedStationary => EXIT_CONVERGED,
        SolveStatus::IterationLimit => EXIT_ITERATION_LIMIT,
        SolveStatus::LevelSetViolation => EXIT_ASSUMPTION,
        SolveStatus::SubproblemFailure => EXIT_SOLVER,
    }
}

/// A failure before or around the solve, with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(msg: impl ToString) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: msg.to_string(),
        }
    }

    fn solver(msg: impl ToString) -> Self {
        Self {
            code: EXIT_SOLVER,
            message: msg.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e)
    }
}

/// Command-line overrides of the configured output paths.
#[derive(Clone, Debug, Default)]
pub struct PathOverrides {
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

struct Sinks {
    trace: Option<BufWriter<File>>,
    iterates: Option<BufWriter<File>>,
    summary: Option<BufWriter<File>>,
    report: Option<BufWriter<File>>,
    solution: Option<BufWriter<File>>,
    plots: Option<PlotFiles>,
}

fn open(path: Option<PathBuf>) -> Result<Option<BufWriter<File>>, Failure> {
    path.map(|p| output::create(&p)).transpose().map_err(|e| Failure::config(format!("{e:#}")))
}

impl Sinks {
    /// Opens every output up front so an unwritable path fails before the solve.
    fn open(cfg: &RunConfig, over: &PathOverrides) -> Result<Self, Failure> {
        let out = &cfg.output;
        let pick = |cli: &Option<PathBuf>, conf: &Option<PathBuf>| {
            cli.clone().or_else(|| conf.as_ref().map(|p| cfg.resolve(p)))
        };
        let plots = match &out.plots {
            Some(dir) => Some(PlotFiles::create(&cfg.resolve(dir)).map_err(|e| Failure::config(format!("{e:#}")))?),
            None => None,
        };
        Ok(Self {
            trace: open(pick(&over.trace, &out.trace))?,
            iterates: open(pick(&None, &out.iterates))?,
            summary: open(pick(&None, &out.summary))?,
            report: open(pick(&over.report, &out.report))?,
            solution: open(pick(&None, &out.solution))?,
            plots,
        })
    }
}

/// The summary row of a finished `solve`.
pub struct Outcome {
    pub row: SummaryRow,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.row.exit_code
    }
}

/// Loads, solves, diagnoses and writes the configured outputs.
/// Failures are folded into the returned row.
pub fn solve(config_path: &Path, over: &PathOverrides) -> Outcome {
    let mut row = SummaryRow {
        config: config_path.display().to_string(),
        ..Default::default()
    };
    match solve_inner(config_path, over, &mut row) {
        Ok(()) => Outcome { row },
        Err(f) => {
            row.exit_code = f.code;
            row.error = Some(f.message);
            Outcome { row }
        }
    }
}

fn solve_inner(
    config_path: &Path,
    over: &PathOverrides,
    row: &mut SummaryRow,
) -> Result<(), Failure> {
    let cfg = RunConfig::load(config_path)?;
    row.problem = cfg.problem.clone();
    let seed = cfg.effective_seed().map_err(Failure::config)?;
    row.seed = Some(seed);
    let problem = cfg.build_problem().map_err(Failure::config)?;
    let params = cfg.merged_params(&problem.params).map_err(Failure::config)?;
    let mut sinks = Sinks::open(&cfg, over)?;

    let z0 = problem.initial_guess(seed);
    let result = run_scvx(&problem.objective, &z0, &params).map_err(Failure::solver)?;
    let report = cfg.run_diagnostics.then(|| {
        diagnose(&problem.objective, problem.discretized.as_ref(), &result, &params, &cfg.diagnostics)
    });
    let max_violation = problem.objective.max_violation(&result.final_z).ok();

    fill_row(row, &result, report.as_ref(), max_violation);

    let mut write = || -> anyhow::Result<()> {
        if let Some(w) = sinks.trace.take() {
            output::write_trace(w, &result.trace).context("writing trace")?;
        }
        if let Some(w) = sinks.iterates.take() {
            output::write_iterates(w, &result.trace, &result.final_z).context("writing iterates")?;
        }
        if let Some(p) = sinks.plots.take() {
            p.write(&result.trace).context("writing plot data")?;
        }
        if let Some(w) = sinks.report.take() {
            let rep = RunReport {
                schema_version: crate::config::SCHEMA_VERSION,
                problem: &cfg.problem,
                seed,
                status: result.status,
                stop_reason: result.stop_reason,
                iterations: result.trace.len(),
                accepted: result.accepted_count(),
                j_initial: result.j_initial,
                j_final: result.j_final,
                max_violation,
                failure: result.failure.as_deref(),
                diagnostics: report.as_ref(),
            };
            output::write_json(w, &rep).context("writing report")?;
        }
        if let Some(w) = sinks.solution.take() {
            let sol = SavedSolution::new(&cfg.problem, seed, result.status, result.j_final, &result.final_z);
            output::write_json(w, &sol).context("writing solution")?;
        }
        if let Some(w) = sinks.summary.take() {
            output::write_summary(w, std::slice::from_ref(row)).context("writing summary")?;
        }
        Ok(())
    };
    write().map_err(|e| Failure::solver(format!("{e:#}")))
}

fn fill_row(
    row: &mut SummaryRow,
    result: &Solution,
    report: Option<&DiagnosticsReport<f64>>,
    max_violation: Option<f64>,
) {
    row.status = Some(result.status);
    row.exit_code = exit_code(result.status);
    row.iterations = Some(result.trace.len());
    row.accepted = Some(result.accepted_count());
    row.j_initial = Some(result.j_initial);
    row.j_final = Some(result.j_final);
    row.max_violation = max_violation;
    row.error = result.failure.clone();
    if let Some(rep) = report {
        row.stationarity = rep.stationarity;
        row.beta_hat = rep.sharpness.as_ref().and_then(|s| s.beta_hat);
        row.gamma_hat = rep.sharpness.as_ref().and_then(|s| s.gamma_hat);
        row.small_step_pass = Some(rep.small_step.as_ref().is_some_and(|s| s.pass));
        row.small_step_eta = rep.small_step.as_ref().map(|s| s.eta);
        row.convergence_label = Some(
            match rep.strong_convergence.label {
                ConvergenceLabel::StrongConvergent => "strong-convergent",
                ConvergenceLabel::Inconclusive => "inconclusive",
            }
            .to_string(),
        );
        row.rate_order = rep.rate.order_q;
        row.superlinear = Some(rep.rate.superlinear_evidence);
    }
}

/// Point diagnostics on the solution saved by an earlier `solve`.
/// Exit 0 when the point passes the stationarity and subgradient checks,
/// 3 otherwise.
pub fn check(config_path: &Path, over: &PathOverrides) -> Result<i32, Failure> {
    let cfg = RunConfig::load(config_path)?;
    let problem = cfg.build_problem().map_err(Failure::config)?;
    let params = cfg.merged_params(&problem.params).map_err(Failure::config)?;
    let path = cfg
        .output
        .solution
        .as_ref()
        .map(|p| cfg.resolve(p))
        .ok_or_else(|| Failure::config("config has no output.solution path to check"))?;
    let saved = SavedSolution::load(&path).map_err(|e| Failure::config(format!("{e:#}")))?;
    if saved.problem != cfg.problem {
        return Err(Failure::config(format!(
            "{} holds a solution of {}, not {}",
            path.display(),
            saved.problem,
            cfg.problem
        )));
    }
    if saved.z.len() != problem.objective.n_z() {
        return Err(Failure::config(format!(
            "{}: expected {} variables, found {}",
            path.display(),
            problem.objective.n_z(),
            saved.z.len()
        )));
    }
    let j = problem.objective.evaluate(&saved.z).map_err(Failure::solver)?;
    // A single-point run so the point probes apply; the trace checks are vacuous.
    let at_point = Solution {
        final_z: scvx::Point::new(saved.z.clone()).map_err(Failure::config)?,
        status: SolveStatus::ConvergedStationary,
        stop_reason: None,
        trace: Vec::new(),
        j_initial: j,
        j_final: j,
        failure: None,
    };
    let report = diagnose(&problem.objective, problem.discretized.as_ref(), &at_point, &params, &cfg.diagnostics);
    let stationary = report.stationarity.is_some_and(|s| s <= report.stationarity_tol)
        && report.subdifferential.as_ref().is_some_and(|s| s.pass);

    let report_path = over
        .report
        .clone()
        .or_else(|| cfg.output.report.as_ref().map(|p| cfg.resolve(p)));
    if let Some(p) = report_path {
        let w = output::create(&p).map_err(|e| Failure::config(format!("{e:#}")))?;
        let rep = output::CheckReport {
            schema_version: crate::config::SCHEMA_VERSION,
            problem: &cfg.problem,
            solution: &path,
            saved_status: saved.status,
            stationary,
            diagnostics: &report,
        };
        output::write_json(w, &rep).map_err(|e| Failure::solver(format!("{e:#}")))?;
    }
    eprintln!(
        "{}: J = {j:e}, stationarity = {}, subgradient check {}",
        cfg.problem,
        report.stationarity.map_or("n/a".to_string(), |s| format!("{s:e}")),
        match report.subdifferential.as_ref() {
            Some(s) if s.pass => "passed",
            Some(_) => "failed",
            None => "not run",
        }
    );
    Ok(if stationary { EXIT_CONVERGED } else { EXIT_ASSUMPTION })
}
