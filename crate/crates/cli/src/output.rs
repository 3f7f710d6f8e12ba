//! Trace, sidecar, plot, summary, report and solution files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use scvx::diagnostics::DiagnosticsReport;
use scvx::{Record, SolveStatus, StopReason};
use serde::{Deserialize, Serialize};

use crate::config::SCHEMA_VERSION;

/// One trace line. Field order is part of the format.
#[derive(Serialize)]
struct TraceLine {
    k: usize,
    #[serde(rename = "J")]
    j: f64,
    #[serde(rename = "L")]
    l: f64,
    rho: Option<f64>,
    radius: f64,
    step_norm: f64,
    accepted: bool,
    predicted_decrease: f64,
    actual_decrease: f64,
}

impl From<&Record> for TraceLine {
    fn from(r: &Record) -> Self {
        Self {
            k: r.k,
            j: r.j,
            l: r.model_value,
            rho: r.rho,
            radius: r.radius,
            step_norm: r.step_norm,
            accepted: r.accepted,
            predicted_decrease: r.predicted_decrease,
            actual_decrease: r.actual_decrease,
        }
    }
}

#[derive(Serialize)]
struct IterateLine<'a> {
    k: usize,
    z: &'a [f64],
    /// Set on the extra last line holding the returned point.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    r#final: bool,
}

/// Creates `path` (and its parent directories) for writing.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let f = File::create(path).with_context(|| format!("opening {} for writing", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn write_trace(mut w: impl Write, trace: &[Record]) -> Result<()> {
    for rec in trace {
        serde_json::to_writer(&mut w, &TraceLine::from(rec))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_iterates(mut w: impl Write, trace: &[Record], final_z: &[f64]) -> Result<()> {
    for rec in trace {
        serde_json::to_writer(&mut w, &IterateLine { k: rec.k, z: &rec.z, r#final: false })?;
        w.write_all(b"\n")?;
    }
    let k = trace.last().map_or(0, |r| r.k + 1);
    serde_json::to_writer(&mut w, &IterateLine { k, z: final_z, r#final: true })?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Plot data files written into a directory.
pub struct PlotFiles {
    pub objective: BufWriter<File>,
    pub step_norm: BufWriter<File>,
    pub rho: BufWriter<File>,
}

impl PlotFiles {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            objective: create(&dir.join("J.dat"))?,
            step_norm: create(&dir.join("step_norm.dat"))?,
            rho: create(&dir.join("rho.dat"))?,
        })
    }

    /// Iterations with an undefined ratio are left out of `rho.dat`.
    pub fn write(mut self, trace: &[Record]) -> Result<()> {
        writeln!(self.objective, "# k J")?;
        writeln!(self.step_norm, "# k step_norm")?;
        writeln!(self.rho, "# k rho")?;
        for r in trace {
            writeln!(self.objective, "{} {:e}", r.k, r.j)?;
            writeln!(self.step_norm, "{} {:e}", r.k, r.step_norm)?;
            if let Some(rho) = r.rho {
                writeln!(self.rho, "{} {:e}", r.k, rho)?;
            }
        }
        self.objective.flush()?;
        self.step_norm.flush()?;
        self.rho.flush()?;
        Ok(())
    }
}

/// Header of the summary CSV written by `solve` and `bench`.
pub const SUMMARY_HEADER: [&str; 19] = [
    "config",
    "problem",
    "seed",
    "status",
    "exit_code",
    "iterations",
    "accepted",
    "j_initial",
    "j_final",
    "max_violation",
    "stationarity",
    "beta_hat",
    "gamma_hat",
    "small_step_pass",
    "small_step_eta",
    "convergence_label",
    "rate_order",
    "superlinear",
    "error",
];

/// One summary row. Empty cells mean "not available".
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SummaryRow {
    pub config: String,
    pub problem: String,
    pub seed: Option<u64>,
    pub status: Option<SolveStatus>,
    pub exit_code: i32,
    pub iterations: Option<usize>,
    pub accepted: Option<usize>,
    pub j_initial: Option<f64>,
    pub j_final: Option<f64>,
    pub max_violation: Option<f64>,
    pub stationarity: Option<f64>,
    pub beta_hat: Option<f64>,
    pub gamma_hat: Option<f64>,
    pub small_step_pass: Option<bool>,
    pub small_step_eta: Option<f64>,
    pub convergence_label: Option<String>,
    pub rate_order: Option<f64>,
    pub superlinear: Option<bool>,
    pub error: Option<String>,
}

fn cell<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn num(v: &Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::ConvergedStationary => "converged-stationary",
        SolveStatus::IterationLimit => "iteration-limit",
        SolveStatus::LevelSetViolation => "level-set-violation",
        SolveStatus::SubproblemFailure => "subproblem-failure",
    }
}

impl SummaryRow {
    fn record(&self) -> [String; 19] {
        [
            self.config.clone(),
            self.problem.clone(),
            cell(&self.seed),
            self.status.map(status_name).unwrap_or_default().to_string(),
            self.exit_code.to_string(),
            cell(&self.iterations),
            cell(&self.accepted),
            num(&self.j_initial),
            num(&self.j_final),
            num(&self.max_violation),
            num(&self.stationarity),
            num(&self.beta_hat),
            num(&self.gamma_hat),
            cell(&self.small_step_pass),
            num(&self.small_step_eta),
            self.convergence_label.clone().unwrap_or_default(),
            num(&self.rate_order),
            cell(&self.superlinear),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

pub fn write_summary(w: impl Write, rows: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for row in rows {
        out.write_record(row.record())?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
pub struct RunReport<'a> {
    pub schema_version: u32,
    pub problem: &'a str,
    pub seed: u64,
    pub status: SolveStatus,
    pub stop_reason: Option<StopReason>,
    pub iterations: usize,
    pub accepted: usize,
    pub j_initial: f64,
    pub j_final: f64,
    pub max_violation: Option<f64>,
    pub failure: Option<&'a str>,
    pub diagnostics: Option<&'a DiagnosticsReport<f64>>,
}

#[derive(Serialize)]
pub struct CheckReport<'a> {
    pub schema_version: u32,
    pub problem: &'a str,
    pub solution: &'a Path,
    /// Status recorded when the solution was saved.
    pub saved_status: SolveStatus,
    pub stationary: bool,
    pub diagnostics: &'a DiagnosticsReport<f64>,
}

pub fn write_json(mut w: impl Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Saved final point, read back by `check`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SavedSolution {
    pub schema_version: u32,
    pub problem: String,
    pub seed: u64,
    pub status: SolveStatus,
    pub j: f64,
    pub z: Vec<f64>,
}

impl SavedSolution {
    pub fn new(problem: &str, seed: u64, status: SolveStatus, j: f64, z: &[f64]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            problem: problem.to_string(),
            seed,
            status,
            j,
            z: z.to_vec(),
        }
    }

    pub fn load(path: &PathBuf) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let s: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        anyhow::ensure!(
            s.schema_version == SCHEMA_VERSION,
            "{}: unsupported schema_version {}",
            path.display(),
            s.schema_version
        );
        Ok(s)
    }
}
