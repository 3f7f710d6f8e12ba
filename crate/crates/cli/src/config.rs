//! Run configuration: strict JSON with a schema version.

use std::fmt;
use std::path::{Path, PathBuf};

use scvx::diagnostics::DiagnosticsOptions;
use scvx::problems::{builtin_with, BuiltinOptions, BuiltinProblem, Integrator};
use scvx::Params;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that overrides the config seed.
pub const SEED_ENV: &str = "SCVX_SEED";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOverrides {
    pub nodes: Option<usize>,
    pub dt: Option<f64>,
    pub integrator: Option<Integrator>,
}

/// Output locations. Relative paths resolve against the config's directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// JSON Lines trace, one record per iteration.
    pub trace: Option<PathBuf>,
    /// JSON Lines sidecar with the base point `z` of every record.
    pub iterates: Option<PathBuf>,
    /// One-row CSV summary.
    pub summary: Option<PathBuf>,
    /// Diagnostics report (JSON).
    pub report: Option<PathBuf>,
    /// Final point and status (JSON), read back by `check`.
    pub solution: Option<PathBuf>,
    /// Directory for two-column plot data files.
    pub plots: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Builtin problem name.
    pub problem: String,
    #[serde(default)]
    pub overrides: ProblemOverrides,
    /// Penalty weight; the builtin default when absent.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Initial-guess seed; 0 is the builtin's default starting point.
    #[serde(default)]
    pub seed: u64,
    /// Trust-region parameters. Keys given here replace the builtin's
    /// values; the rest keep them.
    #[serde(default)]
    pub params: Option<Params>,
    #[serde(default = "default_true")]
    pub run_diagnostics: bool,
    #[serde(default)]
    pub diagnostics: DiagnosticsOptions,
    #[serde(default)]
    pub output: OutputPaths,
    /// Keys present under `params`, for merging.
    #[serde(skip)]
    params_keys: Vec<String>,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn default_true() -> bool {
    true
}

#[derive(Debug)]
pub enum ConfigError {
    Io { path: PathBuf, source: std::io::Error },
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    Invalid { path: PathBuf, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            ConfigError::Parse {
                path,
                line,
                column,
                message,
            } => write!(f, "{}:{line}:{column}: {message}", path.display()),
            ConfigError::Invalid { path, message } => write!(f, "{}: {message}", path.display()),
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            ParseFailure::Json(e) => ConfigError::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                column: e.column(),
                message: strip_position(&e.to_string()),
            },
            ParseFailure::Invalid(message) => ConfigError::Invalid {
                path: path.to_path_buf(),
                message,
            },
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ParseFailure> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(ParseFailure::Json)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ParseFailure::Invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        let raw: Value = serde_json::from_str(text).map_err(ParseFailure::Json)?;
        if let Some(Value::Object(map)) = raw.get("params") {
            cfg.params_keys = map.keys().cloned().collect();
        }
        Ok(cfg)
    }

    /// Config seed, or the value of `SCVX_SEED` when set.
    pub fn effective_seed(&self) -> Result<u64, String> {
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
            Err(_) => Ok(self.seed),
        }
    }

    pub fn builtin_options(&self) -> BuiltinOptions {
        BuiltinOptions {
            nodes: self.overrides.nodes,
            dt: self.overrides.dt,
            integrator: self.overrides.integrator,
            lambda: self.lambda,
        }
    }

    pub fn build_problem(&self) -> Result<BuiltinProblem<f64>, String> {
        builtin_with(&self.problem, &self.builtin_options()).map_err(|e| e.to_string())
    }

    /// The builtin's parameters with the keys given in the config replaced.
    pub fn merged_params(&self, base: &Params) -> Result<Params, String> {
        let Some(given) = &self.params else {
            return Ok(*base);
        };
        let mut merged = serde_json::to_value(base).map_err(|e| e.to_string())?;
        let given = serde_json::to_value(given).map_err(|e| e.to_string())?;
        for key in &self.params_keys {
            merged[key.as_str()] = given[key.as_str()].clone();
        }
        let params: Params = serde_json::from_value(merged).map_err(|e| e.to_string())?;
        params.validate().map_err(|e| e.to_string())?;
        Ok(params)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

#[derive(Debug)]
pub enum ParseFailure {
    Json(serde_json::Error),
    Invalid(String),
}

/// serde_json appends " at line L column C"; the position is reported separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}
