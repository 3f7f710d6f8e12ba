//! Batch runs over a directory of configs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use crate::output::{self, SummaryRow};
use crate::run::{solve, PathOverrides};

/// The `*.json` files directly inside `dir`, sorted by name.
pub fn config_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Runs every config concurrently. A failing run becomes a row with its
/// exit code and error; the batch carries on.
pub fn bench(dir: &Path, out: &Path) -> Result<Vec<SummaryRow>> {
    let files = config_files(dir)?;
    let sink = output::create(out)?;
    let rows: Vec<SummaryRow> = files
        .par_iter()
        .map(|path| solve(path, &PathOverrides::default()).row)
        .collect();
    output::write_summary(sink, &rows).context("writing summary")?;
    Ok(rows)
}
