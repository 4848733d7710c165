//! Report files. One JSON document per command run; decay-type commands
//! add a CSV with a frozen, versioned schema.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{CliError, ExperimentConfig};

/// First line of every CSV file.
pub const CSV_VERSION_LINE: &str = "# csv-schema v1: eps,R,shell_sup,fit_slope,fit_r2";
pub const CSV_COLUMNS: [&str; 5] = ["eps", "R", "shell_sup", "fit_slope", "fit_r2"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub eps: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub shell_sup: f64,
    /// Empty when the row has no fit attached.
    pub fit_slope: Option<f64>,
    pub fit_r2: Option<f64>,
}

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    command: &'a str,
    seed: u64,
    passed: bool,
    failures: &'a [String],
    config: &'a ExperimentConfig,
    report: &'a R,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

pub fn out_path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    Path::new(&cfg.run.out).join(name)
}

pub fn write_json<R: Serialize>(
    cfg: &ExperimentConfig,
    report: &R,
    failures: &[String],
) -> Result<PathBuf, CliError> {
    let path = out_path(cfg, &format!("{}.json", cfg.experiment));
    let env = Envelope {
        command: &cfg.experiment,
        seed: cfg.run.seed,
        passed: failures.is_empty(),
        failures,
        config: cfg,
        report,
    };
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &env).map_err(|e| CliError::io(&path, e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn write_csv(cfg: &ExperimentConfig, rows: &[CsvRow]) -> Result<PathBuf, CliError> {
    let path = out_path(cfg, &format!("{}.csv", cfg.experiment));
    let mut w = create(&path)?;
    writeln!(w, "{CSV_VERSION_LINE}").map_err(|e| CliError::io(&path, e))?;
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    csv.write_record(CSV_COLUMNS).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
    for row in rows {
        csv.serialize(row).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
    }
    csv.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
