//! Configured experiment runs, CSV output and process exit codes.

mod config;
mod experiments;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::parallel;

pub use config::{
    BilapConfig, Experiment, ExperimentConfig, FieldMomentsConfig, FullTheoremConfig, GreenConfig, PairCorrConfig,
    QConfig, UstConfig,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

/// Exit code for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Support(_) => EXIT_CONFIG,
        Error::Accuracy(_) | Error::Budget { .. } | Error::Compute(_) | Error::Io(_) => EXIT_COMPUTE,
    }
}

/// One tolerance check of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub experiment: Experiment,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_PASS
        } else {
            EXIT_TOLERANCE
        }
    }
}

/// A CSV table written with a `#` comment header identifying the run.
#[derive(Clone, Debug)]
pub struct CsvTable {
    columns: Vec<String>,
    rows: Vec<String>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> CsvTable {
        CsvTable { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells.join(","));
    }

    /// Column line and rows, without the header block.
    pub fn body(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

/// Run-level context shared by the experiments.
pub(crate) struct RunContext {
    pub seed: u64,
    experiment: Experiment,
    config_hash: String,
    out: PathBuf,
    files: Vec<PathBuf>,
}

impl RunContext {
    pub fn write(&mut self, name: &str, table: &CsvTable) -> Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "# usf-lab {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text, "# experiment: {}", self.experiment.name());
        let _ = writeln!(text, "# config_sha256: {}", self.config_hash);
        let _ = writeln!(text, "# seed: {}", self.seed);
        text.push_str(&table.body());
        let path = self.out.join(name);
        fs::write(&path, text)?;
        self.files.push(path);
        Ok(())
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }
}

/// Text of a CSV file with its `#` header lines removed.
pub fn csv_body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

/// Formats a float so that equal values always print identically.
pub(crate) fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Runs the configured experiment on a pool of `cfg.workers` threads.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let experiment = cfg.experiment.ok_or_else(|| Error::Config("no experiment selected".into()))?;
    fs::create_dir_all(&cfg.out)?;
    let mut ctx = RunContext {
        seed: cfg.seed,
        experiment,
        config_hash: cfg.hash(),
        out: cfg.out.clone(),
        files: Vec::new(),
    };
    let checks = parallel::with_workers(cfg.workers, || experiments::dispatch(experiment, cfg, &mut ctx))??;
    let mut table = CsvTable::new(&["check", "passed", "detail"]);
    for c in &checks {
        table.push(&[c.name.clone(), c.passed.to_string(), format!("\"{}\"", c.detail.replace('"', "'"))]);
    }
    ctx.write("checks.csv", &table)?;
    Ok(RunReport { experiment, checks, files: ctx.files })
}

impl ExperimentConfig {
    /// SHA-256 of the canonical JSON form, ignoring the worker count and output directory.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("workers");
            m.remove("out");
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
