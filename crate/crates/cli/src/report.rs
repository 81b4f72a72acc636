//! Run reports and atomic artifact output.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cliffdyn::verify::CheckRecord;
use serde::Serialize;
use tempfile::NamedTempFile;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything a run produces except wall-clock timing, which lives in
/// `timing.json` so that reports stay byte-identical across runs.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub checks: Vec<CheckRecord>,
    pub artifacts: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub command: String,
    pub wall_clock_seconds: f64,
    pub threads: usize,
}

/// Collects check records for one suite.
pub struct Checks {
    suite: String,
    pub records: Vec<CheckRecord>,
}

impl Checks {
    pub fn new(suite: &str) -> Self {
        Checks {
            suite: suite.into(),
            records: Vec::new(),
        }
    }

    pub fn check(&mut self, name: &str, threshold: f64, residual: cliffdyn::Result<f64>) {
        let rec = match residual {
            Ok(r) => CheckRecord {
                suite: self.suite.clone(),
                name: name.into(),
                residual: Some(r),
                threshold,
                passed: r.is_finite() && r <= threshold,
                error: None,
            },
            Err(e) => CheckRecord {
                suite: self.suite.clone(),
                name: name.into(),
                residual: None,
                threshold,
                passed: false,
                error: Some(e.to_string()),
            },
        };
        self.records.push(rec);
    }
}

/// Output directory that records every file written through it.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Writes `name` through a temporary file in the same directory and
    /// renames it into place.
    pub fn write<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        write_atomic(&self.root.join(name), body)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    pub fn artifacts(&self) -> Vec<String> {
        self.written.clone()
    }
}

pub fn write_atomic<F>(target: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(target)
        .with_context(|| format!("writing {}", target.display()))?;
    Ok(())
}
