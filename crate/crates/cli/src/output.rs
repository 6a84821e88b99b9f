//! Artifact files of a run.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Output directory that remembers what was written to it.
pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Output, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn path(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }

    /// Writes `rows` as CSV with a header taken from the row type.
    pub fn csv<R: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<(), CliError> {
        let path = self.path(name);
        let err = |source| CliError::Csv {
            path: path.display().to_string(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(err)?;
        for r in rows {
            w.serialize(r).map_err(err)?;
        }
        w.flush().map_err(|e| CliError::io(path.display(), e))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.path(name);
        write_json(&path, value)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}

/// Everything needed to reproduce a run.
#[derive(Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub versions: Versions,
    pub seed: u64,
    pub workers: usize,
    pub config_file: Option<String>,
    /// Every scenario input after defaults, config file and flags.
    pub inputs: Value,
    /// Physical parameters in SI units, one entry per distinct set passed to
    /// the simulation.
    pub sim_params: Vec<ionwalk::SimParams>,
    pub outputs: Vec<String>,
    pub summary: Value,
    pub runtime_s: f64,
}

#[derive(Serialize)]
pub struct Versions {
    pub ionwalk: &'static str,
    pub cli: &'static str,
}

impl Versions {
    pub fn current() -> Versions {
        Versions {
            ionwalk: ionwalk::VERSION,
            cli: env!("CARGO_PKG_VERSION"),
        }
    }
}
