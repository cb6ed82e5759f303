//! Experiment reports and the artifact directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::RunError;

pub const REPORT_FILE: &str = "report.json";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    BehaviorMismatch,
}

#[derive(Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub status: Status,
    /// Fully resolved configuration; rerunning it reproduces this report.
    pub config: ExperimentConfig,
    pub results: serde_json::Value,
    /// Relative to the output directory, sorted.
    pub artifacts: Vec<String>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl ExperimentReport {
    pub fn summary(&self) -> String {
        format!(
            "{}: {} ({} artifacts in {})",
            self.experiment.name(),
            match self.status {
                Status::Ok => "ok",
                Status::BehaviorMismatch => "behavior mismatch",
            },
            self.artifacts.len(),
            self.out.display()
        )
    }
}

/// Collects artifact paths while writing them below one root.
pub struct Artifacts {
    root: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn create(root: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<(), RunError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.written.push(rel.to_string());
        Ok(())
    }

    /// Writes the report and resolved config; returns the report.
    pub fn finish(
        mut self,
        config: &ExperimentConfig,
        status: Status,
        results: serde_json::Value,
    ) -> Result<ExperimentReport, RunError> {
        self.write(CONFIG_FILE, config.to_toml())?;
        self.written.push(REPORT_FILE.to_string());
        self.written.sort();
        let report = ExperimentReport {
            experiment: config
                .experiment
                .expect("validated config names an experiment"),
            status,
            config: config.clone(),
            results,
            artifacts: self.written,
            out: self.root.clone(),
        };
        let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
        json.push('\n');
        fs::write(self.root.join(REPORT_FILE), json)?;
        Ok(report)
    }
}
