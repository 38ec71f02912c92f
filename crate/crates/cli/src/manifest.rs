use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use flm_core::optim::{ProtocolReport, StopReason, TrainReport};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::output::Summary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Diverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub phase1_epochs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase2_epochs: Option<usize>,
    pub total_epochs: usize,
    pub final_loss: f64,
    pub stop_reason: StopReason,
}

impl TrainSummary {
    pub fn from_protocol(r: &ProtocolReport) -> Self {
        Self {
            phase1_epochs: r.phase1.epochs_run,
            phase2_epochs: r.phase2.as_ref().map(|p| p.epochs_run),
            total_epochs: r.total_epochs(),
            final_loss: r.last().final_loss,
            stop_reason: r.last().stop_reason,
        }
    }

    pub fn from_report(r: &TrainReport) -> Self {
        Self {
            phase1_epochs: r.epochs_run,
            phase2_epochs: None,
            total_epochs: r.epochs_run,
            final_loss: r.final_loss,
            stop_reason: r.stop_reason,
        }
    }
}

/// One seed (or one seed and initial condition, or one sweep cell and seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSummary>,
    pub wall_s: f64,
}

impl SeedRecord {
    pub fn failed(seed: u64, error: String, wall_s: f64) -> Self {
        Self {
            seed,
            cell: None,
            label: None,
            status: Status::Failed,
            error: Some(error),
            metrics: BTreeMap::new(),
            train: None,
            wall_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    #[serde(rename = "N")]
    pub n_sub: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub aggregate: BTreeMap<String, Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub runs: Vec<SeedRecord>,
    /// Mean and SD over the successful runs, per metric.
    pub aggregate: BTreeMap<String, Summary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<CellSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best: Option<CellSummary>,
    pub wall_s: f64,
    pub artifacts: Vec<PathBuf>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn any_ok(&self) -> bool {
        self.runs.iter().any(|r| r.status == Status::Ok)
    }
}

/// Per-metric mean and SD over the successful records.
pub fn aggregate<'a>(
    records: impl IntoIterator<Item = &'a SeedRecord>,
) -> BTreeMap<String, Summary> {
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records.into_iter().filter(|r| r.status == Status::Ok) {
        for (k, v) in &r.metrics {
            columns.entry(k.clone()).or_default().push(*v);
        }
    }
    columns
        .into_iter()
        .filter_map(|(k, v)| Summary::of(&v).map(|s| (k, s)))
        .collect()
}
