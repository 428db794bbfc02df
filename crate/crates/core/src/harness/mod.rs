//! Batch experiments: temperature sweeps, the shot-scaling and product-ansatz
//! studies, and resource and state reports. Everything is written under one
//! output directory per invocation.

mod appendix;
mod reports;
mod sweep;

pub use appendix::{
    run_appendix_a, run_appendix_b, run_appendix_studies, AppendixAConfig, AppendixAOutput,
    AppendixBConfig, AppendixBRow, CvRow,
};
pub use reports::{
    exact_gibbs_report, report_resources, resources_csv, tfd_report, write_resources_csv,
    GibbsReport, LayerRule, ResourceRow, TfdReport,
};
pub use sweep::{format_beta, run_sweep, BetaPoint, RunOutcome, SummaryRow, SweepResult};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::AnsatzConfig;
use crate::error::{Error, Result};
use crate::hamiltonian::{Boundary, DEFAULT_DENSE_LIMIT};
use crate::objective::EvaluationMode;
use crate::optimizer::{Algorithm, OptimizerSettings};

/// Logarithmic default temperature grid.
pub const DEFAULT_BETA_GRID: [f64; 9] = [0.01, 0.0316, 0.1, 0.316, 1.0, 3.16, 10.0, 31.6, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n: usize,
    pub h: f64,
    pub boundary: Boundary,
    pub layers_ancilla: usize,
    /// `None` means `n - 1` (at least 1).
    pub layers_system: Option<usize>,
    pub drop_nonadjacent_rp: bool,
    pub beta_grid: Vec<f64>,
    pub mode: EvaluationMode,
    /// `None` picks BFGS for exact mode and SPSA for shot mode.
    pub optimizer: Option<OptimizerSettings>,
    /// `None` means 20 runs in exact mode and 10 in shot mode.
    pub num_runs: Option<usize>,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Thread count; `None` uses every available core.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 2,
            h: 0.5,
            boundary: Boundary::Periodic,
            layers_ancilla: 1,
            layers_system: None,
            drop_nonadjacent_rp: false,
            beta_grid: DEFAULT_BETA_GRID.to_vec(),
            mode: EvaluationMode::Exact,
            optimizer: None,
            num_runs: None,
            base_seed: 0,
            output_dir: PathBuf::from("results"),
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn ansatz(&self) -> AnsatzConfig {
        AnsatzConfig {
            n: self.n,
            layers_ancilla: self.layers_ancilla,
            layers_system: self
                .layers_system
                .unwrap_or_else(|| self.n.saturating_sub(1).max(1)),
            boundary: self.boundary,
            drop_nonadjacent_rp: self.drop_nonadjacent_rp,
        }
    }

    pub fn runs(&self) -> usize {
        self.num_runs.unwrap_or(match self.mode {
            EvaluationMode::Exact => 20,
            EvaluationMode::Shots { .. } => 10,
        })
    }

    pub fn optimizer_settings(&self) -> OptimizerSettings {
        self.optimizer.unwrap_or_else(|| match self.mode {
            EvaluationMode::Exact => OptimizerSettings::bfgs(),
            EvaluationMode::Shots { .. } => OptimizerSettings::spsa(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.ansatz().validate()?;
        if self.n > DEFAULT_DENSE_LIMIT / 2 {
            return Err(Error::Resource(format!(
                "n = {} needs a {}-qubit register; the limit is {DEFAULT_DENSE_LIMIT}",
                self.n,
                2 * self.n
            )));
        }
        if !self.h.is_finite() {
            return Err(Error::arg("h must be finite"));
        }
        if self.beta_grid.is_empty() {
            return Err(Error::arg("the beta grid is empty"));
        }
        if let Some(b) = self
            .beta_grid
            .iter()
            .find(|b| !(**b > 0.0) || !b.is_finite())
        {
            return Err(Error::arg(format!(
                "beta values must be finite and > 0, got {b}"
            )));
        }
        if self.runs() == 0 {
            return Err(Error::arg("num_runs must be >= 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::arg("workers must be >= 1"));
        }
        if let EvaluationMode::Shots {
            shots_per_circuit, ..
        } = self.mode
        {
            if shots_per_circuit == 0 {
                return Err(Error::arg("shots must be positive"));
            }
            if self.optimizer_settings().algorithm == Algorithm::Bfgs {
                return Err(Error::Unsupported(
                    "BFGS needs exact gradients; use SPSA in shot mode".into(),
                ));
            }
        }
        Ok(())
    }

    /// SHA-256 of the result-determining fields (everything except the
    /// output directory and worker count), hex encoded.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        canonical.workers = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Runs `f` on a pool with `workers` threads, or the global pool.
/// Runs `f` on a dedicated pool of `workers` threads, or the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Resource(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes through a temporary file and a rename so readers never see a
/// half-written file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub(crate) fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Error::Resource(e.to_string()))
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}
