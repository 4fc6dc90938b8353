use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::completion::CompletionConfig;
use crate::dataio::RNG_ALGORITHM;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::numcore::SolveReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl FileRecord {
    pub fn of(role: &str, path: &Path) -> Result<Self> {
        Ok(Self {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: file_sha256(path)?,
        })
    }
}

/// Solver outcome without the weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub solver: String,
    pub measurements: usize,
    pub unknowns: usize,
    pub effective_rank: usize,
    pub iterations: usize,
    pub residual_norm: f64,
    pub underdetermined: bool,
}

impl SolveSummary {
    pub fn new(report: &SolveReport, irls: bool, measurements: usize) -> Self {
        Self {
            solver: if irls { "irls" } else { "svd" }.into(),
            measurements,
            unknowns: report.weights.len(),
            effective_rank: report.effective_rank,
            iterations: report.iterations,
            residual_norm: report.residual_norm,
            underdetermined: report.underdetermined,
        }
    }

    pub fn to_kv(&self) -> String {
        format!(
            "solver={}\nmeasurements={}\nunknowns={}\neffective_rank={}\niterations={}\nresidual_norm={}\nunderdetermined={}\n",
            self.solver,
            self.measurements,
            self.unknowns,
            self.effective_rank,
            self.iterations,
            self.residual_norm,
            self.underdetermined
        )
    }
}

/// Everything needed to rerun a command and check its outputs.
///
/// `args` is the argument list after the program name and `cwd` the
/// directory it was run from, so relative paths resolve the same way on
/// replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: String,
    pub args: Vec<String>,
    pub cwd: String,
    pub config: Option<CompletionConfig>,
    pub rng_algorithm: String,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub solve: Option<SolveSummary>,
    pub metrics: Option<MetricsReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, args: &[String]) -> Self {
        let cwd = std::env::current_dir()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        Self {
            tool: format!("sparsefill {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            args: args.to_vec(),
            cwd,
            config: None,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            solve: None,
            metrics: None,
            failures: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.push(FileRecord::of(role, path)?);
        Ok(())
    }

    pub fn output(&mut self, role: &str, path: &Path) -> Result<()> {
        self.outputs.push(FileRecord::of(role, path)?);
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// `<out>.manifest.json` next to the primary output.
pub fn default_manifest_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
