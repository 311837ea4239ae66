//! On-disk artifacts shared between stages. All paths are relative to the
//! run's output directory.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::controls::{ShuffleBaseline, SkylineResult, TransferResult};
use crate::error::{Error, Result};
use crate::extract::{ExtractionConfig, LayerExtraction, Thresholds};
use crate::probe::{SweepResult, Target};

pub const SPLIT: &str = "split.json";
pub const SWEEP: &str = "sweep.json";
pub const PROBES_DIR: &str = "probes";
pub const CONTROLS: &str = "controls.json";
pub const EXTRACTION: &str = "extraction.json";
pub const WINDOWS: &str = "windows.jsonl";
pub const SINGLES: &str = "singles.jsonl";
pub const ANNOTATED: &str = "annotated.jsonl";
pub const SENTENCES: &str = "sentences.jsonl";
pub const ANNOTATION: &str = "annotation.json";
pub const STATS: &str = "stats.json";
pub const STATUS: &str = "status.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSweep {
    pub sweep: SweepResult,
    pub holdout_acc: f64,
    /// File under `probes/` holding the best-layer centroid probe.
    pub probe_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepArtifact {
    pub targets: Vec<TargetSweep>,
}

impl SweepArtifact {
    pub fn get(&self, target: Target) -> Option<&TargetSweep> {
        self.targets.iter().find(|t| t.sweep.target == target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetControls {
    pub target: Target,
    pub layer: usize,
    pub cv_mean_acc: f64,
    pub shuffle: ShuffleBaseline,
    pub selectivity: f64,
    pub skyline: Option<SkylineResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlsArtifact {
    pub targets: Vec<TargetControls>,
    pub transfer: Option<TransferResult>,
    pub notices: Vec<String>,
}

impl ControlsArtifact {
    pub fn get(&self, target: Target) -> Option<&TargetControls> {
        self.targets.iter().find(|t| t.target == target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionArtifact {
    pub target: Target,
    pub config: ExtractionConfig,
    pub thresholds: Thresholds,
    pub per_layer: Vec<LayerExtraction>,
    pub n_windows: usize,
    pub n_singles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationArtifact {
    pub tokens_sha256: String,
    pub lexicon_sha256: std::collections::BTreeMap<String, String>,
    pub n_tokens: usize,
    pub n_tokens_ok: usize,
    pub n_sentences: usize,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::json(path.display().to_string(), e))?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for r in rows {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::json(path.display().to_string(), e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::json(format!("{}:{}", path.display(), i + 1), e))?);
    }
    Ok(out)
}
