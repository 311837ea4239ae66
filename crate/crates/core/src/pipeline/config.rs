use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotate::AnnotationConfig;
use crate::controls::TfidfConfig;
use crate::corpus::StratifyKey;
use crate::error::{Error, Result};
use crate::extract::ExtractionConfig;
use crate::probe::{ProbeConfig, Target};
use crate::stats::StatsConfig;

/// Every setting that influences results. Paths are deliberately excluded
/// so that the same analysis in two output directories is identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    /// Attribute used for extraction and statistics.
    pub target: Target,
    /// Attributes probed and controlled in the probe table.
    pub report_targets: Vec<Target>,
    pub split_ratio: f64,
    pub stratify_key: StratifyKey,
    /// Master seed: split seed, and the root of permutation seeds.
    pub seed: u64,
    pub n_permutations: usize,
    pub probe: ProbeConfig,
    pub extraction: ExtractionConfig,
    pub annotation: AnnotationConfig,
    pub stats: StatsConfig,
    pub tfidf: TfidfConfig,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            target: Target::Nationality,
            report_targets: vec![Target::Nationality, Target::Medium, Target::Role],
            split_ratio: 0.8,
            stratify_key: StratifyKey::Nationality,
            seed: 20260325,
            n_permutations: 100,
            probe: ProbeConfig::default(),
            extraction: ExtractionConfig::default(),
            annotation: AnnotationConfig::default(),
            stats: StatsConfig::default(),
            tfidf: TfidfConfig::default(),
        }
    }
}

impl AnalysisSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!("split_ratio must be in (0,1), got {}", self.split_ratio)));
        }
        if self.n_permutations == 0 {
            return Err(Error::Config("n_permutations must be at least 1".into()));
        }
        if self.report_targets.is_empty() {
            return Err(Error::Config("report_targets is empty".into()));
        }
        self.probe.validate()?;
        self.extraction.validate()?;
        self.stats.validate()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub corpus_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Defaults to `tokens.jsonl` inside the corpus directory.
    pub tokens: Option<PathBuf>,
    /// Directory of lexicon files; builtin lexicons when absent.
    pub lexicon_dir: Option<PathBuf>,
    /// Derived from settings and input hashes when absent.
    pub run_id: Option<String>,
    #[serde(flatten)]
    pub settings: AnalysisSettings,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parse a JSON run configuration, rejecting unknown top-level keys
    /// (which serde's flatten would otherwise ignore).
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let known = serde_json::to_value(RunConfig::default()).expect("config serialises");
        if let (Some(obj), Some(known)) = (value.as_object(), known.as_object()) {
            if let Some(k) = obj.keys().find(|k| !known.contains_key(*k)) {
                return Err(Error::Config(format!("unknown field {k:?}")));
            }
        }
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus_dir.as_os_str().is_empty() {
            return Err(Error::Config("corpus directory not set".into()));
        }
        if self.out_dir.as_os_str().is_empty() {
            return Err(Error::Config("output directory not set".into()));
        }
        if let Some(id) = &self.run_id {
            if id.is_empty() || id.contains(['/', '\\']) {
                return Err(Error::Config(format!("invalid run id {id:?}")));
            }
        }
        self.settings.validate()
    }

    pub fn tokens_path(&self) -> PathBuf {
        self.tokens.clone().unwrap_or_else(|| self.corpus_dir.join("tokens.jsonl"))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_takes_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"corpus_dir":"c","out_dir":"o","seed":3,"probe":{"k_folds":4}}"#).unwrap();
        assert_eq!(c.settings.seed, 3);
        assert_eq!(c.settings.probe.k_folds, 4);
        assert_eq!(c.settings.probe.max_iter, 4000);
        c.validate().unwrap();
        assert!(serde_json::from_str::<AnalysisSettings>(r#"{"sed":1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"corpus_dir":"c","sed":1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"corpus_dir":"c","probe":{"folds":2}}"#).is_err());
        assert_eq!(RunConfig::from_json(r#"{"tokens":"t.jsonl"}"#).unwrap().tokens, Some("t.jsonl".into()));
    }
}
