//! Stage orchestration: sweep, controls, extraction, annotation,
//! statistics and reporting, each reading and writing artifacts under the
//! run's output directory.

pub mod artifacts;
mod config;

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use artifacts::*;
pub use config::{AnalysisSettings, RunConfig};

use crate::annotate::{annotate, AnnotatedToken, Annotations, LexiconSet, Quality, SentenceRecord};
use crate::controls::{cross_family_transfer, selectivity, shuffled_baseline, skyline};
use crate::corpus::{load_corpus, make_split, read_meta, read_tokens, ActivationStore, ExampleMeta, Split};
use crate::error::{Error, Result};
use crate::extract::{extract, TokenSelection, WindowRecord};
use crate::par::derive_seed;
use crate::probe::{fit_centroid_probe, holdout_eval, labelled_ids, layer_sweep, Target};
use crate::report::{build_report, emit_report, Provenance, Report, ReportInputs};
use crate::stats::{run_battery, StatsReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Sweep,
    Controls,
    Extract,
    Annotate,
    Stats,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Sweep,
        Stage::Controls,
        Stage::Extract,
        Stage::Annotate,
        Stage::Stats,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Sweep => "sweep",
            Stage::Controls => "controls",
            Stage::Extract => "extract",
            Stage::Annotate => "annotate",
            Stage::Stats => "stats",
            Stage::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageOutcome {
    Done,
    Skipped(String),
}

impl StageOutcome {
    fn status(&self) -> String {
        match self {
            StageOutcome::Done => "ok".into(),
            StageOutcome::Skipped(why) => format!("skipped: {why}"),
        }
    }
}

/// A run in progress. The corpus is loaded at most once and shared by the
/// stages that need activations.
pub struct Session {
    pub config: RunConfig,
    corpus: OnceLock<(ActivationStore, Vec<ExampleMeta>)>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

impl Session {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
        Ok(Session {
            config,
            corpus: OnceLock::new(),
        })
    }

    fn settings(&self) -> &AnalysisSettings {
        &self.config.settings
    }

    fn corpus(&self) -> Result<&(ActivationStore, Vec<ExampleMeta>)> {
        if let Some(c) = self.corpus.get() {
            return Ok(c);
        }
        let loaded = load_corpus(&self.config.corpus_dir)?;
        Ok(self.corpus.get_or_init(|| loaded))
    }

    fn meta(&self) -> Result<Vec<ExampleMeta>> {
        match self.corpus.get() {
            Some((_, m)) => Ok(m.clone()),
            None => read_meta(&self.config.corpus_dir.join("meta.jsonl")),
        }
    }

    fn artifact<T: serde::de::DeserializeOwned>(&self, name: &str, producer: Stage) -> Result<T> {
        let path = self.config.out(name);
        if !path.exists() {
            return Err(Error::Config(format!(
                "{} not found; run the {} stage first",
                path.display(),
                producer.name()
            )));
        }
        read_json(&path)
    }

    fn split(&self, meta: &[ExampleMeta]) -> Result<Split> {
        let path = self.config.out(SPLIT);
        let s = self.settings();
        let split = make_split(meta, s.split_ratio, s.stratify_key, s.seed)?;
        if path.exists() {
            let stored: Split = read_json(&path)?;
            if stored != split {
                return Err(Error::Config(format!(
                    "{} was written with different split settings; use a fresh output directory",
                    path.display()
                )));
            }
        } else {
            write_json(&path, &split)?;
        }
        Ok(split)
    }

    fn targets(&self) -> Vec<Target> {
        let s = self.settings();
        let mut out = vec![s.target];
        for &t in &s.report_targets {
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }

    pub fn run_stage(&self, stage: Stage) -> Result<StageOutcome> {
        log::info!("stage {}: start", stage.name());
        let res = match stage {
            Stage::Sweep => self.sweep(),
            Stage::Controls => self.controls(),
            Stage::Extract => self.extract(),
            Stage::Annotate => self.annotate(),
            Stage::Stats => self.stats(),
            Stage::Report => self.report().map(|_| StageOutcome::Done),
        };
        let status = match &res {
            Ok(o) => o.status(),
            Err(e) => format!("failed: {e}"),
        };
        log::info!("stage {}: {status}", stage.name());
        self.record_status(stage, status)?;
        res
    }

    fn record_status(&self, stage: Stage, status: String) -> Result<()> {
        let path = self.config.out(STATUS);
        let mut all: BTreeMap<String, String> = if path.exists() { read_json(&path)? } else { BTreeMap::new() };
        all.insert(stage.name().to_string(), status);
        write_json(&path, &all)
    }

    fn sweep(&self) -> Result<StageOutcome> {
        let (store, meta) = self.corpus()?;
        let split = self.split(meta)?;
        let probe_cfg = &self.settings().probe;
        let mut targets = Vec::new();
        for target in self.targets() {
            let stage = |e: Error| e.in_stage("sweep");
            let sweep = layer_sweep(store, meta, target, &split, probe_cfg).map_err(stage)?;
            let model =
                fit_centroid_probe(store, meta, target, &split.train_ids, sweep.best_layer, probe_cfg).map_err(stage)?;
            let holdout_acc = holdout_eval(&model, store, meta, &split).map_err(stage)?;
            let probe_file = format!("{}_L{}.json", target.name(), sweep.best_layer);
            write_json(&self.config.out(PROBES_DIR).join(&probe_file), &model)?;
            log::info!(
                "{}: best layer {} cv {:.3} holdout {:.3}",
                target.name(),
                sweep.best_layer,
                sweep.best_mean_acc,
                holdout_acc
            );
            targets.push(TargetSweep {
                sweep,
                holdout_acc,
                probe_file,
            });
        }
        write_json(&self.config.out(SWEEP), &SweepArtifact { targets })?;
        Ok(StageOutcome::Done)
    }

    fn controls(&self) -> Result<StageOutcome> {
        let sweep: SweepArtifact = self.artifact(SWEEP, Stage::Sweep)?;
        let (store, meta) = self.corpus()?;
        let split = self.split(meta)?;
        let s = self.settings();
        let stage = |e: Error| e.in_stage("controls");
        let mut notices = Vec::new();
        let mut targets = Vec::new();
        for target in self.targets() {
            let ts = sweep
                .get(target)
                .ok_or_else(|| Error::Config(format!("sweep.json has no {} target; rerun sweep", target.name())))?;
            let layer = ts.sweep.best_layer;
            let (ids, y) = labelled_ids(meta, &split.train_ids, target);
            let x = store.centroid_matrix(&ids, layer).map_err(stage)?;
            let perm_seed = derive_seed(s.seed, 1 + Target::ALL.iter().position(|&t| t == target).unwrap() as u64);
            let shuffle = shuffled_baseline(&x, &y, &ts.sweep.class_order, &s.probe, s.n_permutations, perm_seed)
                .map_err(stage)?;
            let sky = match skyline(meta, target, &split, &s.probe, s.tfidf) {
                Ok(r) => Some(r),
                Err(e) => {
                    notices.push(format!("{} skyline: skipped ({e})", target.name()));
                    None
                }
            };
            targets.push(TargetControls {
                target,
                layer,
                cv_mean_acc: ts.sweep.best_mean_acc,
                selectivity: selectivity(ts.sweep.best_mean_acc, shuffle.mean_shuffled_acc),
                shuffle,
                skyline: sky,
            });
        }
        let primary = sweep
            .get(s.target)
            .ok_or_else(|| Error::Config("sweep.json lacks the primary target".into()))?;
        let transfer = match cross_family_transfer(store, meta, s.target, primary.sweep.best_layer, &s.probe) {
            Ok(t) => Some(t),
            Err(e) => {
                notices.push(format!("cross-family transfer: skipped ({e})"));
                None
            }
        };
        for n in &notices {
            log::warn!("{n}");
        }
        write_json(
            &self.config.out(CONTROLS),
            &ControlsArtifact {
                targets,
                transfer,
                notices,
            },
        )?;
        Ok(StageOutcome::Done)
    }

    fn extract(&self) -> Result<StageOutcome> {
        let (store, meta) = self.corpus()?;
        let split = self.split(meta)?;
        let s = self.settings();
        if let Some(&bad) = s.extraction.sampled_layers.iter().find(|&&l| l >= store.n_layers()) {
            return Err(Error::Config(format!(
                "sampled layer {bad} out of range for a {}-layer corpus",
                store.n_layers()
            )));
        }
        let out = extract(store, meta, &split, s.target, &s.extraction, &s.probe).map_err(|e| e.in_stage("extract"))?;
        write_jsonl(&self.config.out(WINDOWS), &out.windows)?;
        write_jsonl(&self.config.out(SINGLES), &out.singles)?;
        write_json(
            &self.config.out(EXTRACTION),
            &ExtractionArtifact {
                target: s.target,
                config: out.config,
                thresholds: out.thresholds,
                per_layer: out.per_layer,
                n_windows: out.windows.len(),
                n_singles: out.singles.len(),
            },
        )?;
        Ok(StageOutcome::Done)
    }

    fn lexicons(&self) -> Result<LexiconSet> {
        match &self.config.lexicon_dir {
            Some(dir) => LexiconSet::load_dir(dir),
            None => Ok(LexiconSet::builtin()),
        }
    }

    fn annotate(&self) -> Result<StageOutcome> {
        let tokens_path = self.config.tokens_path();
        if !tokens_path.exists() {
            for stale in [ANNOTATED, SENTENCES, ANNOTATION] {
                let p = self.config.out(stale);
                if p.exists() {
                    fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
                }
            }
            return Ok(StageOutcome::Skipped("no annotations".into()));
        }
        let lexicons = self.lexicons()?;
        let tokens = read_tokens(&tokens_path)?;
        let ann = annotate(&tokens, &lexicons, &self.settings().annotation).map_err(|e| e.in_stage("annotate"))?;
        write_jsonl(&self.config.out(ANNOTATED), &ann.tokens)?;
        write_jsonl(&self.config.out(SENTENCES), &ann.sentences)?;
        write_json(
            &self.config.out(ANNOTATION),
            &AnnotationArtifact {
                tokens_sha256: sha256_file(&tokens_path)?,
                lexicon_sha256: lexicons.hashes.clone(),
                n_tokens: ann.tokens.len(),
                n_tokens_ok: ann.tokens.iter().filter(|t| t.quality == Quality::Ok).count(),
                n_sentences: ann.sentences.len(),
            },
        )?;
        Ok(StageOutcome::Done)
    }

    fn load_annotations(&self) -> Result<Option<Annotations>> {
        let path = self.config.out(ANNOTATED);
        if !path.exists() {
            return Ok(None);
        }
        let tokens: Vec<AnnotatedToken> = read_jsonl(&path)?;
        let sentences: Vec<SentenceRecord> = read_jsonl(&self.config.out(SENTENCES))?;
        Ok(Some(Annotations { tokens, sentences }))
    }

    fn stats(&self) -> Result<StageOutcome> {
        let extraction: ExtractionArtifact = self.artifact(EXTRACTION, Stage::Extract)?;
        let windows: Vec<WindowRecord> = read_jsonl(&self.config.out(WINDOWS))?;
        let singles: Vec<TokenSelection> = read_jsonl(&self.config.out(SINGLES))?;
        let meta = self.meta()?;
        let annotations = self.load_annotations()?;
        let report = run_battery(
            &windows,
            &singles,
            &meta,
            annotations.as_ref(),
            &extraction.config.sampled_layers,
            &self.settings().stats,
        )
        .map_err(|e| e.in_stage("stats"))?;
        write_json(&self.config.out(STATS), &report)?;
        Ok(StageOutcome::Done)
    }

    fn provenance(&self, annotation: Option<&AnnotationArtifact>, extraction: &ExtractionArtifact) -> Result<Provenance> {
        let meta_path = self.config.corpus_dir.join("meta.jsonl");
        let meta_sha256 = sha256_file(&meta_path)?;
        let meta = self.meta()?;
        let mut acts = Sha256::new();
        for m in &meta {
            let p = self.config.corpus_dir.join(format!("{}.actd", m.example_id));
            acts.update(m.example_id.as_bytes());
            acts.update(sha256_file(&p)?.as_bytes());
        }
        let activations_sha256 = hex::encode(acts.finalize());
        let settings_json = serde_json::to_string(&self.config.settings).map_err(|e| Error::json("settings", e))?;
        let run_id = match &self.config.run_id {
            Some(id) => id.clone(),
            None => {
                let mut h = Sha256::new();
                h.update(settings_json.as_bytes());
                h.update(meta_sha256.as_bytes());
                h.update(activations_sha256.as_bytes());
                if let Some(a) = annotation {
                    h.update(a.tokens_sha256.as_bytes());
                    for v in a.lexicon_sha256.values() {
                        h.update(v.as_bytes());
                    }
                }
                format!("run-{}", &hex::encode(h.finalize())[..12])
            }
        };
        Ok(Provenance {
            run_id,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            meta_sha256,
            activations_sha256,
            n_examples: meta.len(),
            tokens_sha256: annotation.map(|a| a.tokens_sha256.clone()),
            lexicon_sha256: annotation.map(|a| a.lexicon_sha256.clone()),
            seed: self.settings().seed,
            probe_seed: self.settings().probe.seed,
            thresholds: extraction.thresholds,
            settings: self.config.settings.clone(),
        })
    }

    fn report(&self) -> Result<Report> {
        let sweep: SweepArtifact = self.artifact(SWEEP, Stage::Sweep)?;
        let controls: Option<ControlsArtifact> = self.optional(CONTROLS)?;
        let extraction: ExtractionArtifact = self.artifact(EXTRACTION, Stage::Extract)?;
        let stats: StatsReport = self.artifact(STATS, Stage::Stats)?;
        let annotation: Option<AnnotationArtifact> = self.optional(ANNOTATION)?;
        let status: BTreeMap<String, String> = self.optional(STATUS)?.unwrap_or_default();
        let meta = self.meta()?;
        let provenance = self.provenance(annotation.as_ref(), &extraction)?;
        let inputs = ReportInputs {
            meta: &meta,
            sweep: &sweep,
            controls: controls.as_ref(),
            extraction: &extraction,
            stats: &stats,
            stage_status: &status,
            provenance,
        };
        let report = build_report(&inputs);
        emit_report(&report, &inputs, &self.config.out_dir)?;
        Ok(report)
    }

    fn optional<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<Option<T>> {
        let p = self.config.out(name);
        if p.exists() {
            read_json(&p).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// Run every stage not in `skip`, in order, and return the report.
pub fn run_pipeline(config: RunConfig, skip: &[Stage]) -> Result<Report> {
    let session = Session::new(config)?;
    for stage in Stage::ALL {
        if stage == Stage::Report {
            continue;
        }
        if skip.contains(&stage) {
            session.record_status(stage, "skipped: by request".into())?;
            continue;
        }
        session.run_stage(stage)?;
    }
    let report = session.report();
    session.record_status(
        Stage::Report,
        match &report {
            Ok(_) => "ok".into(),
            Err(e) => format!("failed: {e}"),
        },
    )?;
    report
}
