use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Domain;
use crate::error::{Error, Result};

/// Closed class of modal auxiliaries a modal lexicon may draw from.
pub const MODAL_CLOSED_LIST: [&str; 12] = [
    "can", "could", "may", "might", "must", "shall", "should", "will", "would", "ought", "need", "dare",
];

const BUILTIN: [&str; 8] = [
    include_str!("../../lexicons/hedges.txt"),
    include_str!("../../lexicons/boosters.txt"),
    include_str!("../../lexicons/modals.txt"),
    include_str!("../../lexicons/technical.txt"),
    include_str!("../../lexicons/theoretical.txt"),
    include_str!("../../lexicons/sociocultural.txt"),
    include_str!("../../lexicons/pedagogical.txt"),
    include_str!("../../lexicons/research_methods.txt"),
];

/// Lexicon file names, also the keys of [`LexiconSet::hashes`].
pub const LEXICON_FILES: [&str; 8] = [
    "hedges.txt",
    "boosters.txt",
    "modals.txt",
    "technical.txt",
    "theoretical.txt",
    "sociocultural.txt",
    "pedagogical.txt",
    "research_methods.txt",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconSet {
    pub hedges: BTreeSet<String>,
    pub boosters: BTreeSet<String>,
    pub modals: BTreeSet<String>,
    /// Domain lexicons in priority order.
    pub domains: Vec<(Domain, BTreeSet<String>)>,
    /// sha256 of each source file's bytes, keyed by file name.
    pub hashes: BTreeMap<String, String>,
}

pub fn parse_lexicon(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.to_lowercase())
        .collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl LexiconSet {
    /// The lexicons shipped with the crate.
    pub fn builtin() -> Self {
        let texts: Vec<(String, String)> = LEXICON_FILES
            .iter()
            .zip(BUILTIN)
            .map(|(n, s)| (n.to_string(), s.to_string()))
            .collect();
        Self::from_texts(&texts).expect("builtin lexicons are valid")
    }

    /// Load lexicons from a directory. Files missing from `dir` fall back to
    /// the builtin version.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::Config(format!("lexicon directory {} does not exist", dir.display())));
        }
        let mut texts = Vec::with_capacity(8);
        for (name, fallback) in LEXICON_FILES.iter().zip(BUILTIN) {
            let p: PathBuf = dir.join(name);
            let text = if p.exists() {
                fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?
            } else {
                log::info!("lexicon {name} not found in {}, using builtin", dir.display());
                fallback.to_string()
            };
            texts.push((name.to_string(), text));
        }
        Self::from_texts(&texts)
    }

    /// Build from (file name, contents) pairs in [`LEXICON_FILES`] order.
    pub fn from_texts(texts: &[(String, String)]) -> Result<Self> {
        if texts.len() != LEXICON_FILES.len() {
            return Err(Error::Config(format!("expected {} lexicons, got {}", LEXICON_FILES.len(), texts.len())));
        }
        let sets: Vec<BTreeSet<String>> = texts.iter().map(|(_, t)| parse_lexicon(t)).collect();
        let modals = sets[2].clone();
        if let Some(bad) = modals.iter().find(|m| !MODAL_CLOSED_LIST.contains(&m.as_str())) {
            return Err(Error::Config(format!("modal lexicon entry {bad:?} is not a modal auxiliary")));
        }
        let hashes = texts.iter().map(|(n, t)| (n.clone(), sha256_hex(t.as_bytes()))).collect();
        let domains = Domain::PRIORITY.iter().copied().zip(sets[3..].iter().cloned()).collect();
        Ok(LexiconSet {
            hedges: sets[0].clone(),
            boosters: sets[1].clone(),
            modals,
            domains,
            hashes,
        })
    }
}
