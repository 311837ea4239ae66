use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One parsed token from `tokens.jsonl`. `token_index` is 0-based within the
/// example; `head` is the example-wide `token_index` of the head, `-1` for roots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub example_id: String,
    pub sent_index: usize,
    pub token_index: usize,
    pub surface: String,
    pub lemma: String,
    pub upos: String,
    pub head: i64,
    pub deprel: String,
    #[serde(default)]
    pub feats: BTreeMap<String, String>,
}

/// Read `tokens.jsonl`. Lines starting with `#` are header/comment records.
pub fn read_tokens(path: &Path) -> Result<Vec<TokenRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let rec: TokenRecord = serde_json::from_str(t)
            .map_err(|e| Error::json(format!("{}:{}", path.display(), lineno + 1), e))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_tokens(path: &Path, tokens: &[TokenRecord]) -> Result<()> {
    let mut buf = Vec::new();
    for t in tokens {
        serde_json::to_writer(&mut buf, t).map_err(|e| Error::json("tokens.jsonl", e))?;
        buf.push(b'\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}
