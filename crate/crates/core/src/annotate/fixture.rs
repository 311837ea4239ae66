//! Hand-annotated UD sentences in a compact tab-separated form, and tiling
//! of those sentences over a corpus so synthetic runs have annotations.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ExampleMeta, TokenRecord};
use crate::error::{Error, Result};
use crate::par::derive_seed;

/// The bundled fixture: 34 sentences covering every structural mapping,
/// all four stance markers and each quality rule.
pub const BUILTIN_FIXTURE: &str = include_str!("../../fixtures/golden_ud.tsv");

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSentence {
    pub name: String,
    /// Tokens with in-sentence indices and an empty `example_id`.
    pub tokens: Vec<TokenRecord>,
    /// Expected label code per token (last column).
    pub expected: Vec<String>,
}

fn bad(line: usize, detail: impl Into<String>) -> Error {
    Error::InvalidMeta {
        example_id: format!("fixture line {line}"),
        detail: detail.into(),
    }
}

/// Parse the fixture format. A line `# sNN ...` opens a sentence; other `#`
/// lines and blank lines are ignored. Token lines have seven tab-separated
/// columns: surface, lemma (`_` = empty), upos, head (-1 root), deprel,
/// feats (`_` or `K=V|K=V`), expected code.
pub fn parse_fixture(text: &str) -> Result<Vec<FixtureSentence>> {
    let mut out: Vec<FixtureSentence> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if let Some(rest) = line.strip_prefix("# s") {
            let num = rest.split_whitespace().next().unwrap_or_default();
            out.push(FixtureSentence {
                name: format!("s{num}"),
                tokens: Vec::new(),
                expected: Vec::new(),
            });
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 7 {
            return Err(bad(lineno, format!("expected 7 columns, found {}", cols.len())));
        }
        let s = out.last_mut().ok_or_else(|| bad(lineno, "token line before any sentence header"))?;
        let mut feats = BTreeMap::new();
        if cols[5] != "_" {
            for kv in cols[5].split('|') {
                let (k, v) = kv.split_once('=').ok_or_else(|| bad(lineno, format!("bad feature {kv:?}")))?;
                feats.insert(k.to_string(), v.to_string());
            }
        }
        s.tokens.push(TokenRecord {
            example_id: String::new(),
            sent_index: 0,
            token_index: s.tokens.len(),
            surface: cols[0].to_string(),
            lemma: if cols[1] == "_" { String::new() } else { cols[1].to_string() },
            upos: cols[2].to_string(),
            head: cols[3].parse().map_err(|_| bad(lineno, format!("bad head {:?}", cols[3])))?,
            deprel: cols[4].to_string(),
            feats,
        });
        s.expected.push(cols[6].to_string());
    }
    out.retain(|s| !s.tokens.is_empty());
    Ok(out)
}

/// Cover each example's token positions with fixture sentences in a seeded
/// per-example order, stopping when the next sentence would overrun
/// `n_generated_tokens`. Remaining positions stay unannotated.
pub fn tile_tokens(meta: &[ExampleMeta], sentences: &[FixtureSentence], seed: u64) -> Vec<TokenRecord> {
    let mut out = Vec::new();
    if sentences.is_empty() {
        return out;
    }
    for (i, m) in meta.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let mut order: Vec<usize> = (0..sentences.len()).collect();
        let mut offset = 0usize;
        let mut sent_index = 0usize;
        'fill: loop {
            order.shuffle(&mut rng);
            let mut placed = false;
            for &k in &order {
                let s = &sentences[k];
                if offset + s.tokens.len() > m.n_generated_tokens {
                    continue;
                }
                for t in &s.tokens {
                    out.push(TokenRecord {
                        example_id: m.example_id.clone(),
                        sent_index,
                        token_index: offset + t.token_index,
                        head: if t.head < 0 { t.head } else { t.head + offset as i64 },
                        ..t.clone()
                    });
                }
                offset += s.tokens.len();
                sent_index += 1;
                placed = true;
            }
            if !placed {
                break 'fill;
            }
        }
    }
    out
}
