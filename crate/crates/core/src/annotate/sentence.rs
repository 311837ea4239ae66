use serde::{Deserialize, Serialize};

use super::{AnnotatedToken, Quality, StanceFlags, StructuralLabels};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Position {
    Opening,
    Middle,
    Closing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub example_id: String,
    pub sent_index: usize,
    pub n_tokens: usize,
    pub root_token_index: Option<usize>,
    pub root_upos: Option<String>,
    /// Structural labels of the root; null when the sentence has no single root.
    pub root: Option<StructuralLabels>,
    pub position: Position,
    #[serde(flatten)]
    pub stance: StanceFlags,
    pub quality: Quality,
    pub quality_reason: Option<String>,
}

/// One record per sentence. `sentences` holds each sentence's annotated
/// tokens, grouped and ordered by (example_id, sent_index).
pub fn sentence_baseline(sentences: &[Vec<AnnotatedToken>]) -> Vec<SentenceRecord> {
    let mut out: Vec<SentenceRecord> = Vec::with_capacity(sentences.len());
    for (i, sent) in sentences.iter().enumerate() {
        let Some(first) = sent.first() else { continue };
        let example_id = &first.token.example_id;
        let opens = i == 0 || sentences[i - 1].first().map(|t| &t.token.example_id) != Some(example_id);
        let closes = sentences.get(i + 1).and_then(|s| s.first()).map(|t| &t.token.example_id) != Some(example_id);
        let position = if opens {
            Position::Opening
        } else if closes {
            Position::Closing
        } else {
            Position::Middle
        };
        let roots: Vec<&AnnotatedToken> = sent.iter().filter(|t| t.token.head == -1).collect();
        let stance = sent.iter().fold(StanceFlags::default(), |acc, t| acc.or(t.stance));
        let (root_token_index, root_upos, root, quality, quality_reason) = if roots.len() == 1 {
            let r = roots[0];
            (Some(r.token.token_index), Some(r.token.upos.clone()), Some(r.labels), r.quality, r.quality_reason.clone())
        } else {
            (None, None, None, Quality::LowConfidence, Some(format!("sentence has {} roots", roots.len())))
        };
        out.push(SentenceRecord {
            example_id: example_id.clone(),
            sent_index: first.token.sent_index,
            n_tokens: sent.len(),
            root_token_index,
            root_upos,
            root,
            position,
            stance,
            quality,
            quality_reason,
        });
    }
    out
}
