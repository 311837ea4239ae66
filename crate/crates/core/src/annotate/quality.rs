use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::structure::{base_deprel, HeadRef, SentenceView};
use super::{ModifierStructure, Quality, StructuralLabels};
use crate::corpus::TokenRecord;

/// Prefix markers left by sub-word tokenisers.
const CONTINUATION_MARKERS: [&str; 4] = ["##", "@@", "\u{2581}", "\u{0120}"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityRule {
    DanglingHead,
    InvalidSurface,
    SubwordFragment,
    PunctuationOnly,
    EmptyLemma,
    RootCount,
    /// Re-resolves `conj` members against their first conjunct.
    CoordinationPropagation,
    MisclassifiedRoot,
    AdnominalPremodifier,
}

impl QualityRule {
    pub const DEFAULT_ORDER: [QualityRule; 9] = [
        QualityRule::DanglingHead,
        QualityRule::InvalidSurface,
        QualityRule::SubwordFragment,
        QualityRule::PunctuationOnly,
        QualityRule::EmptyLemma,
        QualityRule::RootCount,
        QualityRule::CoordinationPropagation,
        QualityRule::MisclassifiedRoot,
        QualityRule::AdnominalPremodifier,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityOutcome {
    pub quality: Quality,
    pub reason: Option<String>,
    /// Labels after any amendment made by the rules.
    pub labels: StructuralLabels,
}

enum Effect {
    Pass,
    Amend(StructuralLabels),
    Flag(Quality, String),
}

fn first_conjunct<'a>(tok: &'a TokenRecord, view: &SentenceView<'a>) -> Result<&'a TokenRecord, String> {
    let mut visited = BTreeSet::from([tok.token_index]);
    let mut cur = tok;
    while base_deprel(&cur.deprel) == "conj" {
        match view.head(cur) {
            HeadRef::Token(h) => {
                if !visited.insert(h.token_index) {
                    return Err("cyclic coordination chain".into());
                }
                cur = h;
            }
            HeadRef::Root => return Ok(cur),
            HeadRef::Dangling => return Err("coordination chain leaves the sentence".into()),
        }
    }
    Ok(cur)
}

fn apply(rule: QualityRule, tok: &TokenRecord, labels: StructuralLabels, view: &SentenceView<'_>) -> Effect {
    match rule {
        QualityRule::DanglingHead => {
            if view.head(tok) == HeadRef::Dangling {
                return Effect::Flag(Quality::Artefact, format!("dangling head {}", tok.head));
            }
        }
        QualityRule::InvalidSurface => {
            if tok.surface.is_empty() {
                return Effect::Flag(Quality::Artefact, "empty surface".into());
            }
            if tok.surface.chars().any(|c| c == '\u{FFFD}' || c.is_control()) {
                return Effect::Flag(Quality::Artefact, "undecodable surface".into());
            }
        }
        QualityRule::SubwordFragment => {
            let s = tok.surface.as_str();
            let stripped = CONTINUATION_MARKERS
                .iter()
                .find_map(|m| s.strip_prefix(m))
                .or_else(|| s.strip_suffix("@@"));
            if let Some(rest) = stripped {
                if !rest.chars().any(char::is_alphabetic) {
                    return Effect::Flag(Quality::Artefact, "sub-word fragment".into());
                }
            }
        }
        QualityRule::PunctuationOnly => {
            if !tok.surface.is_empty() && tok.surface.chars().all(|c| !c.is_alphanumeric() && !c.is_whitespace()) {
                return Effect::Flag(Quality::Artefact, "punctuation only".into());
            }
        }
        QualityRule::EmptyLemma => {
            if tok.lemma.trim().is_empty() || tok.lemma == "_" {
                return Effect::Flag(Quality::LowConfidence, "empty lemma".into());
            }
        }
        QualityRule::RootCount => {
            let n = view.root_count();
            if n != 1 {
                return Effect::Flag(Quality::LowConfidence, format!("sentence has {n} roots"));
            }
        }
        QualityRule::CoordinationPropagation => {
            if base_deprel(&tok.deprel) != "conj" {
                return Effect::Pass;
            }
            return match first_conjunct(tok, view) {
                Err(reason) => Effect::Flag(Quality::NeedsAdjudication, reason),
                Ok(first) if first.token_index == tok.token_index => Effect::Pass,
                Ok(first) => {
                    let head = view.head(first);
                    if matches!(head, HeadRef::Token(h) if h.token_index == tok.token_index) {
                        return Effect::Flag(Quality::NeedsAdjudication, "conjunct heads its own first conjunct".into());
                    }
                    Effect::Amend(view.classify_as(tok, &first.deprel, head))
                }
            };
        }
        QualityRule::MisclassifiedRoot => {
            let nominal_or_adj = matches!(tok.upos.as_str(), "NOUN" | "PROPN" | "PRON" | "ADJ");
            if tok.deprel == "root" && nominal_or_adj && !view.has_child(tok.token_index, "cop") {
                if let Some(c) = view
                    .children(tok.token_index)
                    .find(|c| matches!(c.deprel.as_str(), "obj" | "iobj" | "aux" | "aux:pass"))
                {
                    return Effect::Flag(
                        Quality::NeedsAdjudication,
                        format!("{} root with verbal dependent {}", tok.upos, c.deprel),
                    );
                }
            }
        }
        QualityRule::AdnominalPremodifier => {
            if labels.modifier_structure == ModifierStructure::PreModifier && base_deprel(&tok.deprel) == "acl" {
                return Effect::Flag(Quality::LowConfidence, "clausal adnominal before its head".into());
            }
        }
    }
    Effect::Pass
}

/// Run the ordered rule list. The first rule that flags the token decides
/// its quality; amending rules update the labels and evaluation continues.
pub fn quality_filter(
    token: &TokenRecord,
    labels: StructuralLabels,
    view: &SentenceView<'_>,
    rules: &[QualityRule],
) -> QualityOutcome {
    let mut labels = labels;
    for &rule in rules {
        match apply(rule, token, labels, view) {
            Effect::Pass => {}
            Effect::Amend(l) => labels = l,
            Effect::Flag(quality, reason) => {
                return QualityOutcome {
                    quality,
                    reason: Some(reason),
                    labels,
                }
            }
        }
    }
    QualityOutcome {
        quality: Quality::Ok,
        reason: None,
        labels,
    }
}
