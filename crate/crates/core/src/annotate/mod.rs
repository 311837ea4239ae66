//! Mapping of Universal Dependencies token records onto the structural
//! schema, stance flags, semantic domains, and quality codes.

pub mod fixture;
mod lexicon;
mod quality;
mod sentence;
mod structure;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::TokenRecord;
use crate::error::{Error, Result};
use crate::par;

pub use lexicon::{parse_lexicon, LexiconSet, LEXICON_FILES, MODAL_CLOSED_LIST};
pub use quality::{quality_filter, QualityOutcome, QualityRule};
pub use sentence::{sentence_baseline, Position, SentenceRecord};
pub use structure::{classify_structure, HeadRef, SentenceView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PhraseType {
    Nominal,
    Verbal,
    Adjectival,
    Adverbial,
    Function,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModifierStructure {
    PreModifier,
    PostModifier,
    Head,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClauseSlot {
    Subject,
    Object,
    Predicate,
    Adverbial,
    Modifier,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PredicateType {
    Verbal,
    Nominal,
    Adjectival,
    NonPredicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Domain {
    Technical,
    Theoretical,
    Sociocultural,
    Pedagogical,
    ResearchMethods,
    General,
}

impl Domain {
    /// Lexicon-backed domains, highest priority first.
    pub const PRIORITY: [Domain; 5] = [
        Domain::Technical,
        Domain::Theoretical,
        Domain::Sociocultural,
        Domain::Pedagogical,
        Domain::ResearchMethods,
    ];
    pub const ALL: [Domain; 6] = [
        Domain::Technical,
        Domain::Theoretical,
        Domain::Sociocultural,
        Domain::Pedagogical,
        Domain::ResearchMethods,
        Domain::General,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Quality {
    Ok,
    Artefact,
    LowConfidence,
    NeedsAdjudication,
}

macro_rules! screaming_display {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let v = serde_json::to_value(self).map_err(|_| fmt::Error)?;
                f.write_str(v.as_str().unwrap_or_default())
            }
        }
    )*};
}
screaming_display!(PhraseType, ModifierStructure, ClauseSlot, PredicateType, Domain, Quality);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructuralLabels {
    pub phrase_type: PhraseType,
    pub modifier_structure: ModifierStructure,
    pub clause_slot: ClauseSlot,
    pub predicate_type: PredicateType,
}

impl StructuralLabels {
    /// Labels given to tokens whose attachment cannot be interpreted.
    pub const OTHER: StructuralLabels = StructuralLabels {
        phrase_type: PhraseType::Other,
        modifier_structure: ModifierStructure::None,
        clause_slot: ClauseSlot::Other,
        predicate_type: PredicateType::NonPredicate,
    };
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StanceFlags {
    pub hedge: bool,
    pub booster: bool,
    pub modal: bool,
    pub passive: bool,
}

impl StanceFlags {
    pub fn or(self, other: StanceFlags) -> StanceFlags {
        StanceFlags {
            hedge: self.hedge || other.hedge,
            booster: self.booster || other.booster,
            modal: self.modal || other.modal,
            passive: self.passive || other.passive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedToken {
    #[serde(flatten)]
    pub token: TokenRecord,
    #[serde(flatten)]
    pub labels: StructuralLabels,
    #[serde(flatten)]
    pub stance: StanceFlags,
    pub domain: Domain,
    pub quality: Quality,
    pub quality_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationConfig {
    pub rules: Vec<QualityRule>,
}

impl Default for AnnotationConfig {
    fn default() -> Self {
        AnnotationConfig {
            rules: QualityRule::DEFAULT_ORDER.to_vec(),
        }
    }
}

pub fn stance_flags(token: &TokenRecord, view: &SentenceView<'_>, lexicons: &LexiconSet) -> StanceFlags {
    let lemma = token.lemma.to_lowercase();
    let passive = token.feats.get("Voice").is_some_and(|v| v == "Pass")
        || matches!(token.deprel.as_str(), "nsubj:pass" | "aux:pass" | "csubj:pass")
        || view.children(token.token_index).any(|c| c.deprel == "aux:pass");
    StanceFlags {
        hedge: lexicons.hedges.contains(&lemma),
        booster: lexicons.boosters.contains(&lemma),
        modal: lexicons.modals.contains(&lemma) && matches!(token.upos.as_str(), "AUX" | "VERB"),
        passive,
    }
}

pub fn assign_domain(lemma: &str, lexicons: &LexiconSet) -> Domain {
    let lemma = lemma.to_lowercase();
    lexicons
        .domains
        .iter()
        .find(|(_, set)| set.contains(&lemma))
        .map(|(d, _)| *d)
        .unwrap_or(Domain::General)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    pub tokens: Vec<AnnotatedToken>,
    pub sentences: Vec<SentenceRecord>,
}

impl Annotations {
    /// Lookup by (example_id, token_index).
    pub fn index(&self) -> BTreeMap<(&str, usize), &AnnotatedToken> {
        self.tokens
            .iter()
            .map(|t| ((t.token.example_id.as_str(), t.token.token_index), t))
            .collect()
    }
}

/// Group tokens into sentences keyed by (example_id, sent_index), each sorted
/// by token_index. Duplicate token indices within an example are rejected.
pub fn group_sentences(tokens: &[TokenRecord]) -> Result<Vec<Vec<TokenRecord>>> {
    let mut seen = BTreeMap::new();
    let mut groups: BTreeMap<(&str, usize), Vec<TokenRecord>> = BTreeMap::new();
    for t in tokens {
        if seen.insert((t.example_id.as_str(), t.token_index), ()).is_some() {
            return Err(Error::InvalidMeta {
                example_id: t.example_id.clone(),
                detail: format!("duplicate token_index {}", t.token_index),
            });
        }
        groups.entry((t.example_id.as_str(), t.sent_index)).or_default().push(t.clone());
    }
    Ok(groups
        .into_values()
        .map(|mut s| {
            s.sort_by_key(|t| t.token_index);
            s
        })
        .collect())
}

fn annotate_sentence(sentence: &[TokenRecord], lexicons: &LexiconSet, config: &AnnotationConfig) -> Vec<AnnotatedToken> {
    let view = SentenceView::new(sentence);
    sentence
        .iter()
        .map(|tok| {
            let labels = view.classify(tok);
            let outcome = quality_filter(tok, labels, &view, &config.rules);
            AnnotatedToken {
                token: tok.clone(),
                labels: outcome.labels,
                stance: stance_flags(tok, &view, lexicons),
                domain: assign_domain(&tok.lemma, lexicons),
                quality: outcome.quality,
                quality_reason: outcome.reason,
            }
        })
        .collect()
}

/// Annotate every token and build the sentence baseline. Output tokens are
/// ordered by (example_id, sent_index, token_index) regardless of input order.
pub fn annotate(tokens: &[TokenRecord], lexicons: &LexiconSet, config: &AnnotationConfig) -> Result<Annotations> {
    let sentences = group_sentences(tokens)?;
    let per_sentence = par::map_slice(&sentences, |s| annotate_sentence(s, lexicons, config));
    let sentence_records = sentence_baseline(&per_sentence);
    Ok(Annotations {
        tokens: per_sentence.into_iter().flatten().collect(),
        sentences: sentence_records,
    })
}
