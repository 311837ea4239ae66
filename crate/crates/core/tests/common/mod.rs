#![allow(dead_code)]

use std::path::PathBuf;

use persona_probe::annotate::*;
use persona_probe::corpus::TokenRecord;

pub struct GoldenSentence {
    pub name: String,
    pub tokens: Vec<TokenRecord>,
    pub expected: Vec<String>,
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Parse the golden UD fixture. Each sentence becomes its own example so
/// token indices equal the in-sentence positions.
pub fn golden_sentences() -> Vec<GoldenSentence> {
    let text = std::fs::read_to_string(fixture("golden_ud.tsv")).unwrap();
    fixture::parse_fixture(&text)
        .unwrap()
        .into_iter()
        .map(|s| {
            let id = format!("gold-{}", s.name);
            let tokens = s
                .tokens
                .into_iter()
                .map(|t| TokenRecord { example_id: id.clone(), ..t })
                .collect();
            GoldenSentence { name: s.name, tokens, expected: s.expected }
        })
        .collect()
}

/// Compact code for an annotated token, in the fixture's notation.
pub fn code(t: &AnnotatedToken) -> String {
    let phrase = match t.labels.phrase_type {
        PhraseType::Nominal => "NOM",
        PhraseType::Verbal => "VRB",
        PhraseType::Adjectival => "ADJ",
        PhraseType::Adverbial => "ADV",
        PhraseType::Function => "FUN",
        PhraseType::Other => "OTH",
    };
    let modifier = match t.labels.modifier_structure {
        ModifierStructure::PreModifier => "PRE",
        ModifierStructure::PostModifier => "POST",
        ModifierStructure::Head => "HEAD",
        ModifierStructure::None => "-",
    };
    let slot = match t.labels.clause_slot {
        ClauseSlot::Subject => "SUBJ",
        ClauseSlot::Object => "OBJ",
        ClauseSlot::Predicate => "PRED",
        ClauseSlot::Adverbial => "ADVL",
        ClauseSlot::Modifier => "MOD",
        ClauseSlot::Other => "OTH",
    };
    let pred = match t.labels.predicate_type {
        PredicateType::Verbal => "VRB",
        PredicateType::Nominal => "NOM",
        PredicateType::Adjectival => "ADJ",
        PredicateType::NonPredicate => "-",
    };
    let mut stance = String::new();
    for (flag, c) in [(t.stance.hedge, 'h'), (t.stance.booster, 'b'), (t.stance.modal, 'm'), (t.stance.passive, 'p')] {
        if flag {
            stance.push(c);
        }
    }
    if stance.is_empty() {
        stance.push('-');
    }
    let domain = match t.domain {
        Domain::Technical => "TEC",
        Domain::Theoretical => "THE",
        Domain::Sociocultural => "SOC",
        Domain::Pedagogical => "PED",
        Domain::ResearchMethods => "RM",
        Domain::General => "GEN",
    };
    let quality = match t.quality {
        Quality::Ok => "OK",
        Quality::Artefact => "ART",
        Quality::LowConfidence => "LOW",
        Quality::NeedsAdjudication => "ADJ",
    };
    format!("{phrase} {modifier} {slot} {pred} {stance} {domain} {quality}")
}

/// Annotate the golden fixture and return (token count, mismatch descriptions).
pub fn golden_mismatches() -> (usize, usize, Vec<String>) {
    let sentences = golden_sentences();
    let all: Vec<TokenRecord> = sentences.iter().flat_map(|s| s.tokens.clone()).collect();
    let ann = annotate(&all, &LexiconSet::builtin(), &AnnotationConfig::default()).unwrap();
    let index = ann.index();
    let mut mismatches = Vec::new();
    for s in &sentences {
        for (t, want) in s.tokens.iter().zip(&s.expected) {
            let got = code(index[&(t.example_id.as_str(), t.token_index)]);
            if &got != want {
                mismatches.push(format!("{} token {} {:?}: expected {want:?}, got {got:?}", s.name, t.token_index, t.surface));
            }
        }
    }
    (sentences.len(), all.len(), mismatches)
}
