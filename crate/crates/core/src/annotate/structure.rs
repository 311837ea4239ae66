use std::collections::HashMap;

use super::{ClauseSlot, ModifierStructure, PhraseType, PredicateType, StructuralLabels};
use crate::corpus::TokenRecord;

/// Where a token's `head` field points within its sentence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeadRef<'a> {
    Root,
    Token(&'a TokenRecord),
    /// Outside the sentence, negative other than -1, or the token itself.
    Dangling,
}

/// A sentence's tokens with lookup by example-wide token index.
#[derive(Debug)]
pub struct SentenceView<'a> {
    pub tokens: &'a [TokenRecord],
    position: HashMap<usize, usize>,
}

pub fn base_deprel(deprel: &str) -> &str {
    deprel.split(':').next().unwrap_or(deprel)
}

pub fn is_nominal(upos: &str) -> bool {
    matches!(upos, "NOUN" | "PROPN" | "PRON")
}

pub fn phrase_type(upos: &str) -> PhraseType {
    match upos {
        "NOUN" | "PROPN" | "PRON" => PhraseType::Nominal,
        "VERB" => PhraseType::Verbal,
        "ADJ" => PhraseType::Adjectival,
        "ADV" => PhraseType::Adverbial,
        "ADP" | "DET" | "AUX" | "PART" | "CCONJ" | "SCONJ" | "PUNCT" | "SYM" => PhraseType::Function,
        _ => PhraseType::Other,
    }
}

/// Whether `deprel` attaching a dependent to `head` is a noun-phrase modifier.
pub fn is_modifier_deprel(deprel: &str, head: &TokenRecord) -> bool {
    match base_deprel(deprel) {
        "amod" | "nummod" | "nmod" | "acl" | "appos" => true,
        "compound" => deprel != "compound:prt",
        "advmod" => is_nominal(&head.upos),
        _ => false,
    }
}

impl<'a> SentenceView<'a> {
    pub fn new(tokens: &'a [TokenRecord]) -> Self {
        let position = tokens.iter().enumerate().map(|(i, t)| (t.token_index, i)).collect();
        SentenceView { tokens, position }
    }

    pub fn get(&self, token_index: usize) -> Option<&'a TokenRecord> {
        self.position.get(&token_index).map(|&i| &self.tokens[i])
    }

    pub fn head(&self, tok: &TokenRecord) -> HeadRef<'a> {
        match tok.head {
            -1 => HeadRef::Root,
            h if h < 0 => HeadRef::Dangling,
            h if h as usize == tok.token_index => HeadRef::Dangling,
            h => self.get(h as usize).map_or(HeadRef::Dangling, HeadRef::Token),
        }
    }

    pub fn children(&self, token_index: usize) -> impl Iterator<Item = &'a TokenRecord> + '_ {
        self.tokens
            .iter()
            .filter(move |c| c.head >= 0 && c.head as usize == token_index && c.token_index != token_index)
    }

    pub fn has_child(&self, token_index: usize, deprel: &str) -> bool {
        self.children(token_index).any(|c| c.deprel == deprel)
    }

    pub fn root_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.head == -1).count()
    }

    /// Labels from the token's own deprel and head.
    pub fn classify(&self, tok: &TokenRecord) -> StructuralLabels {
        self.classify_as(tok, &tok.deprel, self.head(tok))
    }

    /// Labels for `tok` as if it were attached to `head` with `deprel`.
    /// Used to re-resolve coordination members against their first conjunct.
    pub fn classify_as(&self, tok: &TokenRecord, deprel: &str, head: HeadRef<'_>) -> StructuralLabels {
        if head == HeadRef::Dangling {
            return StructuralLabels::OTHER;
        }
        let head_tok = match head {
            HeadRef::Token(h) => Some(h),
            _ => None,
        };
        let modifier_structure = match head_tok {
            Some(h) if is_modifier_deprel(deprel, h) => {
                if tok.token_index < h.token_index {
                    ModifierStructure::PreModifier
                } else {
                    ModifierStructure::PostModifier
                }
            }
            _ if self.children(tok.token_index).any(|c| is_modifier_deprel(&c.deprel, tok)) => ModifierStructure::Head,
            _ => ModifierStructure::None,
        };
        let has_cop = self.has_child(tok.token_index, "cop");
        let clause_slot = match base_deprel(deprel) {
            "nsubj" | "csubj" => ClauseSlot::Subject,
            "obj" | "iobj" | "ccomp" | "xcomp" => ClauseSlot::Object,
            "root" => {
                let clausal = matches!(tok.upos.as_str(), "VERB" | "AUX")
                    || has_cop
                    || self
                        .children(tok.token_index)
                        .any(|c| matches!(base_deprel(&c.deprel), "nsubj" | "csubj"));
                if clausal {
                    ClauseSlot::Predicate
                } else {
                    ClauseSlot::Other
                }
            }
            "advmod" if head_tok.is_some_and(|h| is_nominal(&h.upos)) => ClauseSlot::Modifier,
            "advmod" | "advcl" | "obl" => ClauseSlot::Adverbial,
            _ if head_tok.is_some_and(|h| is_modifier_deprel(deprel, h)) => ClauseSlot::Modifier,
            _ => ClauseSlot::Other,
        };
        let predicate_type = if deprel == "root" || has_cop {
            match tok.upos.as_str() {
                "VERB" | "AUX" => PredicateType::Verbal,
                "NOUN" | "PROPN" | "PRON" => PredicateType::Nominal,
                "ADJ" => PredicateType::Adjectival,
                _ => PredicateType::NonPredicate,
            }
        } else {
            PredicateType::NonPredicate
        };
        StructuralLabels {
            phrase_type: phrase_type(&tok.upos),
            modifier_structure,
            clause_slot,
            predicate_type,
        }
    }
}

/// Structural labels of `token` within its sentence.
pub fn classify_structure(token: &TokenRecord, sentence: &[TokenRecord]) -> StructuralLabels {
    SentenceView::new(sentence).classify(token)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(i: usize, upos: &str, head: i64, deprel: &str) -> TokenRecord {
        TokenRecord {
            example_id: "e".into(),
            sent_index: 0,
            token_index: i,
            surface: format!("w{i}"),
            lemma: format!("w{i}"),
            upos: upos.into(),
            head,
            deprel: deprel.into(),
            feats: Default::default(),
        }
    }

    #[test]
    fn amod_before_head_is_pre() {
        let s = vec![tok(0, "ADJ", 1, "amod"), tok(1, "NOUN", -1, "root")];
        let l = classify_structure(&s[0], &s);
        assert_eq!(l.phrase_type, PhraseType::Adjectival);
        assert_eq!(l.modifier_structure, ModifierStructure::PreModifier);
        assert_eq!(l.clause_slot, ClauseSlot::Modifier);
        assert_eq!(classify_structure(&s[1], &s).modifier_structure, ModifierStructure::Head);
    }

    #[test]
    fn cop_root_noun_is_nominal_predicate() {
        let s = vec![tok(0, "PRON", 2, "nsubj"), tok(1, "AUX", 2, "cop"), tok(2, "NOUN", -1, "root")];
        let l = classify_structure(&s[2], &s);
        assert_eq!(l.predicate_type, PredicateType::Nominal);
        assert_eq!(l.clause_slot, ClauseSlot::Predicate);
    }

    #[test]
    fn dangling_head_gives_other() {
        let s = vec![tok(0, "ADJ", 7, "amod"), tok(1, "NOUN", -1, "root")];
        assert_eq!(classify_structure(&s[0], &s), StructuralLabels::OTHER);
        let selfloop = vec![tok(0, "ADJ", 0, "amod")];
        assert_eq!(classify_structure(&selfloop[0], &selfloop), StructuralLabels::OTHER);
    }

    #[test]
    fn compound_prt_is_not_modifier() {
        let s = vec![tok(0, "VERB", -1, "root"), tok(1, "ADP", 0, "compound:prt")];
        assert_eq!(classify_structure(&s[1], &s).modifier_structure, ModifierStructure::None);
    }
}
