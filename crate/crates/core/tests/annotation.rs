mod common;

use persona_probe::annotate::*;
use persona_probe::corpus::TokenRecord;
use proptest::prelude::*;

#[test]
fn golden_fixture_reproduces_exactly() {
    let (n_sent, n_tok, mismatches) = common::golden_mismatches();
    assert!(n_sent >= 30, "only {n_sent} sentences");
    assert!(n_tok > 150);
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}

#[test]
fn sentence_positions_and_stance() {
    let golden = common::golden_sentences();
    // Three fixture sentences re-housed as one example.
    let mut tokens = Vec::new();
    let mut offset = 0;
    for (sent, g) in golden.iter().take(3).enumerate() {
        for t in &g.tokens {
            let mut t = t.clone();
            t.example_id = "ex".into();
            t.sent_index = sent;
            t.token_index += offset;
            if t.head >= 0 {
                t.head += offset as i64;
            }
            tokens.push(t);
        }
        offset += g.tokens.len();
    }
    let ann = annotate(&tokens, &LexiconSet::builtin(), &AnnotationConfig::default()).unwrap();
    let pos: Vec<Position> = ann.sentences.iter().map(|s| s.position).collect();
    assert_eq!(pos, vec![Position::Opening, Position::Middle, Position::Closing]);
    let first = &ann.sentences[0];
    assert_eq!(first.root.unwrap().predicate_type, PredicateType::Verbal);
    assert!(first.stance.booster && !first.stance.passive);
    assert_eq!(ann.sentences[1].root.unwrap().predicate_type, PredicateType::Nominal);
    assert_eq!(first.quality, Quality::Ok);
}

#[test]
fn single_sentence_is_opening_and_multi_root_is_flagged() {
    let golden = common::golden_sentences();
    let s22 = golden.iter().find(|s| s.name == "s22").unwrap();
    let ann = annotate(&s22.tokens, &LexiconSet::builtin(), &AnnotationConfig::default()).unwrap();
    assert_eq!(ann.sentences.len(), 1);
    assert_eq!(ann.sentences[0].position, Position::Opening);
    assert_eq!(ann.sentences[0].quality, Quality::LowConfidence);
    assert!(ann.sentences[0].root.is_none());
}

#[test]
fn annotated_jsonl_round_trips() {
    let golden = common::golden_sentences();
    let ann = annotate(&golden[0].tokens, &LexiconSet::builtin(), &AnnotationConfig::default()).unwrap();
    let line = serde_json::to_string(&ann.tokens[1]).unwrap();
    assert!(line.contains("\"modifier_structure\":\"PRE_MODIFIER\""));
    assert!(line.contains("\"surface\":\"proposed\""));
    let back: AnnotatedToken = serde_json::from_str(&line).unwrap();
    assert_eq!(back, ann.tokens[1]);
    let s = serde_json::to_string(&ann.sentences[0]).unwrap();
    let back: SentenceRecord = serde_json::from_str(&s).unwrap();
    assert_eq!(back, ann.sentences[0]);
}

fn arb_sentence() -> impl Strategy<Value = Vec<TokenRecord>> {
    let upos = prop::sample::select(vec!["NOUN", "VERB", "ADJ", "ADV", "DET", "AUX", "PRON", "PUNCT", "NUM"]);
    let deprel = prop::sample::select(vec![
        "amod", "nummod", "compound", "compound:prt", "nmod", "acl", "acl:relcl", "appos", "advmod", "nsubj",
        "obj", "obl", "cop", "conj", "det", "aux:pass", "punct",
    ]);
    (2usize..12).prop_flat_map(move |n| {
        prop::collection::vec((upos.clone(), deprel.clone(), -2i64..(n as i64 + 2)), n).prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (u, d, h))| TokenRecord {
                    example_id: "p".into(),
                    sent_index: 0,
                    token_index: i,
                    surface: format!("w{i}"),
                    lemma: format!("w{i}"),
                    upos: u.into(),
                    head: h,
                    deprel: if h == -1 { "root".into() } else { d.into() },
                    feats: Default::default(),
                })
                .collect()
        })
    })
}

proptest! {
    #[test]
    fn pre_post_respects_order_and_input_order_is_irrelevant(sent in arb_sentence(), rot in 0usize..12) {
        let lex = LexiconSet::builtin();
        let cfg = AnnotationConfig { rules: vec![] };
        let ann = annotate(&sent, &lex, &cfg).unwrap();
        prop_assert_eq!(ann.tokens.len(), sent.len());
        for t in &ann.tokens {
            let h = t.token.head;
            match t.labels.modifier_structure {
                ModifierStructure::PreModifier => prop_assert!(h >= 0 && (t.token.token_index as i64) < h),
                ModifierStructure::PostModifier => prop_assert!(h >= 0 && (t.token.token_index as i64) > h),
                _ => {}
            }
        }
        let mut rotated = sent.clone();
        let k = rot % rotated.len();
        rotated.rotate_left(k);
        let full = annotate(&sent, &lex, &AnnotationConfig::default()).unwrap();
        let again = annotate(&rotated, &lex, &AnnotationConfig::default()).unwrap();
        prop_assert_eq!(full, again);
    }
}
