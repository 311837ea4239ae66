use proptest::prelude::*;

use persona_probe::corpus::{load_corpus, make_split, save_corpus, stratified_folds, StratifyKey};
use persona_probe::synth::{generate, SynthConfig};

#[test]
fn full_size_corpus_round_trips() {
    let (store, meta, _) = generate(&SynthConfig::planted_at(18, 1.0)).unwrap();
    assert_eq!((meta.len(), store.n_layers(), store.hidden_dim()), (270, 36, 64));
    let dir = tempfile::tempdir().unwrap();
    save_corpus(dir.path(), &store, &meta).unwrap();
    let (back, back_meta) = load_corpus(dir.path()).unwrap();
    assert_eq!(back, store);
    assert_eq!(back_meta, meta);
}

fn small(n: usize, seed: u64) -> SynthConfig {
    SynthConfig {
        n_examples: n,
        n_layers: 3,
        hidden_dim: 4,
        tokens_min: 2,
        tokens_max: 6,
        strength_profile: vec![0.0; 3],
        seed,
        ..SynthConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn save_then_load_is_identity(n in 12usize..40, seed in any::<u64>()) {
        let (store, meta, _) = generate(&small(n, seed)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_corpus(dir.path(), &store, &meta).unwrap();
        let (back, back_meta) = load_corpus(dir.path()).unwrap();
        prop_assert_eq!(back, store);
        prop_assert_eq!(back_meta, meta);
    }

    #[test]
    fn split_partitions_and_stratifies(n in 12usize..60, seed in any::<u64>(), ratio in 0.5f64..0.9) {
        let (_, meta, _) = generate(&small(n, 1)).unwrap();
        let split = make_split(&meta, ratio, StratifyKey::Nationality, seed).unwrap();
        prop_assert_eq!(split.train_ids.len() + split.test_ids.len(), meta.len());
        prop_assert!(split.train_ids.is_disjoint(&split.test_ids));
        prop_assert_eq!(split.train_ids.len(), (ratio * meta.len() as f64).round() as usize);
        let again = make_split(&meta, ratio, StratifyKey::Nationality, seed).unwrap();
        prop_assert_eq!(again, split);
    }

    #[test]
    fn folds_are_balanced_per_class(labels in prop::collection::vec(0usize..3, 10..80), k in 2usize..6, seed in any::<u64>()) {
        let small_class = (0..3).any(|c| (1..k).contains(&labels.iter().filter(|&&l| l == c).count()));
        let result = stratified_folds(&labels, k, seed);
        if small_class {
            prop_assert!(result.is_err());
            return Ok(());
        }
        let folds = result.unwrap();
        for class in 0..3 {
            let mut sizes = vec![0usize; k];
            for (f, _) in folds.iter().zip(&labels).filter(|(_, &l)| l == class) {
                sizes[*f] += 1;
            }
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
        }
    }
}
