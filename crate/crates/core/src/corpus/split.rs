use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::meta::ExampleMeta;
use crate::error::{Error, Result};
use crate::par::derive_seed;

/// Metadata field used to stratify a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratifyKey {
    Nationality,
    Medium,
    Role,
    Cohort,
    TemplateFamily,
}

impl StratifyKey {
    pub fn value(self, m: &ExampleMeta) -> String {
        match self {
            StratifyKey::Nationality => m.nationality.to_string(),
            StratifyKey::Medium => m.medium.to_string(),
            StratifyKey::Role => m.role.to_string(),
            StratifyKey::Cohort => m.cohort.clone(),
            StratifyKey::TemplateFamily => m.template_family.to_string(),
        }
    }
}

/// Fixed train/test partition of example ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
    pub ratio: f64,
    pub seed: u64,
    pub stratify_key: StratifyKey,
}

impl Split {
    pub fn is_train(&self, id: &str) -> bool {
        self.train_ids.contains(id)
    }

    pub fn is_test(&self, id: &str) -> bool {
        self.test_ids.contains(id)
    }
}

/// Stratified train/test split.
///
/// Within each class the ids are sorted, shuffled with a seeded generator, and
/// the first `floor(ratio * n_c)` go to train. The remaining train slots up to
/// `round(ratio * n)` are handed out one per class, largest classes first.
pub fn make_split(meta: &[ExampleMeta], ratio: f64, key: StratifyKey, seed: u64) -> Result<Split> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio must be in (0,1), got {ratio}")));
    }
    let mut classes: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for m in meta {
        classes.entry(key.value(m)).or_default().push(m.example_id.as_str());
    }
    if let Some((c, ids)) = classes.iter().find(|(_, ids)| ids.len() < 2) {
        return Err(Error::Stratify(format!("class {c:?} has {} member(s)", ids.len())));
    }

    let mut shuffled: Vec<(String, Vec<&str>, usize)> = Vec::with_capacity(classes.len());
    for (ci, (class, mut ids)) in classes.into_iter().enumerate() {
        ids.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, ci as u64));
        ids.shuffle(&mut rng);
        let take = (ratio * ids.len() as f64).floor() as usize;
        shuffled.push((class, ids, take));
    }

    let n = meta.len();
    let target = (ratio * n as f64).round() as usize;
    let mut assigned: usize = shuffled.iter().map(|c| c.2).sum();
    let mut order: Vec<usize> = (0..shuffled.len()).collect();
    order.sort_by(|&a, &b| shuffled[b].1.len().cmp(&shuffled[a].1.len()).then(a.cmp(&b)));
    'outer: while assigned < target {
        let before = assigned;
        for &ci in &order {
            if assigned >= target {
                break 'outer;
            }
            let c = &mut shuffled[ci];
            if c.2 + 1 < c.1.len() {
                c.2 += 1;
                assigned += 1;
            }
        }
        if assigned == before {
            break;
        }
    }

    let mut train_ids = BTreeSet::new();
    let mut test_ids = BTreeSet::new();
    for (_, ids, take) in &shuffled {
        for (i, id) in ids.iter().enumerate() {
            if i < *take {
                train_ids.insert(id.to_string());
            } else {
                test_ids.insert(id.to_string());
            }
        }
    }
    if train_ids.is_empty() || test_ids.is_empty() {
        return Err(Error::Stratify("split leaves train or test empty".into()));
    }
    Ok(Split {
        train_ids,
        test_ids,
        ratio,
        seed,
        stratify_key: key,
    })
}

/// Stratified k-fold assignment: returns the fold index of every row.
///
/// Rows of each class are shuffled with a seeded generator and dealt to folds
/// round-robin. Depends only on `(labels, k, seed)`, so two callers with the
/// same labels and seed share fold assignments.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Config(format!("k_folds must be >= 2, got {k}")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        by_class.entry(y).or_default().push(i);
    }
    if let Some((c, rows)) = by_class.iter().find(|(_, rows)| rows.len() < k) {
        return Err(Error::Stratify(format!(
            "class {c} has {} rows, fewer than k_folds = {k}",
            rows.len()
        )));
    }
    let mut fold = vec![0usize; labels.len()];
    // Continue the deal across classes so fold sizes stay within one.
    let mut next = 0usize;
    for (&c, rows) in by_class.iter_mut() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, c as u64));
        rows.shuffle(&mut rng);
        for &r in rows.iter() {
            fold[r] = next % k;
            next += 1;
        }
    }
    Ok(fold)
}
