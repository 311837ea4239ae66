use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{ActivationStore, ExampleMeta, TemplateFamily};
use crate::error::{Error, Result};
use crate::par;
use crate::probe::{fit_centroid_probe, labelled_ids, ProbeConfig, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferPair {
    pub train_family: TemplateFamily,
    pub test_family: TemplateFamily,
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    pub target: Target,
    pub layer: usize,
    pub pairs: Vec<TransferPair>,
}

impl TransferResult {
    pub fn min_accuracy(&self) -> f64 {
        self.pairs.iter().map(|p| p.accuracy).fold(f64::INFINITY, f64::min)
    }

    pub fn max_accuracy(&self) -> f64 {
        self.pairs.iter().map(|p| p.accuracy).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// The six ordered (train, test) family pairs.
pub fn family_pairs() -> Vec<(TemplateFamily, TemplateFamily)> {
    let mut out = Vec::with_capacity(6);
    for a in TemplateFamily::ALL {
        for b in TemplateFamily::ALL {
            if a != b {
                out.push((a, b));
            }
        }
    }
    out
}

/// Train a centroid probe on every example of one template family and score
/// it on every example of each other family. Each family must hold an equal,
/// nonzero-per-class number of examples of each class.
pub fn cross_family_transfer(
    store: &ActivationStore,
    meta: &[ExampleMeta],
    target: Target,
    layer: usize,
    config: &ProbeConfig,
) -> Result<TransferResult> {
    let n_classes = target.class_order().len();
    let mut family_ids: Vec<Vec<String>> = Vec::with_capacity(3);
    for fam in TemplateFamily::ALL {
        let ids: Vec<String> = meta
            .iter()
            .filter(|m| m.template_family == fam)
            .map(|m| m.example_id.clone())
            .collect();
        let (ids, y) = labelled_ids(meta, &ids, target);
        let mut counts = vec![0usize; n_classes];
        y.iter().for_each(|&c| counts[c] += 1);
        if counts.iter().any(|&c| c < 2) {
            return Err(Error::Insufficient(format!("family {fam} has fewer than 2 examples of some class: {counts:?}")));
        }
        if counts.iter().any(|&c| c != counts[0]) {
            return Err(Error::Insufficient(format!("family {fam} labels are not balanced: {counts:?}")));
        }
        family_ids.push(ids);
    }
    let pairs = family_pairs();
    let results = par::try_map_range(pairs.len(), |i| {
        let (train_f, test_f) = pairs[i];
        let train_ids = &family_ids[train_f as usize];
        let test_ids = &family_ids[test_f as usize];
        let train_set: BTreeSet<&String> = train_ids.iter().collect();
        if test_ids.iter().any(|id| train_set.contains(id)) {
            return Err(Error::Leakage(test_ids.iter().filter(|id| train_set.contains(id)).count()));
        }
        let model = fit_centroid_probe(store, meta, target, train_ids, layer, config)?;
        let (ids, y) = labelled_ids(meta, test_ids, target);
        let x = store.centroid_matrix(&ids, layer)?;
        Ok(TransferPair {
            train_family: train_f,
            test_family: test_f,
            accuracy: model.probe.accuracy(&x, &y)?,
            n_train: train_ids.len(),
            n_test: ids.len(),
        })
    })?;
    Ok(TransferResult {
        target,
        layer,
        pairs: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_distinct_ordered_pairs() {
        let p = family_pairs();
        assert_eq!(p.len(), 6);
        assert!(p.iter().all(|(a, b)| a != b));
        let set: BTreeSet<_> = p.iter().collect();
        assert_eq!(set.len(), 6);
    }
}
