use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::tfidf::{TfidfConfig, TfidfModel};
use crate::corpus::{stratified_folds, ExampleMeta, Split};
use crate::error::{Error, Result};
use crate::par;
use crate::probe::{labelled_ids, train_probe, CvResult, ProbeConfig, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkylineResult {
    pub target: Target,
    pub cv: CvResult,
    pub holdout: f64,
    pub vocabulary_size: usize,
}

/// Surface-text skyline: the probe classifier on TF-IDF features of the
/// generated texts, under the same split and fold assignment as the
/// hidden-state probe. The vocabulary is refitted inside every fold.
pub fn skyline(
    meta: &[ExampleMeta],
    target: Target,
    split: &Split,
    config: &ProbeConfig,
    tfidf: TfidfConfig,
) -> Result<SkylineResult> {
    config.validate()?;
    let texts: HashMap<&str, &str> = meta.iter().map(|m| (m.example_id.as_str(), m.text.as_str())).collect();
    let text_of = |ids: &[String]| -> Vec<&str> { ids.iter().map(|id| texts[id.as_str()]).collect() };
    let class_order = target.class_order();

    let (train_ids, y) = labelled_ids(meta, &split.train_ids, target);
    let train_texts = text_of(&train_ids);
    let folds = stratified_folds(&y, config.k_folds, config.seed)?;
    let k = config.k_folds;
    let accs = par::try_map_range(k, |f| {
        let tr: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != f).collect();
        let va: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == f).collect();
        let tr_texts: Vec<&str> = tr.iter().map(|&i| train_texts[i]).collect();
        let va_texts: Vec<&str> = va.iter().map(|&i| train_texts[i]).collect();
        let vocab = TfidfModel::fit(&tr_texts, tfidf)?;
        let y_tr: Vec<usize> = tr.iter().map(|&i| y[i]).collect();
        let y_va: Vec<usize> = va.iter().map(|&i| y[i]).collect();
        let probe = train_probe(&vocab.transform_dense(&tr_texts), &y_tr, &class_order, config)?;
        probe.accuracy(&vocab.transform_dense(&va_texts), &y_va)
    })?;

    let vocab = TfidfModel::fit(&train_texts, tfidf)?;
    let probe = train_probe(&vocab.transform_dense(&train_texts), &y, &class_order, config)?;
    let (test_ids, y_test) = labelled_ids(meta, &split.test_ids, target);
    if test_ids.is_empty() {
        return Err(Error::Insufficient("skyline has no test examples".into()));
    }
    let holdout = probe.accuracy(&vocab.transform_dense(&text_of(&test_ids)), &y_test)?;
    Ok(SkylineResult {
        target,
        cv: CvResult::from_folds(accs),
        holdout,
        vocabulary_size: vocab.len(),
    })
}
