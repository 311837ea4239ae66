//! Layer sweep, held-out evaluation, and token-level scoring.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::cv::{cross_validate, CvResult};
use super::linear::{train_probe, LinearProbe, ProbeConfig};
use crate::corpus::{ActivationStore, ExampleMeta, Medium, Split};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par;

/// Attribute a probe is trained to recover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Target {
    Nationality,
    /// EMI vs CMI; personas without a medium are excluded.
    Medium,
    Role,
    Cohort6,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::Nationality, Target::Medium, Target::Role, Target::Cohort6];

    pub fn class_order(self) -> Vec<String> {
        let v: &[&str] = match self {
            Target::Nationality => &["A", "B"],
            Target::Medium => &["EMI", "CMI"],
            Target::Role => &["POSTDOC", "STUDENT"],
            Target::Cohort6 => &[
                "A_CMI_POSTDOC",
                "A_EMI_POSTDOC",
                "A_STUDENT",
                "B_CMI_POSTDOC",
                "B_EMI_POSTDOC",
                "B_STUDENT",
            ],
        };
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Class index of an example, or `None` if the example is outside this
    /// target's population.
    pub fn label(self, m: &ExampleMeta) -> Option<usize> {
        let key = match self {
            Target::Nationality => m.nationality.to_string(),
            Target::Medium => {
                if m.medium == Medium::None {
                    return None;
                }
                m.medium.to_string()
            }
            Target::Role => m.role.to_string(),
            Target::Cohort6 => m.cohort.clone(),
        };
        self.class_order().iter().position(|c| *c == key)
    }

    pub fn name(self) -> &'static str {
        match self {
            Target::Nationality => "nationality",
            Target::Medium => "medium",
            Target::Role => "role",
            Target::Cohort6 => "cohort6",
        }
    }
}

/// Ids (sorted) and labels of the examples in `ids` that belong to the target population.
pub fn labelled_ids<'a, I>(meta: &[ExampleMeta], ids: I, target: Target) -> (Vec<String>, Vec<usize>)
where
    I: IntoIterator<Item = &'a String>,
{
    let wanted: BTreeSet<&str> = ids.into_iter().map(String::as_str).collect();
    let mut rows: Vec<(String, usize)> = meta
        .iter()
        .filter(|m| wanted.contains(m.example_id.as_str()))
        .filter_map(|m| target.label(m).map(|y| (m.example_id.clone(), y)))
        .collect();
    rows.sort();
    rows.into_iter().unzip()
}

/// Whether a probe was fitted on example centroids or on token rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeUnit {
    Centroid,
    Token,
}

/// Serialisable probe artifact with its training provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    pub target: Target,
    pub layer: usize,
    pub unit: ProbeUnit,
    pub config: ProbeConfig,
    pub probe: LinearProbe,
    pub training_ids: Vec<String>,
    pub per_fold_acc: Option<Vec<f64>>,
}

impl ProbeModel {
    pub fn decision_score(&self, x: &[f64]) -> Result<f64> {
        self.probe.decision_score(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCv {
    pub layer: usize,
    pub cv: CvResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub target: Target,
    pub class_order: Vec<String>,
    pub train_ids: Vec<String>,
    pub per_layer: Vec<LayerCv>,
    pub best_layer: usize,
    pub best_mean_acc: f64,
    /// Majority-class rate of the training labels.
    pub chance_level: f64,
    /// `chance + 3σ` with σ the binomial standard error at the mean fold size.
    pub chance_upper: f64,
    pub no_layer_separable: bool,
}

impl SweepResult {
    pub fn at(&self, layer: usize) -> Option<&CvResult> {
        self.per_layer.iter().find(|l| l.layer == layer).map(|l| &l.cv)
    }
}

/// Cross-validate a centroid probe at every layer over the split's training
/// examples. The best layer is the argmax of mean accuracy, ties to the
/// lowest index.
pub fn layer_sweep(
    store: &ActivationStore,
    meta: &[ExampleMeta],
    target: Target,
    split: &Split,
    config: &ProbeConfig,
) -> Result<SweepResult> {
    let layers: Vec<usize> = (0..store.n_layers()).collect();
    layer_sweep_over(store, meta, target, split, config, &layers)
}

pub fn layer_sweep_over(
    store: &ActivationStore,
    meta: &[ExampleMeta],
    target: Target,
    split: &Split,
    config: &ProbeConfig,
    layers: &[usize],
) -> Result<SweepResult> {
    config.validate()?;
    if layers.is_empty() {
        return Err(Error::Config("layer sweep over an empty layer list".into()));
    }
    let (train_ids, y) = labelled_ids(meta, &split.train_ids, target);
    let class_order = target.class_order();
    let per_layer = par::try_map_range(layers.len(), |i| {
        let x = store.centroid_matrix(&train_ids, layers[i])?;
        let cv = cross_validate(&x, &y, &class_order, config)?;
        Ok::<_, Error>(LayerCv { layer: layers[i], cv })
    })?;
    let mut best = 0;
    for (i, l) in per_layer.iter().enumerate() {
        if l.cv.mean_acc > per_layer[best].cv.mean_acc {
            best = i;
        }
    }
    let mut counts = vec![0usize; class_order.len()];
    y.iter().for_each(|&c| counts[c] += 1);
    let chance_level = *counts.iter().max().unwrap() as f64 / y.len() as f64;
    let fold_size = y.len() as f64 / config.k_folds as f64;
    let chance_upper = chance_level + 3.0 * (chance_level * (1.0 - chance_level) / fold_size).sqrt();
    let best_mean_acc = per_layer[best].cv.mean_acc;
    Ok(SweepResult {
        target,
        class_order,
        train_ids,
        best_layer: per_layer[best].layer,
        best_mean_acc,
        per_layer,
        chance_level,
        chance_upper,
        no_layer_separable: best_mean_acc <= chance_upper,
    })
}

/// Train a centroid probe at `layer` on the target-eligible examples of `ids`.
pub fn fit_centroid_probe<'a, I>(
    store: &ActivationStore,
    meta: &[ExampleMeta],
    target: Target,
    ids: I,
    layer: usize,
    config: &ProbeConfig,
) -> Result<ProbeModel>
where
    I: IntoIterator<Item = &'a String>,
{
    let (ids, y) = labelled_ids(meta, ids, target);
    let x = store.centroid_matrix(&ids, layer)?;
    let probe = train_probe(&x, &y, &target.class_order(), config)?;
    Ok(ProbeModel {
        target,
        layer,
        unit: ProbeUnit::Centroid,
        config: *config,
        probe,
        training_ids: ids,
        per_fold_acc: None,
    })
}

/// Accuracy of a trained centroid probe on the split's test examples.
/// Fails if any test example was part of the probe's training set.
pub fn holdout_eval(model: &ProbeModel, store: &ActivationStore, meta: &[ExampleMeta], split: &Split) -> Result<f64> {
    let leaked = model
        .training_ids
        .iter()
        .filter(|id| split.test_ids.contains(*id))
        .count();
    if leaked > 0 {
        return Err(Error::Leakage(leaked));
    }
    let (ids, y) = labelled_ids(meta, &split.test_ids, model.target);
    if ids.is_empty() {
        return Err(Error::Insufficient("no test examples for target".into()));
    }
    let x = store.centroid_matrix(&ids, model.layer)?;
    model.probe.accuracy(&x, &y)
}

/// Train a token-level probe on every token row of the target-eligible
/// examples in `ids`, each row labelled with its example's class.
pub fn fit_token_probe<'a, I>(
    store: &ActivationStore,
    meta: &[ExampleMeta],
    target: Target,
    ids: I,
    layer: usize,
    config: &ProbeConfig,
) -> Result<ProbeModel>
where
    I: IntoIterator<Item = &'a String>,
{
    let (ids, labels) = labelled_ids(meta, ids, target);
    let d = store.hidden_dim();
    let mut data = Vec::new();
    let mut y = Vec::new();
    for (id, &label) in ids.iter().zip(&labels) {
        let block = store.layer_block(id, layer)?;
        data.extend(block.iter().map(|&v| v as f64));
        y.extend(std::iter::repeat_n(label, block.len() / d));
    }
    let x = Matrix::from_vec(y.len(), d, data)?;
    let probe = train_probe(&x, &y, &target.class_order(), config)?;
    Ok(ProbeModel {
        target,
        layer,
        unit: ProbeUnit::Token,
        config: *config,
        probe,
        training_ids: ids,
        per_fold_acc: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub example_id: String,
    pub layer: usize,
    pub token_index: usize,
    pub score: f64,
}

/// Signed decision score of every generated token, ordered by
/// `(example_id, token_index)`.
pub fn token_scores<S: AsRef<str> + Sync>(
    model: &ProbeModel,
    store: &ActivationStore,
    example_ids: &[S],
    layer: usize,
) -> Result<Vec<TokenScore>> {
    if model.layer != layer {
        return Err(Error::LayerMismatch {
            model: model.layer,
            requested: layer,
        });
    }
    if !model.probe.is_binary() {
        return Err(Error::NotBinary(model.probe.class_order.len()));
    }
    let mut ids: Vec<&str> = example_ids.iter().map(AsRef::as_ref).collect();
    ids.sort_unstable();
    let per_example = par::try_map_range(ids.len(), |i| {
        let m = store.token_matrix(ids[i], layer)?;
        (0..m.rows())
            .map(|t| {
                Ok(TokenScore {
                    example_id: ids[i].to_string(),
                    layer,
                    token_index: t,
                    score: model.probe.decision_score(m.row(t))?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_example.into_iter().flatten().collect())
}
