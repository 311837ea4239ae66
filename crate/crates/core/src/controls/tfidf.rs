//! TF-IDF n-gram features for the surface-text skyline.
//!
//! Tokens are lowercased alphanumeric runs of at least `min_token_len`
//! characters; n-grams are built over the kept tokens. `tf` is the raw count,
//! `idf = ln((1 + N) / (1 + df)) + 1`, and each row is L2-normalised.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfidfConfig {
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub min_token_len: usize,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        Self {
            ngram_min: 1,
            ngram_max: 2,
            min_token_len: 2,
        }
    }
}

pub fn tokenize(text: &str, min_len: usize) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= min_len)
        .map(str::to_lowercase)
        .collect()
}

fn ngrams(tokens: &[String], lo: usize, hi: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in lo..=hi {
        if n == 0 || n > tokens.len() {
            continue;
        }
        out.extend(tokens.windows(n).map(|w| w.join(" ")));
    }
    out
}

/// A fitted vocabulary with per-term idf weights. Terms are indexed in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub config: TfidfConfig,
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
}

/// Sparse row: `(term index, weight)` sorted by term index.
pub type SparseRow = Vec<(usize, f64)>;

impl TfidfModel {
    pub fn fit<S: AsRef<str>>(texts: &[S], config: TfidfConfig) -> Result<Self> {
        if texts.is_empty() {
            return Err(Error::Insufficient("tf-idf needs at least one text".into()));
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for t in texts {
            let mut grams = ngrams(&tokenize(t.as_ref(), config.min_token_len), config.ngram_min, config.ngram_max);
            grams.sort_unstable();
            grams.dedup();
            for g in grams {
                *df.entry(g).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let n = texts.len() as f64;
        let idf = df.values().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
        let vocabulary = df.into_keys().enumerate().map(|(i, k)| (k, i)).collect();
        Ok(Self { config, vocabulary, idf })
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    /// L2-normalised tf-idf row. Out-of-vocabulary n-grams are dropped.
    pub fn transform_one(&self, text: &str) -> SparseRow {
        let c = &self.config;
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for g in ngrams(&tokenize(text, c.min_token_len), c.ngram_min, c.ngram_max) {
            if let Some(&i) = self.vocabulary.get(&g) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut row: SparseRow = counts.into_iter().map(|(i, tf)| (i, tf * self.idf[i])).collect();
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|(_, v)| *v /= norm);
        }
        row
    }

    pub fn transform<S: AsRef<str>>(&self, texts: &[S]) -> Vec<SparseRow> {
        texts.iter().map(|t| self.transform_one(t.as_ref())).collect()
    }

    pub fn transform_dense<S: AsRef<str>>(&self, texts: &[S]) -> Matrix {
        let mut m = Matrix::zeros(texts.len(), self.len());
        for (r, row) in self.transform(texts).into_iter().enumerate() {
            let out = m.row_mut(r);
            for (i, v) in row {
                out[i] = v;
            }
        }
        m
    }
}

/// Fit on `texts` and transform them.
pub fn tfidf_features<S: AsRef<str>>(texts: &[S], config: TfidfConfig) -> Result<(Vec<SparseRow>, TfidfModel)> {
    let model = TfidfModel::fit(texts, config)?;
    Ok((model.transform(texts), model))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weight(model: &TfidfModel, row: &SparseRow, term: &str) -> f64 {
        let i = model.vocabulary[term];
        row.iter().find(|(j, _)| *j == i).map_or(0.0, |(_, v)| *v)
    }

    #[test]
    fn hand_computed_two_docs() {
        let cfg = TfidfConfig { min_token_len: 1, ..Default::default() };
        let (rows, model) = tfidf_features(&["a b b", "a c"], cfg).unwrap();
        // df(a)=2 -> idf 1; df(b)=df(c)=1 and every bigram df 1 -> idf ln(3/2)+1.
        let idf1 = (1.5f64).ln() + 1.0;
        assert_eq!(model.idf[model.vocabulary["a"]], 1.0);
        assert!((model.idf[model.vocabulary["b"]] - idf1).abs() < 1e-15);
        // Row 1 before normalisation: a=1, b=2*idf1, "a b"=idf1, "b b"=idf1.
        let raw = [1.0, 2.0 * idf1, idf1, idf1];
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (term, r) in ["a", "b", "a b", "b b"].iter().zip(raw) {
            assert!((weight(&model, &rows[0], term) - r / norm).abs() < 1e-12, "{term}");
        }
        assert_eq!(weight(&model, &rows[0], "c"), 0.0);
        let sq: f64 = rows[1].iter().map(|(_, v)| v * v).sum();
        assert!((sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_document_is_tf_direction() {
        let (rows, model) = tfidf_features(&["alpha beta beta"], TfidfConfig::default()).unwrap();
        assert!(model.idf.iter().all(|&v| v == 1.0));
        // tf: alpha 1, beta 2, "alpha beta" 1, "beta beta" 1 -> norm sqrt(7)
        let s7 = 7f64.sqrt();
        assert!((weight(&model, &rows[0], "beta") - 2.0 / s7).abs() < 1e-12);
        assert!((weight(&model, &rows[0], "alpha beta") - 1.0 / s7).abs() < 1e-12);
    }

    #[test]
    fn unseen_tokens_ignored_and_default_filter() {
        let model = TfidfModel::fit(&["we study writing"], TfidfConfig::default()).unwrap();
        assert!(model.transform_one("zebra quagga").is_empty());
        assert_eq!(tokenize("A b-cd, EF9!", 2), vec!["cd", "ef9"]);
        assert!(matches!(TfidfModel::fit(&["a b c"], TfidfConfig::default()), Err(Error::EmptyVocabulary)));
    }
}
