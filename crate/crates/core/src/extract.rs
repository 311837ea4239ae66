//! High-signal token extraction.
//!
//! Thresholds are order statistics of absolute token scores (singles) and of
//! window mean-absolute scores (windows), computed once at a reference layer
//! and then applied unchanged at every sampled layer. Windows never cross an
//! example boundary and are not padded, so the first and last
//! `(width - 1) / 2` tokens of an example are never focus anchors.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{ActivationStore, ExampleMeta, Split};
use crate::error::{Error, Result};
use crate::par;
use crate::probe::{fit_token_probe, token_scores, FitDiagnostics, ProbeConfig, Target, TokenScore};

/// How overlapping super-threshold windows are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMode {
    /// Greedy by descending score; drop any window sharing a token with a kept one.
    GlobalNonOverlap,
    /// Keep the best window per focus position only (windows may overlap).
    PerAnchor,
}

/// Which examples' scores feed threshold calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationSplit {
    Train,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub sampled_layers: Vec<usize>,
    pub reference_layer: usize,
    pub window_width: usize,
    pub single_quantile: f64,
    pub window_quantile: f64,
    pub overlap: OverlapMode,
    pub calibrate_on: CalibrationSplit,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            sampled_layers: vec![2, 10, 18, 24, 30, 33],
            reference_layer: 24,
            window_width: 5,
            single_quantile: 0.025,
            window_quantile: 0.05,
            overlap: OverlapMode::GlobalNonOverlap,
            calibrate_on: CalibrationSplit::Train,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.sampled_layers.contains(&self.reference_layer) {
            return Err(Error::Config("reference_layer must be one of the sampled layers".into()));
        }
        if self.window_width == 0 || self.window_width.is_multiple_of(2) {
            return Err(Error::Config("window_width must be odd".into()));
        }
        for q in [self.single_quantile, self.window_quantile] {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::Config(format!("quantile {q} outside (0,1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub example_id: String,
    pub layer: usize,
    pub focus_index: usize,
    /// Inclusive token span `[start, end]`.
    pub start: usize,
    pub end: usize,
    pub mean_abs_score: f64,
    pub token_scores: Vec<f64>,
    pub focus_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSelection {
    pub example_id: String,
    pub layer: usize,
    pub token_index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowCandidate {
    pub start: usize,
    pub width: usize,
    pub mean_abs_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tau_single: f64,
    pub tau_window: f64,
    pub reference_layer: usize,
    pub n_single_scores: usize,
    pub n_window_scores: usize,
}

pub fn mean_abs(scores: &[f64]) -> f64 {
    scores.iter().map(|s| s.abs()).sum::<f64>() / scores.len() as f64
}

/// The `ceil(q·n)`-th largest value: the smallest threshold that at most
/// `ceil(q·n)` values reach. No interpolation.
pub fn upper_order_statistic(values: &[f64], q: f64) -> Result<f64> {
    let n = values.len();
    if n == 0 || (n as f64) * q < 1.0 - 1e-9 {
        return Err(Error::Insufficient(format!(
            "{n} scores are too few for quantile {q} (need at least {})",
            (1.0 / q).ceil()
        )));
    }
    let k = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v[k - 1])
}

/// Every contiguous window of `width` scores; empty when the text is shorter.
pub fn window_scan(scores: &[f64], width: usize) -> Vec<WindowCandidate> {
    if width == 0 || scores.len() < width {
        return Vec::new();
    }
    (0..=scores.len() - width)
        .map(|start| WindowCandidate {
            start,
            width,
            mean_abs_score: mean_abs(&scores[start..start + width]),
        })
        .collect()
}

/// Keep candidates at or above `tau_window`, resolving overlaps per `mode`.
/// The result is sorted by start.
pub fn select_windows(candidates: &[WindowCandidate], tau_window: f64, mode: OverlapMode) -> Vec<WindowCandidate> {
    let mut above: Vec<WindowCandidate> = candidates
        .iter()
        .copied()
        .filter(|c| c.mean_abs_score >= tau_window)
        .collect();
    match mode {
        OverlapMode::PerAnchor => {
            // One candidate per start, hence per focus position.
            above.sort_by_key(|c| c.start);
            above
        }
        OverlapMode::GlobalNonOverlap => {
            above.sort_by(|a, b| b.mean_abs_score.total_cmp(&a.mean_abs_score).then(a.start.cmp(&b.start)));
            let mut kept: Vec<WindowCandidate> = Vec::new();
            for c in above {
                let clash = kept
                    .iter()
                    .any(|k| c.start < k.start + k.width && k.start < c.start + c.width);
                if !clash {
                    kept.push(c);
                }
            }
            kept.sort_by_key(|c| c.start);
            kept
        }
    }
}

pub fn window_record(example_id: &str, layer: usize, scores: &[f64], c: &WindowCandidate) -> WindowRecord {
    let token_scores = scores[c.start..c.start + c.width].to_vec();
    let focus_index = c.start + (c.width - 1) / 2;
    WindowRecord {
        example_id: example_id.to_string(),
        layer,
        focus_index,
        start: c.start,
        end: c.start + c.width - 1,
        mean_abs_score: mean_abs(&token_scores),
        focus_score: scores[focus_index],
        token_scores,
    }
}

/// Tokens with `|score| >= tau_single` that are not focus anchors of a
/// retained window; sorted by token index.
pub fn select_single_tokens(
    example_id: &str,
    layer: usize,
    scores: &[f64],
    tau_single: f64,
    retained: &[WindowRecord],
) -> Vec<TokenSelection> {
    let anchors: BTreeSet<usize> = retained.iter().map(|w| w.focus_index).collect();
    scores
        .iter()
        .enumerate()
        .filter(|(i, s)| s.abs() >= tau_single && !anchors.contains(i))
        .map(|(i, &s)| TokenSelection {
            example_id: example_id.to_string(),
            layer,
            token_index: i,
            score: s,
        })
        .collect()
}

/// Group flat token scores into per-example score vectors (ordered by id).
pub fn group_scores(scores: &[TokenScore]) -> BTreeMap<&str, Vec<f64>> {
    let mut out: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    for s in scores {
        out.entry(s.example_id.as_str()).or_default().push((s.token_index, s.score));
    }
    out.into_iter()
        .map(|(k, mut v)| {
            v.sort_by_key(|(i, _)| *i);
            (k, v.into_iter().map(|(_, s)| s).collect())
        })
        .collect()
}

/// Thresholds from per-example score vectors at the reference layer.
pub fn calibrate_thresholds(per_example: &[&[f64]], config: &ExtractionConfig) -> Result<Thresholds> {
    let singles: Vec<f64> = per_example.iter().flat_map(|s| s.iter().map(|v| v.abs())).collect();
    let windows: Vec<f64> = per_example
        .iter()
        .flat_map(|s| window_scan(s, config.window_width))
        .map(|c| c.mean_abs_score)
        .collect();
    Ok(Thresholds {
        tau_single: upper_order_statistic(&singles, config.single_quantile)?,
        tau_window: upper_order_statistic(&windows, config.window_quantile)?,
        reference_layer: config.reference_layer,
        n_single_scores: singles.len(),
        n_window_scores: windows.len(),
    })
}

/// Windows and singles for one (example, layer).
pub fn extract_example(
    example_id: &str,
    layer: usize,
    scores: &[f64],
    thresholds: &Thresholds,
    config: &ExtractionConfig,
) -> (Vec<WindowRecord>, Vec<TokenSelection>) {
    let candidates = window_scan(scores, config.window_width);
    let windows: Vec<WindowRecord> = select_windows(&candidates, thresholds.tau_window, config.overlap)
        .iter()
        .map(|c| window_record(example_id, layer, scores, c))
        .collect();
    let singles = select_single_tokens(example_id, layer, scores, thresholds.tau_single, &windows);
    (windows, singles)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerExtraction {
    pub layer: usize,
    pub tau_single: f64,
    pub tau_window: f64,
    pub n_windows: usize,
    pub n_singles: usize,
    pub probe_fit: FitDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionOutput {
    pub config: ExtractionConfig,
    pub thresholds: Thresholds,
    pub per_layer: Vec<LayerExtraction>,
    pub windows: Vec<WindowRecord>,
    pub singles: Vec<TokenSelection>,
}

/// Token probes at every sampled layer (trained on train-split token rows),
/// calibration at the reference layer, then windows and singles over all
/// examples at every sampled layer.
pub fn extract(
    store: &ActivationStore,
    meta: &[ExampleMeta],
    split: &Split,
    target: Target,
    config: &ExtractionConfig,
    probe_config: &ProbeConfig,
) -> Result<ExtractionOutput> {
    config.validate()?;
    let all_ids: Vec<String> = meta
        .iter()
        .filter(|m| target.label(m).is_some())
        .map(|m| m.example_id.clone())
        .collect();
    let layers = &config.sampled_layers;
    let scored = par::try_map_range(layers.len(), |i| {
        let model = fit_token_probe(store, meta, target, &split.train_ids, layers[i], probe_config)?;
        let scores = token_scores(&model, store, &all_ids, layers[i])?;
        Ok::<_, Error>((model.probe.fit, scores))
    })?;

    let ref_pos = layers.iter().position(|&l| l == config.reference_layer).unwrap();
    let ref_grouped = group_scores(&scored[ref_pos].1);
    let calib: Vec<&[f64]> = ref_grouped
        .iter()
        .filter(|(id, _)| config.calibrate_on == CalibrationSplit::All || split.is_train(id))
        .map(|(_, v)| v.as_slice())
        .collect();
    let thresholds = calibrate_thresholds(&calib, config)?;

    let mut windows = Vec::new();
    let mut singles = Vec::new();
    let mut per_layer = Vec::with_capacity(layers.len());
    for (&layer, (fit, scores)) in layers.iter().zip(&scored) {
        let grouped = group_scores(scores);
        let entries: Vec<(&str, &Vec<f64>)> = grouped.iter().map(|(k, v)| (*k, v)).collect();
        let parts = par::map_slice(&entries, |(id, s)| extract_example(id, layer, s, &thresholds, config));
        let (mut nw, mut ns) = (0, 0);
        for (w, s) in parts {
            nw += w.len();
            ns += s.len();
            windows.extend(w);
            singles.extend(s);
        }
        per_layer.push(LayerExtraction {
            layer,
            tau_single: thresholds.tau_single,
            tau_window: thresholds.tau_window,
            n_windows: nw,
            n_singles: ns,
            probe_fit: *fit,
        });
    }
    Ok(ExtractionOutput {
        config: config.clone(),
        thresholds,
        per_layer,
        windows,
        singles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistic_by_hand() {
        let v: Vec<f64> = (1..=200).map(f64::from).collect();
        assert_eq!(upper_order_statistic(&v, 0.025).unwrap(), 196.0);
        assert_eq!(upper_order_statistic(&[3.0; 40], 0.05).unwrap(), 3.0);
        assert!(upper_order_statistic(&[1.0; 10], 0.05).is_err());
    }

    #[test]
    fn scan_by_hand() {
        let w = window_scan(&[1.0, -1.0, 2.0, -2.0, 3.0], 5);
        assert_eq!(w.len(), 1);
        assert!((w[0].mean_abs_score - 1.8).abs() < 1e-15);
        assert!(window_scan(&[1.0; 4], 5).is_empty());
    }

    #[test]
    fn overlapping_keeps_best() {
        let c = [
            WindowCandidate { start: 0, width: 5, mean_abs_score: 0.7 },
            WindowCandidate { start: 2, width: 5, mean_abs_score: 0.9 },
        ];
        let kept = select_windows(&c, 0.5, OverlapMode::GlobalNonOverlap);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].start, 2);
        let disjoint = [
            WindowCandidate { start: 0, width: 5, mean_abs_score: 0.7 },
            WindowCandidate { start: 5, width: 5, mean_abs_score: 0.9 },
        ];
        assert_eq!(select_windows(&disjoint, 0.5, OverlapMode::GlobalNonOverlap).len(), 2);
        assert_eq!(select_windows(&c, 0.5, OverlapMode::PerAnchor).len(), 2);
    }

    #[test]
    fn singles_exclude_anchors() {
        let mut scores = vec![0.0; 12];
        scores[7] = 5.0;
        let s = select_single_tokens("e", 0, &scores, 1.0, &[]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].token_index, 7);
        let w = window_record("e", 0, &scores, &WindowCandidate { start: 5, width: 5, mean_abs_score: 1.0 });
        assert_eq!(w.focus_index, 7);
        assert!(select_single_tokens("e", 0, &scores, 1.0, &[w]).is_empty());
    }

    #[test]
    fn config_validation() {
        let mut c = ExtractionConfig::default();
        assert!(c.validate().is_ok());
        c.window_width = 4;
        assert!(c.validate().is_err());
        let c = ExtractionConfig { reference_layer: 5, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
