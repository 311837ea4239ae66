use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::inference::{
    bonferroni, chi_square, fisher_exact, log_odds_tokens, mann_whitney, odds_ratio, ContingencyTable, EffectKind,
    EffectSize, LogOdds, MannWhitney, StatResult,
};
use crate::annotate::{
    AnnotatedToken, Annotations, ClauseSlot, Domain, ModifierStructure, PredicateType, Quality, SentenceRecord,
    StanceFlags,
};
use crate::corpus::{ExampleMeta, Medium, Nationality, Role};
use crate::error::{Error, Result};
use crate::extract::{TokenSelection, WindowRecord};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub alpha: f64,
    pub yates: bool,
    /// Stance flags of a window are true when any token in it carries the
    /// marker, instead of the focus token alone.
    pub window_stance: bool,
    /// Nationality class playing the paper's Chinese-persona role in the
    /// directional hypotheses; the other class plays the British role.
    pub chinese_class: Nationality,
    pub focus_domain: Domain,
    pub smoothing: f64,
    pub log_odds_top_k: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            alpha: 0.05,
            yates: false,
            window_stance: false,
            chinese_class: Nationality::A,
            focus_domain: Domain::Sociocultural,
            smoothing: 0.5,
            log_odds_top_k: 10,
        }
    }
}

impl StatsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0,1), got {}", self.alpha)));
        }
        if !(self.smoothing > 0.0) {
            return Err(Error::Config("smoothing must be positive".into()));
        }
        Ok(())
    }

    pub fn british_class(&self) -> Nationality {
        match self.chinese_class {
            Nationality::A => Nationality::B,
            Nationality::B => Nationality::A,
        }
    }
}

/// One probe-selected position joined with its annotation and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub example_id: String,
    pub layer: usize,
    pub score: f64,
    pub nationality: Nationality,
    pub medium: Medium,
    pub role: Role,
    pub token: AnnotatedToken,
    pub window_stance: Option<StanceFlags>,
}

impl Unit {
    pub fn stance(&self, window_mode: bool) -> StanceFlags {
        match (window_mode, self.window_stance) {
            (true, Some(w)) => w,
            _ => self.token.stance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub windows_raw: usize,
    pub windows_unannotated: usize,
    pub windows_kept: usize,
    pub singles_raw: usize,
    pub singles_unannotated: usize,
    pub singles_kept: usize,
    pub sentences_raw: usize,
    pub sentences_kept: usize,
    /// Kept counts split by nationality, `[A, B]`.
    pub windows_kept_by_class: [usize; 2],
    pub singles_kept_by_class: [usize; 2],
    pub sentences_kept_by_class: [usize; 2],
}

pub struct Units {
    pub windows: Vec<Unit>,
    pub singles: Vec<Unit>,
    pub counts: FilterCounts,
}

/// Join selections with annotations. Positions without an annotated token,
/// or whose token failed quality filtering, are dropped and counted.
pub fn build_units(
    windows: &[WindowRecord],
    singles: &[TokenSelection],
    meta: &[ExampleMeta],
    annotations: &Annotations,
) -> Result<Units> {
    let index = annotations.index();
    let by_id: HashMap<&str, &ExampleMeta> = meta.iter().map(|m| (m.example_id.as_str(), m)).collect();
    let mut counts = FilterCounts {
        windows_raw: windows.len(),
        singles_raw: singles.len(),
        sentences_raw: annotations.sentences.len(),
        sentences_kept: annotations.sentences.iter().filter(|s| s.quality == Quality::Ok).count(),
        ..Default::default()
    };
    let make = |id: &str, layer: usize, pos: usize, score: f64| -> Result<Option<Unit>> {
        let m = by_id.get(id).ok_or_else(|| Error::UnknownExample(id.to_string()))?;
        let Some(tok) = index.get(&(id, pos)) else { return Ok(None) };
        Ok(Some(Unit {
            example_id: id.to_string(),
            layer,
            score,
            nationality: m.nationality,
            medium: m.medium,
            role: m.role,
            token: (*tok).clone(),
            window_stance: None,
        }))
    };
    let mut w_units = Vec::new();
    for w in windows {
        match make(&w.example_id, w.layer, w.focus_index, w.focus_score)? {
            None => counts.windows_unannotated += 1,
            Some(mut u) => {
                if u.token.quality == Quality::Ok {
                    let stance = (w.start..=w.end)
                        .filter_map(|i| index.get(&(w.example_id.as_str(), i)))
                        .fold(StanceFlags::default(), |acc, t| acc.or(t.stance));
                    u.window_stance = Some(stance);
                    w_units.push(u);
                }
            }
        }
    }
    let mut s_units = Vec::new();
    for s in singles {
        match make(&s.example_id, s.layer, s.token_index, s.score)? {
            None => counts.singles_unannotated += 1,
            Some(u) if u.token.quality == Quality::Ok => s_units.push(u),
            Some(_) => {}
        }
    }
    counts.windows_kept = w_units.len();
    counts.singles_kept = s_units.len();
    for u in &w_units {
        counts.windows_kept_by_class[u.nationality as usize] += 1;
    }
    for u in &s_units {
        counts.singles_kept_by_class[u.nationality as usize] += 1;
    }
    for s in annotations.sentences.iter().filter(|s| s.quality == Quality::Ok) {
        if let Some(m) = by_id.get(s.example_id.as_str()) {
            counts.sentences_kept_by_class[m.nationality as usize] += 1;
        }
    }
    Ok(Units {
        windows: w_units,
        singles: s_units,
        counts,
    })
}

/// A 2x2 class-by-feature comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contrast {
    pub id: String,
    pub description: String,
    /// Class predicted to show the higher rate, when the test is directional.
    pub predicted_higher: Option<Nationality>,
    pub n_a: u64,
    pub n_b: u64,
    pub rate_a: f64,
    pub rate_b: f64,
    /// Odds of the feature in the British-role class over the Chinese-role class.
    pub odds_ratio: f64,
    pub result: StatResult,
}

fn rows_by_class<T>(items: &[T], class: impl Fn(&T) -> Nationality) -> [Vec<&T>; 2] {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for it in items {
        match class(it) {
            Nationality::A => a.push(it),
            Nationality::B => b.push(it),
        }
    }
    [a, b]
}

/// Chi-square on class x feature, falling back to Fisher's exact p when an
/// expected count is below 5.
fn binary_contrast<T>(
    id: &str,
    description: String,
    classes: &[Vec<&T>; 2],
    feature: impl Fn(&T) -> bool,
    config: &StatsConfig,
) -> Result<Contrast> {
    let [a, b] = classes;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Insufficient(format!("{id}: a class has no observations")));
    }
    let ay = a.iter().filter(|u| feature(u)).count() as u64;
    let by = b.iter().filter(|u| feature(u)).count() as u64;
    let (an, bn) = (a.len() as u64 - ay, b.len() as u64 - by);
    let table = ContingencyTable::two_by_two(ay, an, by, bn);
    let mut result = if ay + by == 0 || an + bn == 0 {
        let mut r = StatResult {
            test_name: "chi_square".into(),
            statistic: 0.0,
            df: Some(1),
            p_value: 1.0,
            effect_size: Some(EffectSize {
                kind: EffectKind::CramersV,
                value: 0.0,
            }),
            n: table.n(),
            p_adjusted: None,
            family_size: None,
            direction_confirmed: None,
            warnings: Vec::new(),
        };
        r.warnings.push("feature constant across all observations".into());
        r
    } else {
        let mut r = chi_square(&table, config.yates)?;
        if !r.warnings.is_empty() {
            r.p_value = fisher_exact(ay, an, by, bn)?;
            r.test_name = "fisher_exact".into();
        }
        r
    };
    let smoothing = if [ay, an, by, bn].contains(&0) {
        result.warnings.push(format!("zero cell; odds ratio smoothed by {}", config.smoothing));
        config.smoothing
    } else {
        0.0
    };
    // rows are [A, B]; orient the odds ratio British-role over Chinese-role
    let or_b_over_a = odds_ratio(by, bn, ay, an, smoothing)?;
    let odds_ratio = match config.british_class() {
        Nationality::B => or_b_over_a,
        Nationality::A => 1.0 / or_b_over_a,
    };
    Ok(Contrast {
        id: id.to_string(),
        description,
        predicted_higher: None,
        n_a: a.len() as u64,
        n_b: b.len() as u64,
        rate_a: ay as f64 / a.len() as f64,
        rate_b: by as f64 / b.len() as f64,
        odds_ratio,
        result,
    })
}

/// Apply Bonferroni within `family` and set direction flags on directional
/// members.
fn finish_family(family: &mut [Contrast], alpha: f64) {
    let ps: Vec<f64> = family.iter().map(|c| c.result.p_value).collect();
    let adj = bonferroni(&ps);
    let m = family.len();
    for (c, p) in family.iter_mut().zip(adj) {
        c.result.p_adjusted = Some(p);
        c.result.family_size = Some(m);
        if let Some(hi) = c.predicted_higher {
            let order_ok = match hi {
                Nationality::A => c.rate_a > c.rate_b,
                Nationality::B => c.rate_b > c.rate_a,
            };
            c.result.direction_confirmed = Some(order_ok && p < alpha);
        }
    }
}

type Feature = fn(&Unit, bool) -> bool;

fn hypothesis_specs(config: &StatsConfig) -> Vec<(&'static str, &'static str, Nationality, Feature)> {
    let zh = config.chinese_class;
    let gb = config.british_class();
    vec![
        ("pre_modifier", "pre-modifier", zh, |u, _| u.token.labels.modifier_structure == ModifierStructure::PreModifier),
        ("post_modifier", "post-modifier", gb, |u, _| u.token.labels.modifier_structure == ModifierStructure::PostModifier),
        ("nominal_predicate", "nominal predicate", zh, |u, _| u.token.labels.predicate_type == PredicateType::Nominal),
        ("adverbial_slot", "adverbial slot", gb, |u, _| u.token.labels.clause_slot == ClauseSlot::Adverbial),
        ("hedge", "hedge", gb, |u, w| u.stance(w).hedge),
    ]
}

/// The five directional hypotheses on one dataset, Bonferroni-corrected as
/// one family.
pub fn run_hypotheses(units: &[Unit], config: &StatsConfig) -> Result<Vec<Contrast>> {
    let classes = rows_by_class(units, |u| u.nationality);
    let mut out = Vec::new();
    for (id, name, hi, f) in hypothesis_specs(config) {
        let mut c = binary_contrast(id, format!("{hi} > {name}"), &classes, |u| f(u, config.window_stance), config)?;
        c.predicted_higher = Some(hi);
        out.push(c);
    }
    finish_family(&mut out, config.alpha);
    Ok(out)
}

type StanceSpec = (&'static str, fn(StanceFlags) -> bool);

/// Hedge, booster, modal and passive rates, Bonferroni-corrected as one
/// family. Directional (British-role higher) as in the hypotheses.
pub fn stance_family(units: &[Unit], config: &StatsConfig) -> Result<Vec<Contrast>> {
    let classes = rows_by_class(units, |u| u.nationality);
    let gb = config.british_class();
    let w = config.window_stance;
    let specs: [StanceSpec; 4] = [
        ("hedge", |s| s.hedge),
        ("booster", |s| s.booster),
        ("modal", |s| s.modal),
        ("passive", |s| s.passive),
    ];
    let mut out = Vec::new();
    for (id, f) in specs {
        let mut c = binary_contrast(id, format!("{gb} > {id}"), &classes, |u| f(u.stance(w)), config)?;
        c.predicted_higher = Some(gb);
        out.push(c);
    }
    finish_family(&mut out, config.alpha);
    Ok(out)
}

/// Structural variables tested against nationality.
pub const STRUCTURAL_VARIABLES: [&str; 5] = ["phrase_type", "modifier_structure", "clause_slot", "predicate_type", "upos"];

fn variable_value(t: &AnnotatedToken, var: &str) -> String {
    match var {
        "phrase_type" => t.labels.phrase_type.to_string(),
        "modifier_structure" => t.labels.modifier_structure.to_string(),
        "clause_slot" => t.labels.clause_slot.to_string(),
        "predicate_type" => t.labels.predicate_type.to_string(),
        "upos" => t.token.upos.clone(),
        "domain" => t.domain.to_string(),
        other => panic!("unknown variable {other}"),
    }
}

/// Cross-tabulate rows by `row` and columns by `col`; empty rows and
/// columns are dropped.
pub fn cross_tab<T>(
    items: &[T],
    row: impl Fn(&T) -> Option<String>,
    col: impl Fn(&T) -> String,
) -> Result<ContingencyTable> {
    let mut cells: BTreeMap<(String, String), u64> = BTreeMap::new();
    let mut rows = BTreeSet::new();
    let mut cols = BTreeSet::new();
    for it in items {
        let Some(r) = row(it) else { continue };
        let c = col(it);
        rows.insert(r.clone());
        cols.insert(c.clone());
        *cells.entry((r, c)).or_default() += 1;
    }
    let rows: Vec<String> = rows.into_iter().collect();
    let cols: Vec<String> = cols.into_iter().collect();
    if rows.len() < 2 {
        return Err(Error::Insufficient(format!("only {} row class present", rows.len())));
    }
    if cols.len() < 2 {
        return Err(Error::Insufficient("variable takes a single value".into()));
    }
    let counts = rows
        .iter()
        .map(|r| cols.iter().map(|c| cells.get(&(r.clone(), c.clone())).copied().unwrap_or(0)).collect())
        .collect();
    ContingencyTable::new(rows, cols, counts)
}

fn structural_tests(
    units: &[Unit],
    config: &StatsConfig,
    notices: &mut Vec<String>,
    label: &str,
) -> BTreeMap<String, Option<StatResult>> {
    STRUCTURAL_VARIABLES
        .iter()
        .map(|&var| {
            let res = cross_tab(units, |u| Some(u.nationality.to_string()), |u| variable_value(&u.token, var))
                .and_then(|t| chi_square(&t, config.yates));
            let res = match res {
                Ok(r) => Some(r),
                Err(e) => {
                    notices.push(format!("{label} {var}: skipped ({e})"));
                    None
                }
            };
            (var.to_string(), res)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainStats {
    /// Focus domain versus all others, by nationality.
    pub contrast: Option<Contrast>,
    /// Nationality by all six domains.
    pub full: Option<StatResult>,
}

fn domain_stats(units: &[Unit], config: &StatsConfig, notices: &mut Vec<String>, label: &str) -> DomainStats {
    let classes = rows_by_class(units, |u| u.nationality);
    let d = config.focus_domain;
    let contrast = binary_contrast("domain", format!("{d} rate"), &classes, |u| u.token.domain == d, config)
        .map_err(|e| notices.push(format!("{label} domain contrast: skipped ({e})")))
        .ok();
    let full = cross_tab(units, |u| Some(u.nationality.to_string()), |u| u.token.domain.to_string())
        .and_then(|t| chi_square(&t, config.yates))
        .map_err(|e| notices.push(format!("{label} domain table: skipped ({e})")))
        .ok();
    DomainStats { contrast, full }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_units: usize,
    pub structural: BTreeMap<String, Option<StatResult>>,
    pub hypotheses: Option<Vec<Contrast>>,
    pub stance: Option<Vec<Contrast>>,
    pub domain: DomainStats,
}

fn dataset_stats(units: &[Unit], config: &StatsConfig, notices: &mut Vec<String>, label: &str) -> DatasetStats {
    let hypotheses = run_hypotheses(units, config)
        .map_err(|e| notices.push(format!("{label} hypotheses: skipped ({e})")))
        .ok();
    let stance = stance_family(units, config)
        .map_err(|e| notices.push(format!("{label} stance: skipped ({e})")))
        .ok();
    DatasetStats {
        n_units: units.len(),
        structural: structural_tests(units, config, notices, label),
        hypotheses,
        stance,
        domain: domain_stats(units, config, notices, label),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfoundResult {
    pub id: String,
    pub description: String,
    pub subset_n: u64,
    pub result: StatResult,
}

/// Six subset tests separating nationality from medium and role: nationality
/// within EMI and within CMI, medium within each nationality (on phrase
/// type), and role against phrase type and modifier structure.
pub fn confound_suite(units: &[Unit], config: &StatsConfig) -> Result<Vec<ConfoundResult>> {
    type RowFn = Box<dyn Fn(&Unit) -> Option<String> + Sync>;
    let nat = |keep: Medium| -> RowFn { Box::new(move |u: &Unit| (u.medium == keep).then(|| u.nationality.to_string())) };
    let med = |keep: Nationality| -> RowFn {
        Box::new(move |u: &Unit| (u.nationality == keep && u.medium != Medium::None).then(|| u.medium.to_string()))
    };
    let role: fn() -> RowFn = || Box::new(|u: &Unit| Some(u.role.to_string()));
    let specs: Vec<(String, String, RowFn, &str)> = vec![
        ("nationality_within_emi".into(), "Nationality within EMI".into(), nat(Medium::Emi), "phrase_type"),
        ("nationality_within_cmi".into(), "Nationality within CMI".into(), nat(Medium::Cmi), "phrase_type"),
        ("medium_within_a".into(), format!("Medium within {}", Nationality::A), med(Nationality::A), "phrase_type"),
        ("medium_within_b".into(), format!("Medium within {}", Nationality::B), med(Nationality::B), "phrase_type"),
        ("role_phrase_type".into(), "Role -> phrase type".into(), role(), "phrase_type"),
        ("role_modifier_structure".into(), "Role -> modifier structure".into(), role(), "modifier_structure"),
    ];
    par::try_map_range(specs.len(), |i| {
        let (id, description, row, var) = &specs[i];
        let table = cross_tab(units, row, |u| variable_value(&u.token, var))
            .map_err(|e| Error::Insufficient(format!("{id}: {e}")))?;
        Ok(ConfoundResult {
            id: id.clone(),
            description: description.clone(),
            subset_n: table.n(),
            result: chi_square(&table, config.yates)?,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTrajectory {
    pub layer: usize,
    pub n_windows: usize,
    pub n_examples_a: usize,
    pub n_examples_b: usize,
    pub mean_score_a: Option<f64>,
    pub mean_score_b: Option<f64>,
    /// |mean signed focus score of A - that of B|.
    pub score_gap: Option<f64>,
    pub score_test: Option<MannWhitney>,
    pub variables: BTreeMap<String, Option<StatResult>>,
    pub domain: Option<DomainStats>,
    pub skipped: Option<String>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Per sampled layer: decision-score gap between classes over retained
/// windows, and (with annotations) structural and domain statistics.
pub fn layer_trajectory(
    windows: &[WindowRecord],
    meta: &[ExampleMeta],
    units: Option<&[Unit]>,
    layers: &[usize],
    config: &StatsConfig,
) -> Result<Vec<LayerTrajectory>> {
    let nat: HashMap<&str, Nationality> = meta.iter().map(|m| (m.example_id.as_str(), m.nationality)).collect();
    par::try_map_range(layers.len(), |i| {
        let layer = layers[i];
        let ws: Vec<&WindowRecord> = windows.iter().filter(|w| w.layer == layer).collect();
        let mut scores = [Vec::new(), Vec::new()];
        let mut examples = [BTreeSet::new(), BTreeSet::new()];
        for w in &ws {
            let c = *nat.get(w.example_id.as_str()).ok_or_else(|| Error::UnknownExample(w.example_id.clone()))? as usize;
            scores[c].push(w.focus_score);
            examples[c].insert(w.example_id.as_str());
        }
        let mut t = LayerTrajectory {
            layer,
            n_windows: ws.len(),
            n_examples_a: examples[0].len(),
            n_examples_b: examples[1].len(),
            mean_score_a: mean(&scores[0]),
            mean_score_b: mean(&scores[1]),
            score_gap: None,
            score_test: None,
            variables: BTreeMap::new(),
            domain: None,
            skipped: None,
        };
        if examples.iter().any(|e| e.len() < 2) {
            t.skipped = Some(format!(
                "fewer than 2 examples per class ({} / {})",
                examples[0].len(),
                examples[1].len()
            ));
            return Ok(t);
        }
        t.score_gap = Some((t.mean_score_a.unwrap() - t.mean_score_b.unwrap()).abs());
        t.score_test = Some(mann_whitney(&scores[0], &scores[1])?);
        if let Some(units) = units {
            let lu: Vec<Unit> = units.iter().filter(|u| u.layer == layer).cloned().collect();
            let mut notes = Vec::new();
            let label = format!("layer {layer}");
            t.variables = structural_tests(&lu, config, &mut notes, &label);
            t.domain = Some(domain_stats(&lu, config, &mut notes, &label));
            for n in notes {
                log::info!("{n}");
            }
        }
        Ok(t)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceBaselineStats {
    pub n_sentences: usize,
    pub n_kept: usize,
    pub structural: BTreeMap<String, Option<StatResult>>,
    pub stance: Option<Vec<Contrast>>,
    /// Position (opening/middle/closing) by marker presence, per marker.
    pub position_effects: BTreeMap<String, Option<StatResult>>,
}

/// Nationality tests on the sentence roots and sentence-level stance.
pub fn sentence_tests(
    sentences: &[SentenceRecord],
    meta: &[ExampleMeta],
    config: &StatsConfig,
    notices: &mut Vec<String>,
) -> Result<SentenceBaselineStats> {
    let nat: HashMap<&str, Nationality> = meta.iter().map(|m| (m.example_id.as_str(), m.nationality)).collect();
    let kept: Vec<(&SentenceRecord, Nationality)> = sentences
        .iter()
        .filter(|s| s.quality == Quality::Ok && s.root.is_some())
        .map(|s| {
            nat.get(s.example_id.as_str())
                .map(|&n| (s, n))
                .ok_or_else(|| Error::UnknownExample(s.example_id.clone()))
        })
        .collect::<Result<_>>()?;
    let mut structural = BTreeMap::new();
    for var in ["phrase_type", "predicate_type", "upos"] {
        let col = |(s, _): &(&SentenceRecord, Nationality)| {
            let r = s.root.unwrap();
            match var {
                "phrase_type" => r.phrase_type.to_string(),
                "predicate_type" => r.predicate_type.to_string(),
                _ => s.root_upos.clone().unwrap_or_default(),
            }
        };
        let res = cross_tab(&kept, |(_, n)| Some(n.to_string()), col).and_then(|t| chi_square(&t, config.yates));
        structural.insert(
            var.to_string(),
            res.map_err(|e| notices.push(format!("sentence {var}: skipped ({e})"))).ok(),
        );
    }
    let classes = rows_by_class(&kept, |(_, n)| *n);
    let gb = config.british_class();
    let specs: [StanceSpec; 4] = [
        ("hedge", |s| s.hedge),
        ("booster", |s| s.booster),
        ("modal", |s| s.modal),
        ("passive", |s| s.passive),
    ];
    let stance = specs
        .iter()
        .map(|(id, f)| {
            let mut c = binary_contrast(id, format!("{gb} > {id}"), &classes, |(s, _)| f(s.stance), config)?;
            c.predicted_higher = Some(gb);
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()
        .map(|mut v| {
            finish_family(&mut v, config.alpha);
            v
        })
        .map_err(|e| notices.push(format!("sentence stance: skipped ({e})")))
        .ok();
    let mut position_effects = BTreeMap::new();
    for (id, f) in specs {
        let res = cross_tab(&kept, |(s, _)| Some(format!("{:?}", s.position).to_uppercase()), |(s, _)| f(s.stance).to_string())
            .and_then(|t| chi_square(&t, config.yates));
        position_effects.insert(
            id.to_string(),
            res.map_err(|e| notices.push(format!("sentence position x {id}: skipped ({e})"))).ok(),
        );
    }
    Ok(SentenceBaselineStats {
        n_sentences: sentences.len(),
        n_kept: kept.len(),
        structural,
        stance,
        position_effects,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctiveLemmas {
    pub class_a: Vec<LogOdds>,
    pub class_b: Vec<LogOdds>,
}

pub fn distinctive_lemmas(units: &[Unit], config: &StatsConfig) -> Result<DistinctiveLemmas> {
    let mut counts = [BTreeMap::new(), BTreeMap::new()];
    for u in units {
        *counts[u.nationality as usize].entry(u.token.token.lemma.to_lowercase()).or_insert(0u64) += 1;
    }
    let ranked = log_odds_tokens(&counts[0], &counts[1], config.smoothing)?;
    let k = config.log_odds_top_k.min(ranked.len());
    Ok(DistinctiveLemmas {
        class_a: ranked[..k].to_vec(),
        class_b: ranked.iter().rev().take(k).cloned().collect(),
    })
}

/// Results that need annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedStats {
    pub counts: FilterCounts,
    pub windows: DatasetStats,
    pub singles: DatasetStats,
    pub confounds: Option<Vec<ConfoundResult>>,
    pub distinctive_lemmas: Option<DistinctiveLemmas>,
    pub sentence_baseline: Option<SentenceBaselineStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub config: StatsConfig,
    pub annotated: Option<AnnotatedStats>,
    pub trajectory: Vec<LayerTrajectory>,
    pub notices: Vec<String>,
}

/// Everything the statistics stage produces. Without annotations only the
/// score trajectory is computed.
pub fn run_battery(
    windows: &[WindowRecord],
    singles: &[TokenSelection],
    meta: &[ExampleMeta],
    annotations: Option<&Annotations>,
    layers: &[usize],
    config: &StatsConfig,
) -> Result<StatsReport> {
    config.validate()?;
    let mut notices = Vec::new();
    let units = annotations.map(|a| build_units(windows, singles, meta, a)).transpose()?;
    let trajectory = layer_trajectory(windows, meta, units.as_ref().map(|u| u.windows.as_slice()), layers, config)?;
    for t in &trajectory {
        if let Some(s) = &t.skipped {
            notices.push(format!("layer {}: skipped ({s})", t.layer));
        }
    }
    let annotated = match (annotations, units) {
        (Some(ann), Some(units)) => {
            let w = dataset_stats(&units.windows, config, &mut notices, "windows");
            let s = dataset_stats(&units.singles, config, &mut notices, "singles");
            let confounds = confound_suite(&units.windows, config)
                .map_err(|e| notices.push(format!("confounds: skipped ({e})")))
                .ok();
            let distinctive = distinctive_lemmas(&units.windows, config)
                .map_err(|e| notices.push(format!("distinctive lemmas: skipped ({e})")))
                .ok();
            let sentence_baseline = sentence_tests(&ann.sentences, meta, config, &mut notices)
                .map_err(|e| notices.push(format!("sentence baseline: skipped ({e})")))
                .ok();
            Some(AnnotatedStats {
                counts: units.counts,
                windows: w,
                singles: s,
                confounds,
                distinctive_lemmas: distinctive,
                sentence_baseline,
            })
        }
        _ => None,
    };
    Ok(StatsReport {
        config: config.clone(),
        annotated,
        trajectory,
        notices,
    })
}
