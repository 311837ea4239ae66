//! Report tables assembled from stage artifacts, and their JSON, markdown,
//! CSV and SVG renderings. Cells are copied or looked up from upstream
//! results; nothing here runs a statistic.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotate::Domain;
use crate::corpus::{ExampleMeta, Nationality};
use crate::error::{Error, Result};
use crate::extract::Thresholds;
use crate::pipeline::{
    write_json, AnalysisSettings, ControlsArtifact, ExtractionArtifact, SweepArtifact, REPORT_JSON, REPORT_MD,
};
use crate::probe::CvResult;
use crate::stats::{Contrast, EffectKind, StatResult, StatsReport};

pub const TABLE_IDS: [&str; 6] = [
    "T1_corpus",
    "T2_probe_controls",
    "T3_contrasts",
    "T4_confounds",
    "T5_sentence_baseline",
    "T6_trajectory",
];

pub const NO_ANNOTATIONS: &str = "skipped: no annotations";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Null,
    Num(f64),
    Text(String),
    MeanStd { mean: f64, std: f64 },
}

impl Cell {
    pub fn num(x: f64) -> Cell {
        if x.is_finite() {
            Cell::Num(x)
        } else {
            Cell::Null
        }
    }

    pub fn count(n: usize) -> Cell {
        Cell::Num(n as f64)
    }

    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    fn opt(x: Option<f64>) -> Cell {
        x.map_or(Cell::Null, Cell::num)
    }

    fn cv(cv: &CvResult) -> Cell {
        Cell::MeanStd {
            mean: cv.mean_acc,
            std: cv.std_acc,
        }
    }

    /// The cell with every number rounded to `digits` significant digits.
    pub fn rounded(&self, digits: usize) -> Cell {
        match self {
            Cell::Num(x) => Cell::Num(round_sig(*x, digits)),
            Cell::MeanStd { mean, std } => Cell::MeanStd {
                mean: round_sig(*mean, digits),
                std: round_sig(*std, digits),
            },
            other => other.clone(),
        }
    }
}

pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub id: String,
    pub title: String,
    /// `ok` or `skipped: <reason>`.
    pub status: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl Table {
    fn new(id: &str, title: &str, columns: &[&str]) -> Self {
        Table {
            id: id.into(),
            title: title.into(),
            status: "ok".into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "{}", self.id);
        self.rows.push(row);
    }

    fn skip(mut self, reason: &str) -> Self {
        self.status = reason.into();
        self.rows.clear();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub run_id: String,
    pub tool_version: String,
    pub meta_sha256: String,
    /// SHA-256 over the example ids and per-file hashes of the `.actd` files, in id order.
    pub activations_sha256: String,
    pub n_examples: usize,
    pub tokens_sha256: Option<String>,
    pub lexicon_sha256: Option<BTreeMap<String, String>>,
    pub seed: u64,
    pub probe_seed: u64,
    pub thresholds: Thresholds,
    pub settings: AnalysisSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub run_id: String,
    pub tables: BTreeMap<String, Table>,
    pub stage_status: BTreeMap<String, String>,
    pub notices: Vec<String>,
    /// SVG files written next to the report, relative to the output directory.
    pub charts: Vec<String>,
    pub provenance: Provenance,
}

pub struct ReportInputs<'a> {
    pub meta: &'a [ExampleMeta],
    pub sweep: &'a SweepArtifact,
    pub controls: Option<&'a ControlsArtifact>,
    pub extraction: &'a ExtractionArtifact,
    pub stats: &'a StatsReport,
    pub stage_status: &'a BTreeMap<String, String>,
    pub provenance: Provenance,
}

pub const CHART_ACCURACY: &str = "charts/accuracy_by_layer.svg";
pub const CHART_GAP: &str = "charts/score_gap_by_layer.svg";

fn class_note(stats: &StatsReport) -> String {
    let zh = stats.config.chinese_class;
    let gb = stats.config.british_class();
    format!("Class {zh} plays the Chinese-persona role and class {gb} the British-persona role in directional tests.")
}

fn by_class(meta: &[ExampleMeta], n: Nationality) -> usize {
    meta.iter().filter(|m| m.nationality == n).count()
}

fn t1(inp: &ReportInputs) -> Table {
    let mut t = Table::new(
        "T1_corpus",
        "Corpus and analysis datasets",
        &["Dataset", "N before filtering", "N after filtering", "A", "B", "Notes"],
    );
    let n = inp.meta.len();
    let cohorts: std::collections::BTreeSet<&str> = inp.meta.iter().map(|m| m.cohort.as_str()).collect();
    t.push(vec![
        Cell::text("Generated texts"),
        Cell::count(n),
        Cell::count(n),
        Cell::count(by_class(inp.meta, Nationality::A)),
        Cell::count(by_class(inp.meta, Nationality::B)),
        Cell::text(format!("{} cohorts", cohorts.len())),
    ]);
    let layers: Vec<String> = inp.extraction.config.sampled_layers.iter().map(|l| l.to_string()).collect();
    let counts = inp.stats.annotated.as_ref().map(|a| &a.counts);
    let after = |f: fn(&crate::stats::FilterCounts) -> (usize, [usize; 2])| match counts {
        Some(c) => {
            let (k, by) = f(c);
            [Cell::count(k), Cell::count(by[0]), Cell::count(by[1])]
        }
        None => [Cell::Null, Cell::Null, Cell::Null],
    };
    let [k, a, b] = after(|c| (c.windows_kept, c.windows_kept_by_class));
    t.push(vec![
        Cell::text(format!("{}-token windows", inp.extraction.config.window_width)),
        Cell::count(inp.extraction.n_windows),
        k,
        a,
        b,
        Cell::text(format!("Layers {}", layers.join(", "))),
    ]);
    let [k, a, b] = after(|c| (c.singles_kept, c.singles_kept_by_class));
    t.push(vec![
        Cell::text("Single tokens"),
        Cell::count(inp.extraction.n_singles),
        k,
        a,
        b,
        Cell::text("Excludes window anchors"),
    ]);
    match counts {
        Some(c) => {
            let [k, a, b] = after(|c| (c.sentences_kept, c.sentences_kept_by_class));
            t.push(vec![
                Cell::text("Sentence-level baseline"),
                Cell::count(c.sentences_raw),
                k,
                a,
                b,
                Cell::text("Full surface text"),
            ])
        }
        None => t.push(vec![
            Cell::text("Sentence-level baseline"),
            Cell::Null,
            Cell::Null,
            Cell::Null,
            Cell::Null,
            Cell::text(NO_ANNOTATIONS),
        ]),
    }
    for l in &inp.extraction.per_layer {
        t.push(vec![
            Cell::text(format!("Windows at layer {}", l.layer)),
            Cell::count(l.n_windows),
            Cell::Null,
            Cell::Null,
            Cell::Null,
            Cell::text(format!("{} single tokens", l.n_singles)),
        ]);
    }
    if counts.is_none() {
        t.notes.push("Counts after filtering need annotations.".into());
    }
    t
}

fn t2(inp: &ReportInputs) -> Table {
    let targets: Vec<_> = inp.sweep.targets.iter().map(|t| t.sweep.target).collect();
    let mut cols = vec!["Measure".to_string()];
    cols.extend(targets.iter().map(|t| {
        let n = t.name();
        n[..1].to_uppercase() + &n[1..]
    }));
    let mut t = Table {
        id: "T2_probe_controls".into(),
        title: "Probe performance and controls".into(),
        status: "ok".into(),
        columns: cols,
        rows: Vec::new(),
        notes: Vec::new(),
    };
    let controls = inp.controls;
    type RowFn<'a> = Box<dyn Fn(usize) -> Cell + 'a>;
    let sweep_row = |f: fn(&crate::pipeline::TargetSweep) -> Cell| -> RowFn {
        Box::new(move |i| f(&inp.sweep.targets[i]))
    };
    let ctrl_row = |f: fn(&crate::pipeline::TargetControls) -> Cell| -> RowFn {
        Box::new(move |i| {
            controls
                .and_then(|c| c.get(inp.sweep.targets[i].sweep.target))
                .map_or(Cell::Null, f)
        })
    };
    let transfer = controls.and_then(|c| c.transfer.as_ref());
    let transfer_row = |f: fn(&crate::controls::TransferResult) -> f64| -> RowFn {
        Box::new(move |i| match transfer {
            Some(tr) if tr.target == inp.sweep.targets[i].sweep.target && !tr.pairs.is_empty() => Cell::num(f(tr)),
            _ => Cell::Null,
        })
    };
    let rows: Vec<(&str, RowFn)> = vec![
        ("Best layer", sweep_row(|s| Cell::count(s.sweep.best_layer))),
        (
            "Cross-validated accuracy",
            sweep_row(|s| s.sweep.at(s.sweep.best_layer).map_or(Cell::Null, Cell::cv)),
        ),
        ("Held-out test accuracy", sweep_row(|s| Cell::num(s.holdout_acc))),
        ("Mean shuffled accuracy", ctrl_row(|c| Cell::num(c.shuffle.mean_shuffled_acc))),
        ("Selectivity", ctrl_row(|c| Cell::num(c.selectivity))),
        (
            "Surface-text skyline, CV",
            ctrl_row(|c| c.skyline.as_ref().map_or(Cell::Null, |s| Cell::cv(&s.cv))),
        ),
        (
            "Skyline, held-out test",
            ctrl_row(|c| c.skyline.as_ref().map_or(Cell::Null, |s| Cell::num(s.holdout))),
        ),
        ("Chance level", sweep_row(|s| Cell::num(s.sweep.chance_level))),
        ("Chance upper bound", sweep_row(|s| Cell::num(s.sweep.chance_upper))),
        ("Cross-family transfer, min", transfer_row(|t| t.min_accuracy())),
        ("Cross-family transfer, max", transfer_row(|t| t.max_accuracy())),
    ];
    for (name, f) in rows {
        let mut row = vec![Cell::text(name)];
        row.extend((0..targets.len()).map(&f));
        t.push(row);
    }
    if controls.is_none() {
        t.notes.push("Controls stage not run; control rows are null.".into());
    }
    if let Some(tr) = transfer {
        for p in &tr.pairs {
            t.notes.push(format!(
                "Transfer {} -> {} at layer {}: {} (train {}, test {})",
                p.train_family,
                p.test_family,
                tr.layer,
                round_sig(p.accuracy, 6),
                p.n_train,
                p.n_test
            ));
        }
    }
    if let Some(c) = controls {
        t.notes.extend(c.notices.iter().cloned());
    }
    for s in &inp.sweep.targets {
        if s.sweep.no_layer_separable {
            t.notes.push(format!("{}: no layer exceeds the chance upper bound", s.sweep.target.name()));
        }
    }
    t
}

fn effect(r: &StatResult, kind: EffectKind) -> Cell {
    match &r.effect_size {
        Some(e) if e.kind == kind => Cell::num(e.value),
        _ => Cell::Null,
    }
}

fn df(r: &StatResult) -> Cell {
    r.df.map_or(Cell::Null, Cell::count)
}

fn yes_no(b: Option<bool>) -> Cell {
    match b {
        Some(true) => Cell::text("yes"),
        Some(false) => Cell::text("no"),
        None => Cell::Null,
    }
}

const T3_COLS: [&str; 13] = [
    "Family",
    "Comparison",
    "Dataset",
    "Rate A",
    "Rate B",
    "Test",
    "Statistic",
    "df",
    "p",
    "Bonferroni p",
    "Cramer's V",
    "Odds ratio",
    "Direction confirmed",
];

fn contrast_row(family: &str, dataset: &str, c: &Contrast) -> Vec<Cell> {
    let r = &c.result;
    vec![
        Cell::text(family),
        Cell::text(c.description.clone()),
        Cell::text(dataset),
        Cell::num(c.rate_a),
        Cell::num(c.rate_b),
        Cell::text(r.test_name.clone()),
        Cell::num(r.statistic),
        df(r),
        Cell::num(r.p_value),
        Cell::opt(r.p_adjusted),
        effect(r, EffectKind::CramersV),
        Cell::num(c.odds_ratio),
        yes_no(r.direction_confirmed),
    ]
}

fn result_row(family: &str, name: &str, dataset: &str, r: Option<&StatResult>) -> Vec<Cell> {
    let mut row = vec![Cell::text(family), Cell::text(name), Cell::text(dataset), Cell::Null, Cell::Null];
    match r {
        Some(r) => row.extend([
            Cell::text(r.test_name.clone()),
            Cell::num(r.statistic),
            df(r),
            Cell::num(r.p_value),
            Cell::opt(r.p_adjusted),
            effect(r, EffectKind::CramersV),
            Cell::Null,
            yes_no(r.direction_confirmed),
        ]),
        None => row.extend(std::iter::repeat_n(Cell::Null, 8)),
    }
    row
}

fn t3(inp: &ReportInputs) -> Table {
    let t = Table::new("T3_contrasts", "Key nationality contrasts in probe-selected data", &T3_COLS);
    let Some(a) = &inp.stats.annotated else { return t.skip(NO_ANNOTATIONS) };
    let mut t = t;
    for (label, ds) in [("windows", &a.windows), ("singles", &a.singles)] {
        for c in ds.hypotheses.iter().flatten() {
            t.push(contrast_row("hypothesis", label, c));
        }
        for c in ds.stance.iter().flatten() {
            t.push(contrast_row("stance", label, c));
        }
        for (var, r) in &ds.structural {
            t.push(result_row("structural", var, label, r.as_ref()));
        }
    }
    t.notes.push(class_note(inp.stats));
    t.notes.push("Odds ratios are British-role odds over Chinese-role odds.".into());
    t
}

fn t4(inp: &ReportInputs) -> Table {
    let t = Table::new(
        "T4_confounds",
        "Confound-control summary",
        &["Comparison", "n", "Statistic", "df", "p", "Cramer's V", "Significant"],
    );
    let Some(a) = &inp.stats.annotated else { return t.skip(NO_ANNOTATIONS) };
    let Some(conf) = &a.confounds else { return t.skip("skipped: confound suite could not run") };
    let mut t = t;
    let alpha = inp.stats.config.alpha;
    for c in conf {
        let r = &c.result;
        t.push(vec![
            Cell::text(c.description.clone()),
            Cell::Num(c.subset_n as f64),
            Cell::num(r.statistic),
            df(r),
            Cell::num(r.p_value),
            effect(r, EffectKind::CramersV),
            yes_no(Some(r.p_value < alpha)),
        ]);
        for w in &r.warnings {
            t.notes.push(format!("{}: {w}", c.description));
        }
    }
    t.notes.push("Response variable is phrase type except for role -> modifier structure.".into());
    t
}

fn t5(inp: &ReportInputs) -> Table {
    let t = Table::new(
        "T5_sentence_baseline",
        "Sentence-level baseline summary",
        &["Measure", "Rate A", "Rate B", "Statistic", "df", "p", "Bonferroni p", "Cramer's V"],
    );
    let Some(a) = &inp.stats.annotated else { return t.skip(NO_ANNOTATIONS) };
    let Some(sb) = &a.sentence_baseline else { return t.skip("skipped: sentence baseline could not run") };
    let mut t = t;
    let stat_cells = |r: &StatResult| {
        [
            Cell::num(r.statistic),
            df(r),
            Cell::num(r.p_value),
            Cell::opt(r.p_adjusted),
            effect(r, EffectKind::CramersV),
        ]
    };
    let nulls = || std::iter::repeat_n(Cell::Null, 5);
    for (var, r) in &sb.structural {
        let mut row = vec![Cell::text(var.clone()), Cell::Null, Cell::Null];
        match r {
            Some(r) => row.extend(stat_cells(r)),
            None => row.extend(nulls()),
        }
        t.push(row);
    }
    for c in sb.stance.iter().flatten() {
        let mut row = vec![Cell::text(format!("{} rate", c.id)), Cell::num(c.rate_a), Cell::num(c.rate_b)];
        row.extend(stat_cells(&c.result));
        t.push(row);
    }
    for (marker, r) in &sb.position_effects {
        let mut row = vec![Cell::text(format!("position x {marker}")), Cell::Null, Cell::Null];
        match r {
            Some(r) => row.extend(stat_cells(r)),
            None => row.extend(nulls()),
        }
        t.push(row);
    }
    t.notes.push(format!("{} of {} sentences kept after filtering.", sb.n_kept, sb.n_sentences));
    t
}

fn t6(inp: &ReportInputs) -> Table {
    let mut t = Table::new(
        "T6_trajectory",
        "Layer trajectory and domain summary",
        &[
            "Layer",
            "Windows",
            "Mean score A",
            "Mean score B",
            "Score gap",
            "Mann-Whitney p",
            "Rank-biserial",
            "UPOS V",
            "Modifier structure V",
            "Domain rate A",
            "Domain rate B",
            "Domain OR",
            "Domain p",
        ],
    );
    let v = |vars: &BTreeMap<String, Option<StatResult>>, k: &str| {
        vars.get(k).and_then(|r| r.as_ref()).map_or(Cell::Null, |r| effect(r, EffectKind::CramersV))
    };
    let domain_cells = |c: Option<&Contrast>| match c {
        Some(c) => [Cell::num(c.rate_a), Cell::num(c.rate_b), Cell::num(c.odds_ratio), Cell::num(c.result.p_value)],
        None => [Cell::Null, Cell::Null, Cell::Null, Cell::Null],
    };
    for l in &inp.stats.trajectory {
        let mw = l.score_test.as_ref();
        let mut row = vec![
            Cell::count(l.layer),
            Cell::count(l.n_windows),
            Cell::opt(l.mean_score_a),
            Cell::opt(l.mean_score_b),
            Cell::opt(l.score_gap),
            Cell::opt(mw.map(|m| m.p_value)),
            Cell::opt(mw.map(|m| m.rank_biserial)),
            v(&l.variables, "upos"),
            v(&l.variables, "modifier_structure"),
        ];
        row.extend(domain_cells(l.domain.as_ref().and_then(|d| d.contrast.as_ref())));
        t.push(row);
        if let Some(s) = &l.skipped {
            t.notes.push(format!("Layer {}: {s}", l.layer));
        }
    }
    match &inp.stats.annotated {
        Some(a) => {
            for (label, ds) in [("all layers, windows", &a.windows), ("all layers, singles", &a.singles)] {
                let mut row = vec![Cell::text(label), Cell::count(ds.n_units)];
                row.extend(std::iter::repeat_n(Cell::Null, 7));
                row.extend(domain_cells(ds.domain.contrast.as_ref()));
                t.push(row);
            }
            if let Some(d) = &a.distinctive_lemmas {
                let list = |v: &[crate::stats::LogOdds]| v.iter().map(|l| l.lemma.as_str()).collect::<Vec<_>>().join(", ");
                t.notes.push(format!("Distinctive lemmas, class A: {}", list(&d.class_a)));
                t.notes.push(format!("Distinctive lemmas, class B: {}", list(&d.class_b)));
            }
        }
        None => t.notes.push(format!("Structural and domain columns {NO_ANNOTATIONS}.")),
    }
    let d: Domain = inp.stats.config.focus_domain;
    t.notes.push(format!("Domain columns report the {d} vocabulary rate; OR is British-role over Chinese-role."));
    t.notes.push("Score gap is the absolute difference of mean signed focus scores.".into());
    t
}

pub fn build_report(inp: &ReportInputs) -> Report {
    let tables = [t1(inp), t2(inp), t3(inp), t4(inp), t5(inp), t6(inp)]
        .into_iter()
        .map(|t| (t.id.clone(), t))
        .collect();
    let stage_status = inp
        .stage_status
        .iter()
        .filter(|(k, _)| k.as_str() != "report")
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let mut notices = inp.stats.notices.clone();
    if let Some(c) = inp.controls {
        notices.extend(c.notices.iter().cloned());
    }
    Report {
        run_id: inp.provenance.run_id.clone(),
        tables,
        stage_status,
        notices,
        charts: vec![CHART_ACCURACY.into(), CHART_GAP.into()],
        provenance: inp.provenance.clone(),
    }
}

impl Report {
    pub fn table(&self, id: &str) -> Option<&Table> {
        self.tables.get(id)
    }
}

// ---------------------------------------------------------------- markdown

const DIGITS: usize = 6;

pub fn format_num(x: f64) -> String {
    let r = round_sig(x, DIGITS);
    let a = r.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn escape(s: &str) -> String {
    s.replace('|', "\\|")
}

pub fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Null => "—".into(),
        Cell::Num(x) => format_num(*x),
        Cell::Text(s) => escape(s),
        Cell::MeanStd { mean, std } => format!("{} ± {}", format_num(*mean), format_num(*std)),
    }
}

pub fn parse_cell(s: &str) -> Cell {
    let s = s.trim();
    if s == "—" {
        return Cell::Null;
    }
    if let Ok(x) = s.parse::<f64>() {
        return Cell::Num(x);
    }
    if let Some((m, d)) = s.split_once(" ± ") {
        if let (Ok(mean), Ok(std)) = (m.parse(), d.parse()) {
            return Cell::MeanStd { mean, std };
        }
    }
    Cell::Text(s.replace("\\|", "|"))
}

fn md_row(cells: impl Iterator<Item = String>) -> String {
    let mut s = String::from("|");
    for c in cells {
        s.push(' ');
        s.push_str(&c);
        s.push_str(" |");
    }
    s
}

pub fn table_markdown(t: &Table) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "## {}: {}\n", t.id, t.title);
    let _ = writeln!(out, "Status: {}\n", t.status);
    if !t.rows.is_empty() {
        out.push_str(&md_row(t.columns.iter().map(|c| escape(c))));
        out.push('\n');
        out.push_str(&md_row(t.columns.iter().map(|_| "---".to_string())));
        out.push('\n');
        for r in &t.rows {
            out.push_str(&md_row(r.iter().map(format_cell)));
            out.push('\n');
        }
        out.push('\n');
    }
    if !t.notes.is_empty() {
        out.push_str("Notes:\n\n");
        for n in &t.notes {
            let _ = writeln!(out, "- {n}");
        }
        out.push('\n');
    }
    out
}

pub fn to_markdown(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Persona probe report\n");
    let _ = writeln!(out, "Run `{}`\n", r.run_id);
    for id in TABLE_IDS {
        if let Some(t) = r.tables.get(id) {
            out.push_str(&table_markdown(t));
        }
    }
    out.push_str("## Stages\n\n");
    for (k, v) in &r.stage_status {
        let _ = writeln!(out, "- {k}: {v}");
    }
    if !r.notices.is_empty() {
        out.push_str("\n## Notices\n\n");
        for n in &r.notices {
            let _ = writeln!(out, "- {n}");
        }
    }
    out.push_str("\n## Provenance\n\n```json\n");
    out.push_str(&serde_json::to_string_pretty(&r.provenance).unwrap_or_default());
    out.push_str("\n```\n");
    out
}

fn split_md_row(line: &str) -> Vec<String> {
    let inner = line.trim().trim_start_matches('|');
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut chars = inner.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' if chars.peek() == Some(&'|') => {
                cur.push_str("\\|");
                chars.next();
            }
            '|' => cells.push(std::mem::take(&mut cur).trim().to_string()),
            _ => cur.push(c),
        }
    }
    cells
}

/// Recover the tables from [`to_markdown`] output. Numbers come back at the
/// markdown's 6 significant digits.
pub fn parse_markdown(md: &str) -> Vec<Table> {
    let mut tables = Vec::new();
    let mut cur: Option<Table> = None;
    let mut in_notes = false;
    let mut header_seen = false;
    for line in md.lines() {
        if let Some(h) = line.strip_prefix("## ") {
            tables.extend(cur.take());
            in_notes = false;
            header_seen = false;
            if let Some((id, title)) = h.split_once(": ") {
                if TABLE_IDS.contains(&id) {
                    cur = Some(Table {
                        id: id.into(),
                        title: title.into(),
                        status: String::new(),
                        columns: Vec::new(),
                        rows: Vec::new(),
                        notes: Vec::new(),
                    });
                }
            }
            continue;
        }
        let Some(t) = cur.as_mut() else { continue };
        if let Some(s) = line.strip_prefix("Status: ") {
            t.status = s.to_string();
        } else if line.starts_with('|') {
            let cells = split_md_row(line);
            if !header_seen {
                t.columns = cells.iter().map(|c| c.replace("\\|", "|")).collect();
                header_seen = true;
            } else if cells.iter().all(|c| c == "---") {
                continue;
            } else {
                t.rows.push(cells.iter().map(|c| parse_cell(c)).collect());
            }
        } else if line == "Notes:" {
            in_notes = true;
        } else if in_notes {
            if let Some(n) = line.strip_prefix("- ") {
                t.notes.push(n.to_string());
            }
        }
    }
    tables.extend(cur);
    tables
}

// --------------------------------------------------------------------- csv

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Null => String::new(),
        Cell::Num(x) => format!("{x}"),
        Cell::Text(s) => s.clone(),
        Cell::MeanStd { mean, std } => format!("{mean} ± {std}"),
    }
}

pub fn table_csv(t: &Table) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let other = |e: csv::Error| Error::Io {
        path: format!("{}.csv", t.id).into(),
        source: std::io::Error::other(e.to_string()),
    };
    w.write_record(&t.columns).map_err(other)?;
    for r in &t.rows {
        w.write_record(r.iter().map(csv_cell)).map_err(other)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: format!("{}.csv", t.id).into(),
        source: std::io::Error::other(e.to_string()),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

// --------------------------------------------------------------------- svg

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// A plain line chart; axes span the data with a small margin.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 150.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let pad = (y1 - y0) * 0.05;
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, xml(title));
    let (ax0, ay0, ax1, ay1) = (left, h - bottom, w - right, top);
    let _ = writeln!(
        s,
        r#"<path d="M{ax0},{ay1} L{ax0},{ay0} L{ax1},{ay0}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let yv = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            py(yv) + 4.0,
            format_num(round_sig(yv, 3))
        );
        let xv = x0 + (x1 - x0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            px(xv),
            h - bottom + 18.0,
            format_num(round_sig(xv, 3))
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (ax0 + ax1) / 2.0, h - 12.0, xml(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (ay0 + ay1) / 2.0,
        (ay0 + ay1) / 2.0,
        xml(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        if !path.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.join(" ")
            );
        }
        for &(x, y) in &ser.points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(y));
        }
        let ly = top + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            w - right + 12.0,
            ly,
            w - right + 26.0,
            ly + 9.0,
            xml(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn charts(inp: &ReportInputs) -> Vec<(&'static str, String)> {
    let acc: Vec<Series> = inp
        .sweep
        .targets
        .iter()
        .map(|t| Series {
            name: t.sweep.target.name().into(),
            points: t.sweep.per_layer.iter().map(|l| (l.layer as f64, l.cv.mean_acc)).collect(),
        })
        .collect();
    let gap = vec![Series {
        name: "score gap".into(),
        points: inp
            .stats
            .trajectory
            .iter()
            .filter_map(|l| l.score_gap.map(|g| (l.layer as f64, g)))
            .collect(),
    }];
    vec![
        (CHART_ACCURACY, line_chart("Cross-validated accuracy by layer", "layer", "accuracy", &acc)),
        (CHART_GAP, line_chart("Decision-score gap by layer", "layer", "|mean A - mean B|", &gap)),
    ]
}

/// Write report.json, report.md, one CSV per table under `csv/`, and the
/// SVG charts under `charts/`.
pub fn emit_report(report: &Report, inp: &ReportInputs, out_dir: &Path) -> Result<()> {
    write_json(&out_dir.join(REPORT_JSON), report)?;
    let write = |rel: &str, body: &str| -> Result<()> {
        let p = out_dir.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&p, body).map_err(|e| Error::io(&p, e))
    };
    write(REPORT_MD, &to_markdown(report))?;
    for t in report.tables.values() {
        write(&format!("csv/{}.csv", t.id), &table_csv(t)?)?;
    }
    for (rel, svg) in charts(inp) {
        write(rel, &svg)?;
    }
    Ok(())
}
