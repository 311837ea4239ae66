//! Significance tests, effect sizes, and the analysis battery run over
//! annotated probe selections.

mod battery;
mod inference;
pub mod special;

pub use battery::{
    build_units, confound_suite, cross_tab, distinctive_lemmas, layer_trajectory, run_battery, run_hypotheses,
    sentence_tests, stance_family, AnnotatedStats, ConfoundResult, Contrast, DatasetStats, DistinctiveLemmas,
    DomainStats, FilterCounts, LayerTrajectory, SentenceBaselineStats, StatsConfig, StatsReport, Unit, Units,
    STRUCTURAL_VARIABLES,
};
pub use inference::{
    bonferroni, chi_square, cramers_v, fisher_exact, log_odds_tokens, mann_whitney, odds_ratio, rank_biserial,
    ContingencyTable, EffectKind, EffectSize, LogOdds, MannWhitney, MwMethod, StatResult, MW_EXACT_MAX,
};
