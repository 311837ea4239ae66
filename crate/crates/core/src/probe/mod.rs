//! Linear probes: standardisation, L-BFGS training, cross-validation, layer
//! sweeps, held-out evaluation, and token scoring.

pub mod cv;
pub mod lbfgs;
pub mod linear;
pub mod standardize;
pub mod sweep;

pub use cv::{cross_validate, cross_validate_with_folds, CvResult};
pub use linear::{predict_from_scores, train_probe, FitDiagnostics, LinearProbe, LogisticObjective, ProbeConfig};
pub use standardize::Standardizer;
pub use sweep::{
    fit_centroid_probe, fit_token_probe, holdout_eval, labelled_ids, layer_sweep, layer_sweep_over,
    token_scores, LayerCv, ProbeModel, ProbeUnit, SweepResult, Target, TokenScore,
};
