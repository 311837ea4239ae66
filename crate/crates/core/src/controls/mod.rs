//! Methodological controls: shuffled-label baseline, selectivity, surface-text
//! skyline, and cross-family generalisation.

pub mod shuffle;
pub mod skyline;
pub mod tfidf;
pub mod transfer;

pub use shuffle::{permutations, selectivity, shuffled_baseline, shuffled_baseline_with, ShuffleBaseline};
pub use skyline::{skyline, SkylineResult};
pub use tfidf::{tfidf_features, tokenize, SparseRow, TfidfConfig, TfidfModel};
pub use transfer::{cross_family_transfer, family_pairs, TransferPair, TransferResult};
