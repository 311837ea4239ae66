//! Data model and on-disk formats: metadata, activations, token records, split.

pub mod meta;
pub mod npy;
pub mod split;
pub mod store;
pub mod tokens;

pub use meta::{cohort_of, ExampleMeta, Medium, Nationality, Role, TemplateFamily};
pub use split::{make_split, stratified_folds, Split, StratifyKey};
pub use store::{
    decode_actd, encode_actd, load_corpus, read_meta, save_corpus, write_meta, ActdHeader,
    ActivationStore, ExampleActivations,
};
pub use tokens::{read_tokens, write_tokens, TokenRecord};
