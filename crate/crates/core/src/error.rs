use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Stage,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("missing activation file for example {0:?}")]
    MissingActivation(String),
    #[error("duplicate example_id {0:?}")]
    DuplicateExample(String),
    #[error("unknown example_id {0:?}")]
    UnknownExample(String),
    #[error("activation header mismatch for {example_id:?}: {detail}")]
    HeaderMismatch { example_id: String, detail: String },
    #[error("non-finite activation value in {example_id:?} at layer {layer}")]
    NonFinite { example_id: String, layer: usize },
    #[error("invalid metadata for {example_id:?}: {detail}")]
    InvalidMeta { example_id: String, detail: String },
    #[error("layer {layer} out of range (n_layers = {n_layers})")]
    LayerOutOfRange { layer: usize, n_layers: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot stratify: {0}")]
    Stratify(String),
    #[error("need at least two classes, found {0}")]
    SingleClass(usize),
    #[error("non-finite input value")]
    NonFiniteInput,
    #[error("operation requires a binary model, found {0} classes")]
    NotBinary(usize),
    #[error("probe layer {model} does not match requested layer {requested}")]
    LayerMismatch { model: usize, requested: usize },
    #[error("leakage: {0} evaluation ids were used in training")]
    Leakage(usize),
    #[error("empty vocabulary after filtering")]
    EmptyVocabulary,
    #[error("invalid config: {0}")]
    Config(String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("invalid contingency table: {0}")]
    Table(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Stage { .. } => ErrorKind::Stage,
            _ => ErrorKind::Data,
        }
    }
}
