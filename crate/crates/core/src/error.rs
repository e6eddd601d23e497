use std::path::PathBuf;

/// Errors raised anywhere in the crate.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("font '{font}' has no glyph for {ch:?}")]
    MissingGlyph { font: String, ch: char },

    #[error("failed to load font {path}: {reason}")]
    FontLoad { path: PathBuf, reason: String },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("font set is empty: {0}")]
    EmptyFontSet(&'static str),

    #[error("invalid font registry: {0}")]
    Registry(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },

    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("backward called without a recorded forward pass")]
    MissingForwardCache,

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("test set '{0}' is empty")]
    EmptyTestSet(String),

    #[error("test set '{set}' has a sample whose label contradicts its role ({role})")]
    TestSetRole { set: String, role: &'static str },

    #[error("classifier kind mismatch: {0}")]
    KindMismatch(String),

    #[error("symbol sequence is empty")]
    EmptySequence,

    #[error("every character class is excluded; sensitivity is undefined")]
    AllClassesExcluded,

    #[error("self-check failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;
