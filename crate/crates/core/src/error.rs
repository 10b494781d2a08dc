use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("wrong IDX magic number: expected {expected:#010x}, found {found:#010x}")]
    WrongMagic { expected: u32, found: u32 },
    #[error("truncated IDX data: header declares {declared} bytes of payload, found {found}")]
    Truncated { declared: usize, found: usize },
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("brute-force bottleneck limited to {limit} points in total, got {got}")]
    TooLarge { limit: usize, got: usize },
    #[error("need at least {needed} items, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("cannot summarize an empty distance list")]
    Empty,
    #[error("image {image} is missing feature block {block}")]
    MissingBlock { image: usize, block: String },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("feature row has {got} columns, model expects {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("requested {k} features but only {available} exist")]
    KTooLarge { k: usize, available: usize },
    #[error("class {class} has {count} members, fewer than the {folds} folds requested")]
    ClassTooSmall { class: u32, count: usize, folds: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 folds for a paired t-test, got {0}")]
    TooFewFolds(usize),
    #[error("digit {0} is outside 0..=9")]
    BadDigit(u32),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("missing data file {0}")]
    MissingData(PathBuf),
    #[error("cache entry {path} is corrupt: {reason}")]
    CacheCorrupt { path: PathBuf, reason: String },
    #[error("malformed feature table: {0}")]
    MalformedTable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable identifier used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::WrongMagic { .. } => "WrongMagic",
            Error::Truncated { .. } => "Truncated",
            Error::EmptyCloud => "EmptyCloud",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::TooLarge { .. } => "TooLarge",
            Error::TooFew { .. } => "TooFew",
            Error::Empty => "Empty",
            Error::MissingBlock { .. } => "MissingBlock",
            Error::EmptyTrainingSet => "EmptyTrainingSet",
            Error::ArityMismatch { .. } => "ArityMismatch",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::ClassTooSmall { .. } => "ClassTooSmall",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::TooFewFolds(_) => "TooFewFolds",
            Error::BadDigit(_) => "BadDigit",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::MissingData(_) => "MissingData",
            Error::CacheCorrupt { .. } => "CacheCorrupt",
            Error::MalformedTable(_) => "MalformedTable",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
        }
    }
}
