use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: column `{column}` has value {value:?}, expected {expected}")]
    InvalidCell {
        row: usize,
        column: String,
        value: String,
        expected: &'static str,
    },

    #[error("dataset empty")]
    EmptyDataset,

    #[error("column `{column}` has length {len}, expected {expected}")]
    LengthMismatch {
        column: String,
        len: usize,
        expected: usize,
    },

    #[error(
        "feature vectors must share one dimension: row {row} has {found}, expected {expected}"
    )]
    FeatureDimension {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("duplicate group name `{0}`")]
    DuplicateGroup(String),

    #[error("group `{0}` has no members")]
    EmptyGroup(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("cannot compare a {left} curve with a {right} curve")]
    CurveKindMismatch {
        left: &'static str,
        right: &'static str,
    },

    #[error("{0}")]
    Unsupported(String),

    #[error("unknown measure `{name}`; known measures: {}", known.join(", "))]
    UnknownMeasure { name: String, known: Vec<String> },

    #[error("unknown base measure `{name}`; known base measures: {}", known.join(", "))]
    UnknownBase { name: String, known: Vec<String> },

    #[error("dataset has no feature columns")]
    MissingFeatures,

    #[error("nothing to report: dataset has neither labels nor scores")]
    NothingToReport,

    #[error("unknown cell ({row}, {column}); rows: [{}], columns: [{}]", rows.join(", "), columns.join(", "))]
    UnknownCell {
        row: String,
        column: String,
        rows: Vec<String>,
        columns: Vec<String>,
    },

    #[error("cannot combine reports over different datasets")]
    FingerprintMismatch,

    #[error("cannot combine reports: cell ({row}, {column}) appears twice")]
    CellClash { row: String, column: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
