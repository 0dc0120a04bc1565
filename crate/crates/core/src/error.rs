use thiserror::Error;

/// Errors produced by dataset handling, selectors, classifiers and the
/// cross-validation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("non-numeric cell {token:?} at row {row}, column {column}")]
    NonNumericCell {
        row: usize,
        column: String,
        token: String,
    },

    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteValue { row: usize, column: String },

    #[error("duplicate sample id {0:?}")]
    DuplicateSampleId(String),

    #[error("duplicate feature name {0:?}")]
    DuplicateFeatureName(String),

    #[error("row {row} has {got} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("label {0:?} does not occur in the dataset")]
    UnknownLabel(String),

    #[error("positive and negative labels must differ (both {0:?})")]
    IdenticalLabels(String),

    #[error("class {label:?} has {count} samples, need at least {min}")]
    TooFewSamples {
        label: String,
        count: usize,
        min: usize,
    },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("k = {k} exceeds the number of features n = {n}")]
    SubsetTooLarge { k: usize, n: usize },

    #[error("sequences have mismatched lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("input vector has dimension {got}, model expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },

    #[error("solver did not converge within {max_iter} iterations (residual {residual:.3e})")]
    NonConvergence { max_iter: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("prediction set contains a single class; AUC is undefined")]
    SingleClassPredictions,

    #[error("selection run is empty")]
    EmptySelectionRun,

    #[error("{0}")]
    DegenerateGroups(String),

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("fold {fold}: training set lost class {label:?}")]
    FoldClassVanished { fold: usize, label: String },
}

pub type Result<T> = std::result::Result<T, Error>;
