use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A trace record failed schema or invariant checks. `record` is the
    /// 1-based line number in the trace file.
    #[error("record {record}: field `{field}`: {message}")]
    InvalidRecord {
        record: usize,
        field: String,
        message: String,
    },

    #[error("record {record}: duplicate question_id `{question_id}`")]
    DuplicateQuestion { record: usize, question_id: String },

    #[error("layer {layer} out of range for a trace with {num_layers} layers")]
    LayerOutOfRange { layer: usize, num_layers: usize },

    #[error("layer selection is empty")]
    EmptySelection,

    #[error("invalid layer selection `{0}`")]
    InvalidLayerSpec(String),

    #[error("unknown answer unit `{0}`")]
    UnknownUnit(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("score weights ({w_li}, {w_f}) must be non-negative and sum to 1")]
    InvalidWeights { w_li: f64, w_f: f64 },

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("score list is empty")]
    EmptyScores,

    #[error("prediction set list is empty")]
    EmptySets,

    #[error("prediction set for question `{0}` carries no coverage label")]
    MissingLabels(String),

    #[error("prediction set of size {size} does not fit a label space of size {label_space}")]
    SetExceedsLabelSpace { size: usize, label_space: usize },

    #[error("degenerate split: {n_cal} calibration and {n_test} test questions")]
    DegenerateSplit { n_cal: usize, n_test: usize },

    #[error("domain `{domain}` has {count} questions, need at least {required}")]
    TooFewQuestions {
        domain: String,
        count: usize,
        required: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
