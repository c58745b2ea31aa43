use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("points behind camera at indices {indices:?}")]
    BehindCamera { indices: Vec<usize> },

    #[error("insufficient points: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("insufficient keypoints: need at least {needed}, got {got}")]
    InsufficientKeypoints { needed: usize, got: usize },

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("empty input")]
    EmptyInput,

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("expected 24 offset values, got {0}")]
    OffsetCount(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("sample {index} could not be placed in view after {attempts} pose draws")]
    Unplaceable { index: u64, attempts: usize },

    #[error("sample ids do not match: missing predictions {missing:?}, unknown ids {unexpected:?}")]
    IdMismatch { missing: Vec<u64>, unexpected: Vec<u64> },

    #[error("failed to load mesh {path}: {source}")]
    MeshLoad {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
