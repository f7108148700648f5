use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite state at step {step} (t = {time}); reduce the step size")]
    NonFiniteState { step: usize, time: f64 },

    #[error("insufficient data: need {needed} samples, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("channel offset {offset} out of range for a trajectory of {len} samples")]
    OffsetOutOfRange { offset: i64, len: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("channel {channel} is constant and cannot be rescaled")]
    DegenerateChannel { channel: usize },

    #[error("all points are identical; no bandwidth can be derived")]
    AllPointsIdentical,

    #[error("kernel column {column} sums to zero")]
    ZeroColumn { column: usize },

    #[error("eigensolver failed: {0}")]
    ConvergenceFailure(String),

    #[error("eigenvalue {value_re} + {value_im}i exceeds the imaginary-part bound {bound}")]
    ComplexSpectrum {
        value_re: f64,
        value_im: f64,
        bound: f64,
    },

    #[error("local regression system at sample {sample} is singular")]
    SingularLocalSystem { sample: usize },

    #[error("k = {k} exceeds the number of training points ({n})")]
    KTooLarge { k: usize, n: usize },

    #[error("retained eigenvalue {value} is below the cutoff {cutoff}")]
    IllConditioned { value: f64, cutoff: f64 },

    #[error("training loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attach a pipeline stage name to an error.
pub trait StageContext<T> {
    fn stage(self, stage: &str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage: stage.to_string(),
            source: Box::new(e),
        })
    }
}
