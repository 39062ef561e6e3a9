use thiserror::Error;

/// Errors raised by grid, transport, diagnostic and budget operations.
#[derive(Debug, Error)]
pub enum MixError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("level {level} exceeds grid resolution m={m}")]
    LevelTooFine { level: u32, m: u32 },

    #[error("resolution {have} is below the required {need}")]
    ResolutionTooCoarse { have: u32, need: u32 },

    #[error("field is not mean-zero (mean {0:e})")]
    NotMeanZero(f64),

    #[error("operation requires a binary (+1/-1) field")]
    NotBinary,

    #[error("operation requires a continuous field")]
    NotContinuous,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("block `{0}` carries no velocity sampler")]
    MissingVelocity(String),

    #[error("unsupported Sobolev exponents s={s}, p={p}")]
    UnsupportedNorm { s: f64, p: f64 },

    #[error("stage {requested} requested, but the next unexecuted stage is {next}")]
    StageOrder { requested: usize, next: usize },

    #[error("time {t} lies outside the schedule range [{start}, {end})")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    #[error("stage {stage}: expected the state to be mixed at level {expected}, measured {measured:?}")]
    SigmaViolation {
        stage: usize,
        expected: u32,
        measured: Option<u32>,
    },

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("non-positive value {value} at t={t}")]
    NonPositive { t: f64, value: f64 },

    #[error("missing measurement: {0}")]
    MissingMeasurement(&'static str),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MixError>;

impl MixError {
    /// Process exit status used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            MixError::Manifest(_) | MixError::Json(_) | MixError::InvalidParameter(_) => 2,
            MixError::ResolutionTooCoarse { .. } | MixError::LevelTooFine { .. } => 3,
            MixError::MissingVelocity(_) => 4,
            _ => 1,
        }
    }
}
