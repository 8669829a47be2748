use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("clock period under-sampled: {samples_per_period:.3} samples per period, need at least 2")]
    UnderSampled { samples_per_period: f64 },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular channel: path gains sum to zero")]
    SingularChannel,

    #[error("geometry/schedule mismatch: {0}")]
    Mismatch(String),

    #[error("{stream} stream length mismatch: expected {expected} samples, found {found}")]
    LengthMismatch {
        stream: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("capture metadata: {0}")]
    Metadata(String),

    #[error("reference power is zero")]
    ZeroReferencePower,

    #[error("degenerate offset denominator at tau = {tau} samples (|den| = {magnitude:.3e}, floor {floor:.3e})")]
    DegenerateOffset {
        tau: usize,
        magnitude: f64,
        floor: f64,
    },

    #[error("mixed provenance: {0}")]
    MixedProvenance(String),

    #[error("no clock found: best normalized autocorrelation peak {peak:.4} below floor {floor:.4}")]
    NoClock { peak: f64, floor: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("grid size {grid} too small for {n_elements} elements (need at least {min})")]
    GridTooSmall {
        grid: usize,
        n_elements: usize,
        min: usize,
    },

    #[error("no path found above the relative threshold")]
    NoPathFound,

    #[error("subarray length {len} exceeds the {n_elements} available elements")]
    SubarrayTooLong { len: usize, n_elements: usize },

    #[error("ill-conditioned bearing system (smallest singular value {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("interference unresolved at vantage {vantage} after {attempts} segment(s) (score {score:.4})")]
    InterferenceUnresolved {
        vantage: usize,
        attempts: usize,
        score: f64,
    },

    #[error("scenario key `{key}`: {reason}")]
    Scenario { key: String, reason: String },

    #[error("{stage}: {inner}")]
    Stage { stage: &'static str, inner: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn scenario(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Scenario {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Wraps the error with the pipeline stage it came from.
    pub fn at(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            inner: Box::new(self),
        }
    }

    /// The innermost error beneath any stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { inner, .. } => inner.root(),
            other => other,
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2 validation, 3 no clock, 4 interference unresolved. Solver
    /// non-convergence (5) is not an error; the pipeline reports it on the
    /// run outcome instead.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::NoClock { .. } => 3,
            Error::InterferenceUnresolved { .. } => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
