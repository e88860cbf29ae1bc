use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pulse support holds only {fraction:.6} of the pulse energy")]
    InsufficientSupport { fraction: f64 },

    #[error("spectral mask is infeasible: {0}")]
    InfeasibleMask(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A link-trial stage failed; `stage` names the step of the chain.
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::ser::Error> for Error {
    fn from(e: toml::ser::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Encode,
    Modulate,
    Channel,
    Acquire,
    Estimate,
    Rake,
    Equalize,
    Decode,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Encode => "encode",
            Stage::Modulate => "modulate",
            Stage::Channel => "channel",
            Stage::Acquire => "acquire",
            Stage::Estimate => "estimate",
            Stage::Rake => "rake",
            Stage::Equalize => "equalize",
            Stage::Decode => "decode",
        };
        f.write_str(s)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}

/// Non-fatal conditions reported alongside a result.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Pulses of one symbol overlap in time.
    PulseOverlap { min_separation: f64, support: f64 },
    /// Continuous delays were rounded to the sample grid.
    GridSnap { max_error: f64 },
    /// A least-squares solve was regularized.
    Regularized { ridge: f64 },
    /// Fewer candidate taps than requested fingers.
    FewerTaps { requested: usize, available: usize },
    /// A finger or sample index fell outside the observed span.
    OutOfSpan { index: i64 },
    /// An iterative search hit its iteration cap.
    NotConverged { iterations: usize },
}
