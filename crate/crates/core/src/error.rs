use thiserror::Error;

/// Errors raised while building, evaluating or verifying a chattering construction.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid exponent sequence: alpha_{m} = {alpha} < {m}")]
    ExponentBelowIndex { m: u64, alpha: u64 },

    #[error("exponent alpha_{m} overflows u64")]
    ExponentOverflow { m: u64 },

    #[error("precision exhausted: {0}")]
    Precision(String),

    #[error("harmonic index {index} exceeds the configured cap {cap}")]
    HarmonicCap { index: u64, cap: u64 },

    #[error("no admissible probe point after {steps} halvings of the distance to one")]
    BisectionExhausted { steps: u32 },

    #[error("iteration k = {k}: {source}")]
    Iteration {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("sign of P_{level}(z_{k}) is indeterminate at the working precision (|value| = {value:e})")]
    IndeterminateSign { level: usize, k: usize, value: f64 },

    #[error("invalid control: {0}")]
    Control(String),

    #[error("malformed document: {0}")]
    Document(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn at_iteration(self, k: usize) -> Self {
        Error::Iteration {
            k,
            source: Box::new(self),
        }
    }
}
