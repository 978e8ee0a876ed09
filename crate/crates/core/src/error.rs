use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error(
        "singular frequency {freq_hz} Hz: entry `{entry}` diverges (|{which}| = {magnitude:e})"
    )]
    SingularFrequency {
        freq_hz: f64,
        entry: &'static str,
        which: &'static str,
        magnitude: f64,
    },

    #[error("near-zero denominator in {context} (residual {residual:e})")]
    Singularity {
        context: &'static str,
        residual: f64,
    },

    #[error("series resonance root-solve failed: {0}")]
    RootSolve(String),

    #[error("rectifier curve domain: V_rect/V_s = {0} outside [0, 1]")]
    Domain(f64),

    #[error("modulation window empty: pulse {pulse_s:e} s <= startup {startup_s:e} s")]
    ModulationWindowEmpty { pulse_s: f64, startup_s: f64 },

    #[error("mismatched sample rates: {0} Hz vs {1} Hz")]
    SampleRateMismatch(f64, f64),

    #[error("beam model valid only within {limit_m} m of axis (got {offset_m} m)")]
    ModelRange { offset_m: f64, limit_m: f64 },

    #[error("infeasible link: {0}")]
    InfeasibleLink(String),

    #[error("code book capacity exceeded: {requested} codes requested, {capacity} available")]
    Capacity { requested: usize, capacity: usize },

    #[error("carrier lock failure: {0}")]
    LockFailure(String),

    #[error("signal too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("schema error at `{path}`: {reason}")]
    Schema { path: String, reason: String },

    #[error("scenario invariant violated: {0}")]
    Invariant(String),

    #[error("pulse {index}: {source}")]
    Pulse {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn schema(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input files or scenario constraints,
    /// as opposed to failures while simulating.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. }
                | Error::Schema { .. }
                | Error::Invariant(_)
                | Error::InfeasibleLink(_)
                | Error::Capacity { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
