use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A point coincides with the array reference.
    #[error("zero range: point coincides with the reference")]
    ZeroRange,

    /// Elevation reached the +/- pi/2 boundary (point directly above or below).
    #[error("elevation at the +/-pi/2 boundary")]
    Zenith,

    /// A probe point coincides with an antenna element.
    #[error("singular range: point coincides with element {element}")]
    SingularRange { element: usize },

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("no signal energy in snapshot")]
    NoSignalEnergy,

    #[error("no reliable beam above the RSSI floor")]
    NoReliableBeam,

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("insufficient points: have {have}, need {need}")]
    InsufficientPoints { have: usize, need: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("wrong scheme: expected {expected}, got {got}")]
    WrongScheme {
        expected: &'static str,
        got: &'static str,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
