use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{what}: expected length {expected}, got {actual}")]
    Size {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// More byte errors than the code can correct, detected by the decoder.
    #[error("uncorrectable codeword")]
    Uncorrectable,

    #[error("reed-solomon decode failure in data word {word}")]
    DecodeFailure { word: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fifo overflow at tick {tick}: occupancy would reach {occupancy} with capacity {capacity}")]
    Overflow {
        tick: u64,
        occupancy: usize,
        capacity: usize,
    },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable short identifier, used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Size { .. } => "size",
            Error::Uncorrectable => "uncorrectable",
            Error::DecodeFailure { .. } => "decode_failure",
            Error::Domain(_) => "domain",
            Error::Overflow { .. } => "overflow",
            Error::Scenario(_) => "scenario",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
