use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration the simulator refuses to model.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Invalid ADC, extractor or battery configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Caller violated an operation contract (lengths, indices, preconditions).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Vacuum noise does not clear the detector noise.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// Requested extraction is not backed by enough min-entropy.
    #[error("security error: {0}")]
    Security(String),

    /// Input too short for a statistical test.
    #[error("{test} needs at least {needed} bits, got {got}")]
    Applicability {
        test: &'static str,
        needed: usize,
        got: usize,
    },
}

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
