use alloc::string::String;
use core::fmt;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    Domain(String),
    /// The operation is not available for this input kind.
    Unsupported(String),
    /// The data left nothing to work with (e.g. every sample was filtered).
    Degenerate(String),
    /// `1/(9 epsilon)` is not an integer, so the core grid does not tile.
    Tiling {
        epsilon: f64,
        suggested_cores_per_axis: u64,
        suggested_epsilon: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Unsupported(m) => write!(f, "unsupported: {m}"),
            Error::Degenerate(m) => write!(f, "degenerate data: {m}"),
            Error::Tiling {
                epsilon,
                suggested_cores_per_axis,
                suggested_epsilon,
            } => write!(
                f,
                "epsilon = {epsilon} does not tile the unit cube: 1/(9*epsilon) = {} is not an integer; \
                 nearest valid epsilon is 1/{} = {suggested_epsilon}",
                1.0 / (9.0 * epsilon),
                9 * suggested_cores_per_axis,
            ),
        }
    }
}

impl core::error::Error for Error {}
