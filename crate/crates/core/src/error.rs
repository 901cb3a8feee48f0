//! Error type shared by all core operations.

use alloc::string::String;
use core::fmt;

/// Failure classes mirror how operations are allowed to fail: bad
/// construction parameters, non-finite data, out-of-range queries, requests
/// exceeding a configured capability, numerical-quality breakdowns and plain
/// misuse.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid construction parameters (non-divisible step, empty domain, ...).
    Config(String),
    /// Non-finite or otherwise unusable input data.
    Data(String),
    /// A query point or level outside the valid range.
    Range(String),
    /// The request exceeds a configured capability bound; `admissible`
    /// describes the largest feasible parameter.
    Capability { what: String, admissible: String },
    /// A numerical-quality check failed (e.g. a marginal that does not
    /// normalize); carries diagnostics.
    Numerical(String),
    /// API misuse (empty sample sets and the like).
    Usage(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(m) => write!(f, "configuration error: {m}"),
            Error::Data(m) => write!(f, "data error: {m}"),
            Error::Range(m) => write!(f, "range error: {m}"),
            Error::Capability { what, admissible } => {
                write!(f, "capability error: {what} (admissible: {admissible})")
            }
            Error::Numerical(m) => write!(f, "numerical-quality error: {m}"),
            Error::Usage(m) => write!(f, "usage error: {m}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
