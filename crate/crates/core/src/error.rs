//! Error type shared by the identification pipeline.

use std::fmt;

/// Errors produced by the identification pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the interval it is defined on, beyond the
    /// boundary round-off tolerance.
    Domain { what: &'static str, value: f64 },
    /// Invalid configuration value or combination of values.
    Config(String),
    /// An integrand produced a non-finite sample.
    Integrand(String),
    /// A system entry could not be computed; identifies the basis index and
    /// grid node it belongs to.
    Assembly {
        basis_index: usize,
        node_index: usize,
        source: Box<Error>,
    },
    /// A factorization or solve failed.
    Numerical(String),
    /// Signal data could not be read or validated.
    SignalData(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => {
                write!(f, "{what} = {value} is outside the admissible interval")
            }
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Integrand(msg) => write!(f, "integrand error: {msg}"),
            Error::Assembly {
                basis_index,
                node_index,
                source,
            } => write!(
                f,
                "assembly failed for basis index {basis_index} at node {node_index}: {source}"
            ),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::SignalData(msg) => write!(f, "signal data error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
