use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input / configuration.
    Input,
    /// A numerical or protocol failure while computing.
    Numerical,
    /// A size cap was exceeded.
    Capacity,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("inconsistent input: {0}")]
    Consistency(String),

    #[error("invalid active space: {0}")]
    ActiveSpace(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("Cholesky factorization failed: {0}")]
    Factorization(String),

    #[error("degenerate bitstring pair: {0} == {0}")]
    DegeneratePair(u64),

    #[error("circuit error: {0}")]
    Circuit(String),

    #[error("tomography protocol error: {0}")]
    Protocol(String),

    #[error("local energy undefined: {0}")]
    LocalEnergy(String),

    #[error("force bias undefined: {0}")]
    ForceBias(String),

    #[error("walker population collapsed: total weight {total_weight:e} after block {block}")]
    WeightCollapse { block: usize, total_weight: f64 },

    #[error("iterative solver did not converge: {0}")]
    Convergence(String),

    #[error("invalid propagator: {0}")]
    Propagator(String),

    #[error("extrapolation failed: {0}")]
    Fit(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. }
            | Error::Consistency(_)
            | Error::ActiveSpace(_)
            | Error::Dimension(_)
            | Error::Input(_)
            | Error::Io { .. } => ErrorKind::Input,
            Error::Capacity(_) => ErrorKind::Capacity,
            Error::Factorization(_)
            | Error::DegeneratePair(_)
            | Error::Circuit(_)
            | Error::Protocol(_)
            | Error::LocalEnergy(_)
            | Error::ForceBias(_)
            | Error::WeightCollapse { .. }
            | Error::Convergence(_)
            | Error::Propagator(_)
            | Error::Fit(_) => ErrorKind::Numerical,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
