use thiserror::Error;

/// Errors produced by the simulator.
///
/// Each variant maps onto a stable, machine-parsable class name (see
/// [`Error::class`]) which the command-line front end prints on failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Fock truncation exceeded: leakage {leakage:.3e} into the top levels at n_max={n_max}; retry with n_max >= {required_n_max}")]
    Truncation {
        n_max: usize,
        required_n_max: usize,
        leakage: f64,
    },

    #[error("integrator did not converge within {max_steps} steps (last change {change:.3e})")]
    NotConverged { max_steps: usize, change: f64 },

    #[error("phase is unidentifiable: {0}")]
    UnidentifiablePhase(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("sweep refused: {count} grid points exceeds the cap of {cap}")]
    CapExceeded { count: usize, cap: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Precondition(_) => "precondition",
            Error::Truncation { .. } => "truncation",
            Error::NotConverged { .. } => "not-converged",
            Error::UnidentifiablePhase(_) => "unidentifiable-phase",
            Error::Infeasible(_) => "infeasible",
            Error::InsufficientData(_) => "insufficient-data",
            Error::Input(_) => "input",
            Error::CapExceeded { .. } => "cap-exceeded",
            Error::Parse(_) => "parse",
            Error::Usage(_) => "usage",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Parse(_) => 3,
            Error::Io(_) => 4,
            Error::Truncation { .. } | Error::NotConverged { .. } => 6,
            _ => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
