use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("kummer series parameter b = {0} is a non-positive integer")]
    InvalidB(f64),
    #[error("series did not converge within {terms} terms (last term {last_term:e})")]
    NoConvergence { terms: usize, last_term: f64 },
    #[error("invalid grid resolution: {0}")]
    InvalidResolution(String),
    #[error("grid too coarse for mode (k={k}, l={ell}): norm changed by {rel_change:e} under node doubling")]
    GridTooCoarse { k: i64, ell: usize, rel_change: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("truncation exceeded: requested K={k}, L={l} but basis holds K={basis_k}, L={basis_l}")]
    TruncationExceeded {
        k: usize,
        l: usize,
        basis_k: usize,
        basis_l: usize,
    },
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
    #[error("multiplier produced a non-finite value at mode (k={k}, l={ell})")]
    NonFiniteMultiplier { k: i64, ell: usize },
    #[error("time t={t} is resonant (integer multiple of pi/B0)")]
    ResonantTime { t: f64 },
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("ladder leakage {leakage:e} above tolerance for mode (k={k}, l={ell})")]
    LeakageError { k: i64, ell: usize, leakage: f64 },
    #[error("{count} ladder targets leave the truncation window")]
    TruncationOverflow { count: usize },
    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),
    #[error("unsupported exponent pair (q={q}, p={p})")]
    UnsupportedPair { q: f64, p: f64 },
    #[error("pair (q={q}, p={p}) is not admissible")]
    NotAdmissible { q: f64, p: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
