use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symbol {symbol} out of range for alphabet of size {d}")]
    SymbolOutOfRange { symbol: usize, d: usize },

    #[error("invalid a priori measure: {0}")]
    InvalidMeasure(String),

    #[error("theta must lie in (0, 1), got {0}")]
    InvalidTheta(f64),

    #[error("table has {got} entries, expected {expected}")]
    TableSize { expected: usize, got: usize },

    #[error("side mismatch: {0}")]
    SideMismatch(&'static str),

    #[error("depth {got} too small, need at least {need}")]
    DepthTooSmall { need: usize, got: usize },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("potential must be real-valued: {0}")]
    NonReal(&'static str),

    #[error("iteration cap of {0} exceeded")]
    IterationCap(usize),

    #[error("outside theorem regime: |lambda| = {modulus} <= (rho + eps) theta = {threshold}")]
    OutsideRegime { modulus: f64, threshold: f64 },

    #[error("word budget exceeded: {words} words requested, cap is {cap}")]
    WordBudget { words: u128, cap: u64 },

    #[error("rho sequences have not stabilized within n_max = {0}")]
    NotStabilized(usize),

    #[error("not an eigenfunction: residual {residual:e} exceeds {bound:e}")]
    NotEigenfunction { residual: f64, bound: f64 },

    #[error("not a Koopman eigenfunction: residual {residual:e} exceeds {bound:e}")]
    NotKoopmanEigenfunction { residual: f64, bound: f64 },

    #[error("oracle undefined: eigenvalue has geometric multiplicity {0}; use multiplicity_pair")]
    NotSimple(usize),

    #[error("eigenvalue must be nonzero")]
    ZeroEigenvalue,

    #[error("no eigenvalue matches the selector: {0}")]
    NoSuchEigenvalue(String),
}

pub type Result<T> = std::result::Result<T, Error>;
