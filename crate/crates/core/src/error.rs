//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u32, u32),

    #[error("cyclotomic level {have} too low, need at least {need}")]
    LevelTooLow { have: u32, need: u32 },

    #[error("requested digit precision {requested} exceeds declared precision {declared}")]
    InsufficientPrecision { requested: u32, declared: u32 },

    #[error("denominator of {0} is divisible by p")]
    DenominatorNotUnit(String),

    #[error("truncation window underflow: {0}")]
    WindowUnderflow(String),

    #[error("z-degree {0} exceeds the declared cap {1}")]
    ZDegreeCap(u32, u32),

    #[error("interval endpoints must satisfy 0 < lo <= hi, got [{0}, {1}]")]
    BadInterval(String, String),

    #[error("radius {0} lies outside the module's interval")]
    RadiusOutsideInterval(String),

    #[error("cyclic vector search exhausted after {0} attempts")]
    CyclicVectorExhausted(usize),

    #[error("antecedent precondition R(E,rho) > p^(-1/(p-1))*rho violated at r = {0}")]
    AntecedentPrecondition(String),

    #[error("Robba precondition failed: {0}")]
    RobbaPrecondition(String),

    #[error("degenerate resolvent: all refinements have unbounded determinant valuation at level {0}")]
    DegenerateResolvent(u32),

    #[error("column reduction failed to extract a rank-{0} basis (window or truncation too narrow)")]
    ColumnReduction(usize),

    #[error("dominant exponent {0} sits on the truncation edge; cannot certify the factorization")]
    DominantAtEdge(i64),

    #[error("zero element has no unit factorization")]
    ZeroElement,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid module description: {0}")]
    BadDescription(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
