//! Exact and numerical dynamics of coordinate power maps and the
//! unicritical families `z^d + c` and `z(z-eps)^(d-1) + c`.
//!
//! The crate is organised around six engines:
//!
//! * [`cyclo`] — exact arithmetic on roots of unity and the classification
//!   of (pre)periodic points of `z ↦ z^d`.
//! * [`moves`] — a monodromy-move calculus on projective tuples of roots of
//!   unity, with certificate-producing transitivity solvers.
//! * [`dynatomic`] — exact integer polynomial arithmetic: iterated maps,
//!   Gleason polynomials, Misiurewicz differences, dynatomic factors.
//! * [`monodromy`] — numerical root tracking along parameter loops and the
//!   permutation groups generated by such loops.
//! * [`padic`] — truncated p-adic arithmetic and two lifting algorithms for
//!   periodic points (contraction iteration and Newton lifting).
//! * [`ffdyn`] — finite-field orbit computations and period-growth censuses.
//!
//! Every engine is exposed through the `dynamon` CLI binary and through the
//! runnable programs in `examples/`.

pub mod cyclo;
pub mod dynatomic;
pub mod ffdyn;
pub mod monodromy;
pub mod moves;
pub mod padic;
pub mod report;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("gcd({m}, {d}) = {g} != 1: argument must be coprime to the degree")]
    NotCoprime { d: u64, m: u64, g: u64 },
    #[error("enumeration would need {required} elements, limit is {limit}")]
    EnumerationBound { required: u128, limit: u64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("polynomial degree {required} exceeds budget {budget}")]
    DegreeBudget { required: u128, budget: u64 },
    #[error("zero polynomial has no well-defined {0}")]
    ZeroPolynomial(&'static str),
    #[error("exact division left a non-zero remainder (implementation bug)")]
    InexactDivision,
    #[error("points have different orbit types: {0:?} vs {1:?}")]
    TypeMismatch(cyclo::PrePeriod, cyclo::PrePeriod),
    #[error("connector exceeded its step budget of {0} (solver bug)")]
    StepBudget(usize),
    #[error("connector could not find a legal move: {0}")]
    Unreachable(String),
    #[error("root finder did not converge after {iterations} iterations (worst residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("tracking step underflow near parameter {at}")]
    StepUnderflow { at: String },
    #[error("group order exceeds the configured bound {0}")]
    OrderBound(u64),
    #[error("permutation images do not match root set: {0}")]
    BadPermutation(String),
    #[error("contraction violated at iteration {step}: valuation did not increase")]
    ContractionViolated { step: usize },
    #[error("p-adic precision {0} exhausted before convergence")]
    PrecisionExhausted(u32),
    #[error("derivative of map^b - id is not a unit at the given residue point")]
    NonUnitDerivative,
    #[error("lifting oracles disagree: {0} (bug detector)")]
    OracleDisagreement(String),
    #[error("coordinate {index}: {source}")]
    Coordinate {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("field size p^k = {size} exceeds budget {budget}")]
    FieldBudget { size: u128, budget: u64 },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
