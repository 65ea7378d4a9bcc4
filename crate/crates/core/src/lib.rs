//! Certified two-sided bounds on averages over projected ensembles.
//!
//! The crate simulates a noisy Floquet Ising chain, samples measurement
//! outcomes and single-qubit Clifford shadows, correlates them with states
//! from a classical twin simulation, and turns the resulting estimable
//! quantities into Lagrange-dual certificates for quantities such as the
//! average purity, von Neumann entropy, frame potential and design distance.
//!
//! Modules, bottom up:
//! - [`opalg`]: dense operator and superoperator algebra.
//! - [`dynamics`]: Floquet Ising evolution with amplitude damping.
//! - [`ensemble`]: projected ensembles, outcome sampling, classical twins.
//! - [`shadows`]: shadow records, dual frames and estimators.
//! - [`bounds`]: the certificate engine.
//! - [`oracle`]: brute-force ground truth for validation.
//! - [`experiment`]: the simulate, estimate and bound pipeline used by the CLI.

pub mod bounds;
pub mod dynamics;
pub mod ensemble;
pub mod experiment;
pub mod opalg;
pub mod oracle;
pub mod shadows;
pub mod validation;

use thiserror::Error;

pub use num_complex::Complex64 as C64;

/// Dense complex matrix used for operators and superoperators.
pub type Mat = ndarray::Array2<C64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("logarithm of a singular operator (min eigenvalue {0:.3e})")]
    SingularLog(f64),
    #[error("inconsistent tensor factor dimensions: {0}")]
    InconsistentDims(String),
    #[error("unsupported moment order k = {0}")]
    UnsupportedOrder(usize),
    #[error("dimension cap exceeded: 2^{n} > 2^{cap}")]
    DimensionCap { n: usize, cap: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unreachable outcome {0} (probability below threshold)")]
    UnreachableOutcome(String),
    #[error("enumeration cap exceeded: {0} outcomes")]
    EnumerationCap(usize),
    #[error("empty record list")]
    EmptyRecords,
    #[error("too few samples for a normal-approximation bound: {0} < 30")]
    TooFewSamples(usize),
    #[error("operator is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
