//! # qemd
//!
//! Quantum couplings and the quantum earth mover's distance, at desk scale.
//!
//! A quantum coupling of two density matrices `rho_A`, `rho_B` is a joint
//! state on the doubled space whose partial traces reproduce both. This
//! crate constructs such couplings, bounds their overlap with the symmetric
//! subspace, optimizes linear objectives over the coupling polytope, and
//! applies the same machinery to necessary criteria for the tripartite
//! quantum marginal problem.
//!
//! Modules:
//!
//! - [`linalg`] — dense complex matrices, Hermitian Jacobi eigensolver,
//!   one-sided Jacobi SVD, partial traces, tensor products.
//! - [`qstate`] — density matrices, fidelity, trace distance, symmetric /
//!   antisymmetric projectors, purification, aligned ensemble decompositions,
//!   Haar sampling, Kraus channels, entropy.
//! - [`coupling`] — coupling constructions (diagonal, rank-2, general),
//!   transport-plan algorithms, Caratheodory ensemble reduction, and the
//!   fidelity/distance bound checks relating marginals to swap statistics.
//! - [`optimizer`] — extremal coupling overlaps by projected gradient ascent
//!   with Dykstra projections, the exact two-copy twirl, and the numerical
//!   demonstration that no bijection maps minimal antisymmetric overlap to
//!   trace distance or infidelity.
//! - [`tripartite`] — necessary-condition checkers for three-party marginal
//!   compatibility, the two-qubit symmetric-extension criterion, entropy
//!   inequalities, and the classical gluing construction.
//!
//! All dimensions are small (a few dozen at most); every routine is a pure
//! function of its inputs and deterministic, with randomness always driven
//! by an explicit seed.

pub mod coupling;
pub mod linalg;
pub mod optimizer;
pub mod qstate;
pub mod tripartite;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("not Hermitian: deviation {deviation:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("not positive semidefinite: eigenvalue {eigenvalue:.3e} below -{tol:.3e}")]
    NotPsd { eigenvalue: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("vector not normalized: norm {0}")]
    NotNormalized(f64),

    #[error("invalid matrix data: {0}")]
    InvalidData(String),

    #[error("alignment preconditions violated: {0}")]
    AlignmentViolation(String),

    #[error("marginal mismatch: {0}")]
    MarginalMismatch(String),

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
