//! Low-rank PPT states of bipartite quantum systems and their relation to
//! product vectors in the kernel.
//!
//! A density matrix ρ on ℂ^{nA}⊗ℂ^{nB} is a PPT state when both ρ and its
//! partial transpose ρᴾ are positive semidefinite. This crate builds the
//! machinery for studying the lowest-rank PPT states at desk scale:
//!
//! - Hermitian/bipartite linear algebra: tensor products, partial
//!   transposition, spectral data, pseudoinverses, SL⊗SL transformations
//!   ([`hermitian`]).
//! - Superoperators on the real Hilbert space of Hermitian matrices, their
//!   dense matrix representations, null spaces and the extremality test
//!   ([`superop`]).
//! - Product vectors: detection, counting, standard forms, determinant
//!   invariants, the pentagon permutation classes, and a stochastic finder of
//!   product vectors inside a subspace ([`products`]).
//! - State construction and reconstruction from kernel product vectors,
//!   including the linear constraint census ([`states`]).
//! - Tangent spaces of fixed-rank surfaces and the explicit rank-(4,4) →
//!   rank-(5,5) perturbation pipeline ([`perturb`]).
//! - Surface dimension formulas and measurements ([`dimension`]).
//! - RK4 integration of curves and geodesics on fixed-rank surfaces,
//!   boundary-seeking flows, PCA projection and plane sections ([`flow`]).
//! - File formats and deterministic run configuration ([`io`]).
//!
//! All operations are pure functions of their inputs; with the default
//! `parallel` feature, embarrassingly parallel inner loops (finder restarts,
//! grid scans, census batches) run on rayon.

use thiserror::Error;

pub mod dimension;
pub mod flow;
pub mod hermitian;
pub mod io;
pub mod perturb;
pub mod products;
pub mod states;
pub mod superop;

pub(crate) mod linalg;
pub(crate) mod parallel;

pub use hermitian::{
    tensor_product, BipartiteDims, CMatrix, CVector, HermitianMatrix, SpectralData, Tolerances,
    C64,
};
pub use superop::{HermBasis, NullSpaceResult, SuperOpKind, SuperOperator};

/// Errors shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("bipartite dimensions must be at least 2x2 (got {na}x{nb})")]
    BadDims { na: usize, nb: usize },

    #[error("invalid tolerances: {0}")]
    BadTolerances(String),

    #[error("factor matrix is singular (relative |det| = {0:.3e})")]
    SingularFactor(f64),

    #[error("zero vector")]
    ZeroVector,

    #[error("zero trace, cannot normalize")]
    ZeroTrace,

    #[error("empty product vector set")]
    EmptySet,

    #[error("expected {expected} product vectors, got {got}")]
    WrongVectorCount { expected: usize, got: usize },

    #[error("genericity violated: {0}")]
    Genericity(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("invariants are not real and strictly positive: {0}")]
    NotPositiveInvariants(String),

    #[error("standard-form parameters are not real within tolerance")]
    NotClassifiable,

    #[error("state is not PPT (min eigenvalue {0:.3e})")]
    NotPpt(f64),

    #[error("no phase solves the modulus condition: target {target:.6e} outside [{lo:.6e}, {hi:.6e}]")]
    InfeasiblePhase { target: f64, lo: f64, hi: f64 },

    #[error("no rank-increasing direction in the solution space (dimension {solution_dim})")]
    NoRankIncreasingDirection { solution_dim: usize },

    #[error("tangent drift {drift:.3e} exceeds limit {limit:.3e} at t = {t:.6}")]
    DriftExceeded { drift: f64, limit: f64, t: f64 },

    #[error("boundary search stalled (descent slope {0:.3e})")]
    BoundaryStall(f64),

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
pub(crate) mod testutil;
