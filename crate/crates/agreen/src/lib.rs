//! Numerical potential theory for planar convex bodies under anisotropic
//! p-Laplace-type operators `A = ∇f`.
//!
//! The crate computes:
//!
//! - explicit fundamental solutions `F` for operators `A = ∇f` with
//!   `f = k^p` built from the dual gauge `h` ([`fundamental`]);
//! - the `A`-harmonic Green's function with pole at infinity for the
//!   complement of a convex body, its Robin-type constant `k(∞)` and the
//!   capacity `C_A(E)` ([`green`]);
//! - the Minkowski-type boundary measure on `S¹` with per-face weights
//!   `c_i = ∫_{F_i} f(∇u) dH¹` ([`measure`]);
//! - verification harnesses for the Brunn–Minkowski inequality of `C_A`
//!   and the Hadamard variational formula ([`verify`]);
//! - a solver for the discrete Minkowski problem: recover the polytope
//!   whose face measures match prescribed data ([`minkowski`]).
//!
//! See the `examples/` directory for one runnable example per capability,
//! and the `agreen` binary for the command-line front end.

pub mod config;
pub mod fem;
pub mod fundamental;
pub mod green;
pub mod measure;
pub mod mesh;
pub mod minkowski;
pub mod operators;
pub mod polytope;
pub mod report;
pub mod verify;

// placeholder exports restored as modules land
pub use fundamental::FundamentalSolution;
pub use operators::{DualGauge, GaugeKind, OperatorSpec, Vec2};
pub use polytope::ConvexPolytope;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("operator: {0}")]
    Operator(String),
    #[error("polytope: {0}")]
    Polytope(String),
    #[error("mesh: {0}")]
    Mesh(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("measure data: {0}")]
    Data(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
