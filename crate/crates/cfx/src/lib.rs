//! Componental operator calculus on finite-dimensional product spaces.
//!
//! The crate works with block-structured vectors in `H = R^{n_1} x ... x R^{n_n}`
//! and operators `T: H -> H` whose properties (nonexpansivity, firm
//! nonexpansivity, cutter, quasi-nonexpansivity, contraction, ...) are
//! attributed per component rather than to the full operator. On top of that
//! it provides sampling-based certification of those properties, Picard
//! iteration with per-component contraction error bounds, and the
//! Cimmino/DROP family of simultaneous projection solvers for sparse linear
//! systems, with per-component convergence diagnostics.
//!
//! See the `examples/` directory for one runnable example per capability, or
//! the `cfx` binary for batch use.

pub mod checks;
pub mod cli;
mod error;
pub mod operators;
pub mod problems;
pub mod solvers;
pub mod space;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
