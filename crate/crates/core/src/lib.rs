//! Standard (ideal) triangularization of discretized kernel operators.
//!
//! The crate models `L^2(X, mu)` for `X = [0,1] ∪ A` as a finite set of
//! quadrature cells plus unit-mass atoms. Operators are stored as dense
//! matrices. On top of that it provides spectra of standard compressions,
//! exhaustive checks of the increasing-spectrum property, cycle and trace
//! diagnostics, and constructors plus an independent verifier for block
//! upper-triangular forms with respect to chains of standard subspaces.

pub mod cli;
pub mod cycles;
pub mod descriptor;
mod eigen;
mod error;
pub mod graph;
pub mod increasing_spectrum;
pub mod measure_space;
pub mod operators;
pub mod spectral;
pub mod triangularize;

pub use error::{Error, Result};
pub use measure_space::{build_space, enumerate_standard_pairs, nested_chain, MeasureSpace, StandardSet};
pub use operators::{FiniteRankOperator, Operator};
pub use spectral::{eigenvalues, SpectrumReport};
pub use triangularize::{CertificateKind, TriangularizationCertificate};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Default relative threshold below which an entry counts as zero.
pub const ZERO_THRESHOLD: f64 = 1e-10;
