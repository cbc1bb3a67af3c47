//! Numerical toolkit for the rational sl2 Gaudin model and its differential-equation
//! side: Bethe-system solving, commuting Hamiltonians on tensor products of
//! finite-dimensional irreducibles, scalar Sturm–Liouville opers with quasi-polynomial
//! solutions, rank-2 Fuchsian connections and their scalar reductions, numerical
//! monodromy along pole lassos, and elementary isomonodromic (Hecke-type) weight-shift
//! transformations together with the dual-solution construction.
//!
//! The crate is organized bottom-up:
//!
//! - [`calgebra`]: dense complex polynomials, root finding, rational functions with
//!   cached pole/residue data.
//! - [`linalg`]: small dense complex matrices, LU solves, 2×2 helpers.
//! - [`rep`]: sl2 irreducibles, tensor models, Gaudin Hamiltonians, Bethe vectors.
//! - [`bethe`]: the Bethe algebraic system, its multi-start damped-Newton solver, and
//!   per-pole eigenvalue formulas.
//! - [`oper`]: scalar second-order operators with double and simple poles, both sign
//!   conventions, and quasi-polynomial candidate solutions.
//! - [`fuchsian`]: traceless rank-2 Fuchsian connections, matrix→scalar reduction with
//!   apparent (moving) poles, and the pull-back construction from Bethe data.
//! - [`monodromy`]: parallel transport of 2×2 systems along paths, lasso loops around
//!   each singularity, and sign classification of the monodromy group.
//! - [`schlesinger`]: elementary modifications at a point, pair factorization into an
//!   inner polynomial and outer normalized gauge, the induced connection transform,
//!   weight-shift pipelines on Bethe data, and the dual solution.
//! - [`docs`]: serde document types for the JSON interchange format used by the CLI.

pub mod bethe;
pub mod calgebra;
pub mod docs;
pub mod fuchsian;
pub mod linalg;
pub mod monodromy;
pub mod oper;
pub mod rep;
pub mod schlesinger;

mod error;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Convenience constructor for a complex number.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
