//! Crate-wide error type.
//!
//! Every fallible public operation returns [`Result`]. Variants distinguish
//! numerical failures (root finding did not converge, a Newton run could not be
//! certified) from structural ones (colliding poles, a modification that does not
//! factor through a trivial bundle, a transformed connection that failed its
//! first-order pole check) so callers — in particular the CLI — can map them to
//! distinct exit codes.

use crate::C64;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the solvers and geometric constructions.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Polynomial root refinement stalled above the requested tolerance.
    #[error("root finding did not converge: residual {residual:.3e} after {iterations} iterations")]
    RootsDidNotConverge {
        /// Best residual reached.
        residual: f64,
        /// Iterations spent before giving up.
        iterations: usize,
    },

    /// Two poles (or a pole and a root) coincide closer than the working tolerance allows.
    #[error("pole collision: points {a} and {b} are too close (|a-b| = {dist:.3e})")]
    PoleCollision {
        /// First offending point.
        a: C64,
        /// Second offending point.
        b: C64,
        /// Their distance.
        dist: f64,
    },

    /// A tensor-product model would exceed the dense dimension cap.
    #[error("tensor model dimension {dim} exceeds cap {cap}")]
    DimensionCap {
        /// Requested dimension.
        dim: usize,
        /// Maximum supported dense dimension.
        cap: usize,
    },

    /// A frame or linear system that must be invertible is numerically singular.
    #[error("singular frame or linear system: {context}")]
    SingularFrame {
        /// Human-readable description of where the singularity occurred.
        context: &'static str,
    },

    /// The pair of elementary modifications does not factor through a trivial bundle,
    /// so no global meromorphic gauge of the requested shape exists.
    #[error("modification pair yields a nontrivial bundle type; no degree-zero factorization")]
    NontrivialBundleType,

    /// Twist directions do not align with residue eigendirections: the transformed
    /// connection keeps second-order poles and is not Fuchsian.
    #[error("twist directions misaligned with residue eigenvectors: transformed connection is not Fuchsian ({detail})")]
    DirectionMismatch {
        /// What check failed.
        detail: String,
    },

    /// The dual solution is identically zero (second component of the kernel vanishes).
    #[error("degenerate dual: second kernel component vanishes identically")]
    DegenerateDual,

    /// An exponent that must be nonzero for a construction (e.g. a weight used as a
    /// denominator) vanished.
    #[error("zero exponent encountered: {context}")]
    ZeroExponent {
        /// Where the zero exponent was encountered.
        context: &'static str,
    },

    /// A multi-stage pipeline failed at a named stage.
    #[error("stage `{stage}` failed: {detail}")]
    StageFailure {
        /// Pipeline stage name.
        stage: &'static str,
        /// Description of the failure.
        detail: String,
    },

    /// Newton iteration finished but the solution could not be certified
    /// (singular Jacobian or residual above tolerance).
    #[error("solution not certified: {detail}")]
    Uncertified {
        /// Description of the certification failure.
        detail: String,
    },

    /// Malformed or inconsistent input data.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
