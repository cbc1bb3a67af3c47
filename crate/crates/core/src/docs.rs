//! Self-describing JSON documents for tool inputs and outputs.
//!
//! Every document carries a `kind` tag so files can be inspected and chained
//! between commands without out-of-band context. Complex numbers are stored
//! as two-element `[re, im]` arrays and 2×2 matrices as row-major nested
//! arrays of such pairs. Serialization goes through [`serde_json`], whose
//! float formatting is shortest-round-trip: writing and re-reading a document
//! reproduces every `f64` bit for bit, which more than covers seventeen
//! significant digits.

use serde::{Deserialize, Serialize};

use crate::bethe::BetheProblem;
use crate::error::{Error, Result};
use crate::fuchsian::{ConnectionReport, FuchsianConnection, MatrixSolution};
use crate::linalg::Mat2;
use crate::monodromy::{LoopClass, MonodromyReport, Z2Verdict};
use crate::oper::{SignConvention, SturmLiouville};
use crate::{C64, c64};

/// A complex number on disk: `[re, im]`.
pub type Pair = [f64; 2];

/// A 2×2 complex matrix on disk: row-major `[[a, b], [c, d]]`.
pub type MatPairs = [[Pair; 2]; 2];

/// Encode one complex number.
pub fn pair_from(z: C64) -> Pair {
    [z.re, z.im]
}

/// Decode one complex number.
pub fn pair_into(p: Pair) -> C64 {
    c64(p[0], p[1])
}

/// Encode a complex vector.
pub fn pairs_from(zs: &[C64]) -> Vec<Pair> {
    zs.iter().map(|&z| pair_from(z)).collect()
}

/// Decode a complex vector.
pub fn pairs_into(ps: &[Pair]) -> Vec<C64> {
    ps.iter().map(|&p| pair_into(p)).collect()
}

/// Encode a 2×2 matrix.
pub fn mat_from(m: &Mat2) -> MatPairs {
    [
        [pair_from(m.m[0][0]), pair_from(m.m[0][1])],
        [pair_from(m.m[1][0]), pair_from(m.m[1][1])],
    ]
}

/// Decode a 2×2 matrix.
pub fn mat_into(m: &MatPairs) -> Mat2 {
    Mat2::new(pair_into(m[0][0]), pair_into(m[0][1]), pair_into(m[1][0]), pair_into(m[1][1]))
}

fn expect_kind(found: &str, want: &'static str) -> Result<()> {
    if found == want {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("document kind is {found:?}, expected {want:?}")))
    }
}

/// Input document describing an algebraic system to solve or transform.
///
/// `poles` are the marked points and `weights` their (real) weights, aligned
/// index by index. `num_roots` is the number of spectral parameters. The
/// optional `moving_poles` extend the pole set with weight-one apparent
/// points for the connection-level commands, and `seed` pins the random
/// starts of the solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemDocument {
    /// Always `"problem"`.
    pub kind: String,
    /// Marked points.
    pub poles: Vec<Pair>,
    /// Real weights, one per marked point.
    pub weights: Vec<f64>,
    /// Number of spectral parameters.
    pub num_roots: usize,
    /// Optional weight-one apparent points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moving_poles: Option<Vec<Pair>>,
    /// Optional solver seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Pole data split for the connection-level commands: fixed points with
/// their exponents `s = (λ + 1)/2`, and the apparent points separately.
#[derive(Debug, Clone)]
pub struct ProblemSplit {
    /// Fixed marked points.
    pub fixed: Vec<C64>,
    /// Apparent (weight-one) points.
    pub moving: Vec<C64>,
    /// Exponents at the fixed points.
    pub spins: Vec<C64>,
}

impl ProblemDocument {
    /// The `kind` tag of this document type.
    pub const KIND: &'static str = "problem";

    /// Build a document from explicit parts.
    pub fn from_parts(
        fixed: &[C64],
        weights: &[f64],
        num_roots: usize,
        moving: Option<&[C64]>,
        seed: Option<u64>,
    ) -> ProblemDocument {
        ProblemDocument {
            kind: ProblemDocument::KIND.into(),
            poles: pairs_from(fixed),
            weights: weights.to_vec(),
            num_roots,
            moving_poles: moving.map(pairs_from),
            seed,
        }
    }

    /// Check the tag and the field lengths.
    pub fn validate(&self) -> Result<()> {
        expect_kind(&self.kind, ProblemDocument::KIND)?;
        if self.weights.len() != self.poles.len() {
            return Err(Error::InvalidInput(format!(
                "{} poles but {} weights",
                self.poles.len(),
                self.weights.len()
            )));
        }
        if self.poles.is_empty() {
            return Err(Error::InvalidInput("a problem needs at least one pole".into()));
        }
        Ok(())
    }

    /// The full algebraic system: fixed poles with their weights, followed by
    /// any apparent points with weight one.
    pub fn to_problem(&self) -> Result<BetheProblem> {
        self.validate()?;
        let mut poles = pairs_into(&self.poles);
        let mut weights: Vec<C64> = self.weights.iter().map(|&w| c64(w, 0.0)).collect();
        if let Some(moving) = &self.moving_poles {
            poles.extend(pairs_into(moving));
            weights.extend(std::iter::repeat(c64(1.0, 0.0)).take(moving.len()));
        }
        BetheProblem::new(poles, weights, self.num_roots)
    }

    /// The split view used by the connection-level commands.
    pub fn split(&self) -> Result<ProblemSplit> {
        self.validate()?;
        Ok(ProblemSplit {
            fixed: pairs_into(&self.poles),
            moving: self.moving_poles.as_deref().map(|m| pairs_into(m)).unwrap_or_default(),
            spins: self.weights.iter().map(|&w| c64((w + 1.0) / 2.0, 0.0)).collect(),
        })
    }
}

/// One solution of the algebraic system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionEntry {
    /// Spectral parameters, canonically ordered.
    pub roots: Vec<Pair>,
    /// Final max-norm of the system residual.
    pub residual: f64,
    /// Whether the solution met the solver tolerance.
    pub certified: bool,
    /// Per-pole eigenvalues evaluated on these roots.
    pub eigenvalues: Vec<Pair>,
}

/// Output of the solve command: every distinct solution found.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionsDocument {
    /// Always `"solutions"`.
    pub kind: String,
    /// Solutions in deterministic order.
    pub solutions: Vec<SolutionEntry>,
}

impl SolutionsDocument {
    /// The `kind` tag of this document type.
    pub const KIND: &'static str = "solutions";
}

/// A second-order scalar operator with double and simple poles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperDocument {
    /// Always `"oper"`.
    pub kind: String,
    /// Singular points.
    pub poles: Vec<Pair>,
    /// Coefficients of the double poles.
    pub double_coeffs: Vec<Pair>,
    /// Residues of the simple poles.
    pub residues: Vec<Pair>,
    /// `"plus"` or `"minus"`, fixing the sign convention of the potential.
    pub convention: String,
}

impl OperDocument {
    /// The `kind` tag of this document type.
    pub const KIND: &'static str = "oper";

    /// Encode an operator.
    pub fn from_oper(op: &SturmLiouville) -> OperDocument {
        OperDocument {
            kind: OperDocument::KIND.into(),
            poles: pairs_from(&op.poles),
            double_coeffs: pairs_from(&op.double_coeffs),
            residues: pairs_from(&op.residues),
            convention: match op.convention {
                SignConvention::Plus => "plus".into(),
                SignConvention::Minus => "minus".into(),
            },
        }
    }

    /// Decode into an operator.
    pub fn to_oper(&self) -> Result<SturmLiouville> {
        expect_kind(&self.kind, OperDocument::KIND)?;
        let convention = match self.convention.as_str() {
            "plus" => SignConvention::Plus,
            "minus" => SignConvention::Minus,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown sign convention {other:?}; expected \"plus\" or \"minus\""
                )));
            }
        };
        SturmLiouville::new(
            pairs_into(&self.poles),
            pairs_into(&self.double_coeffs),
            pairs_into(&self.residues),
            convention,
        )
    }
}

/// One operator together with the solution data it was built from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperEntry {
    /// Spectral parameters of the underlying solution.
    pub roots: Vec<Pair>,
    /// Per-pole eigenvalues of the underlying solution.
    pub eigenvalues: Vec<Pair>,
    /// The operator.
    pub oper: OperDocument,
    /// Worst annihilation residual of the explicit solution, when verified.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

/// Output of the oper command: one operator per certified solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperSetDocument {
    /// Always `"oper_set"`.
    pub kind: String,
    /// One entry per certified solution, in solve order.
    pub items: Vec<OperEntry>,
}

impl OperSetDocument {
    /// The `kind` tag of this document type.
    pub const KIND: &'static str = "oper_set";
}

/// A rank-two connection with simple poles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectionDocument {
    /// Always `"connection"`.
    pub kind: String,
    /// Pole locations.
    pub poles: Vec<Pair>,
    /// Residue matrices, row-major.
    pub residues: Vec<MatPairs>,
}

impl ConnectionDocument {
    /// The `kind` tag of this document type.
    pub const KIND: &'static str = "connection";

    /// Encode a connection.
    pub fn from_connection(conn: &FuchsianConnection) -> ConnectionDocument {
        ConnectionDocument {
            kind: ConnectionDocument::KIND.into(),
            poles: pairs_from(&conn.poles),
            residues: conn.residues.iter().map(mat_from).collect(),
        }
    }

    /// Decode into a connection.
    pub fn to_connection(&self) -> Result<FuchsianConnection> {
        expect_kind(&self.kind, ConnectionDocument::KIND)?;
        FuchsianConnection::new(
            pairs_into(&self.poles),
            self.residues.iter().map(mat_into).collect(),
        )
    }
}

/// One monodromy loop: where it winds and what came back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopEntry {
    /// The singularity encircled.
    pub center: Pair,
    /// Loop radius.
    pub radius: f64,
    /// Transported matrix.
    pub matrix: MatPairs,
    /// `"plus_identity"`, `"minus_identity"`, `"scalar"`, or `"nontrivial"`.
    pub class: String,
    /// Operator-norm distance to the nearer of `±I`.
    pub deviation: f64,
}

/// Output of the monodromy command: loop data plus the sign verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonodromyDocument {
    /// Always `"monodromy_report"`.
    pub kind: String,
    /// Base point shared by all loops.
    pub base: Pair,
    /// Integration tolerance used.
    pub integration_tol: f64,
    /// Classification tolerance used.
    pub class_tol: f64,
    /// Per-singularity loops, left to right.
    pub loops: Vec<LoopEntry>,
    /// True iff every loop matrix is within the class tolerance of `±I`.
    pub is_sign_representation: bool,
    /// Per-loop sign (`0` when unresolved).
    pub signs: Vec<i8>,
    /// Per-loop deviation from the nearer of `±I`.
    pub deviations: Vec<f64>,
}

impl MonodromyDocument {
    /// The `kind` tag of this document type.
    pub const KIND: &'static str = "monodromy_report";

    /// Encode a report and its sign verdict.
    pub fn from_report(report: &MonodromyReport, verdict: &Z2Verdict, class_tol: f64) -> Self {
        MonodromyDocument {
            kind: MonodromyDocument::KIND.into(),
            base: pair_from(report.base),
            integration_tol: report.tol,
            class_tol,
            loops: report
                .loops
                .iter()
                .map(|l| LoopEntry {
                    center: pair_from(l.center),
                    radius: l.radius,
                    matrix: mat_from(&l.matrix),
                    class: match l.class {
                        LoopClass::PlusIdentity => "plus_identity".into(),
                        LoopClass::MinusIdentity => "minus_identity".into(),
                        LoopClass::Scalar(_) => "scalar".into(),
                        LoopClass::Nontrivial => "nontrivial".into(),
                    },
                    deviation: l.deviation,
                })
                .collect(),
            is_sign_representation: verdict.is_z2,
            signs: verdict.signs.clone(),
            deviations: verdict.deviations.clone(),
        }
    }
}

/// Normalization checks of a connection, entry by entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationEntry {
    /// `|Tr A_i|` per residue.
    pub trace_defects: Vec<f64>,
    /// `|Σ_i (A_i)₁₂|`.
    pub off_diag_12: f64,
    /// `|Σ_i (A_i)₂₁|`.
    pub off_diag_21: f64,
    /// `|(ΣA)₁₁ + (ΣA)₂₂|`.
    pub diag_skew: f64,
    /// Diagonal value of the residue sum.
    pub kappa: Pair,
    /// Exponents `d_i = sqrt(−det A_i)`.
    pub d_values: Vec<Pair>,
    /// Conjunction of all checks at the tolerance used.
    pub pass: bool,
}

impl ValidationEntry {
    /// Encode a validation report.
    pub fn from_report(report: &ConnectionReport) -> ValidationEntry {
        ValidationEntry {
            trace_defects: report.trace_defects.clone(),
            off_diag_12: report.off_diag_12,
            off_diag_21: report.off_diag_21,
            diag_skew: report.diag_skew,
            kappa: pair_from(report.kappa),
            d_values: pairs_from(&report.d_values),
            pass: report.pass,
        }
    }
}

/// One lifted solution: the connection, the explicit flat section data, and
/// the checks that certify them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PullbackEntry {
    /// Spectral parameters of the underlying solution.
    pub roots: Vec<Pair>,
    /// Per-pole coupling constants of the lift.
    pub alphas: Vec<Pair>,
    /// Residual of the algebraic system at the roots used.
    pub bethe_defect: f64,
    /// The lifted connection.
    pub connection: ConnectionDocument,
    /// Branch points of the scalar prefactor of the flat section.
    pub prefactor_poles: Vec<Pair>,
    /// Prefactor exponents.
    pub prefactor_exponents: Vec<Pair>,
    /// First polynomial component, coefficients by ascending degree.
    pub phi1: Vec<Pair>,
    /// Second polynomial component, coefficients by ascending degree.
    pub phi2: Vec<Pair>,
    /// Normalization checks of the connection.
    pub validation: ValidationEntry,
    /// Worst flatness residual of the section, when verified.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

impl PullbackEntry {
    /// Encode the connection, section, and validation for one solution.
    pub fn from_parts(
        roots: &[C64],
        alphas: &[C64],
        bethe_defect: f64,
        conn: &FuchsianConnection,
        sol: &MatrixSolution,
        validation: &ConnectionReport,
    ) -> PullbackEntry {
        PullbackEntry {
            roots: pairs_from(roots),
            alphas: pairs_from(alphas),
            bethe_defect,
            connection: ConnectionDocument::from_connection(conn),
            prefactor_poles: pairs_from(&sol.poles),
            prefactor_exponents: pairs_from(&sol.exponents),
            phi1: pairs_from(&sol.phi1.coeffs),
            phi2: pairs_from(&sol.phi2.coeffs),
            validation: ValidationEntry::from_report(validation),
            residual: None,
        }
    }
}

/// Output of the pullback command: one lift per certified solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PullbackDocument {
    /// Always `"pullback_report"`.
    pub kind: String,
    /// One entry per certified solution, in solve order.
    pub items: Vec<PullbackEntry>,
}

impl PullbackDocument {
    /// The `kind` tag of this document type.
    pub const KIND: &'static str = "pullback_report";
}

/// Output of the reduce command: the scalar operator recovered from a
/// connection, with the apparent points found along the way.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReduceDocument {
    /// Always `"reduce_report"`.
    pub kind: String,
    /// `"first"` or `"second"`: which column drove the reduction.
    pub component: String,
    /// Zeros of the chosen off-diagonal entry.
    pub moving_poles: Vec<Pair>,
    /// Leading constant of that entry.
    pub leading_constant: Pair,
    /// Gauge exponents at the fixed poles.
    pub h_fixed: Vec<Pair>,
    /// Gauge exponents at the apparent points.
    pub h_moving: Vec<Pair>,
    /// The recovered operator.
    pub oper: OperDocument,
    /// Worst mismatch between the two independent potential formulas, when
    /// verified.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential_mismatch: Option<f64>,
}

impl ReduceDocument {
    /// The `kind` tag of this document type.
    pub const KIND: &'static str = "reduce_report";
}

/// Compact monodromy verdict embedded in a transform report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignSummary {
    /// True iff every loop matrix is within tolerance of `±I`.
    pub is_sign_representation: bool,
    /// Per-loop signs, left to right.
    pub signs: Vec<i8>,
    /// Worst per-loop deviation.
    pub max_deviation: f64,
}

impl SignSummary {
    /// Encode a sign verdict.
    pub fn from_verdict(v: &Z2Verdict) -> SignSummary {
        SignSummary {
            is_sign_representation: v.is_z2,
            signs: v.signs.clone(),
            max_deviation: v.deviations.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Output of the transform command: the data before and after an elementary
/// weight shift, with every certificate measured on the way.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformDocument {
    /// Always `"transform_report"`.
    pub kind: String,
    /// `"raise_lower"`, `"raise_raise"`, `"lower_lower"`, `"lower_raise"`,
    /// or `"identity"`.
    pub pattern: String,
    /// Indices of the two shifted poles (equal indices for `"identity"`).
    pub at: [usize; 2],
    /// Weights at fixed then apparent poles, before.
    pub weights_before: Vec<Pair>,
    /// Weights at fixed then (new) apparent poles, after.
    pub weights_after: Vec<Pair>,
    /// Connection exponents before.
    pub d_before: Vec<Pair>,
    /// Connection exponents after.
    pub d_after: Vec<Pair>,
    /// Apparent points before.
    pub moving_before: Vec<Pair>,
    /// Apparent points after.
    pub moving_after: Vec<Pair>,
    /// Roots before.
    pub roots_before: Vec<Pair>,
    /// Roots after.
    pub roots_after: Vec<Pair>,
    /// Worst violation of the divisibility forced by lowering patterns.
    pub divisibility_defect: f64,
    /// Residual of the returned roots in the shifted system.
    pub residual: f64,
    /// Rational-reconstruction certificate of the connection transform.
    pub transform_certificate: f64,
    /// The shifted problem, ready to feed back into any command.
    pub problem: ProblemDocument,
    /// Monodromy signs before the shift, when verified.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monodromy_before: Option<SignSummary>,
    /// Monodromy signs after the shift, when verified.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monodromy_after: Option<SignSummary>,
}

impl TransformDocument {
    /// The `kind` tag of this document type.
    pub const KIND: &'static str = "transform_report";
}

/// Output of the dual command: the companion solution sharing the same
/// connection, certified against its own algebraic system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualDocument {
    /// Always `"dual_report"`.
    pub kind: String,
    /// Apparent points of the dual system.
    pub moving: Vec<Pair>,
    /// Roots of the dual system, canonically ordered.
    pub roots: Vec<Pair>,
    /// Residual of the dual roots in the dual system.
    pub residual: f64,
    /// The dual problem, ready to feed back into any command.
    pub problem: ProblemDocument,
}

impl DualDocument {
    /// The `kind` tag of this document type.
    pub const KIND: &'static str = "dual_report";
}

/// One row of the eigenvector cross-check table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepcheckEntry {
    /// Spectral parameters of the solution checked.
    pub roots: Vec<Pair>,
    /// Eigenvalues predicted from the roots.
    pub predicted_chi: Vec<Pair>,
    /// Rayleigh quotients of the constructed eigenvector.
    pub rayleigh_chi: Vec<Pair>,
    /// Per-site relative residuals of the eigenvector.
    pub residuals: Vec<f64>,
    /// True when every residual is within tolerance.
    pub is_eigenvector: bool,
    /// Worst distance of a predicted eigenvalue from the matching operator
    /// spectrum on the weight subspace.
    pub spectrum_distance: f64,
    /// Worst componentwise gap between predicted and Rayleigh eigenvalues.
    pub chi_gap: f64,
}

/// Output of the repcheck command: one row per certified solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepcheckDocument {
    /// Always `"repcheck_report"`.
    pub kind: String,
    /// Tensor-model dimension.
    pub dimension: usize,
    /// Dimension of the weight subspace the check ran on.
    pub subspace_dimension: usize,
    /// One row per certified solution, in solve order.
    pub entries: Vec<RepcheckEntry>,
}

impl RepcheckDocument {
    /// The `kind` tag of this document type.
    pub const KIND: &'static str = "repcheck_report";
}

/// Tolerances and knobs a command actually used, echoed verbatim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToleranceEcho {
    /// Primary tolerance of the command.
    pub tol: f64,
    /// Solver seed in effect.
    pub seed: u64,
    /// Worker threads in effect.
    pub jobs: usize,
    /// Whether verification sections were requested.
    pub verify: bool,
    /// Base point override for monodromy, when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Pair>,
}

/// Envelope around every command output: what ran, on what, with which
/// knobs, and what came out. `wall_time_ms` is the only field that varies
/// between identical runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    /// Always `"run_report"`.
    pub kind: String,
    /// Subcommand name.
    pub command: String,
    /// Tool version.
    pub version: String,
    /// Knobs in effect.
    pub tolerances: ToleranceEcho,
    /// Verbatim echo of the input document.
    pub inputs: serde_json::Value,
    /// The kind-tagged result payload.
    pub results: serde_json::Value,
    /// Wall-clock duration of the run, milliseconds.
    pub wall_time_ms: f64,
}

impl RunReport {
    /// The `kind` tag of this document type.
    pub const KIND: &'static str = "run_report";
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_document_round_trips_floats_bit_for_bit() {
        let doc = ProblemDocument::from_parts(
            &[c64(0.0, 0.0), c64(1.0 / 3.0, -2.0 / 7.0), c64(std::f64::consts::PI, 1e-17)],
            &[1.0, 2.0, 0.1 + 0.2],
            2,
            Some(&[c64(4.0, 1.0 / 11.0)]),
            Some(42),
        );
        let text = serde_json::to_string(&doc).unwrap();
        let back: ProblemDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(doc.poles, back.poles);
        assert_eq!(doc.weights, back.weights);
        assert_eq!(doc.moving_poles, back.moving_poles);
        assert_eq!(doc.seed, back.seed);
    }

    #[test]
    fn problem_document_builds_the_combined_system() {
        let doc = ProblemDocument::from_parts(
            &[c64(0.0, 0.0), c64(1.0, 0.0)],
            &[1.0, 1.0],
            1,
            Some(&[c64(4.0, 0.0)]),
            None,
        );
        let problem = doc.to_problem().unwrap();
        assert_eq!(problem.poles.len(), 3);
        assert_eq!(problem.weights[2], c64(1.0, 0.0));
        let split = doc.split().unwrap();
        assert_eq!(split.spins, vec![c64(1.0, 0.0), c64(1.0, 0.0)]);
        assert_eq!(split.moving, vec![c64(4.0, 0.0)]);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let doc = ProblemDocument {
            kind: "problem".into(),
            poles: vec![[0.0, 0.0], [1.0, 0.0]],
            weights: vec![1.0],
            num_roots: 1,
            moving_poles: None,
            seed: None,
        };
        assert!(doc.validate().is_err());
    }

    #[test]
    fn wrong_kind_tag_is_rejected() {
        let doc = ProblemDocument {
            kind: "connection".into(),
            poles: vec![[0.0, 0.0]],
            weights: vec![1.0],
            num_roots: 0,
            moving_poles: None,
            seed: None,
        };
        assert!(doc.validate().is_err());
    }

    #[test]
    fn oper_document_round_trips_through_the_operator() {
        let op = SturmLiouville::new(
            vec![c64(0.0, 0.0), c64(1.0, 0.0)],
            vec![c64(0.75, 0.0), c64(0.75, 0.0)],
            vec![c64(1.5, 0.0), c64(-1.5, 0.0)],
            SignConvention::Minus,
        )
        .unwrap();
        let doc = OperDocument::from_oper(&op);
        let back = doc.to_oper().unwrap();
        assert_eq!(back.poles, op.poles);
        assert_eq!(back.double_coeffs, op.double_coeffs);
        assert_eq!(back.residues, op.residues);
        assert_eq!(back.convention, op.convention);
    }

    #[test]
    fn connection_document_round_trips_matrices() {
        let conn = FuchsianConnection::new(
            vec![c64(0.0, 0.0), c64(2.0, 1.0)],
            vec![
                Mat2::new(c64(0.5, 0.0), c64(1.0, -1.0), c64(0.0, 0.25), c64(-0.5, 0.0)),
                Mat2::new(c64(-0.5, 0.0), c64(0.125, 0.0), c64(3.0, 0.0), c64(0.5, 0.0)),
            ],
        )
        .unwrap();
        let doc = ConnectionDocument::from_connection(&conn);
        let back = doc.to_connection().unwrap();
        for (m, n) in conn.residues.iter().zip(&back.residues) {
            assert_eq!(m.m, n.m);
        }
    }
}
