//! Second-order scalar operators with prescribed double and simple poles, and
//! quasi-polynomial candidate solutions.
//!
//! An operator is stored as a pole list with per-pole double coefficients `a_k`
//! and simple residues `b_k`, under one of two sign conventions:
//!
//! - `minus`: the operator is `∂² − U_B` with `U_B = Σ a_k/(z−p_k)² + b_k/(z−p_k)`;
//! - `plus`: the equation is `Φ″ + U Φ = 0` with `U` given by the same stored
//!   coefficients.
//!
//! A candidate solution is `Ψ(z) = Π_k (z−p_k)^{−s_k} · φ(z)` with polynomial φ.
//! Annihilation is checked on the rational cofactor `Ψ″/Ψ − U_B`, which exposes
//! the exact per-pole residue conditions instead of letting decaying prefactors
//! mask errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bethe::BetheProblem;
use crate::calgebra::{CPoly, poly_roots};
use crate::{C64, Error, Result, c64};

/// Sign convention for the stored coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// Operator `∂² − U_B`, annihilation means `Ψ″ = U_B Ψ`.
    Minus,
    /// Equation `Φ″ + U Φ = 0`.
    Plus,
}

/// Second-order operator with double and simple poles.
#[derive(Debug, Clone)]
pub struct SturmLiouville {
    /// Pole locations, pairwise distinct.
    pub poles: Vec<C64>,
    /// Coefficients of `(z − p_k)⁻²`.
    pub double_coeffs: Vec<C64>,
    /// Coefficients of `(z − p_k)⁻¹`.
    pub residues: Vec<C64>,
    /// Which sign convention the coefficients are stated in.
    pub convention: SignConvention,
}

impl SturmLiouville {
    /// Build with validation: matching lengths, distinct poles.
    pub fn new(
        poles: Vec<C64>,
        double_coeffs: Vec<C64>,
        residues: Vec<C64>,
        convention: SignConvention,
    ) -> Result<Self> {
        if poles.len() != double_coeffs.len() || poles.len() != residues.len() {
            return Err(Error::InvalidInput(format!(
                "lengths disagree: {} poles, {} double coefficients, {} residues",
                poles.len(),
                double_coeffs.len(),
                residues.len()
            )));
        }
        for i in 0..poles.len() {
            for j in i + 1..poles.len() {
                let dist = (poles[i] - poles[j]).norm();
                if dist < crate::calgebra::POLE_SEPARATION_TOL {
                    return Err(Error::PoleCollision { a: poles[i], b: poles[j], dist });
                }
            }
        }
        Ok(SturmLiouville { poles, double_coeffs, residues, convention })
    }

    /// Evaluate the stored coefficient function `Σ a_k/(z−p_k)² + b_k/(z−p_k)`.
    pub fn coefficient_fn(&self, z: C64) -> C64 {
        let mut acc = c64(0.0, 0.0);
        for ((&p, &a), &b) in self.poles.iter().zip(&self.double_coeffs).zip(&self.residues) {
            let inv = (z - p).inv();
            acc += (a * inv + b) * inv;
        }
        acc
    }

    /// The same operator restated in the other convention (both coefficient
    /// families negated). Applying twice is the identity.
    pub fn converted(&self) -> SturmLiouville {
        SturmLiouville {
            poles: self.poles.clone(),
            double_coeffs: self.double_coeffs.iter().map(|a| -a).collect(),
            residues: self.residues.iter().map(|b| -b).collect(),
            convention: match self.convention {
                SignConvention::Minus => SignConvention::Plus,
                SignConvention::Plus => SignConvention::Minus,
            },
        }
    }

    /// Restate in the requested convention (no-op when already there).
    pub fn in_convention(&self, convention: SignConvention) -> SturmLiouville {
        if self.convention == convention { self.clone() } else { self.converted() }
    }

    /// Local exponents at pole `k`: both roots of `ρ(ρ−1) = a_k` (with `a_k`
    /// read in the `minus` convention), sorted by real part.
    pub fn local_exponents(&self, k: usize) -> (C64, C64) {
        let a = match self.convention {
            SignConvention::Minus => self.double_coeffs[k],
            SignConvention::Plus => -self.double_coeffs[k],
        };
        // ρ = ½(1 ± sqrt(1 + 4a))
        let disc = (c64(1.0, 0.0) + 4.0 * a).sqrt();
        let r1 = (c64(1.0, 0.0) - disc) / 2.0;
        let r2 = (c64(1.0, 0.0) + disc) / 2.0;
        if r1.re <= r2.re { (r1, r2) } else { (r2, r1) }
    }
}

/// Build the operator certified Bethe data must satisfy: poles at the marked
/// points, double coefficients `¼λ_i(λ_i+2)`, simple residues the eigenvalues,
/// in the `minus` convention.
pub fn oper_from_bethe(problem: &BetheProblem, chi: &[C64]) -> Result<SturmLiouville> {
    if chi.len() != problem.poles.len() {
        return Err(Error::InvalidInput(format!(
            "{} eigenvalues for {} poles",
            chi.len(),
            problem.poles.len()
        )));
    }
    let double_coeffs = problem
        .weights
        .iter()
        .map(|&l| 0.25 * l * (l + 2.0))
        .collect();
    SturmLiouville::new(
        problem.poles.clone(),
        double_coeffs,
        chi.to_vec(),
        SignConvention::Minus,
    )
}

/// Quasi-polynomial candidate solution `Ψ(z) = Π_k (z−p_k)^{−s_k} φ(z)`.
#[derive(Debug, Clone)]
pub struct QuasiPolySolution {
    /// Branch-point locations.
    pub poles: Vec<C64>,
    /// Exponents `s_k` (the prefactor power is `−s_k`).
    pub exponents: Vec<C64>,
    /// Monic polynomial part.
    pub phi: CPoly,
}

/// The explicit candidate attached to Bethe data: exponents `λ_i/2` at the
/// marked points and `φ = Π_j (z − μ_j)`.
pub fn explicit_solution(problem: &BetheProblem, roots: &[C64]) -> QuasiPolySolution {
    QuasiPolySolution {
        poles: problem.poles.clone(),
        exponents: problem.weights.iter().map(|&l| l / 2.0).collect(),
        phi: CPoly::from_roots(roots),
    }
}

/// Outcome of checking `Ψ″ = U_B Ψ` on the rational cofactor.
#[derive(Debug, Clone)]
pub struct OperResidualReport {
    /// Defect of the double-pole condition at each operator pole:
    /// `c_k(c_k−1) − a_k` where `c_k` is Ψ's local log-derivative charge.
    pub double_defects: Vec<C64>,
    /// Defect of the simple-residue condition at each operator pole.
    pub pole_residue_defects: Vec<C64>,
    /// Residue of the cofactor at each root of φ (should vanish; equals twice
    /// the Bethe residual when the data comes from a Bethe instance).
    pub root_residue_defects: Vec<C64>,
    /// Max |cofactor| over the sample points.
    pub max_sampled: f64,
    /// Overall worst defect (max of all the above magnitudes).
    pub worst: f64,
}

/// Check annihilation of a quasi-polynomial candidate by the operator, both by
/// exact residue conditions and by sampling the rational cofactor at 20 points.
/// Ψ's poles must each match an operator pole; operator poles Ψ does not branch
/// at are treated with charge 0. Roots of φ must be simple.
pub fn apply_oper(op: &SturmLiouville, psi: &QuasiPolySolution) -> Result<OperResidualReport> {
    let op_minus = op.in_convention(SignConvention::Minus);
    let scale = op_minus.poles.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let match_tol = 1e-8 * scale;

    // Charge of Ψ's log-derivative at each operator pole.
    let mut charges = vec![c64(0.0, 0.0); op_minus.poles.len()];
    for (&pp, &s) in psi.poles.iter().zip(&psi.exponents) {
        let hit = op_minus.poles.iter().position(|&q| (q - pp).norm() <= match_tol);
        match hit {
            Some(k) => charges[k] -= s,
            None => {
                return Err(Error::InvalidInput(format!(
                    "candidate branch point {pp} is not an operator pole"
                )));
            }
        }
    }

    // φ-roots contribute charge +1 each; they must be simple and distinct from poles.
    let phi_roots = if psi.phi.degree().unwrap_or(0) == 0 {
        Vec::new()
    } else {
        poly_roots(&psi.phi, 1e-9)?
    };
    for (i, &r) in phi_roots.iter().enumerate() {
        for &r2 in &phi_roots[i + 1..] {
            let dist = (r - r2).norm();
            if dist < 1e-7 * scale {
                return Err(Error::PoleCollision { a: r, b: r2, dist });
            }
        }
    }

    // All charge-carrying points: operator poles then φ-roots.
    let mut points: Vec<C64> = op_minus.poles.clone();
    let mut cs: Vec<C64> = charges.clone();
    for &r in &phi_roots {
        if let Some(k) = op_minus.poles.iter().position(|&q| (q - r).norm() <= match_tol) {
            // A φ-root sitting on a pole shifts that pole's charge instead.
            cs[k] += 1.0;
        } else {
            points.push(r);
            cs.push(c64(1.0, 0.0));
        }
    }
    let num_poles = op_minus.poles.len();

    // Exact residue conditions of L′ + L² − U_B with L = Σ c_m/(z−q_m):
    // double coefficient at q_m is c_m(c_m−1) (minus a_m at operator poles);
    // simple residue is 2 c_m Σ_{n≠m} c_n/(q_m−q_n) (minus b_m at operator poles).
    let cross = |m: usize| -> C64 {
        let mut acc = c64(0.0, 0.0);
        for n in 0..points.len() {
            if n != m {
                acc += cs[n] / (points[m] - points[n]);
            }
        }
        2.0 * cs[m] * acc
    };
    let mut double_defects = Vec::with_capacity(num_poles);
    let mut pole_residue_defects = Vec::with_capacity(num_poles);
    for k in 0..num_poles {
        double_defects.push(cs[k] * (cs[k] - 1.0) - op_minus.double_coeffs[k]);
        pole_residue_defects.push(cross(k) - op_minus.residues[k]);
    }
    let root_residue_defects: Vec<C64> = (num_poles..points.len()).map(cross).collect();

    // Sampled cofactor check away from every special point.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let center = if points.is_empty() {
        c64(0.0, 0.0)
    } else {
        points.iter().sum::<C64>() / c64(points.len() as f64, 0.0)
    };
    let mut max_sampled = 0.0f64;
    let mut taken = 0;
    let mut attempts = 0;
    while taken < 20 && attempts < 2000 {
        attempts += 1;
        let z = center
            + C64::from_polar(scale * rng.gen_range(0.3..2.5), rng.gen_range(0.0..std::f64::consts::TAU));
        if points.iter().any(|&q| (z - q).norm() < 1e-6 * scale.max(1.0)) {
            continue;
        }
        taken += 1;
        let mut l = c64(0.0, 0.0);
        let mut dl = c64(0.0, 0.0);
        for (&q, &c) in points.iter().zip(&cs) {
            let inv = (z - q).inv();
            l += c * inv;
            dl -= c * inv * inv;
        }
        let r = dl + l * l - op_minus.coefficient_fn(z);
        if r.norm() > max_sampled {
            max_sampled = r.norm();
        }
    }

    let worst = double_defects
        .iter()
        .chain(&pole_residue_defects)
        .chain(&root_residue_defects)
        .map(|d| d.norm())
        .fold(max_sampled, f64::max);
    Ok(OperResidualReport {
        double_defects,
        pole_residue_defects,
        root_residue_defects,
        max_sampled,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::{SolveConfig, solve_bethe};

    fn two_point_problem() -> BetheProblem {
        BetheProblem::new(
            vec![c64(0.0, 0.0), c64(1.0, 0.0)],
            vec![c64(1.0, 0.0), c64(1.0, 0.0)],
            1,
        )
        .unwrap()
    }

    #[test]
    fn oper_from_bethe_oracle_coefficients() {
        let p = two_point_problem();
        let chi = [c64(1.5, 0.0), c64(-1.5, 0.0)];
        let op = oper_from_bethe(&p, &chi).unwrap();
        assert_eq!(op.convention, SignConvention::Minus);
        assert!((op.double_coeffs[0] - c64(0.75, 0.0)).norm() < 1e-14);
        assert!((op.double_coeffs[1] - c64(0.75, 0.0)).norm() < 1e-14);
        assert!((op.residues[0] - c64(1.5, 0.0)).norm() < 1e-14);
        assert!((op.residues[1] - c64(-1.5, 0.0)).norm() < 1e-14);
        // All-zero weights and eigenvalues give the free operator.
        let pz = BetheProblem::new(p.poles.clone(), vec![c64(0.0, 0.0); 2], 0).unwrap();
        let free = oper_from_bethe(&pz, &[c64(0.0, 0.0), c64(0.0, 0.0)]).unwrap();
        assert!(free.double_coeffs.iter().all(|a| a.norm() == 0.0));
        assert!(free.residues.iter().all(|b| b.norm() == 0.0));
    }

    #[test]
    fn convention_round_trip_is_identity() {
        let op = SturmLiouville::new(
            vec![c64(0.0, 0.0), c64(1.0, 0.0)],
            vec![c64(0.75, 0.0), c64(-0.25, 0.5)],
            vec![c64(1.5, 0.0), c64(-1.5, -0.5)],
            SignConvention::Minus,
        )
        .unwrap();
        let back = op.converted().converted();
        assert_eq!(back.convention, SignConvention::Minus);
        for (a, b) in back.double_coeffs.iter().zip(&op.double_coeffs) {
            assert_eq!(a, b);
        }
        for (a, b) in back.residues.iter().zip(&op.residues) {
            assert_eq!(a, b);
        }
        // The `plus` restatement negates the stored values.
        let plus = op.in_convention(SignConvention::Plus);
        assert!((plus.double_coeffs[0] + op.double_coeffs[0]).norm() == 0.0);
    }

    #[test]
    fn local_exponents_solve_the_indicial_equation() {
        let op = SturmLiouville::new(
            vec![c64(0.0, 0.0), c64(1.0, 0.0)],
            vec![c64(0.75, 0.0), c64(0.0, 0.0)],
            vec![c64(0.0, 0.0), c64(0.0, 0.0)],
            SignConvention::Minus,
        )
        .unwrap();
        let (r1, r2) = op.local_exponents(0);
        assert!((r1 - c64(-0.5, 0.0)).norm() < 1e-14);
        assert!((r2 - c64(1.5, 0.0)).norm() < 1e-14);
        let (s1, s2) = op.local_exponents(1);
        assert!((s1 - c64(0.0, 0.0)).norm() < 1e-14);
        assert!((s2 - c64(1.0, 0.0)).norm() < 1e-14);
        // A moving pole stated in the `plus` convention: coefficient −3/4 reads
        // as ρ(ρ−1) = 3/4.
        let plus = SturmLiouville::new(
            vec![c64(4.0, 0.0)],
            vec![c64(-0.75, 0.0)],
            vec![c64(0.0, 0.0)],
            SignConvention::Plus,
        )
        .unwrap();
        let (m1, m2) = plus.local_exponents(0);
        assert!((m1 - c64(-0.5, 0.0)).norm() < 1e-14);
        assert!((m2 - c64(1.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn exponent_gap_at_marked_points_is_weight_plus_one() {
        let p = two_point_problem();
        let chi = p.eigenvalues(&[c64(0.5, 0.0)]).unwrap();
        let op = oper_from_bethe(&p, &chi).unwrap();
        for k in 0..2 {
            let (lo, hi) = op.local_exponents(k);
            let gap = hi - lo;
            assert!((gap - c64(2.0, 0.0)).norm() < 1e-12, "gap λ+1 expected, got {gap}");
        }
    }

    #[test]
    fn certified_instance_is_annihilated() {
        let p = two_point_problem();
        let sols = solve_bethe(&p, &SolveConfig::default()).unwrap();
        let chi = p.eigenvalues(&sols[0].roots).unwrap();
        let op = oper_from_bethe(&p, &chi).unwrap();
        let psi = explicit_solution(&p, &sols[0].roots);
        assert_eq!(psi.exponents[0], c64(0.5, 0.0));
        let report = apply_oper(&op, &psi).unwrap();
        assert!(report.worst < 1e-9, "annihilation fails: worst = {}", report.worst);
    }

    #[test]
    fn perturbed_residue_is_detected() {
        let p = two_point_problem();
        let sols = solve_bethe(&p, &SolveConfig::default()).unwrap();
        let chi = p.eigenvalues(&sols[0].roots).unwrap();
        let mut op = oper_from_bethe(&p, &chi).unwrap();
        op.residues[0] += c64(0.1, 0.0);
        let psi = explicit_solution(&p, &sols[0].roots);
        let report = apply_oper(&op, &psi).unwrap();
        assert!(report.worst > 1e-3, "perturbation missed: worst = {}", report.worst);
    }

    #[test]
    fn free_operator_annihilates_linear_polynomial() {
        let op = SturmLiouville::new(vec![], vec![], vec![], SignConvention::Minus).unwrap();
        let psi = QuasiPolySolution {
            poles: vec![],
            exponents: vec![],
            phi: CPoly::from_roots(&[c64(0.0, 0.0)]),
        };
        let report = apply_oper(&op, &psi).unwrap();
        assert!(report.worst < 1e-12);
    }
}
