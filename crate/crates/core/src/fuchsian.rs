//! Rank-2 Fuchsian connections with prescribed simple poles.
//!
//! A connection here is the rational matrix `A(z) = Σ_i A_i/(z − z_i)` with
//! traceless 2×2 residues whose sum is diagonal. The module provides the
//! normalization report, the reduction of either vector component to a scalar
//! second-order operator (moving poles at the zeros of the off-diagonal
//! entry), and the inverse construction that promotes certified Bethe data to
//! a matrix system together with its explicit quasi-polynomial solution.

use crate::bethe::BetheProblem;
use crate::calgebra::{
    CPoly, POLE_SEPARATION_TOL, poly_from_circle_samples, poly_roots, sort_complex,
};
use crate::linalg::Mat2;
use crate::oper::{SignConvention, SturmLiouville};
use crate::{C64, Error, Result, c64};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Square root with the branch fixed for exponent bookkeeping: nonnegative
/// real part, ties broken toward nonnegative imaginary part.
pub fn branch_sqrt(w: C64) -> C64 {
    let r = w.sqrt();
    if r.re > 0.0 || (r.re == 0.0 && r.im >= 0.0) { r } else { -r }
}

/// Rational 2×2 matrix `A(z) = Σ_i A_i/(z − z_i)` with simple poles.
#[derive(Debug, Clone)]
pub struct FuchsianConnection {
    /// Pole locations, pairwise distinct.
    pub poles: Vec<C64>,
    /// Residue matrices, one per pole.
    pub residues: Vec<Mat2>,
}

impl FuchsianConnection {
    /// Build with basic shape checks (counts match, poles distinct). The
    /// normalization conditions are deliberately not enforced here — they are
    /// what [`validate_connection`] reports on, including for bad inputs.
    pub fn new(poles: Vec<C64>, residues: Vec<Mat2>) -> Result<Self> {
        if poles.len() != residues.len() {
            return Err(Error::InvalidInput(format!(
                "{} poles but {} residue matrices",
                poles.len(),
                residues.len()
            )));
        }
        if poles.is_empty() {
            return Err(Error::InvalidInput("a connection needs at least one pole".into()));
        }
        for i in 0..poles.len() {
            for j in i + 1..poles.len() {
                let dist = (poles[i] - poles[j]).norm();
                if dist < POLE_SEPARATION_TOL {
                    return Err(Error::PoleCollision { a: poles[i], b: poles[j], dist });
                }
            }
        }
        Ok(FuchsianConnection { poles, residues })
    }

    /// Characteristic length scale of the pole configuration.
    pub fn scale(&self) -> f64 {
        self.poles.iter().map(|z| z.norm()).fold(1.0, f64::max)
    }

    /// Evaluate `A(z)`.
    pub fn eval(&self, z: C64) -> Mat2 {
        let mut acc = Mat2::zero();
        for (&p, a) in self.poles.iter().zip(&self.residues) {
            acc = acc.add(&a.scale((z - p).inv()));
        }
        acc
    }

    /// Top-left entry of `Σ_i A_i` (the diagonal value the normalization
    /// demands the residue sum to be `diag(κ, −κ)` of).
    pub fn kappa(&self) -> C64 {
        self.residues.iter().fold(c64(0.0, 0.0), |acc, a| acc + a.m[0][0])
    }

    /// The exponents `d_i = sqrt(−det A_i)` in the fixed branch, so each
    /// residue has eigenvalues `±d_i`.
    pub fn d_values(&self) -> Vec<C64> {
        self.residues.iter().map(|a| branch_sqrt(-a.det())).collect()
    }
}

/// Report of the normalization conditions, entry by entry. `pass` aggregates
/// every condition at the tolerance handed to [`validate_connection`].
#[derive(Debug, Clone)]
pub struct ConnectionReport {
    /// `|Tr A_i|` for each residue.
    pub trace_defects: Vec<f64>,
    /// `|Σ_i (A_i)₁₂|`.
    pub off_diag_12: f64,
    /// `|Σ_i (A_i)₂₁|`.
    pub off_diag_21: f64,
    /// `|(ΣA)₁₁ + (ΣA)₂₂|` — the residue sum must be `diag(κ, −κ)`.
    pub diag_skew: f64,
    /// The diagonal value κ of the residue sum.
    pub kappa: C64,
    /// Determinants of the residues.
    pub dets: Vec<C64>,
    /// Exponents `d_i = sqrt(−det A_i)` in the fixed branch.
    pub d_values: Vec<C64>,
    /// All trace defects within tolerance.
    pub traces_ok: bool,
    /// Residue sum diagonal of the required form within tolerance.
    pub sum_ok: bool,
    /// Conjunction of all checks.
    pub pass: bool,
}

/// Check the normalization conditions (traceless residues, diagonal residue
/// sum `diag(κ, −κ)`) and report every measured defect.
pub fn validate_connection(conn: &FuchsianConnection, tol: f64) -> ConnectionReport {
    let trace_defects: Vec<f64> = conn.residues.iter().map(|a| a.trace().norm()).collect();
    let sum = conn.residues.iter().fold(Mat2::zero(), |acc, a| acc.add(a));
    let off_diag_12 = sum.m[0][1].norm();
    let off_diag_21 = sum.m[1][0].norm();
    let diag_skew = (sum.m[0][0] + sum.m[1][1]).norm();
    let traces_ok = trace_defects.iter().all(|&t| t <= tol);
    let sum_ok = off_diag_12 <= tol && off_diag_21 <= tol && diag_skew <= tol;
    ConnectionReport {
        trace_defects,
        off_diag_12,
        off_diag_21,
        diag_skew,
        kappa: conn.kappa(),
        dets: conn.residues.iter().map(Mat2::det).collect(),
        d_values: conn.d_values(),
        traces_ok,
        sum_ok,
        pass: traces_ok && sum_ok,
    }
}

/// Which vector component the scalar reduction eliminates the partner of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// Reduce onto the first component (moving poles at zeros of `a₁₂`).
    First,
    /// Reduce onto the second component (moving poles at zeros of `a₂₁`).
    Second,
}

/// Scalar reduction of one component: the moving poles, the second-order
/// operator in the `plus` convention (`Φ″ + UΦ = 0`), and the pieces of `U`.
#[derive(Debug, Clone)]
pub struct ReductionResult {
    /// Zeros of the off-diagonal entry (the "moving" poles of `U`).
    pub moving_poles: Vec<C64>,
    /// The operator, poles ordered fixed-then-moving, `plus` convention.
    pub oper: SturmLiouville,
    /// Leading coefficient of the off-diagonal numerator polynomial.
    pub leading_constant: C64,
    /// Simple-pole coefficients of `U` at the fixed poles (same order).
    pub h_fixed: Vec<C64>,
    /// Simple-pole coefficients of `U` at the moving poles (same order).
    pub h_moving: Vec<C64>,
}

/// Per-pole scalar data of the component being reduced: the relevant diagonal
/// residue entry and the two off-diagonal entries in reduction order.
fn component_entries(conn: &FuchsianConnection, component: Component) -> (Vec<C64>, Vec<C64>, Vec<C64>) {
    let mut diag = Vec::with_capacity(conn.residues.len());
    let mut upper = Vec::with_capacity(conn.residues.len());
    let mut lower = Vec::with_capacity(conn.residues.len());
    for a in &conn.residues {
        match component {
            Component::First => {
                diag.push(a.m[0][0]);
                upper.push(a.m[0][1]);
                lower.push(a.m[1][0]);
            }
            Component::Second => {
                // Conjugation by the swap matrix exchanges the two components,
                // so the same closed forms apply with the entries relabelled.
                diag.push(a.m[1][1]);
                upper.push(a.m[1][0]);
                lower.push(a.m[0][1]);
            }
        }
    }
    (diag, upper, lower)
}

/// Eliminate one component of `(∂ − A)Ψ = 0` and return the scalar operator
/// satisfied by the normalized remaining component.
///
/// The off-diagonal entry is `c·Π_j(z−w_j)/Π_i(z−z_i)`; its zeros `w_j`
/// become additional double poles of the potential with coefficient `−¾`,
/// while each fixed pole carries `¼ + det A_i`. The simple-pole coefficients
/// come out of the Laurent expansion of the normal-form potential.
pub fn reduce_to_scalar(conn: &FuchsianConnection, component: Component) -> Result<ReductionResult> {
    let k = conn.poles.len();
    if k < 2 {
        return Err(Error::InvalidInput(
            "scalar reduction needs at least two poles".into(),
        ));
    }
    let (diag, upper, _) = component_entries(conn, component);
    let scale = conn.scale();
    if upper.iter().map(|r| r.norm()).fold(0.0, f64::max) <= 1e-14 * scale.max(1.0) {
        return Err(Error::StageFailure {
            stage: "reduction",
            detail: "off-diagonal entry vanishes identically; the component satisfies a first-order equation and no second-order reduction exists".into(),
        });
    }

    // Numerator polynomial of the off-diagonal entry, reconstructed by circle
    // interpolation of Σ_i r_i Π_{l≠i}(z − z_l) rather than by expanding the
    // common-denominator form (which cancels catastrophically).
    let center = conn.poles.iter().sum::<C64>() / c64(k as f64, 0.0);
    let radius = 2.0 * (1.0 + conn.poles.iter().map(|z| (z - center).norm()).fold(0.0, f64::max));
    let values: Vec<C64> = (0..k)
        .map(|m| {
            let node = center
                + C64::from_polar(radius, 2.0 * std::f64::consts::PI * m as f64 / k as f64);
            let mut acc = c64(0.0, 0.0);
            for (i, &r) in upper.iter().enumerate() {
                let mut prod = r;
                for (l, &z) in conn.poles.iter().enumerate() {
                    if l != i {
                        prod *= node - z;
                    }
                }
                acc += prod;
            }
            acc
        })
        .collect();
    let numerator = poly_from_circle_samples(center, radius, &values).trimmed(1e-9);
    let degree = numerator.degree().unwrap_or(0);
    if numerator.is_zero() || degree != k - 2 {
        return Err(Error::StageFailure {
            stage: "reduction",
            detail: format!(
                "off-diagonal numerator has degree {degree}, expected {}; the configuration is outside the generic-position assumptions",
                k - 2
            ),
        });
    }
    let leading_constant = numerator.leading();
    let mut moving = if degree == 0 {
        Vec::new()
    } else {
        poly_roots(&numerator, 1e-9)?
    };
    sort_complex(&mut moving);
    for i in 0..moving.len() {
        for j in i + 1..moving.len() {
            let dist = (moving[i] - moving[j]).norm();
            if dist < POLE_SEPARATION_TOL.max(1e-7 * scale) {
                return Err(Error::StageFailure {
                    stage: "reduction",
                    detail: format!(
                        "moving poles {} and {} coincide to {dist:.3e}; multiple zeros of the off-diagonal entry are out of scope",
                        moving[i], moving[j]
                    ),
                });
            }
        }
        for &z in &conn.poles {
            let dist = (moving[i] - z).norm();
            if dist < POLE_SEPARATION_TOL.max(1e-7 * scale) {
                return Err(Error::StageFailure {
                    stage: "reduction",
                    detail: format!(
                        "moving pole {} collides with the fixed pole {z} to {dist:.3e}",
                        moving[i]
                    ),
                });
            }
        }
    }

    // Simple-pole coefficient of the potential at each moving pole.
    let diag_at = |z: C64| -> C64 {
        conn.poles.iter().zip(&diag).map(|(&p, &d)| d / (z - p)).sum()
    };
    let mut h_moving = Vec::with_capacity(moving.len());
    for (j, &w) in moving.iter().enumerate() {
        let mut bracket = c64(0.0, 0.0);
        for &z in &conn.poles {
            bracket += (w - z).inv();
        }
        for (m, &w2) in moving.iter().enumerate() {
            if m != j {
                bracket -= (w - w2).inv();
            }
        }
        h_moving.push(diag_at(w) + 0.5 * bracket);
    }

    // Simple-pole coefficient at each fixed pole.
    let (_, upper_all, lower_all) = component_entries(conn, component);
    let mut h_fixed = Vec::with_capacity(k);
    for i in 0..k {
        let zi = conn.poles[i];
        let mut acc = c64(0.0, 0.0);
        let front = c64(0.5, 0.0) + diag[i];
        for &w in &moving {
            acc += front / (zi - w);
        }
        for j in 0..k {
            if j == i {
                continue;
            }
            let tr_prod = 2.0 * diag[i] * diag[j]
                + upper_all[i] * lower_all[j]
                + lower_all[i] * upper_all[j];
            acc -= (tr_prod + diag[i] + diag[j] + c64(0.5, 0.0)) / (zi - conn.poles[j]);
        }
        h_fixed.push(acc);
    }

    let mut poles = conn.poles.clone();
    poles.extend_from_slice(&moving);
    let mut doubles: Vec<C64> = conn
        .residues
        .iter()
        .map(|a| c64(0.25, 0.0) + a.det())
        .collect();
    doubles.extend(std::iter::repeat(c64(-0.75, 0.0)).take(moving.len()));
    let mut residues = h_fixed.clone();
    residues.extend_from_slice(&h_moving);
    let oper = SturmLiouville::new(poles, doubles, residues, SignConvention::Plus)?;
    Ok(ReductionResult { moving_poles: moving, oper, leading_constant, h_fixed, h_moving })
}

/// The normal-form potential computed pointwise straight from the elimination
/// chain (`u = a₁₁′ + a₁₁² + a₁₂a₂₁ − a₁₁ a₁₂′/a₁₂`, then `U = ½v′ − ¼v² − u`
/// with `v = a₁₂′/a₁₂`), with no partial-fraction bookkeeping. Serves as an
/// independent cross-check of [`reduce_to_scalar`]. Fails near zeros of the
/// off-diagonal entry, where `v` is singular.
pub fn direct_potential(conn: &FuchsianConnection, component: Component, z: C64) -> Result<C64> {
    let (diag, upper, lower) = component_entries(conn, component);
    let mut a11 = c64(0.0, 0.0);
    let mut a11_d = c64(0.0, 0.0);
    let mut a12 = c64(0.0, 0.0);
    let mut a12_d = c64(0.0, 0.0);
    let mut a12_dd = c64(0.0, 0.0);
    let mut a21 = c64(0.0, 0.0);
    for (i, &p) in conn.poles.iter().enumerate() {
        let inv = (z - p).inv();
        a11 += diag[i] * inv;
        a11_d -= diag[i] * inv * inv;
        a12 += upper[i] * inv;
        a12_d -= upper[i] * inv * inv;
        a12_dd += 2.0 * upper[i] * inv * inv * inv;
        a21 += lower[i] * inv;
    }
    let floor = 1e-12
        * upper.iter().map(|r| r.norm()).fold(0.0, f64::max)
        / conn.scale();
    if a12.norm() <= floor {
        return Err(Error::StageFailure {
            stage: "potential evaluation",
            detail: format!("sample point {z} is too close to a zero of the off-diagonal entry"),
        });
    }
    let v = a12_d / a12;
    let v_d = a12_dd / a12 - v * v;
    let u = a11_d + a11 * a11 + a12 * a21 - a11 * v;
    Ok(0.5 * v_d - 0.25 * v * v - u)
}

/// Quasi-polynomial 2-vector `Ψ(z) = Π_i (z−z_i)^{−s_i} (φ₁(z), φ₂(z))`.
#[derive(Debug, Clone)]
pub struct MatrixSolution {
    /// Branch-point locations of the scalar prefactor.
    pub poles: Vec<C64>,
    /// Exponents `s_i` (the prefactor power is `−s_i`).
    pub exponents: Vec<C64>,
    /// First polynomial component (monic, roots at the auxiliary points).
    pub phi1: CPoly,
    /// Second polynomial component.
    pub phi2: CPoly,
}

/// Output of [`pull_back`]: the connection, its explicit solution, the
/// auxiliary-root weights `α`, and the measured defect of the algebraic-system
/// precondition on the auxiliary roots.
#[derive(Debug, Clone)]
pub struct PullBack {
    /// The constructed connection (poles at the fixed points only).
    pub connection: FuchsianConnection,
    /// The explicit quasi-polynomial solution of `(∂ − A)Ψ = 0`.
    pub solution: MatrixSolution,
    /// Second-component weights `α_l` attached to the auxiliary roots.
    pub alphas: Vec<C64>,
    /// Max residual of the algebraic system the auxiliary roots must satisfy.
    pub bethe_defect: f64,
}

/// Promote certified algebraic data to a rank-2 matrix system.
///
/// Given fixed poles `Z`, moving poles `W` (|W| = |Z| − 2), exponents `s`,
/// and auxiliary roots `γ` solving the algebraic system on `Z ∪ W` with
/// weights `(2s_i − 1)` at the fixed poles and `1` at the moving ones, this
/// builds the connection whose off-diagonal entry is `c·Π(z−w)/Π(z−z)` and
/// the explicit solution with `φ₁ = Π(z−γ)`. With `enforce` set the
/// precondition failure aborts; otherwise the defect is only reported.
pub fn pull_back(
    fixed: &[C64],
    moving: &[C64],
    spins: &[C64],
    gamma: &[C64],
    c: C64,
    enforce: bool,
) -> Result<PullBack> {
    let k = fixed.len();
    if k < 2 {
        return Err(Error::InvalidInput("pull-back needs at least two fixed poles".into()));
    }
    if moving.len() + 2 != k {
        return Err(Error::InvalidInput(format!(
            "{} moving poles for {k} fixed ones; the off-diagonal numerator forces exactly k − 2",
            moving.len()
        )));
    }
    if spins.len() != k {
        return Err(Error::InvalidInput(format!("{} exponents for {k} poles", spins.len())));
    }
    if c.norm() == 0.0 {
        return Err(Error::InvalidInput("the off-diagonal scale c must be nonzero".into()));
    }

    // The algebraic precondition lives on all poles: fixed first, then moving.
    let mut all_poles = fixed.to_vec();
    all_poles.extend_from_slice(moving);
    let mut weights: Vec<C64> = spins.iter().map(|&s| 2.0 * s - 1.0).collect();
    weights.extend(std::iter::repeat(c64(1.0, 0.0)).take(moving.len()));
    let problem = BetheProblem::new(all_poles, weights, gamma.len())?;
    let bethe_defect = problem
        .residual(gamma)?
        .iter()
        .map(|f| f.norm())
        .fold(0.0, f64::max);
    let scale = fixed.iter().chain(moving).map(|z| z.norm()).fold(1.0, f64::max);
    if enforce && bethe_defect > 1e-8 * scale {
        return Err(Error::Uncertified {
            detail: format!(
                "auxiliary roots miss the algebraic system by {bethe_defect:.3e} (limit {:.3e})",
                1e-8 * scale
            ),
        });
    }

    // Second-component weights: α_l · a₁₂(γ_l) = 1.
    let mut alphas = Vec::with_capacity(gamma.len());
    for &g in gamma {
        let mut num = c64(1.0, 0.0);
        for &z in fixed {
            num *= g - z;
        }
        let mut den = c;
        for &w in moving {
            den *= g - w;
        }
        if den.norm() == 0.0 {
            return Err(Error::InvalidInput(format!(
                "auxiliary root {g} coincides with a moving pole; its weight is undefined"
            )));
        }
        alphas.push(num / den);
    }

    // Residue matrices from matching simple poles in both rows of the system.
    let mut residues = Vec::with_capacity(k);
    for (i, &zi) in fixed.iter().enumerate() {
        let mut a12 = c;
        for &w in moving {
            a12 *= zi - w;
        }
        for (l, &zl) in fixed.iter().enumerate() {
            if l != i {
                a12 /= zi - zl;
            }
        }
        let sigma: C64 = gamma.iter().zip(&alphas).map(|(&g, &al)| al / (zi - g)).sum();
        let a11 = -spins[i] - a12 * sigma;
        let a21 = (a11 - spins[i]) * sigma;
        residues.push(Mat2::new(a11, a12, a21, -a11));
    }
    let connection = FuchsianConnection::new(fixed.to_vec(), residues)?;

    let phi1 = CPoly::from_roots(gamma);
    let mut phi2 = CPoly::zero();
    for (l, &al) in alphas.iter().enumerate() {
        let others: Vec<C64> = gamma
            .iter()
            .enumerate()
            .filter(|&(kk, _)| kk != l)
            .map(|(_, &g)| g)
            .collect();
        phi2 = phi2.add(&CPoly::from_roots(&others).scale(al));
    }
    let solution = MatrixSolution {
        poles: fixed.to_vec(),
        exponents: spins.to_vec(),
        phi1,
        phi2,
    };
    Ok(PullBack { connection, solution, alphas, bethe_defect })
}

/// Residual report of checking `(∂ − A)Ψ = 0` for a quasi-polynomial vector.
#[derive(Debug, Clone)]
pub struct ConnectionResidualReport {
    /// Sample points used.
    pub samples: Vec<C64>,
    /// Normalized residual norm at each sample.
    pub values: Vec<f64>,
    /// Largest normalized residual.
    pub worst: f64,
}

/// Check `(∂ − A)Ψ = 0` with the scalar prefactor divided out: the report
/// measures `φ′ − (Σ s_i/(z−z_i))φ − Aφ` at 20 deterministic sample points,
/// normalized by the local size of `φ`.
pub fn apply_connection(
    conn: &FuchsianConnection,
    sol: &MatrixSolution,
) -> Result<ConnectionResidualReport> {
    if sol.poles.len() != sol.exponents.len() {
        return Err(Error::InvalidInput(format!(
            "{} prefactor poles but {} exponents",
            sol.poles.len(),
            sol.exponents.len()
        )));
    }
    let scale = conn
        .poles
        .iter()
        .chain(&sol.poles)
        .map(|z| z.norm())
        .fold(1.0, f64::max);
    let center = conn.poles.iter().sum::<C64>() / c64(conn.poles.len() as f64, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let phi1_d = sol.phi1.derivative();
    let phi2_d = sol.phi2.derivative();
    let mut samples = Vec::with_capacity(20);
    let mut values = Vec::with_capacity(20);
    let mut worst = 0.0f64;
    while samples.len() < 20 {
        let r = rng.gen_range(0.3..2.5) * scale;
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let z = center + C64::from_polar(r, theta);
        let near_pole = conn
            .poles
            .iter()
            .chain(&sol.poles)
            .any(|&p| (z - p).norm() < 1e-3 * scale);
        if near_pole {
            continue;
        }
        let s_val: C64 = sol
            .poles
            .iter()
            .zip(&sol.exponents)
            .map(|(&p, &s)| s / (z - p))
            .sum();
        let phi = [sol.phi1.eval(z), sol.phi2.eval(z)];
        let dphi = [phi1_d.eval(z), phi2_d.eval(z)];
        let a = conn.eval(z);
        let aphi = a.apply(phi);
        let res = [
            dphi[0] - s_val * phi[0] - aphi[0],
            dphi[1] - s_val * phi[1] - aphi[1],
        ];
        let local = phi[0].norm().max(phi[1].norm()).max(1.0);
        let value = (res[0].norm().max(res[1].norm())) / local;
        samples.push(z);
        values.push(value);
        worst = worst.max(value);
    }
    Ok(ConnectionResidualReport { samples, values, worst })
}

/// Highest weights read off a connection: `λ_i = 2d_i − 1`.
pub fn weights_from_connection(conn: &FuchsianConnection) -> Vec<C64> {
    conn.d_values().iter().map(|&d| 2.0 * d - 1.0).collect()
}
