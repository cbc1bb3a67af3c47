//! The Bethe algebraic system: residuals, eigenvalue formulas, and a
//! multi-start damped-Newton solver.
//!
//! For poles `z_i` with weights `λ_i` and spectral parameters `μ_j`, the system
//! demands
//!
//! ```text
//! F_j(μ) = −½ Σ_i λ_i/(μ_j − z_i) + Σ_{k≠j} 1/(μ_j − μ_k) = 0
//! ```
//!
//! and each admissible root tuple yields the common-eigenvalue vector
//! `χ_i = −λ_i (Σ_j 1/(z_i − μ_j) − ½ Σ_{j≠i} λ_j/(z_i − z_j))`. The residual
//! equals the gradient of a scalar log-potential, which drives damped Newton
//! steps. Small instances are cross-checked against direct spectra of the
//! tensor-model Hamiltonians via [`chi_spectrum_distance`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calgebra::{CPoly, poly_roots, sort_complex};
use crate::linalg::{CMat, LuFactors, nearest_eigenvalue_distance};
use crate::rep::TensorModel;
use crate::{C64, Error, Result, c64};

/// A Bethe system instance: marked points, weights, and the number of roots.
#[derive(Debug, Clone)]
pub struct BetheProblem {
    /// Marked points `z_i`, pairwise distinct.
    pub poles: Vec<C64>,
    /// Weights `λ_i` (complex in general; integer-valued in oracle-checked runs).
    pub weights: Vec<C64>,
    /// Number of spectral parameters `M`.
    pub num_roots: usize,
}

/// One solution of the system.
#[derive(Debug, Clone)]
pub struct BetheRoots {
    /// Roots `μ_j`, sorted lexicographically by (re, im).
    pub roots: Vec<C64>,
    /// Final max-norm of the residual.
    pub residual_norm: f64,
    /// True when the residual met tolerance with a nonsingular Jacobian.
    pub certified: bool,
}

/// Solver settings. Defaults: tolerance 1e-11, 60 Newton steps, 20 halvings,
/// 64 starts, seed 0, dedup tolerance 1e-7, single-threaded.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Residual max-norm a solution must reach.
    pub tol: f64,
    /// Newton iteration cap per start.
    pub max_steps: usize,
    /// Step-halving cap within one Newton step.
    pub max_halvings: usize,
    /// Number of random starts.
    pub num_starts: usize,
    /// RNG seed; identical seeds give identical results.
    pub seed: u64,
    /// Componentwise tolerance for identifying two solutions.
    pub dedup_tol: f64,
    /// Worker threads for the start sweep (results independent of this value).
    pub jobs: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-11,
            max_steps: 60,
            max_halvings: 20,
            num_starts: 64,
            seed: 0,
            dedup_tol: 1e-7,
            jobs: 1,
        }
    }
}

impl BetheProblem {
    /// Build a problem; poles must be pairwise distinct and match the weights
    /// in number.
    pub fn new(poles: Vec<C64>, weights: Vec<C64>, num_roots: usize) -> Result<Self> {
        if poles.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} poles but {} weights",
                poles.len(),
                weights.len()
            )));
        }
        if poles.is_empty() {
            return Err(Error::InvalidInput("a problem needs at least one pole".into()));
        }
        for i in 0..poles.len() {
            for j in i + 1..poles.len() {
                let dist = (poles[i] - poles[j]).norm();
                if dist < crate::calgebra::POLE_SEPARATION_TOL {
                    return Err(Error::PoleCollision { a: poles[i], b: poles[j], dist });
                }
            }
        }
        Ok(BetheProblem { poles, weights, num_roots })
    }

    /// Characteristic length scale of the configuration.
    pub fn scale(&self) -> f64 {
        self.poles.iter().map(|z| z.norm()).fold(1.0, f64::max)
    }

    /// Residual vector `F_j(μ)`. Fails when a root collides with a pole or with
    /// another root.
    pub fn residual(&self, mu: &[C64]) -> Result<Vec<C64>> {
        self.check_separation(mu, 1e-10 * self.scale())?;
        Ok(self.residual_unchecked(mu))
    }

    fn check_separation(&self, mu: &[C64], tol: f64) -> Result<()> {
        for (j, &m) in mu.iter().enumerate() {
            for &z in &self.poles {
                let dist = (m - z).norm();
                if dist < tol {
                    return Err(Error::PoleCollision { a: m, b: z, dist });
                }
            }
            for &m2 in &mu[j + 1..] {
                let dist = (m - m2).norm();
                if dist < tol {
                    return Err(Error::PoleCollision { a: m, b: m2, dist });
                }
            }
        }
        Ok(())
    }

    fn residual_unchecked(&self, mu: &[C64]) -> Vec<C64> {
        let mut out = Vec::with_capacity(mu.len());
        for (j, &m) in mu.iter().enumerate() {
            let mut f = c64(0.0, 0.0);
            for (&z, &lam) in self.poles.iter().zip(&self.weights) {
                f -= 0.5 * lam / (m - z);
            }
            for (k, &m2) in mu.iter().enumerate() {
                if k != j {
                    f += (m - m2).inv();
                }
            }
            out.push(f);
        }
        out
    }

    /// Gradient of the scalar log-potential; identical to [`Self::residual`]
    /// (the system is its own gradient), kept as a named operation because the
    /// solver's step control is phrased in terms of it.
    pub fn master_function_gradient(&self, mu: &[C64]) -> Result<Vec<C64>> {
        self.residual(mu)
    }

    /// The scalar log-potential itself:
    /// `Σ_j (−½ Σ_i λ_i ln(μ_j − z_i)) + Σ_{j<k} ln(μ_j − μ_k)`.
    /// Principal branches; only derivatives are meaningful globally.
    pub fn master_potential(&self, mu: &[C64]) -> Result<C64> {
        self.check_separation(mu, 1e-10 * self.scale())?;
        let mut phi = c64(0.0, 0.0);
        for &m in mu {
            for (&z, &lam) in self.poles.iter().zip(&self.weights) {
                phi -= 0.5 * lam * (m - z).ln();
            }
        }
        for (j, &m) in mu.iter().enumerate() {
            for &m2 in &mu[j + 1..] {
                phi += (m - m2).ln();
            }
        }
        Ok(phi)
    }

    /// Jacobian `∂F_j/∂μ_k` of the residual.
    pub fn jacobian(&self, mu: &[C64]) -> Result<CMat> {
        self.check_separation(mu, 1e-10 * self.scale())?;
        let m = mu.len();
        let mut jac = CMat::zeros(m, m);
        for (j, &mj) in mu.iter().enumerate() {
            let mut diag = c64(0.0, 0.0);
            for (&z, &lam) in self.poles.iter().zip(&self.weights) {
                let d = mj - z;
                diag += 0.5 * lam / (d * d);
            }
            for (k, &mk) in mu.iter().enumerate() {
                if k == j {
                    continue;
                }
                let d = mj - mk;
                let inv2 = (d * d).inv();
                diag -= inv2;
                jac[(j, k)] = inv2;
            }
            jac[(j, j)] = diag;
        }
        Ok(jac)
    }

    /// Eigenvalue vector `χ_i` for a root tuple. The tuple need not be an exact
    /// solution; values are whatever the formula gives.
    pub fn eigenvalues(&self, mu: &[C64]) -> Result<Vec<C64>> {
        for &m in mu {
            for &z in &self.poles {
                let dist = (m - z).norm();
                if dist < 1e-10 * self.scale() {
                    return Err(Error::PoleCollision { a: m, b: z, dist });
                }
            }
        }
        let mut chi = Vec::with_capacity(self.poles.len());
        for (i, (&zi, &li)) in self.poles.iter().zip(&self.weights).enumerate() {
            let mut bracket = c64(0.0, 0.0);
            for &m in mu {
                bracket += (zi - m).inv();
            }
            for (j, (&zj, &lj)) in self.poles.iter().zip(&self.weights).enumerate() {
                if j != i {
                    bracket -= 0.5 * lj / (zi - zj);
                }
            }
            chi.push(-li * bracket);
        }
        Ok(chi)
    }
}

/// Solve the system from many seeded starts; returns deduplicated solutions
/// sorted canonically. An empty list means no start converged (not an error).
pub fn solve_bethe(problem: &BetheProblem, config: &SolveConfig) -> Result<Vec<BetheRoots>> {
    if problem.num_roots == 0 {
        return Ok(vec![BetheRoots { roots: Vec::new(), residual_norm: 0.0, certified: true }]);
    }
    let weight_scale = problem.weights.iter().map(|w| w.norm()).fold(0.0, f64::max);
    if weight_scale < 1e-14 {
        return Err(Error::InvalidInput(
            "degenerate system: all weights vanish, every residual is identically zero".into(),
        ));
    }

    let starts: Vec<Vec<C64>> =
        (0..config.num_starts).map(|t| start_cloud(problem, config.seed, t)).collect();

    let jobs = config.jobs.max(1).min(starts.len().max(1));
    let mut outcomes: Vec<Option<BetheRoots>> = Vec::with_capacity(starts.len());
    if jobs <= 1 {
        for s in &starts {
            outcomes.push(newton_run(problem, s, config));
        }
    } else {
        let chunk = starts.len().div_ceil(jobs);
        let mut collected: Vec<Vec<Option<BetheRoots>>> = Vec::new();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for piece in starts.chunks(chunk) {
                handles.push(scope.spawn(move || {
                    piece.iter().map(|s| newton_run(problem, s, config)).collect::<Vec<_>>()
                }));
            }
            for h in handles {
                collected.push(h.join().expect("solver worker panicked"));
            }
        });
        // Chunks were spawned in order, so flattening restores start order.
        outcomes = collected.into_iter().flatten().collect();
    }

    // Deduplicate canonically-sorted root lists.
    let mut solutions: Vec<BetheRoots> = Vec::new();
    for cand in outcomes.into_iter().flatten() {
        match solutions
            .iter_mut()
            .find(|s| same_roots(&s.roots, &cand.roots, config.dedup_tol))
        {
            Some(existing) => {
                if cand.residual_norm < existing.residual_norm {
                    *existing = cand;
                }
            }
            None => solutions.push(cand),
        }
    }
    solutions.sort_by(|a, b| {
        for (x, y) in a.roots.iter().zip(&b.roots) {
            let ord = x
                .re
                .partial_cmp(&y.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal));
            if ord != std::cmp::Ordering::Equal {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    });
    Ok(solutions)
}

fn same_roots(a: &[C64], b: &[C64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
}

/// Deterministic start cloud: roots placed around the pole barycenter at
/// radii drawn from a Chebyshev-type (arcsine-clustered) distribution.
fn start_cloud(problem: &BetheProblem, seed: u64, start_index: usize) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(start_index as u64 + 1)));
    let n = problem.poles.len() as f64;
    let bary = problem.poles.iter().sum::<C64>() / c64(n, 0.0);
    let spread = problem
        .poles
        .iter()
        .map(|z| (z - bary).norm())
        .fold(0.0, f64::max)
        .max(0.5);
    let swell = 1.0 + 0.5 * (start_index as f64) / 64.0;
    (0..problem.num_roots)
        .map(|_| {
            let u: f64 = rng.gen_range(0.0..1.0);
            // Chebyshev-node radial profile: clusters toward the rim.
            let radial = (std::f64::consts::PI * (u - 0.5)).sin().abs();
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            bary + C64::from_polar(spread * swell * (0.15 + 1.25 * radial), theta)
        })
        .collect()
}

fn residual_norm_at(problem: &BetheProblem, mu: &[C64], guard: f64) -> f64 {
    if problem.check_separation(mu, guard).is_err() {
        return f64::INFINITY;
    }
    problem
        .residual_unchecked(mu)
        .iter()
        .map(|f| f.norm())
        .fold(0.0, f64::max)
}

fn newton_run(problem: &BetheProblem, start: &[C64], config: &SolveConfig) -> Option<BetheRoots> {
    let guard = 1e-12 * problem.scale();
    let escape_radius = 1e6 * problem.scale();
    let mut mu = start.to_vec();
    let mut fnorm = residual_norm_at(problem, &mu, guard);
    if !fnorm.is_finite() {
        return None;
    }
    let mut jac_singular = false;
    for _ in 0..config.max_steps {
        if fnorm <= config.tol {
            break;
        }
        if mu.iter().any(|m| m.norm() > escape_radius) {
            return None;
        }
        let f = problem.residual_unchecked(&mu);
        let jac = match problem.jacobian(&mu) {
            Ok(j) => j,
            Err(_) => return None,
        };
        let lu = LuFactors::new(jac);
        if lu.singular {
            jac_singular = true;
            break;
        }
        let rhs: Vec<C64> = f.iter().map(|x| -x).collect();
        let delta = lu.solve(&rhs).ok()?;
        let mut alpha = 1.0f64;
        let mut improved = false;
        for _ in 0..=config.max_halvings {
            let trial: Vec<C64> =
                mu.iter().zip(&delta).map(|(m, d)| m + d * c64(alpha, 0.0)).collect();
            let tnorm = residual_norm_at(problem, &trial, guard);
            if tnorm < fnorm {
                mu = trial;
                fnorm = tnorm;
                improved = true;
                break;
            }
            alpha /= 2.0;
        }
        if !improved {
            break;
        }
    }
    if fnorm > config.tol {
        return None;
    }
    // Admissibility: roots distinct and away from poles at the dedup scale.
    if problem.check_separation(&mu, config.dedup_tol * 1e-2).is_err() {
        return None;
    }
    // The raw residual decays toward infinity (every term is O(1/μ)), so a
    // run that escapes the pole region can dip under `tol` without being near
    // any root. Weighting each residual by the distance to the nearest pole or
    // partner root removes that decay: at a genuine root the product still
    // vanishes, while a runaway keeps it at the size of the weights.
    let f = problem.residual_unchecked(&mu);
    for (j, &m) in mu.iter().enumerate() {
        let mut nearest = f64::INFINITY;
        for &z in &problem.poles {
            nearest = nearest.min((m - z).norm());
        }
        for (k, &m2) in mu.iter().enumerate() {
            if k != j {
                nearest = nearest.min((m - m2).norm());
            }
        }
        if nearest * f[j].norm() > config.tol * problem.scale() {
            return None;
        }
    }
    // Certification also requires a nonsingular Jacobian at the solution.
    let certified = !jac_singular
        && match problem.jacobian(&mu) {
            Ok(j) => !LuFactors::new(j).singular,
            Err(_) => false,
        };
    sort_complex(&mut mu);
    Some(BetheRoots { roots: mu, residual_norm: fnorm, certified })
}

/// Maximum distance from a predicted eigenvalue vector to the direct spectra of
/// the tensor-model Hamiltonians on the lowering-count-`level` subspace: for
/// each site `i`, the distance of `chi[i]` to the nearest eigenvalue of the
/// restricted `H_i`. Small subspaces are diagonalized via the characteristic
/// polynomial; larger ones fall back to inverse iteration.
pub fn chi_spectrum_distance(model: &TensorModel, level: usize, chi: &[C64]) -> Result<f64> {
    if chi.len() != model.site_count() {
        return Err(Error::InvalidInput(format!(
            "{} eigenvalues for {} sites",
            chi.len(),
            model.site_count()
        )));
    }
    let mut worst = 0.0f64;
    for (i, &c) in chi.iter().enumerate() {
        let h = model.hamiltonian_on_weight_subspace(i, level)?;
        let dist = if h.n_rows <= 12 {
            let eigs = poly_roots(&CPoly::new(h.char_poly()), 1e-9)?;
            eigs.iter().map(|e| (e - c).norm()).fold(f64::INFINITY, f64::min)
        } else {
            nearest_eigenvalue_distance(&h, c)
        };
        if dist > worst {
            worst = dist;
        }
    }
    Ok(worst)
}
