//! Finite-dimensional sl2 irreducibles, tensor-product models, and the commuting
//! quadratic Hamiltonians attached to a configuration of distinct marked points.
//!
//! A highest-weight irreducible with nonnegative integer weight λ has basis
//! `v_0, …, v_λ` on which the standard generators act as
//!
//! - lowering: `f v_k = v_{k+1}` (and `f v_λ = 0`),
//! - raising: `e v_k = k (λ - k + 1) v_{k-1}`,
//! - Cartan: `h v_k = (λ - 2k) v_k`.
//!
//! A [`TensorModel`] is a tensor product of such irreducibles, one per marked
//! point. Site operators and Hamiltonians act matrix-free on dense state vectors
//! (flat row-major tensor indexing, last site fastest), so models up to the
//! dimension cap stay cheap. Dense matrices are only materialized for small
//! weight subspaces, where direct spectra are used as cross-checks.

use crate::linalg::CMat;
use crate::{C64, Error, Result, c64};

/// Largest total tensor dimension a model may have.
pub const DIMENSION_CAP: usize = 4096;

/// Largest dimension for which dense operator matrices are materialized.
pub const DENSE_CAP: usize = 512;

/// Single-site sl2 generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteOp {
    /// Raising generator `e`.
    Raise,
    /// Lowering generator `f`.
    Lower,
    /// Cartan generator `h`.
    Cartan,
}

/// A finite-dimensional irreducible with explicit generator matrices.
#[derive(Debug, Clone)]
pub struct Irrep {
    /// Highest weight.
    pub weight: u32,
    /// Raising generator, `e v_k = k (λ - k + 1) v_{k-1}`.
    pub e: CMat,
    /// Lowering generator, `f v_k = v_{k+1}`.
    pub f: CMat,
    /// Cartan generator, `h v_k = (λ - 2k) v_k`.
    pub h: CMat,
}

/// Build the (λ+1)-dimensional irreducible with integer matrix entries.
/// Basis ordered from the highest-weight vector down.
pub fn build_irrep(weight: u32) -> Irrep {
    let lam = weight as f64;
    let d = weight as usize + 1;
    let mut e = CMat::zeros(d, d);
    let mut f = CMat::zeros(d, d);
    let mut h = CMat::zeros(d, d);
    for k in 0..d {
        let kf = k as f64;
        h[(k, k)] = c64(lam - 2.0 * kf, 0.0);
        if k + 1 < d {
            f[(k + 1, k)] = c64(1.0, 0.0);
        }
        if k > 0 {
            e[(k - 1, k)] = c64(kf * (lam - kf + 1.0), 0.0);
        }
    }
    Irrep { weight, e, f, h }
}

/// Per-site eigen data for a candidate common eigenvector.
#[derive(Debug, Clone)]
pub struct EigenReport {
    /// Rayleigh-quotient estimate `⟨Ω, H_i Ω⟩ / ⟨Ω, Ω⟩` per site.
    pub chi: Vec<C64>,
    /// Relative residual `‖H_i Ω − χ_i Ω‖ / ‖Ω‖` per site.
    pub residuals: Vec<f64>,
    /// True when every residual is at or below the tolerance used.
    pub is_eigenvector: bool,
}

/// Estimate the per-site eigenvalues of a candidate vector and measure how far
/// it is from being a common eigenvector. Fails on the zero vector.
pub fn check_eigen(model: &TensorModel, omega: &[C64], tol: f64) -> Result<EigenReport> {
    let n2 = crate::linalg::vec_dot(omega, omega);
    if n2.norm() == 0.0 {
        return Err(Error::InvalidInput("eigen check on the zero vector".into()));
    }
    let mut chi = Vec::with_capacity(model.site_count());
    let mut residuals = Vec::with_capacity(model.site_count());
    for i in 0..model.site_count() {
        let hv = model.apply_hamiltonian(i, omega);
        let c = crate::linalg::vec_dot(omega, &hv) / n2;
        chi.push(c);
        residuals.push(model.eigen_residual(i, omega, c));
    }
    let is_eigenvector = residuals.iter().all(|&r| r <= tol);
    Ok(EigenReport { chi, residuals, is_eigenvector })
}

/// Tensor product of sl2 irreducibles attached to distinct marked points.
#[derive(Debug, Clone)]
pub struct TensorModel {
    /// Highest weights λ_i (site i carries the (λ_i+1)-dimensional irreducible).
    pub weights: Vec<u32>,
    /// Marked points z_i, pairwise distinct.
    pub points: Vec<C64>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl TensorModel {
    /// Build a model; fails on mismatched lengths, colliding points, or a total
    /// dimension above [`DIMENSION_CAP`].
    pub fn new(weights: Vec<u32>, points: Vec<C64>) -> Result<Self> {
        if weights.len() != points.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights but {} marked points",
                weights.len(),
                points.len()
            )));
        }
        if weights.is_empty() {
            return Err(Error::InvalidInput("a model needs at least one site".into()));
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let dist = (points[i] - points[j]).norm();
                if dist < 1e-12 {
                    return Err(Error::PoleCollision { a: points[i], b: points[j], dist });
                }
            }
        }
        let dims: Vec<usize> = weights.iter().map(|&w| w as usize + 1).collect();
        let mut dim = 1usize;
        for &d in &dims {
            dim = dim.saturating_mul(d);
            if dim > DIMENSION_CAP {
                return Err(Error::DimensionCap { dim, cap: DIMENSION_CAP });
            }
        }
        // Row-major strides, last site fastest.
        let n = dims.len();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        Ok(TensorModel { weights, points, dims, strides, dim })
    }

    /// Total tensor dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of sites.
    pub fn site_count(&self) -> usize {
        self.weights.len()
    }

    /// Flat index of a multi-index.
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    /// The highest-weight (vacuum) vector `v_0 ⊗ … ⊗ v_0`.
    pub fn vacuum(&self) -> Vec<C64> {
        let mut v = vec![c64(0.0, 0.0); self.dim];
        v[0] = c64(1.0, 0.0);
        v
    }

    /// Apply a single-site generator to a state vector.
    pub fn apply_site(&self, op: SiteOp, site: usize, v: &[C64]) -> Vec<C64> {
        assert!(site < self.site_count(), "site index out of range");
        assert_eq!(v.len(), self.dim, "state dimension mismatch");
        let lam = self.weights[site] as f64;
        let d = self.dims[site];
        let s = self.strides[site];
        let mut out = vec![c64(0.0, 0.0); self.dim];
        for (idx, &x) in v.iter().enumerate() {
            if x.norm_sqr() == 0.0 {
                continue;
            }
            let k = (idx / s) % d;
            match op {
                SiteOp::Lower => {
                    if k + 1 < d {
                        out[idx + s] += x;
                    }
                }
                SiteOp::Raise => {
                    if k > 0 {
                        let kf = k as f64;
                        out[idx - s] += x * c64(kf * (lam - kf + 1.0), 0.0);
                    }
                }
                SiteOp::Cartan => {
                    out[idx] += x * c64(lam - 2.0 * k as f64, 0.0);
                }
            }
        }
        out
    }

    /// Apply the quadratic Hamiltonian attached to site `i`:
    /// `H_i = Σ_{j≠i} (h_i h_j / 2 + e_i f_j + e_j f_i) / (z_i - z_j)`.
    pub fn apply_hamiltonian(&self, i: usize, v: &[C64]) -> Vec<C64> {
        assert!(i < self.site_count(), "site index out of range");
        let mut out = vec![c64(0.0, 0.0); self.dim];
        for j in 0..self.site_count() {
            if j == i {
                continue;
            }
            let denom = self.points[i] - self.points[j];
            let hh = self.apply_site(SiteOp::Cartan, i, &self.apply_site(SiteOp::Cartan, j, v));
            let ef = self.apply_site(SiteOp::Raise, i, &self.apply_site(SiteOp::Lower, j, v));
            let fe = self.apply_site(SiteOp::Raise, j, &self.apply_site(SiteOp::Lower, i, v));
            for (o, ((a, b), c)) in out.iter_mut().zip(hh.iter().zip(&ef).zip(&fe)) {
                *o += (a * 0.5 + b + c) / denom;
            }
        }
        out
    }

    /// All flat indices whose total lowering count `Σ k_i` equals `m`.
    /// The Hamiltonians preserve these subspaces.
    pub fn weight_subspace_indices(&self, m: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut multi = vec![0usize; self.site_count()];
        'outer: loop {
            if multi.iter().sum::<usize>() == m {
                out.push(self.flat_index(&multi));
            }
            for site in (0..self.site_count()).rev() {
                multi[site] += 1;
                if multi[site] < self.dims[site] {
                    continue 'outer;
                }
                multi[site] = 0;
            }
            break;
        }
        out.sort_unstable();
        out
    }

    /// Dense matrix of `H_i` restricted to the lowering-count-`m` subspace.
    /// The subspace dimension must not exceed [`DENSE_CAP`].
    pub fn hamiltonian_on_weight_subspace(&self, i: usize, m: usize) -> Result<CMat> {
        let indices = self.weight_subspace_indices(m);
        let d = indices.len();
        if d > DENSE_CAP {
            return Err(Error::DimensionCap { dim: d, cap: DENSE_CAP });
        }
        let mut mat = CMat::zeros(d, d);
        for (col, &basis_idx) in indices.iter().enumerate() {
            let mut v = vec![c64(0.0, 0.0); self.dim];
            v[basis_idx] = c64(1.0, 0.0);
            let hv = self.apply_hamiltonian(i, &v);
            for (row, &out_idx) in indices.iter().enumerate() {
                mat[(row, col)] = hv[out_idx];
            }
        }
        Ok(mat)
    }

    /// Apply the lowering-field operator `C(μ) = Σ_i f^{(i)} / (μ - z_i)`.
    pub fn apply_lowering_field(&self, mu: C64, v: &[C64]) -> Result<Vec<C64>> {
        let mut out = vec![c64(0.0, 0.0); self.dim];
        for (i, &z) in self.points.iter().enumerate() {
            let denom = mu - z;
            if denom.norm() < 1e-12 {
                return Err(Error::PoleCollision { a: mu, b: z, dist: denom.norm() });
            }
            let fv = self.apply_site(SiteOp::Lower, i, v);
            for (o, x) in out.iter_mut().zip(&fv) {
                *o += x / denom;
            }
        }
        Ok(out)
    }

    /// The candidate eigenvector `Ω = C(μ_1) ⋯ C(μ_M) (v_0 ⊗ … ⊗ v_0)`
    /// attached to a tuple of spectral parameters.
    pub fn bethe_vector(&self, mu: &[C64]) -> Result<Vec<C64>> {
        let mut v = self.vacuum();
        for &m in mu {
            v = self.apply_lowering_field(m, &v)?;
        }
        Ok(v)
    }

    /// Apply the quadratic Casimir `h²/2 + ef + fe` at one site; it acts as the
    /// scalar `½ λ_i (λ_i + 2)` on the whole space.
    pub fn apply_casimir(&self, site: usize, v: &[C64]) -> Vec<C64> {
        let hh = self.apply_site(SiteOp::Cartan, site, &self.apply_site(SiteOp::Cartan, site, v));
        let ef = self.apply_site(SiteOp::Raise, site, &self.apply_site(SiteOp::Lower, site, v));
        let fe = self.apply_site(SiteOp::Lower, site, &self.apply_site(SiteOp::Raise, site, v));
        hh.iter()
            .zip(ef.iter().zip(&fe))
            .map(|(a, (b, c))| a * 0.5 + b + c)
            .collect()
    }

    /// Relative eigen-residual `‖H_i v - χ v‖ / ‖v‖`; infinite for the zero vector.
    pub fn eigen_residual(&self, i: usize, v: &[C64], chi: C64) -> f64 {
        let nv = crate::linalg::vec_norm(v);
        if nv == 0.0 {
            return f64::INFINITY;
        }
        let hv = self.apply_hamiltonian(i, v);
        let mut err2 = 0.0f64;
        for (a, b) in hv.iter().zip(v) {
            err2 += (a - chi * b).norm_sqr();
        }
        err2.sqrt() / nv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vec_norm;
    use crate::calgebra::{poly_roots, sort_complex};

    fn model(weights: &[u32], points: &[f64]) -> TensorModel {
        TensorModel::new(
            weights.to_vec(),
            points.iter().map(|&x| c64(x, 0.0)).collect(),
        )
        .unwrap()
    }

    fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    #[test]
    fn single_site_generators_satisfy_sl2_relations() {
        let m = model(&[3], &[0.0]);
        for idx in 0..m.dim() {
            let mut v = vec![c64(0.0, 0.0); m.dim()];
            v[idx] = c64(1.0, 0.0);
            // [e, f] = h
            let ef = m.apply_site(SiteOp::Raise, 0, &m.apply_site(SiteOp::Lower, 0, &v));
            let fe = m.apply_site(SiteOp::Lower, 0, &m.apply_site(SiteOp::Raise, 0, &v));
            let h = m.apply_site(SiteOp::Cartan, 0, &v);
            let comm = sub(&sub(&ef, &fe), &h);
            assert!(vec_norm(&comm) < 1e-12, "[e,f]=h fails at basis index {idx}");
            // [h, e] = 2e
            let he = m.apply_site(SiteOp::Cartan, 0, &m.apply_site(SiteOp::Raise, 0, &v));
            let eh = m.apply_site(SiteOp::Raise, 0, &m.apply_site(SiteOp::Cartan, 0, &v));
            let e2: Vec<C64> = m.apply_site(SiteOp::Raise, 0, &v).iter().map(|x| x * 2.0).collect();
            assert!(vec_norm(&sub(&sub(&he, &eh), &e2)) < 1e-12);
        }
    }

    #[test]
    fn hamiltonians_commute_and_sum_to_zero() {
        let m = model(&[1, 2, 1], &[0.0, 1.0, 2.5]);
        // A deterministic dense test vector.
        let v: Vec<C64> = (0..m.dim())
            .map(|k| C64::from_polar(1.0 + 0.1 * k as f64, 0.37 * k as f64))
            .collect();
        let mut total = vec![c64(0.0, 0.0); m.dim()];
        for i in 0..3 {
            let hv = m.apply_hamiltonian(i, &v);
            for (t, x) in total.iter_mut().zip(&hv) {
                *t += x;
            }
        }
        assert!(vec_norm(&total) < 1e-10, "Σ H_i should annihilate every vector");
        for i in 0..3 {
            for j in i + 1..3 {
                let ij = m.apply_hamiltonian(i, &m.apply_hamiltonian(j, &v));
                let ji = m.apply_hamiltonian(j, &m.apply_hamiltonian(i, &v));
                let comm = sub(&ij, &ji);
                assert!(
                    vec_norm(&comm) < 1e-10 * vec_norm(&v),
                    "[H_{i}, H_{j}] should vanish"
                );
            }
        }
    }

    #[test]
    fn vacuum_is_an_eigenvector_with_known_values() {
        // Two sites of weight 1 at 0 and 1: the vacuum has H-eigenvalues (-1/2, 1/2).
        let m = model(&[1, 1], &[0.0, 1.0]);
        let vac = m.vacuum();
        assert!(m.eigen_residual(0, &vac, c64(-0.5, 0.0)) < 1e-13);
        assert!(m.eigen_residual(1, &vac, c64(0.5, 0.0)) < 1e-13);
    }

    #[test]
    fn singlet_state_from_one_spectral_parameter() {
        // Two sites of weight 1 at 0 and 1 with μ = 1/2 produce the singlet
        // 2·v1⊗v0 − 2·v0⊗v1 with H-eigenvalues (3/2, −3/2).
        let m = model(&[1, 1], &[0.0, 1.0]);
        let omega = m.bethe_vector(&[c64(0.5, 0.0)]).unwrap();
        let idx_01 = m.flat_index(&[0, 1]);
        let idx_10 = m.flat_index(&[1, 0]);
        assert!((omega[idx_01] - c64(-2.0, 0.0)).norm() < 1e-13);
        assert!((omega[idx_10] - c64(2.0, 0.0)).norm() < 1e-13);
        assert!(m.eigen_residual(0, &omega, c64(1.5, 0.0)) < 1e-13);
        assert!(m.eigen_residual(1, &omega, c64(-1.5, 0.0)) < 1e-13);
    }

    #[test]
    fn weight_subspaces_are_preserved_and_have_binomial_sizes() {
        let m = model(&[1, 1, 1], &[0.0, 1.0, 2.0]);
        assert_eq!(m.weight_subspace_indices(0).len(), 1);
        assert_eq!(m.weight_subspace_indices(1).len(), 3);
        assert_eq!(m.weight_subspace_indices(2).len(), 3);
        assert_eq!(m.weight_subspace_indices(3).len(), 1);
        // H_0 applied to a weight-1 vector stays in weight 1.
        let idx = m.weight_subspace_indices(1);
        let mut v = vec![c64(0.0, 0.0); m.dim()];
        v[idx[0]] = c64(1.0, 0.0);
        v[idx[2]] = c64(0.5, -0.5);
        let hv = m.apply_hamiltonian(0, &v);
        for (flat, x) in hv.iter().enumerate() {
            if !idx.contains(&flat) {
                assert!(x.norm() < 1e-14, "weight leak at index {flat}");
            }
        }
    }

    #[test]
    fn subspace_matrix_spectrum_matches_trace_and_known_eigenvalue() {
        let m = model(&[1, 1, 1], &[0.0, 1.0, 2.0]);
        let h0 = m.hamiltonian_on_weight_subspace(0, 1).unwrap();
        let p = h0.char_poly();
        let mut eigs = poly_roots(&crate::calgebra::CPoly::new(p), 1e-10).unwrap();
        sort_complex(&mut eigs);
        let trace = h0.trace();
        let sum: C64 = eigs.iter().sum();
        assert!((trace - sum).norm() < 1e-9);
    }

    #[test]
    fn dense_irrep_matrices_satisfy_commutators_and_casimir() {
        for lam in [0u32, 1, 2, 5] {
            let rep = build_irrep(lam);
            let d = lam as usize + 1;
            // [e, f] = h as dense matrices.
            let ef = rep.e.matmul(&rep.f);
            let fe = rep.f.matmul(&rep.e);
            for r in 0..d {
                for c in 0..d {
                    let comm = ef[(r, c)] - fe[(r, c)];
                    assert!((comm - rep.h[(r, c)]).norm() < 1e-14);
                }
            }
            // h = diag(λ, λ-2, …, -λ).
            for k in 0..d {
                assert!((rep.h[(k, k)] - c64(lam as f64 - 2.0 * k as f64, 0.0)).norm() < 1e-14);
            }
        }
        // Casimir scalar ½λ(λ+2) on a mixed tensor state.
        let m = model(&[2, 1], &[0.0, 1.0]);
        let v: Vec<C64> = (0..m.dim()).map(|k| c64(1.0 + k as f64, 0.5 * k as f64)).collect();
        for (site, lam) in [(0usize, 2.0f64), (1, 1.0)] {
            let cv = m.apply_casimir(site, &v);
            let scalar = 0.5 * lam * (lam + 2.0);
            for (a, b) in cv.iter().zip(&v) {
                assert!((a - b * scalar).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn check_eigen_reports_values_and_flags_non_eigenvectors() {
        let m = model(&[1, 1], &[0.0, 1.0]);
        let omega = m.bethe_vector(&[c64(0.5, 0.0)]).unwrap();
        let report = check_eigen(&m, &omega, 1e-10).unwrap();
        assert!(report.is_eigenvector);
        assert!((report.chi[0] - c64(1.5, 0.0)).norm() < 1e-12);
        assert!((report.chi[1] - c64(-1.5, 0.0)).norm() < 1e-12);
        let chi_sum: C64 = report.chi.iter().sum();
        assert!(chi_sum.norm() < 1e-12);
        // Negative control: a generic vector is far from every eigenvector.
        let junk: Vec<C64> = (0..m.dim()).map(|k| c64(1.0, k as f64)).collect();
        let bad = check_eigen(&m, &junk, 1e-10).unwrap();
        assert!(!bad.is_eigenvector);
        assert!(bad.residuals.iter().any(|&r| r > 1e-2));
        // Zero vector is rejected.
        assert!(check_eigen(&m, &vec![c64(0.0, 0.0); m.dim()], 1e-10).is_err());
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let err = TensorModel::new(vec![63; 3], (0..3).map(|k| c64(k as f64, 0.0)).collect());
        assert!(matches!(err, Err(Error::DimensionCap { .. })));
        let err2 = TensorModel::new(vec![1, 1], vec![c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(err2, Err(Error::PoleCollision { .. })));
    }
}
