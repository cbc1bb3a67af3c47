//! Small dense complex linear algebra.
//!
//! Everything here is sized for the needs of the rest of the crate: 2×2 closed
//! forms for the connection/monodromy side, and modest dense matrices (weight
//! subspaces of tensor models, interpolation systems) handled by LU with partial
//! pivoting. Eigenvalues of small matrices are obtained from the characteristic
//! polynomial (Faddeev–LeVerrier) plus the polynomial root finder; for larger
//! spectra we only ever need "distance from a trial value to the nearest
//! eigenvalue", which inverse iteration answers without a full decomposition.

use crate::{C64, Error, Result};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    /// Number of rows.
    pub n_rows: usize,
    /// Number of columns.
    pub n_cols: usize,
    /// Row-major entries, `data[r * n_cols + c]`.
    pub data: Vec<C64>,
}

impl CMat {
    /// Zero matrix of the given shape.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CMat { n_rows, n_cols, data: vec![C64::new(0.0, 0.0); n_rows * n_cols] }
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.n_cols, "matvec dimension mismatch");
        let mut out = vec![C64::new(0.0, 0.0); self.n_rows];
        for r in 0..self.n_rows {
            let row = &self.data[r * self.n_cols..(r + 1) * self.n_cols];
            let mut acc = C64::new(0.0, 0.0);
            for (a, x) in row.iter().zip(v) {
                acc += a * x;
            }
            out[r] = acc;
        }
        out
    }

    /// Matrix-matrix product.
    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.n_cols, other.n_rows, "matmul dimension mismatch");
        let mut out = CMat::zeros(self.n_rows, other.n_cols);
        for r in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self[(r, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..other.n_cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    /// Trace of a square matrix.
    pub fn trace(&self) -> C64 {
        assert_eq!(self.n_rows, self.n_cols, "trace of non-square matrix");
        (0..self.n_rows).map(|i| self[(i, i)]).sum()
    }

    /// Monic characteristic polynomial coefficients `[c_n, ..., c_1, c_0 = 1]`
    /// in ascending degree order, computed by the Faddeev–LeVerrier recursion.
    /// Intended for small matrices (test oracles, weight-subspace spectra).
    pub fn char_poly(&self) -> Vec<C64> {
        assert_eq!(self.n_rows, self.n_cols, "char_poly of non-square matrix");
        let n = self.n_rows;
        let one = C64::new(1.0, 0.0);
        let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
        coeffs[n] = one;
        let mut m = CMat::identity(n);
        for k in 1..=n {
            // M_k = A * (M_{k-1} + c_{n-k+1} I) folds the previous coefficient in.
            let mut am = self.matmul(&m);
            let c = -am.trace() / C64::new(k as f64, 0.0);
            coeffs[n - k] = c;
            for i in 0..n {
                am[(i, i)] += c;
            }
            m = am;
        }
        coeffs
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.n_cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.n_cols + c]
    }
}

/// LU factorization with partial pivoting of a square matrix.
pub struct LuFactors {
    lu: CMat,
    pivots: Vec<usize>,
    swap_count: usize,
    /// True when a pivot fell below the numerical rank threshold.
    pub singular: bool,
}

impl LuFactors {
    /// Factor `a` (consumed). Singularity is recorded, not an error, so callers
    /// can use it as information (e.g. "the shift hit an eigenvalue exactly").
    pub fn new(mut a: CMat) -> Self {
        assert_eq!(a.n_rows, a.n_cols, "LU of non-square matrix");
        let n = a.n_rows;
        let mut pivots = vec![0usize; n];
        let mut swap_count = 0usize;
        let mut singular = false;
        let scale: f64 = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let tiny = scale * 1e-300;
        for col in 0..n {
            let mut best = col;
            let mut best_mag = a[(col, col)].norm();
            for r in col + 1..n {
                let mag = a[(r, col)].norm();
                if mag > best_mag {
                    best = r;
                    best_mag = mag;
                }
            }
            pivots[col] = best;
            if best != col {
                for c in 0..n {
                    let tmp = a[(col, c)];
                    a[(col, c)] = a[(best, c)];
                    a[(best, c)] = tmp;
                }
                swap_count += 1;
            }
            let pivot = a[(col, col)];
            if pivot.norm() <= tiny {
                singular = true;
                continue;
            }
            for r in col + 1..n {
                let factor = a[(r, col)] / pivot;
                a[(r, col)] = factor;
                for c in col + 1..n {
                    let sub = factor * a[(col, c)];
                    a[(r, c)] -= sub;
                }
            }
        }
        LuFactors { lu: a, pivots, swap_count, singular }
    }

    /// Solve `A x = b`. Fails if the factorization was singular.
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        if self.singular {
            return Err(Error::SingularFrame { context: "LU solve on singular matrix" });
        }
        let n = self.lu.n_rows;
        assert_eq!(b.len(), n, "solve dimension mismatch");
        let mut x = b.to_vec();
        // Row swaps must all land before elimination starts: the stored
        // multipliers refer to the fully pivoted row order, so mixing swaps
        // into the forward sweep would hand partial sums to the wrong rows.
        for col in 0..n {
            let p = self.pivots[col];
            if p != col {
                x.swap(col, p);
            }
        }
        for col in 0..n {
            let xc = x[col];
            for r in col + 1..n {
                let sub = self.lu[(r, col)] * xc;
                x[r] -= sub;
            }
        }
        for col in (0..n).rev() {
            let mut acc = x[col];
            for c in col + 1..n {
                acc -= self.lu[(col, c)] * x[c];
            }
            x[col] = acc / self.lu[(col, col)];
        }
        Ok(x)
    }

    /// Determinant of the factored matrix.
    pub fn det(&self) -> C64 {
        if self.singular {
            return C64::new(0.0, 0.0);
        }
        let mut d = if self.swap_count % 2 == 0 { C64::new(1.0, 0.0) } else { C64::new(-1.0, 0.0) };
        for i in 0..self.lu.n_rows {
            d *= self.lu[(i, i)];
        }
        d
    }
}

/// Solve the square system `A x = b` in one call.
pub fn lu_solve(a: &CMat, b: &[C64]) -> Result<Vec<C64>> {
    LuFactors::new(a.clone()).solve(b)
}

/// Determinant of a square matrix via LU.
pub fn lu_det(a: &CMat) -> C64 {
    LuFactors::new(a.clone()).det()
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate-linear inner product `⟨u, v⟩ = Σ conj(u_i) v_i`.
pub fn vec_dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Distance from `shift` to the nearest eigenvalue of `a`, estimated by inverse
/// iteration. Returns 0 when `a - shift I` is numerically singular. The start
/// vector is deterministic, so repeated calls agree bit-for-bit.
pub fn nearest_eigenvalue_distance(a: &CMat, shift: C64) -> f64 {
    assert_eq!(a.n_rows, a.n_cols, "eigenvalue distance of non-square matrix");
    let n = a.n_rows;
    if n == 0 {
        return f64::INFINITY;
    }
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = LuFactors::new(shifted);
    if lu.singular {
        return 0.0;
    }
    // Deterministic start with nonzero overlap against generic eigenvectors.
    let mut v: Vec<C64> = (0..n)
        .map(|j| C64::from_polar(1.0 + (j as f64) / (n as f64), 0.7 * j as f64 + 0.3))
        .collect();
    let nv = vec_norm(&v);
    for z in v.iter_mut() {
        *z /= nv;
    }
    let scale: f64 = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let mut dist = f64::INFINITY;
    for _ in 0..60 {
        let w = match lu.solve(&v) {
            Ok(w) => w,
            Err(_) => return 0.0,
        };
        let growth = vec_norm(&w);
        if !growth.is_finite() || growth == 0.0 {
            return 0.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / growth;
        }
        // Rayleigh quotient of the current iterate against the original matrix.
        // Only the converged value is meaningful: an early iterate's quotient
        // can sit near the shift by accident, so we keep the last one and stop
        // on the eigen-residual, never on the distance itself.
        let av = a.matvec(&v);
        let lambda = vec_dot(&v, &av);
        dist = (lambda - shift).norm();
        let resid: f64 = vec_norm(
            &av.iter().zip(&v).map(|(awi, vi)| awi - lambda * vi).collect::<Vec<_>>(),
        );
        if resid <= 1e-13 * (scale + lambda.norm()) {
            break;
        }
    }
    dist
}

/// 2×2 complex matrix with closed-form operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    /// Entries `[[a, b], [c, d]]` as `m[row][col]`.
    pub m: [[C64; 2]; 2],
}

impl Mat2 {
    /// Build from entries `a b / c d`.
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    /// Zero matrix.
    pub fn zero() -> Self {
        let z = C64::new(0.0, 0.0);
        Mat2::new(z, z, z, z)
    }

    /// Identity matrix.
    pub fn identity() -> Self {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        Mat2::new(o, z, z, o)
    }

    /// Diagonal matrix.
    pub fn diag(a: C64, d: C64) -> Self {
        let z = C64::new(0.0, 0.0);
        Mat2::new(a, z, z, d)
    }

    /// Trace.
    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Determinant.
    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let a = &self.m;
        let b = &other.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    /// Matrix sum.
    pub fn add(&self, other: &Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] + other.m[0][0],
            self.m[0][1] + other.m[0][1],
            self.m[1][0] + other.m[1][0],
            self.m[1][1] + other.m[1][1],
        )
    }

    /// Matrix difference.
    pub fn sub(&self, other: &Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] - other.m[0][0],
            self.m[0][1] - other.m[0][1],
            self.m[1][0] - other.m[1][0],
            self.m[1][1] - other.m[1][1],
        )
    }

    /// Scalar multiple.
    pub fn scale(&self, s: C64) -> Mat2 {
        Mat2::new(self.m[0][0] * s, self.m[0][1] * s, self.m[1][0] * s, self.m[1][1] * s)
    }

    /// Apply to a column vector.
    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Inverse; fails when the determinant is numerically zero relative to the entries.
    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        let scale = self.norm_frobenius().max(1e-300);
        if det.norm() <= 1e-14 * scale * scale {
            return Err(Error::SingularFrame { context: "2x2 inverse" });
        }
        Ok(Mat2::new(
            self.m[1][1] / det,
            -self.m[0][1] / det,
            -self.m[1][0] / det,
            self.m[0][0] / det,
        ))
    }

    /// Frobenius norm.
    pub fn norm_frobenius(&self) -> f64 {
        (self.m[0][0].norm_sqr()
            + self.m[0][1].norm_sqr()
            + self.m[1][0].norm_sqr()
            + self.m[1][1].norm_sqr())
        .sqrt()
    }

    /// Operator (spectral) norm via the closed-form largest singular value.
    pub fn norm_operator(&self) -> f64 {
        let f2 = self.m[0][0].norm_sqr()
            + self.m[0][1].norm_sqr()
            + self.m[1][0].norm_sqr()
            + self.m[1][1].norm_sqr();
        let d2 = self.det().norm_sqr();
        // σ_max² = (‖A‖_F² + sqrt(‖A‖_F⁴ − 4 |det A|²)) / 2
        let disc = (f2 * f2 - 4.0 * d2).max(0.0).sqrt();
        ((f2 + disc) / 2.0).sqrt()
    }

    /// Eigenvalues `(t₁, t₂)` from the trace/determinant closed form.
    pub fn eigenvalues(&self) -> (C64, C64) {
        let half_tr = self.trace() / 2.0;
        let disc = (half_tr * half_tr - self.det()).sqrt();
        (half_tr + disc, half_tr - disc)
    }

    /// Eigenvector for a given eigenvalue, normalized so the largest-magnitude
    /// component equals 1 (first component on ties). Picks the better-conditioned
    /// of the two closed-form candidate vectors.
    pub fn eigenvector(&self, t: C64) -> [C64; 2] {
        let a = self.m[0][0];
        let b = self.m[0][1];
        let c = self.m[1][0];
        let d = self.m[1][1];
        let cand1 = [b, t - a];
        let cand2 = [t - d, c];
        let n1 = cand1[0].norm_sqr() + cand1[1].norm_sqr();
        let n2 = cand2[0].norm_sqr() + cand2[1].norm_sqr();
        let mut v = if n1 >= n2 { cand1 } else { cand2 };
        if v[0].norm_sqr() + v[1].norm_sqr() == 0.0 {
            // The matrix is a multiple of the identity: every vector works.
            v = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        }
        normalize_largest_component(v)
    }
}

/// Basis of the null space of a dense complex matrix given as rows, via
/// Gaussian elimination with partial pivoting. A pivot below `tol` times the
/// largest entry magnitude counts as zero. Returned vectors have length
/// `cols` and are normalized so their largest component is 1.
pub fn null_space(rows: &[Vec<C64>], cols: usize, tol: f64) -> Vec<Vec<C64>> {
    let mut a: Vec<Vec<C64>> = rows.to_vec();
    let m = a.len();
    let max_entry = a
        .iter()
        .flatten()
        .map(|e| e.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let cutoff = tol * max_entry;
    let mut pivot_cols = Vec::new();
    let mut row = 0usize;
    for col in 0..cols {
        let mut best = row;
        for r in row..m {
            if a[r][col].norm() > a[best][col].norm() {
                best = r;
            }
        }
        if row >= m || a[best][col].norm() <= cutoff {
            continue;
        }
        a.swap(row, best);
        let piv = a[row][col];
        for c in col..cols {
            a[row][c] /= piv;
        }
        for r in 0..m {
            if r != row {
                let factor = a[r][col];
                if factor.norm() > 0.0 {
                    for c in col..cols {
                        let sub = factor * a[row][c];
                        a[r][c] -= sub;
                    }
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == m {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![C64::new(0.0, 0.0); cols];
        v[free] = C64::new(1.0, 0.0);
        for (r, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -a[r][free];
        }
        let biggest = v.iter().map(|e| e.norm()).fold(0.0f64, f64::max);
        if biggest > 0.0 {
            let pivot = *v
                .iter()
                .find(|e| e.norm() == biggest)
                .expect("max exists");
            for e in &mut v {
                *e /= pivot;
            }
        }
        basis.push(v);
    }
    basis
}

/// Normalize a 2-vector so its largest-magnitude component is exactly 1
/// (ties resolved toward the first component). Zero vectors are returned as-is.
pub fn normalize_largest_component(v: [C64; 2]) -> [C64; 2] {
    let n0 = v[0].norm();
    let n1 = v[1].norm();
    if n0 == 0.0 && n1 == 0.0 {
        return v;
    }
    let pivot = if n0 >= n1 { v[0] } else { v[1] };
    [v[0] / pivot, v[1] / pivot]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn approx(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn lu_solves_a_known_system() {
        let mut a = CMat::zeros(3, 3);
        let entries = [
            [2.0, 1.0, -1.0],
            [-3.0, -1.0, 2.0],
            [-2.0, 1.0, 2.0],
        ];
        for r in 0..3 {
            for c in 0..3 {
                a[(r, c)] = c64(entries[r][c], 0.0);
            }
        }
        let b = [c64(8.0, 0.0), c64(-11.0, 0.0), c64(-3.0, 0.0)];
        let x = lu_solve(&a, &b).unwrap();
        assert!(approx(x[0], c64(2.0, 0.0), 1e-12));
        assert!(approx(x[1], c64(3.0, 0.0), 1e-12));
        assert!(approx(x[2], c64(-1.0, 0.0), 1e-12));
        assert!(approx(lu_det(&a), c64(-1.0, 0.0), 1e-12));
    }

    #[test]
    fn lu_reports_singularity() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 0)] = c64(1.0, 0.0);
        a[(0, 1)] = c64(2.0, 0.0);
        a[(1, 0)] = c64(2.0, 0.0);
        a[(1, 1)] = c64(4.0, 0.0);
        let lu = LuFactors::new(a);
        assert!(lu.singular);
        assert_eq!(lu.det(), c64(0.0, 0.0));
    }

    #[test]
    fn char_poly_of_companion_matrix_recovers_coefficients() {
        // Companion matrix of p(t) = t³ - 6t² + 11t - 6 = (t-1)(t-2)(t-3).
        let mut a = CMat::zeros(3, 3);
        a[(0, 1)] = c64(1.0, 0.0);
        a[(1, 2)] = c64(1.0, 0.0);
        a[(2, 0)] = c64(6.0, 0.0);
        a[(2, 1)] = c64(-11.0, 0.0);
        a[(2, 2)] = c64(6.0, 0.0);
        let p = a.char_poly();
        let expect = [-6.0, 11.0, -6.0, 1.0];
        for (got, want) in p.iter().zip(expect) {
            assert!(approx(*got, c64(want, 0.0), 1e-12), "got {got}, want {want}");
        }
    }

    #[test]
    fn nearest_eigenvalue_distance_matches_known_spectrum() {
        // Diagonalizable matrix with eigenvalues 1, 2, 3 (companion form).
        let mut a = CMat::zeros(3, 3);
        a[(0, 1)] = c64(1.0, 0.0);
        a[(1, 2)] = c64(1.0, 0.0);
        a[(2, 0)] = c64(6.0, 0.0);
        a[(2, 1)] = c64(-11.0, 0.0);
        a[(2, 2)] = c64(6.0, 0.0);
        let d = nearest_eigenvalue_distance(&a, c64(2.2, 0.0));
        assert!((d - 0.2).abs() < 1e-9, "distance {d}");
        let d0 = nearest_eigenvalue_distance(&a, c64(3.0, 0.0));
        assert!(d0 < 1e-9, "distance {d0}");
    }

    #[test]
    fn mat2_inverse_and_norms() {
        let m = Mat2::new(c64(1.0, 1.0), c64(2.0, 0.0), c64(0.0, -1.0), c64(3.0, 0.5));
        let inv = m.inverse().unwrap();
        let prod = m.mul(&inv);
        assert!(approx(prod.m[0][0], c64(1.0, 0.0), 1e-12));
        assert!(approx(prod.m[0][1], c64(0.0, 0.0), 1e-12));
        assert!(approx(prod.m[1][0], c64(0.0, 0.0), 1e-12));
        assert!(approx(prod.m[1][1], c64(1.0, 0.0), 1e-12));
        // Operator norm of a diagonal matrix is the largest |entry|.
        let d = Mat2::diag(c64(3.0, 4.0), c64(1.0, 0.0));
        assert!((d.norm_operator() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_of_rank_deficient_system_is_recovered() {
        // Rows: x + y + z = 0 stated twice plus x − y = 0 → null space is
        // spanned by (1, 1, −2).
        let rows = vec![
            vec![c64(1.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0)],
            vec![c64(2.0, 0.0), c64(2.0, 0.0), c64(2.0, 0.0)],
            vec![c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 0.0)],
        ];
        let basis = null_space(&rows, 3, 1e-12);
        assert_eq!(basis.len(), 1);
        let v = &basis[0];
        for row in &rows {
            let dot: C64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            assert!(dot.norm() < 1e-12);
        }
        // Full-rank system has an empty null space.
        let rows = vec![
            vec![c64(1.0, 0.0), c64(0.0, 0.0)],
            vec![c64(1.0, 0.0), c64(1.0, 0.0)],
        ];
        assert!(null_space(&rows, 2, 1e-12).is_empty());
    }

    #[test]
    fn mat2_eigen_pairs_satisfy_definition() {
        let m = Mat2::new(c64(2.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(2.0, 0.0));
        let (t1, t2) = m.eigenvalues();
        for t in [t1, t2] {
            let v = m.eigenvector(t);
            let mv = m.apply(v);
            assert!(approx(mv[0], t * v[0], 1e-12));
            assert!(approx(mv[1], t * v[1], 1e-12));
            let max = v[0].norm().max(v[1].norm());
            assert!((max - 1.0).abs() < 1e-12, "not normalized: {v:?}");
        }
    }
}
