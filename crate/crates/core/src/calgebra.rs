//! Complex polynomials and rational functions.
//!
//! Polynomials are dense, ascending-degree coefficient vectors over [`C64`].
//! Root finding uses the Aberth–Ehrlich simultaneous iteration with a Cauchy-bound
//! circle start and a Newton polish, certified by a backward-error test. Rational
//! functions are stored as an explicit polynomial part plus pole terms (arbitrary
//! finite order per pole), which is the shape every construction in this crate
//! produces and consumes. A small DFT-based interpolation recovers a polynomial
//! from samples on a circle; it is used to reconstruct numerators whose values
//! are only accessible pointwise.

use crate::{C64, Error, Result, c64};

/// Dense complex polynomial, ascending degree. The zero polynomial has an empty
/// coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CPoly {
    /// Coefficients, `coeffs[k]` multiplying `z^k`. No trailing exact zeros.
    pub coeffs: Vec<C64>,
}

impl CPoly {
    /// Build from coefficients, trimming trailing exact zeros.
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| c.norm_sqr() == 0.0) {
            coeffs.pop();
        }
        CPoly { coeffs }
    }

    /// The zero polynomial.
    pub fn zero() -> Self {
        CPoly { coeffs: Vec::new() }
    }

    /// The constant polynomial 1.
    pub fn one() -> Self {
        CPoly { coeffs: vec![c64(1.0, 0.0)] }
    }

    /// Constant polynomial.
    pub fn constant(c: C64) -> Self {
        CPoly::new(vec![c])
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut coeffs = vec![c64(1.0, 0.0)];
        for &r in roots {
            // Multiply the accumulated product by (z - r).
            let mut next = vec![c64(0.0, 0.0); coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        CPoly::new(coeffs)
    }

    /// True when this is the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() { None } else { Some(self.coeffs.len() - 1) }
    }

    /// Leading coefficient (zero for the zero polynomial).
    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or(c64(0.0, 0.0))
    }

    /// Evaluate by Horner's rule.
    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = c64(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Derivative.
    pub fn derivative(&self) -> CPoly {
        if self.coeffs.len() <= 1 {
            return CPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * c64(k as f64, 0.0))
            .collect();
        CPoly::new(coeffs)
    }

    /// Sum.
    pub fn add(&self, other: &CPoly) -> CPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![c64(0.0, 0.0); n];
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs[k] += c;
        }
        for (k, &c) in other.coeffs.iter().enumerate() {
            coeffs[k] += c;
        }
        CPoly::new(coeffs)
    }

    /// Difference.
    pub fn sub(&self, other: &CPoly) -> CPoly {
        self.add(&other.scale(c64(-1.0, 0.0)))
    }

    /// Scalar multiple.
    pub fn scale(&self, s: C64) -> CPoly {
        CPoly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Product.
    pub fn mul(&self, other: &CPoly) -> CPoly {
        if self.is_zero() || other.is_zero() {
            return CPoly::zero();
        }
        let mut coeffs = vec![c64(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        CPoly::new(coeffs)
    }

    /// Multiply by the linear factor `(z - r)`.
    pub fn mul_linear(&self, r: C64) -> CPoly {
        if self.is_zero() {
            return CPoly::zero();
        }
        let mut coeffs = vec![c64(0.0, 0.0); self.coeffs.len() + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs[k + 1] += c;
            coeffs[k] -= c * r;
        }
        CPoly::new(coeffs)
    }

    /// Scale to a monic polynomial. Fails on the zero polynomial.
    pub fn monic(&self) -> Result<CPoly> {
        let lead = self.leading();
        if lead.norm_sqr() == 0.0 {
            return Err(Error::InvalidInput("cannot normalize the zero polynomial".into()));
        }
        Ok(self.scale(lead.inv()))
    }

    /// Euclidean division: `self = q * div + r` with `deg r < deg div`.
    pub fn div_rem(&self, div: &CPoly) -> Result<(CPoly, CPoly)> {
        let dlead = div.leading();
        if dlead.norm_sqr() == 0.0 {
            return Err(Error::InvalidInput("division by the zero polynomial".into()));
        }
        let dn = div.coeffs.len();
        if self.coeffs.len() < dn {
            return Ok((CPoly::zero(), self.clone()));
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![c64(0.0, 0.0); rem.len() - dn + 1];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dn - 1] / dlead;
            quot[k] = q;
            if q.norm_sqr() == 0.0 {
                continue;
            }
            for (j, &dc) in div.coeffs.iter().enumerate() {
                let sub = q * dc;
                rem[k + j] -= sub;
            }
        }
        rem.truncate(dn - 1);
        Ok((CPoly::new(quot), CPoly::new(rem)))
    }

    /// Divide by a linear factor `(z - r)`: returns the quotient and the
    /// remainder value `p(r)` (synthetic division).
    pub fn deflate_root(&self, r: C64) -> (CPoly, C64) {
        if self.coeffs.is_empty() {
            return (CPoly::zero(), c64(0.0, 0.0));
        }
        let n = self.coeffs.len();
        let mut quot = vec![c64(0.0, 0.0); n.saturating_sub(1)];
        let mut carry = c64(0.0, 0.0);
        for k in (0..n).rev() {
            let value = self.coeffs[k] + carry * r;
            if k == 0 {
                return (CPoly::new(quot), value);
            }
            quot[k - 1] = value;
            carry = value;
        }
        unreachable!()
    }

    /// Largest coefficient magnitude (0 for the zero polynomial).
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Copy with trailing coefficients below `eps_rel * max|coeff|` removed.
    /// Useful after interpolation, where target-degree coefficients are exact
    /// but higher ones carry roundoff noise.
    pub fn trimmed(&self, eps_rel: f64) -> CPoly {
        let cutoff = eps_rel * self.max_coeff_norm();
        let mut coeffs = self.coeffs.clone();
        while coeffs.last().is_some_and(|c| c.norm() <= cutoff) {
            coeffs.pop();
        }
        CPoly::new(coeffs)
    }
}

/// Roots of a polynomial by Aberth–Ehrlich iteration with Newton polish,
/// sorted lexicographically by (re, im). `tol` is a relative backward-error
/// bound: each returned root x satisfies `|p(x)| <= tol * Σ|a_k||x|^k`.
pub fn poly_roots(p: &CPoly, tol: f64) -> Result<Vec<C64>> {
    let n = match p.degree() {
        None => return Err(Error::InvalidInput("roots of the zero polynomial".into())),
        Some(0) => return Ok(Vec::new()),
        Some(n) => n,
    };
    let lead = p.leading();
    if n == 1 {
        return Ok(vec![-p.coeffs[0] / lead]);
    }
    if n == 2 {
        let mut roots = quadratic_roots(p.coeffs[2], p.coeffs[1], p.coeffs[0]);
        sort_complex(&mut roots);
        return Ok(roots);
    }

    let dp = p.derivative();
    // Cauchy bound: all roots lie within 1 + max |a_k / a_n|.
    let bound = 1.0
        + p.coeffs[..n]
            .iter()
            .map(|c| (c / lead).norm())
            .fold(0.0, f64::max);
    let radius = bound.max(1e-3);
    let mut xs: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4))
        .collect();

    let max_iters = 120;
    for _ in 0..max_iters {
        let mut max_step = 0.0f64;
        let snapshot = xs.clone();
        for k in 0..n {
            let x = snapshot[k];
            let pv = p.eval(x);
            let dv = dp.eval(x);
            let newton = if dv.norm_sqr() == 0.0 {
                // Perturb away from a critical point.
                c64(1e-8 * (1.0 + x.norm()), 0.0)
            } else {
                pv / dv
            };
            let mut s = c64(0.0, 0.0);
            for (j, &xj) in snapshot.iter().enumerate() {
                if j != k {
                    let d = x - xj;
                    if d.norm_sqr() > 0.0 {
                        s += d.inv();
                    }
                }
            }
            let denom = c64(1.0, 0.0) - newton * s;
            let step = if denom.norm_sqr() < 1e-300 { newton } else { newton / denom };
            xs[k] = x - step;
            let rel = step.norm() / (1.0 + xs[k].norm());
            if rel > max_step {
                max_step = rel;
            }
        }
        if max_step < 1e-14 {
            break;
        }
    }

    // Newton polish sharpens each root independently.
    for x in xs.iter_mut() {
        for _ in 0..4 {
            let dv = dp.eval(*x);
            if dv.norm_sqr() == 0.0 {
                break;
            }
            let step = p.eval(*x) / dv;
            let next = *x - step;
            if !next.re.is_finite() || !next.im.is_finite() {
                break;
            }
            *x = next;
            if step.norm() <= 1e-16 * (1.0 + x.norm()) {
                break;
            }
        }
    }

    // Backward-error certification.
    let mut worst = 0.0f64;
    for &x in &xs {
        let mut scale = 0.0f64;
        let mut pw = 1.0f64;
        for c in &p.coeffs {
            scale += c.norm() * pw;
            pw *= x.norm();
        }
        let err = p.eval(x).norm() / scale.max(1e-300);
        if err > worst {
            worst = err;
        }
    }
    if worst > tol {
        return Err(Error::RootsDidNotConverge { residual: worst, iterations: max_iters });
    }

    sort_complex(&mut xs);
    Ok(xs)
}

/// Numerically stable roots of `a z² + b z + c` (a ≠ 0).
pub fn quadratic_roots(a: C64, b: C64, c: C64) -> Vec<C64> {
    let disc = (b * b - 4.0 * a * c).sqrt();
    // Choose the sign that avoids cancellation in -b ∓ disc.
    let q = if (b + disc).norm() >= (b - disc).norm() {
        -(b + disc) / 2.0
    } else {
        -(b - disc) / 2.0
    };
    if q.norm_sqr() == 0.0 {
        // b = 0 and c = 0: double root at the origin.
        return vec![c64(0.0, 0.0), c64(0.0, 0.0)];
    }
    vec![q / a, c / q]
}

/// Sort complex numbers lexicographically by (re, im). Total order for
/// deterministic output; NaNs are pushed last.
pub fn sort_complex(zs: &mut [C64]) {
    zs.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Default pole-separation tolerance (in the problem's length scale).
pub const POLE_SEPARATION_TOL: f64 = 1e-8;

/// One pole of a pole-sum with coefficients for each order.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleTerm {
    /// Pole location.
    pub pole: C64,
    /// `coeffs[m]` multiplies `(z - pole)^{-(m+1)}`; `coeffs[0]` is the residue.
    pub coeffs: Vec<C64>,
}

/// Rational function in expanded form: polynomial part plus finite-order pole
/// terms. This is the shape the scalar-operator and connection formulas produce
/// directly (residues and double-pole coefficients are explicit fields).
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSum {
    /// Polynomial part.
    pub poly: CPoly,
    /// Pole terms; poles are expected distinct.
    pub terms: Vec<PoleTerm>,
}

impl PoleSum {
    /// The zero function.
    pub fn zero() -> Self {
        PoleSum { poly: CPoly::zero(), terms: Vec::new() }
    }

    /// Build `Σ residues[k] / (z - poles[k])`.
    pub fn from_simple_poles(poles: &[C64], residues: &[C64]) -> Self {
        assert_eq!(poles.len(), residues.len(), "pole/residue length mismatch");
        let terms = poles
            .iter()
            .zip(residues)
            .map(|(&pole, &r)| PoleTerm { pole, coeffs: vec![r] })
            .collect();
        PoleSum { poly: CPoly::zero(), terms }
    }

    /// Evaluate at a point away from the poles.
    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = self.poly.eval(z);
        for term in &self.terms {
            let inv = (z - term.pole).inv();
            let mut pw = inv;
            for &c in &term.coeffs {
                acc += c * pw;
                pw *= inv;
            }
        }
        acc
    }

    /// Derivative.
    pub fn derivative(&self) -> PoleSum {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut coeffs = vec![c64(0.0, 0.0); t.coeffs.len() + 1];
                for (m, &c) in t.coeffs.iter().enumerate() {
                    // d/dz (z-p)^{-(m+1)} = -(m+1) (z-p)^{-(m+2)}
                    coeffs[m + 1] = -c * c64((m + 1) as f64, 0.0);
                }
                PoleTerm { pole: t.pole, coeffs: coeffs_trim(coeffs) }
            })
            .filter(|t| !t.coeffs.is_empty())
            .collect();
        PoleSum { poly: self.poly.derivative(), terms }
    }

    /// Sum; pole terms at (exactly) equal locations are merged.
    pub fn add(&self, other: &PoleSum) -> PoleSum {
        let mut terms: Vec<PoleTerm> = self.terms.clone();
        for t in &other.terms {
            if let Some(existing) = terms.iter_mut().find(|e| e.pole == t.pole) {
                if existing.coeffs.len() < t.coeffs.len() {
                    existing.coeffs.resize(t.coeffs.len(), c64(0.0, 0.0));
                }
                for (m, &c) in t.coeffs.iter().enumerate() {
                    existing.coeffs[m] += c;
                }
            } else {
                terms.push(t.clone());
            }
        }
        for t in terms.iter_mut() {
            t.coeffs = coeffs_trim(std::mem::take(&mut t.coeffs));
        }
        terms.retain(|t| !t.coeffs.is_empty());
        PoleSum { poly: self.poly.add(&other.poly), terms }
    }

    /// Scalar multiple.
    pub fn scale(&self, s: C64) -> PoleSum {
        PoleSum {
            poly: self.poly.scale(s),
            terms: self
                .terms
                .iter()
                .map(|t| PoleTerm {
                    pole: t.pole,
                    coeffs: t.coeffs.iter().map(|&c| c * s).collect(),
                })
                .collect(),
        }
    }

    /// Residue (coefficient of `(z - pole)^{-1}`) at the pole nearest `pole`
    /// within `tol`; zero when no stored pole matches.
    pub fn residue_near(&self, pole: C64, tol: f64) -> C64 {
        self.terms
            .iter()
            .find(|t| (t.pole - pole).norm() <= tol)
            .map(|t| t.coeffs[0])
            .unwrap_or(c64(0.0, 0.0))
    }
}

fn coeffs_trim(mut coeffs: Vec<C64>) -> Vec<C64> {
    while coeffs.last().is_some_and(|c| c.norm_sqr() == 0.0) {
        coeffs.pop();
    }
    coeffs
}

/// Rational function as numerator over a denominator with simple roots, with the
/// pole list and residues cached at construction time.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFn {
    /// Numerator.
    pub num: CPoly,
    /// Denominator, normalized monic.
    pub den: CPoly,
    /// Roots of the denominator (the poles), sorted.
    pub poles: Vec<C64>,
    /// Residue at each pole, aligned with `poles`.
    pub residues: Vec<C64>,
    /// Polynomial part (Euclidean quotient of num by den).
    pub poly_part: CPoly,
}

impl RationalFn {
    /// Build from numerator and denominator. The denominator's roots are found
    /// numerically and must be simple and separated by at least `sep_tol`.
    pub fn new(num: CPoly, den: CPoly, sep_tol: f64) -> Result<Self> {
        let den = den.monic()?;
        let poles = if den.degree() == Some(0) { Vec::new() } else { poly_roots(&den, 1e-11)? };
        for i in 0..poles.len() {
            for j in i + 1..poles.len() {
                let dist = (poles[i] - poles[j]).norm();
                if dist < sep_tol {
                    return Err(Error::PoleCollision { a: poles[i], b: poles[j], dist });
                }
            }
        }
        let (poly_part, _) = num.div_rem(&den)?;
        let residues = simple_pole_residues(&num, &den, &poles)?;
        Ok(RationalFn { num, den, poles, residues, poly_part })
    }

    /// Evaluate as num/den.
    pub fn eval(&self, z: C64) -> C64 {
        self.num.eval(z) / self.den.eval(z)
    }

    /// Partial-fraction data: the cached (pole, residue) pairs plus the
    /// polynomial part. The reconstruction `poly_part + Σ res/(z−pole)` agrees
    /// with num/den wherever both are defined.
    pub fn partial_fractions(&self) -> (Vec<(C64, C64)>, CPoly) {
        (
            self.poles.iter().copied().zip(self.residues.iter().copied()).collect(),
            self.poly_part.clone(),
        )
    }

    /// Residue at `z0`: the cached residue if `z0` is (within `tol`) one of the
    /// poles, and 0 at regular points. Ambiguous proximity to two poles is an
    /// error.
    pub fn residue_at(&self, z0: C64, tol: f64) -> Result<C64> {
        let mut hits = self
            .poles
            .iter()
            .enumerate()
            .filter(|(_, p)| (*p - z0).norm() <= tol)
            .map(|(k, _)| k);
        match (hits.next(), hits.next()) {
            (None, _) => Ok(c64(0.0, 0.0)),
            (Some(k), None) => Ok(self.residues[k]),
            (Some(k), Some(l)) => Err(Error::PoleCollision {
                a: self.poles[k],
                b: self.poles[l],
                dist: (self.poles[k] - self.poles[l]).norm(),
            }),
        }
    }
}

/// Residues of `num / den` at the simple roots of `den`: residue at r is
/// `num(r) / den'(r)`. Fails when a root is (numerically) multiple.
pub fn simple_pole_residues(num: &CPoly, den: &CPoly, den_roots: &[C64]) -> Result<Vec<C64>> {
    let dden = den.derivative();
    den_roots
        .iter()
        .map(|&r| {
            let d = dden.eval(r);
            if d.norm() <= 1e-13 * (1.0 + den.max_coeff_norm()) {
                return Err(Error::PoleCollision {
                    a: r,
                    b: r,
                    dist: 0.0,
                });
            }
            Ok(num.eval(r) / d)
        })
        .collect()
}

/// Recover the polynomial of degree < `values.len()` taking `values[j]` at the
/// nodes `center + radius·ω^j`, `ω = exp(2πi/N)`: inverse DFT for the Taylor
/// coefficients at `center`, then a basis shift back to powers of `z`.
pub fn poly_from_circle_samples(center: C64, radius: f64, values: &[C64]) -> CPoly {
    let n = values.len();
    assert!(n > 0, "interpolation needs at least one sample");
    assert!(radius > 0.0, "interpolation radius must be positive");
    let mut local = vec![c64(0.0, 0.0); n];
    for (k, lk) in local.iter_mut().enumerate() {
        let mut acc = c64(0.0, 0.0);
        for (j, &v) in values.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * (j * k % n) as f64 / n as f64;
            acc += v * C64::from_polar(1.0, angle);
        }
        *lk = acc / c64(n as f64, 0.0) / C64::from_polar(radius.powi(k as i32), 0.0);
    }
    // p(z) = Σ local[k] (z - center)^k, expanded via Horner into powers of z.
    let mut out = CPoly::zero();
    for &c in local.iter().rev() {
        out = out.mul_linear(center).add(&CPoly::constant(c));
    }
    out
}
