//! Numerical parallel transport and monodromy classification.
//!
//! A first-order 2×2 system `Y′ = B(z)Y` is transported along explicit paths
//! (polylines and circular arcs) with an adaptive Dormand–Prince 5(4) pair.
//! Around each finite singularity a lasso — straight tail, positively
//! oriented circle, tail reversed — is routed deterministically, detouring
//! around intervening singularities, and the resulting loop matrices are
//! classified as `±I`, scalar, or nontrivial.

use crate::fuchsian::FuchsianConnection;
use crate::linalg::Mat2;
use crate::oper::{SignConvention, SturmLiouville};
use crate::{C64, Error, Result, c64};

/// Default tolerance for deciding whether a loop matrix is `±I` or scalar.
pub const DEFAULT_CLASS_TOL: f64 = 1e-6;

/// A first-order 2×2 linear system with rational coefficient matrix.
#[derive(Debug, Clone)]
pub enum LinearSystem {
    /// `B(z) = Σ_i A_i/(z − z_i)` from a Fuchsian connection.
    Connection(FuchsianConnection),
    /// Companion form `B = [[0, 1], [U_B, 0]]` of a second-order operator
    /// (stored in the `minus` convention).
    Companion(SturmLiouville),
}

/// Companion embedding of a scalar operator: transport of the resulting
/// system continues the pair `(Ψ, Ψ′)`.
pub fn scalar_companion(op: &SturmLiouville) -> LinearSystem {
    LinearSystem::Companion(op.in_convention(SignConvention::Minus))
}

impl LinearSystem {
    /// Finite singularities of the coefficient matrix.
    pub fn poles(&self) -> &[C64] {
        match self {
            LinearSystem::Connection(conn) => &conn.poles,
            LinearSystem::Companion(op) => &op.poles,
        }
    }

    /// Evaluate `B(z)` off the poles.
    pub fn eval(&self, z: C64) -> Mat2 {
        match self {
            LinearSystem::Connection(conn) => conn.eval(z),
            LinearSystem::Companion(op) => {
                Mat2::new(c64(0.0, 0.0), c64(1.0, 0.0), op.coefficient_fn(z), c64(0.0, 0.0))
            }
        }
    }

    /// Characteristic length scale of the singularity configuration.
    pub fn scale(&self) -> f64 {
        self.poles().iter().map(|z| z.norm()).fold(1.0, f64::max)
    }
}

/// One leg of an integration path, parameterized over `t ∈ [0, 1]`.
#[derive(Debug, Clone, Copy)]
pub enum PathSeg {
    /// Straight segment.
    Line {
        /// Start point.
        from: C64,
        /// End point.
        to: C64,
    },
    /// Circular arc `center + radius·e^{iθ}`, θ sweeping `from_angle` to
    /// `to_angle` (counterclockwise when the sweep is positive).
    Arc {
        /// Circle center.
        center: C64,
        /// Circle radius.
        radius: f64,
        /// Starting angle in radians.
        from_angle: f64,
        /// Ending angle in radians.
        to_angle: f64,
    },
}

impl PathSeg {
    /// Position and velocity at parameter `t`.
    pub fn at(&self, t: f64) -> (C64, C64) {
        match *self {
            PathSeg::Line { from, to } => (from + (to - from) * t, to - from),
            PathSeg::Arc { center, radius, from_angle, to_angle } => {
                let sweep = to_angle - from_angle;
                let theta = from_angle + sweep * t;
                let pos = center + C64::from_polar(radius, theta);
                let vel = C64::new(0.0, sweep) * C64::from_polar(radius, theta);
                (pos, vel)
            }
        }
    }

    /// Arc length.
    pub fn length(&self) -> f64 {
        match *self {
            PathSeg::Line { from, to } => (to - from).norm(),
            PathSeg::Arc { radius, from_angle, to_angle, .. } => {
                radius * (to_angle - from_angle).abs()
            }
        }
    }

    /// The same leg traversed backwards.
    pub fn reversed(&self) -> PathSeg {
        match *self {
            PathSeg::Line { from, to } => PathSeg::Line { from: to, to: from },
            PathSeg::Arc { center, radius, from_angle, to_angle } => {
                PathSeg::Arc { center, radius, from_angle: to_angle, to_angle: from_angle }
            }
        }
    }
}

/// A concatenation of legs traversed in order.
#[derive(Debug, Clone)]
pub struct Path {
    /// The legs, each ending where the next begins.
    pub segs: Vec<PathSeg>,
}

impl Path {
    /// Straight polyline through the given waypoints.
    pub fn polyline(points: &[C64]) -> Path {
        let segs = points
            .windows(2)
            .map(|w| PathSeg::Line { from: w[0], to: w[1] })
            .collect();
        Path { segs }
    }

    /// Full positively oriented circle starting (and ending) at angle
    /// `start_angle`.
    pub fn circle(center: C64, radius: f64, start_angle: f64) -> Path {
        Path {
            segs: vec![PathSeg::Arc {
                center,
                radius,
                from_angle: start_angle,
                to_angle: start_angle + std::f64::consts::TAU,
            }],
        }
    }

    /// The path traversed backwards.
    pub fn reversed(&self) -> Path {
        Path { segs: self.segs.iter().rev().map(PathSeg::reversed).collect() }
    }

    /// Total arc length.
    pub fn length(&self) -> f64 {
        self.segs.iter().map(PathSeg::length).sum()
    }
}

// Dormand–Prince 5(4) coefficients.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Parallel transport `Y(end)` of the fundamental solution with
/// `Y(start) = I` along the path, with adaptive local error control targeting
/// `tol` per unit arc length.
pub fn transport(sys: &LinearSystem, path: &Path, tol: f64) -> Result<Mat2> {
    let floor = 1e-8 * (1.0 + sys.scale());
    transport_guarded(sys, path, tol, floor)
}

/// [`transport`] with an explicit clearance: the integration aborts if an
/// accepted point comes closer than `clearance` to any singularity.
pub fn transport_guarded(
    sys: &LinearSystem,
    path: &Path,
    tol: f64,
    clearance: f64,
) -> Result<Mat2> {
    if tol <= 0.0 {
        return Err(Error::InvalidInput("transport tolerance must be positive".into()));
    }
    let mut y = Mat2::identity();
    for seg in &path.segs {
        let seg_len = seg.length();
        if seg_len == 0.0 {
            continue;
        }
        let check = |z: C64| -> Result<()> {
            for &p in sys.poles() {
                let dist = (z - p).norm();
                if dist < clearance {
                    return Err(Error::StageFailure {
                        stage: "transport",
                        detail: format!(
                            "path point {z} violates the clearance {clearance:.3e} around the singularity {p} (distance {dist:.3e})"
                        ),
                    });
                }
            }
            Ok(())
        };
        let f = |t: f64, y: &Mat2| -> Mat2 {
            let (z, dz) = seg.at(t);
            sys.eval(z).mul(y).scale(dz)
        };
        let (z0, _) = seg.at(0.0);
        check(z0)?;
        let mut t = 0.0f64;
        let mut h = 0.05f64;
        while t < 1.0 {
            h = h.min(1.0 - t);
            if h < 1e-12 {
                break;
            }
            let mut k: Vec<Mat2> = Vec::with_capacity(7);
            for stage in 0..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate() {
                    ys = ys.add(&kj.scale(c64(h * DP_A[stage][j], 0.0)));
                }
                k.push(f(t + DP_C[stage] * h, &ys));
            }
            let mut y5 = y;
            let mut y4 = y;
            for (j, kj) in k.iter().enumerate() {
                y5 = y5.add(&kj.scale(c64(h * DP_B5[j], 0.0)));
                y4 = y4.add(&kj.scale(c64(h * DP_B4[j], 0.0)));
            }
            let err = y5.sub(&y4).norm_frobenius() / y5.norm_frobenius().max(1.0);
            let budget = tol * h * seg_len;
            if err <= budget {
                t += h;
                y = y5;
                let (z, _) = seg.at(t);
                check(z)?;
            }
            let grow = if err == 0.0 {
                5.0
            } else {
                (0.9 * (budget / err).powf(0.2)).clamp(0.2, 5.0)
            };
            h *= grow;
            if h < 1e-10 {
                let (z, _) = seg.at(t);
                return Err(Error::StageFailure {
                    stage: "transport",
                    detail: format!("step size underflow near {z}; the path passes too close to a singularity"),
                });
            }
        }
    }
    Ok(y)
}

/// How a single loop matrix sits inside the monodromy group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoopClass {
    /// Within tolerance of `+I`.
    PlusIdentity,
    /// Within tolerance of `−I`.
    MinusIdentity,
    /// Within tolerance of `cI` for the recorded `c ∉ {±1}`.
    Scalar(C64),
    /// None of the above.
    Nontrivial,
}

/// Classify one matrix. The deviation returned alongside is always the
/// operator-norm distance to the nearer of `±I`, regardless of class.
pub fn classify_matrix(m: &Mat2, tol: f64) -> (LoopClass, f64) {
    let id = Mat2::identity();
    let dev_plus = m.sub(&id).norm_operator();
    let dev_minus = m.add(&id).norm_operator();
    let deviation = dev_plus.min(dev_minus);
    let class = if dev_plus <= tol {
        LoopClass::PlusIdentity
    } else if dev_minus <= tol {
        LoopClass::MinusIdentity
    } else {
        let c = (m.m[0][0] + m.m[1][1]) / 2.0;
        let dev_scalar = m.sub(&Mat2::diag(c, c)).norm_operator();
        if dev_scalar <= tol { LoopClass::Scalar(c) } else { LoopClass::Nontrivial }
    };
    (class, deviation)
}

/// Data recorded for the loop around one finite singularity.
#[derive(Debug, Clone)]
pub struct LoopData {
    /// The singularity encircled.
    pub center: C64,
    /// Loop radius (half the distance to the nearest other singularity).
    pub radius: f64,
    /// Transported monodromy matrix.
    pub matrix: Mat2,
    /// Classification at the default tolerance.
    pub class: LoopClass,
    /// Operator-norm distance to the nearer of `±I`.
    pub deviation: f64,
}

/// Monodromy of a system at a base point: one lasso per finite singularity,
/// in a deterministic order.
#[derive(Debug, Clone)]
pub struct MonodromyReport {
    /// Base point shared by all loops.
    pub base: C64,
    /// Per-singularity loop data.
    pub loops: Vec<LoopData>,
    /// Integration tolerance used.
    pub tol: f64,
}

/// Default base point: on the real axis to the right of every singularity.
pub fn default_base(sys: &LinearSystem) -> C64 {
    c64(1.0 + sys.poles().iter().map(|z| z.norm()).fold(0.0, f64::max), 0.0)
}

/// Replace the straight run `from → to` by legs that detour around every
/// guard disk it crosses. Each detour hugs the blocking disk at a small
/// margin, on the side picked by a deterministic rule (arc midpoint with the
/// larger imaginary part, ties toward larger real part).
fn route_around(
    from: C64,
    to: C64,
    guards: &[(C64, f64)],
    depth: usize,
    out: &mut Vec<PathSeg>,
) -> Result<()> {
    if depth > 12 {
        return Err(Error::StageFailure {
            stage: "lasso routing",
            detail: "detour recursion exceeded its depth bound; choose a different base point".into(),
        });
    }
    let dir = to - from;
    let len = dir.norm();
    if len == 0.0 {
        return Ok(());
    }
    // Earliest blocking guard along the segment.
    let mut hit: Option<(f64, f64, usize)> = None;
    for (gi, &(g, r_eff)) in guards.iter().enumerate() {
        // Closest-approach parameter of the infinite line.
        let t_star = ((g - from) * dir.conj()).re / (len * len);
        let d_min = (from + dir * t_star - g).norm();
        if d_min >= r_eff {
            continue;
        }
        let half = (r_eff * r_eff - d_min * d_min).sqrt() / len;
        let t1 = t_star - half;
        let t2 = t_star + half;
        // Only crossings in the interior matter; endpoints are placed on
        // guard circles by construction and must not re-trigger.
        if t2 <= 1e-9 || t1 >= 1.0 - 1e-9 {
            continue;
        }
        if hit.is_none_or(|(best_t1, _, _)| t1 < best_t1) {
            hit = Some((t1, t2, gi));
        }
    }
    let Some((t1, t2, gi)) = hit else {
        out.push(PathSeg::Line { from, to });
        return Ok(());
    };
    let (g, r_eff) = guards[gi];
    // Clamp the crossing to the reachable part of the segment, then project
    // the endpoints onto the guard circle.
    let p1_raw = from + dir * t1.max(0.0);
    let p2_raw = from + dir * t2.min(1.0);
    let a1 = (p1_raw - g).arg();
    let a2 = (p2_raw - g).arg();
    let p1 = g + C64::from_polar(r_eff, a1);
    let p2 = g + C64::from_polar(r_eff, a2);
    // Two candidate sweeps: counterclockwise (positive) or clockwise.
    let mut sweep_ccw = a2 - a1;
    while sweep_ccw <= 0.0 {
        sweep_ccw += std::f64::consts::TAU;
    }
    let sweep_cw = sweep_ccw - std::f64::consts::TAU;
    let mid = |sweep: f64| g + C64::from_polar(r_eff, a1 + sweep / 2.0);
    let m_ccw = mid(sweep_ccw);
    let m_cw = mid(sweep_cw);
    let pick_ccw = match m_ccw.im.partial_cmp(&m_cw.im) {
        Some(std::cmp::Ordering::Greater) => true,
        Some(std::cmp::Ordering::Less) => false,
        _ => m_ccw.re >= m_cw.re,
    };
    let sweep = if pick_ccw { sweep_ccw } else { sweep_cw };
    if (p1 - from).norm() > 1e-12 * len {
        route_around(from, p1, guards, depth + 1, out)?;
    }
    out.push(PathSeg::Arc { center: g, radius: r_eff, from_angle: a1, to_angle: a1 + sweep });
    if (to - p2).norm() > 1e-12 * len {
        route_around(p2, to, guards, depth + 1, out)?;
    }
    Ok(())
}

/// Build the lasso path around `poles[k]`: routed tail from the base to the
/// loop circle, the positively oriented circle, and the tail reversed.
fn lasso_path(poles: &[C64], radii: &[f64], k: usize, base: C64) -> Result<Path> {
    let zk = poles[k];
    let rk = radii[k];
    let to_pole = zk - base;
    if to_pole.norm() <= rk {
        return Err(Error::InvalidInput(format!(
            "base point {base} sits inside the loop circle around {zk}"
        )));
    }
    let entry = zk - to_pole / to_pole.norm() * rk;
    // Guard disks for tail routing sit at 0.8× the loop radius: big enough
    // to keep the half-radius clearance, small enough that the entry point
    // of one lasso can never fall inside a neighbour's guard disk.
    let guards: Vec<(C64, f64)> = poles
        .iter()
        .zip(radii)
        .enumerate()
        .filter(|&(l, _)| l != k)
        .map(|(_, (&z, &r))| (z, 0.8 * r))
        .collect();
    let mut tail = Vec::new();
    route_around(base, entry, &guards, 0, &mut tail)?;
    let mut segs = tail.clone();
    let theta = (entry - zk).arg();
    segs.push(PathSeg::Arc {
        center: zk,
        radius: rk,
        from_angle: theta,
        to_angle: theta + std::f64::consts::TAU,
    });
    segs.extend(tail.iter().rev().map(PathSeg::reversed));
    Ok(Path { segs })
}

/// Compute the monodromy matrices of all finite singularities from lassos at
/// `base`, classify each loop, and return the report. Loops are ordered by
/// the argument of the singularity as seen from the base (ties broken by
/// distance, nearest first).
pub fn monodromy_matrices(sys: &LinearSystem, base: C64, tol: f64) -> Result<MonodromyReport> {
    let poles = sys.poles().to_vec();
    if poles.is_empty() {
        return Ok(MonodromyReport { base, loops: Vec::new(), tol });
    }
    let scale = sys.scale();
    for &p in &poles {
        if (base - p).norm() < 1e-6 * scale {
            return Err(Error::InvalidInput(format!(
                "base point {base} coincides with the singularity {p}"
            )));
        }
    }
    // Loop radius: half the distance to the nearest other singularity. A
    // lone singularity gets a unit-scale radius.
    let radii: Vec<f64> = poles
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            let nearest = poles
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != k)
                .map(|(_, &w)| (z - w).norm())
                .fold(f64::INFINITY, f64::min);
            if nearest.is_finite() { nearest / 2.0 } else { 0.5 * (1.0 + z.norm()) }
        })
        .collect();
    // Degenerate-cluster guard: the clearance is half the loop radius, and a
    // pair of singularities closer than four floor-clearances cannot be
    // separated reliably at the working scale.
    let floor_clearance = 1e-4 * scale;
    for (k, &r) in radii.iter().enumerate() {
        if 2.0 * r < 4.0 * floor_clearance {
            return Err(Error::InvalidInput(format!(
                "singularities around {} are closer than {:.3e}; rescale the configuration or treat them as one",
                poles[k],
                4.0 * floor_clearance
            )));
        }
    }
    let mut order: Vec<usize> = (0..poles.len()).collect();
    order.sort_by(|&a, &b| {
        let arg_a = (poles[a] - base).arg();
        let arg_b = (poles[b] - base).arg();
        arg_a
            .partial_cmp(&arg_b)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                (poles[a] - base)
                    .norm()
                    .partial_cmp(&(poles[b] - base).norm())
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });
    // Every routed path keeps at least half the smallest loop radius from
    // every singularity; enforce exactly that during integration.
    let clearance = radii.iter().fold(f64::INFINITY, |a, &r| a.min(r)) / 2.0;
    let mut loops = Vec::with_capacity(poles.len());
    for &k in &order {
        let path = lasso_path(&poles, &radii, k, base)?;
        let matrix = transport_guarded(sys, &path, tol, clearance)?;
        let (class, deviation) = classify_matrix(&matrix, DEFAULT_CLASS_TOL);
        loops.push(LoopData { center: poles[k], radius: radii[k], matrix, class, deviation });
    }
    Ok(MonodromyReport { base, loops, tol })
}

/// Verdict of the `ℤ/2` test: per-loop signs (`+1`/`−1`, `0` when the loop is
/// not `±I` at the tolerance) and the aggregate.
#[derive(Debug, Clone)]
pub struct Z2Verdict {
    /// True iff every loop matrix is within `tol` of `+I` or `−I`.
    pub is_z2: bool,
    /// Per-loop sign, in report order.
    pub signs: Vec<i8>,
    /// Per-loop operator-norm deviation from the nearer of `±I`.
    pub deviations: Vec<f64>,
}

/// Decide whether the whole monodromy representation lands in `{±I}`.
pub fn classify_z2(report: &MonodromyReport, tol: f64) -> Z2Verdict {
    let mut signs = Vec::with_capacity(report.loops.len());
    let mut deviations = Vec::with_capacity(report.loops.len());
    for l in &report.loops {
        let id = Mat2::identity();
        let dev_plus = l.matrix.sub(&id).norm_operator();
        let dev_minus = l.matrix.add(&id).norm_operator();
        deviations.push(dev_plus.min(dev_minus));
        signs.push(if dev_plus <= tol {
            1
        } else if dev_minus <= tol {
            -1
        } else {
            0
        });
    }
    Z2Verdict { is_z2: signs.iter().all(|&s| s != 0), signs, deviations }
}

/// Transport around the positively oriented circle through `base` centered at
/// the singularity centroid. The circle must enclose every singularity; its
/// matrix is the inverse of the loop around infinity, and equals the ordered
/// product of the finite-lasso matrices.
pub fn boundary_circle_transport(sys: &LinearSystem, base: C64, tol: f64) -> Result<Mat2> {
    let poles = sys.poles();
    if poles.is_empty() {
        return Ok(Mat2::identity());
    }
    let centroid = poles.iter().sum::<C64>() / c64(poles.len() as f64, 0.0);
    let radius = (base - centroid).norm();
    for &p in poles {
        if (p - centroid).norm() >= radius {
            return Err(Error::InvalidInput(format!(
                "the circle through the base {base} does not enclose the singularity {p}"
            )));
        }
    }
    let start = (base - centroid).arg();
    transport(sys, &Path::circle(centroid, radius, start), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::{BetheProblem, SolveConfig, solve_bethe};
    use crate::fuchsian::pull_back;
    use crate::oper::oper_from_bethe;

    fn zero_connection() -> LinearSystem {
        LinearSystem::Connection(
            FuchsianConnection::new(
                vec![c64(5.0, 5.0)],
                vec![Mat2::zero()],
            )
            .expect("shape"),
        )
    }

    fn diag_system(top: f64) -> LinearSystem {
        LinearSystem::Connection(
            FuchsianConnection::new(
                vec![c64(0.0, 0.0)],
                vec![Mat2::diag(c64(top, 0.0), c64(-top, 0.0))],
            )
            .expect("shape"),
        )
    }

    /// Certified two-point operator in companion form, yielding `−I` loops.
    fn two_point_certified() -> LinearSystem {
        let problem = BetheProblem::new(
            vec![c64(0.0, 0.0), c64(1.0, 0.0)],
            vec![c64(1.0, 0.0), c64(1.0, 0.0)],
            1,
        )
        .expect("problem");
        let mu = [c64(0.5, 0.0)];
        let chi = problem.eigenvalues(&mu).expect("eigenvalues");
        scalar_companion(&oper_from_bethe(&problem, &chi).expect("operator"))
    }

    #[test]
    fn zero_coefficient_transport_is_identity() {
        let sys = zero_connection();
        let path = Path::polyline(&[c64(0.0, 0.0), c64(1.0, 1.0), c64(2.0, -1.0)]);
        let y = transport(&sys, &path, 1e-10).expect("transport");
        assert!(y.sub(&Mat2::identity()).norm_frobenius() < 1e-12);
    }

    #[test]
    fn integer_diagonal_loop_is_identity() {
        let sys = diag_system(1.0);
        let y = transport(&sys, &Path::circle(c64(0.0, 0.0), 1.0, 0.0), 1e-10)
            .expect("transport");
        assert!(
            y.sub(&Mat2::identity()).norm_frobenius() < 1e-8,
            "deviation {}",
            y.sub(&Mat2::identity()).norm_frobenius()
        );
    }

    #[test]
    fn half_integer_diagonal_loop_is_minus_identity() {
        let sys = diag_system(0.5);
        let y = transport(&sys, &Path::circle(c64(0.0, 0.0), 1.0, 0.0), 1e-10)
            .expect("transport");
        assert!(
            y.add(&Mat2::identity()).norm_frobenius() < 1e-8,
            "deviation {}",
            y.add(&Mat2::identity()).norm_frobenius()
        );
    }

    #[test]
    fn free_operator_loops_are_plus_identity() {
        let op = SturmLiouville::new(Vec::new(), Vec::new(), Vec::new(), SignConvention::Minus)
            .expect("free operator");
        let sys = scalar_companion(&op);
        // No singularities: any closed path is trivial.
        let y = transport(&sys, &Path::circle(c64(0.0, 0.0), 2.0, 0.0), 1e-10)
            .expect("transport");
        assert!(y.sub(&Mat2::identity()).norm_frobenius() < 1e-9);
        let report = monodromy_matrices(&sys, c64(1.0, 0.0), 1e-10).expect("report");
        assert!(report.loops.is_empty());
        assert!(classify_z2(&report, 1e-6).is_z2);
    }

    #[test]
    fn companion_lower_left_is_the_potential() {
        let sys = two_point_certified();
        let LinearSystem::Companion(op) = &sys else { panic!("companion expected") };
        for z in [c64(2.0, 1.0), c64(-1.0, 0.5), c64(0.3, -2.0)] {
            let b = sys.eval(z);
            assert!((b.m[0][0]).norm() < 1e-15);
            assert!((b.m[0][1] - c64(1.0, 0.0)).norm() < 1e-15);
            assert!((b.m[1][1]).norm() < 1e-15);
            assert!((b.m[1][0] - op.coefficient_fn(z)).norm() < 1e-15);
        }
    }

    #[test]
    fn companion_transport_continues_the_explicit_solution() {
        // Ψ = z^{−1/2}(z−1)^{−1/2}(z−1/2) solves the certified operator; its
        // continuation along a cut-free path must match the closed form.
        let sys = two_point_certified();
        let psi = |z: C64| -> C64 {
            z.powc(c64(-0.5, 0.0)) * (z - 1.0).powc(c64(-0.5, 0.0)) * (z - 0.5)
        };
        let dpsi = |z: C64| -> C64 {
            psi(z) * (-0.5 / z - 0.5 / (z - 1.0) + (z - 0.5).inv())
        };
        let start = c64(2.0, 0.0);
        let end = c64(2.5, 1.2);
        let path = Path::polyline(&[start, c64(3.0, 0.5), end]);
        let y = transport(&sys, &path, 1e-10).expect("transport");
        let moved = y.apply([psi(start), dpsi(start)]);
        assert!(
            (moved[0] - psi(end)).norm() < 1e-7,
            "value {} vs {}",
            moved[0],
            psi(end)
        );
        assert!(
            (moved[1] - dpsi(end)).norm() < 1e-7,
            "derivative {} vs {}",
            moved[1],
            dpsi(end)
        );
    }

    #[test]
    fn certified_two_point_operator_has_minus_identity_loops() {
        let sys = two_point_certified();
        let report = monodromy_matrices(&sys, default_base(&sys), 1e-10).expect("report");
        assert_eq!(report.loops.len(), 2);
        for l in &report.loops {
            assert_eq!(l.class, LoopClass::MinusIdentity, "loop at {}", l.center);
            assert!(l.deviation < 1e-6, "deviation {}", l.deviation);
        }
        let verdict = classify_z2(&report, 1e-6);
        assert!(verdict.is_z2);
        assert_eq!(verdict.signs, vec![-1, -1]);
    }

    #[test]
    fn perturbed_residue_spoils_the_z2_property() {
        let problem = BetheProblem::new(
            vec![c64(0.0, 0.0), c64(1.0, 0.0)],
            vec![c64(1.0, 0.0), c64(1.0, 0.0)],
            1,
        )
        .expect("problem");
        let mu = [c64(0.5, 0.0)];
        let mut chi = problem.eigenvalues(&mu).expect("eigenvalues");
        chi[0] += c64(0.1, 0.0);
        let sys = scalar_companion(&oper_from_bethe(&problem, &chi).expect("operator"));
        let report = monodromy_matrices(&sys, default_base(&sys), 1e-10).expect("report");
        let verdict = classify_z2(&report, 1e-6);
        assert!(!verdict.is_z2);
        assert!(
            verdict.deviations.iter().any(|&d| d > 1e-2),
            "deviations {:?}",
            verdict.deviations
        );
    }

    #[test]
    fn scalar_and_jordan_matrices_classify_correctly() {
        let i = c64(0.0, 1.0);
        let (class, _) = classify_matrix(&Mat2::diag(i, i), 1e-6);
        assert_eq!(class, LoopClass::Scalar(i));
        let jordan = Mat2::new(c64(1.0, 0.0), c64(0.5, 0.0), c64(0.0, 0.0), c64(1.0, 0.0));
        let (class, dev) = classify_matrix(&jordan, 1e-6);
        assert_eq!(class, LoopClass::Nontrivial);
        assert!(dev > 0.4);
    }

    #[test]
    fn reversed_path_inverts_the_transport() {
        let sys = two_point_certified();
        let tol = 1e-10;
        let path = Path::polyline(&[c64(2.0, 0.0), c64(2.0, 1.5), c64(-1.0, 1.5), c64(-1.0, 0.2)]);
        let fwd = transport(&sys, &path, tol).expect("forward");
        let back = transport(&sys, &path.reversed(), tol).expect("backward");
        let prod = back.mul(&fwd);
        assert!(
            prod.sub(&Mat2::identity()).norm_frobenius() <= 10.0 * 1e-8,
            "deviation {}",
            prod.sub(&Mat2::identity()).norm_frobenius()
        );
    }

    #[test]
    fn homotopic_paths_agree() {
        let sys = two_point_certified();
        let tol = 1e-10;
        let a = Path::polyline(&[c64(2.0, 0.0), c64(2.0, 2.0), c64(-2.0, 2.0), c64(-2.0, 0.0)]);
        let b = Path::polyline(&[
            c64(2.0, 0.0),
            c64(3.0, 1.0),
            c64(0.5, 3.0),
            c64(-2.5, 1.0),
            c64(-2.0, 0.0),
        ]);
        let ya = transport(&sys, &a, tol).expect("first route");
        let yb = transport(&sys, &b, tol).expect("second route");
        assert!(
            ya.sub(&yb).norm_frobenius() <= 10.0 * 1e-8,
            "deviation {}",
            ya.sub(&yb).norm_frobenius()
        );
    }

    #[test]
    fn determinant_tracks_the_trace_integral() {
        // Traceless system: det of every loop matrix is 1.
        let sys = two_point_certified();
        let report = monodromy_matrices(&sys, default_base(&sys), 1e-10).expect("report");
        for l in &report.loops {
            assert!(
                (l.matrix.det() - c64(1.0, 0.0)).norm() < 1e-7,
                "det {}",
                l.matrix.det()
            );
        }
        // Traceful residue: around the pole, det = exp(2πi Tr A).
        let tr = c64(0.3, 0.0);
        let conn = FuchsianConnection::new(
            vec![c64(0.0, 0.0)],
            vec![Mat2::diag(tr, c64(0.0, 0.0))],
        )
        .expect("shape");
        let sys2 = LinearSystem::Connection(conn);
        let y = transport(&sys2, &Path::circle(c64(0.0, 0.0), 1.0, 0.0), 1e-10)
            .expect("transport");
        let expected = (c64(0.0, std::f64::consts::TAU) * tr).exp();
        assert!(
            (y.det() - expected).norm() < 1e-7,
            "det {} vs {}",
            y.det(),
            expected
        );
    }

    #[test]
    fn close_singularities_are_rejected() {
        let op = SturmLiouville::new(
            vec![c64(0.0, 0.0), c64(1e-6, 0.0)],
            vec![c64(0.75, 0.0), c64(0.75, 0.0)],
            vec![c64(1.0, 0.0), c64(-1.0, 0.0)],
            SignConvention::Minus,
        )
        .expect("operator");
        let sys = scalar_companion(&op);
        assert!(monodromy_matrices(&sys, default_base(&sys), 1e-10).is_err());
    }

    #[test]
    fn lasso_products_compose_to_the_boundary_circle() {
        // Non-commuting residues, so the composition order is actually
        // observable: the report-order product (left to right) must equal the
        // positively oriented circle enclosing everything, whose inverse is
        // the loop around infinity.
        let conn = FuchsianConnection::new(
            vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(2.0, 0.0)],
            vec![
                Mat2::new(c64(0.3, 0.0), c64(0.7, 0.0), c64(0.2, 0.0), c64(-0.3, 0.0)),
                Mat2::new(c64(-0.1, 0.0), c64(0.4, 0.0), c64(0.9, 0.0), c64(0.1, 0.0)),
                Mat2::new(c64(0.2, 0.1), c64(-0.5, 0.0), c64(0.3, 0.0), c64(-0.2, -0.1)),
            ],
        )
        .expect("shape");
        let sys = LinearSystem::Connection(conn);
        let base = default_base(&sys);
        let report = monodromy_matrices(&sys, base, 1e-10).expect("report");
        let product = report
            .loops
            .iter()
            .fold(Mat2::identity(), |acc, l| acc.mul(&l.matrix));
        let boundary = boundary_circle_transport(&sys, base, 1e-10).expect("boundary");
        assert!(
            product.sub(&boundary).norm_frobenius() < 1e-7,
            "deviation {}",
            product.sub(&boundary).norm_frobenius()
        );
        let poles = sys.poles();
        let centroid = poles.iter().sum::<C64>() / c64(poles.len() as f64, 0.0);
        let infinity_loop = transport(
            &sys,
            &Path::circle(centroid, (base - centroid).norm(), (base - centroid).arg()).reversed(),
            1e-10,
        )
        .expect("infinity loop");
        let round = product.mul(&infinity_loop);
        assert!(
            round.sub(&Mat2::identity()).norm_frobenius() < 1e-7,
            "deviation {}",
            round.sub(&Mat2::identity()).norm_frobenius()
        );
    }

    #[test]
    fn pull_back_connection_monodromy_lands_in_z2() {
        let fixed = vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(2.0, 0.0)];
        let moving = vec![c64(4.0, 0.0)];
        let spins = vec![c64(1.0, 0.0); 3];
        let mut all = fixed.clone();
        all.extend_from_slice(&moving);
        let problem = BetheProblem::new(all, vec![c64(1.0, 0.0); 4], 1).expect("problem");
        let sols = solve_bethe(&problem, &SolveConfig::default()).expect("solve");
        let gamma = sols
            .iter()
            .filter(|s| s.certified)
            .last()
            .expect("certified root")
            .roots
            .clone();
        let pb = pull_back(&fixed, &moving, &spins, &gamma, c64(1.0, 0.0), true)
            .expect("pull-back");
        let sys = LinearSystem::Connection(pb.connection);
        let report = monodromy_matrices(&sys, default_base(&sys), 1e-10).expect("report");
        let verdict = classify_z2(&report, 1e-6);
        assert!(verdict.is_z2, "deviations {:?}", verdict.deviations);
    }

    #[test]
    fn three_point_certified_operator_has_minus_identity_loops() {
        let problem = BetheProblem::new(
            vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(2.0, 0.0)],
            vec![c64(1.0, 0.0); 3],
            1,
        )
        .expect("problem");
        let sols = solve_bethe(&problem, &SolveConfig::default()).expect("solve");
        let root = sols.iter().find(|s| s.certified).expect("certified root");
        let chi = problem.eigenvalues(&root.roots).expect("eigenvalues");
        let sys = scalar_companion(&oper_from_bethe(&problem, &chi).expect("operator"));
        let report = monodromy_matrices(&sys, default_base(&sys), 1e-10).expect("report");
        assert_eq!(report.loops.len(), 3);
        let verdict = classify_z2(&report, 1e-6);
        assert!(verdict.is_z2, "deviations {:?}", verdict.deviations);
        assert_eq!(verdict.signs, vec![-1, -1, -1]);
    }
}
