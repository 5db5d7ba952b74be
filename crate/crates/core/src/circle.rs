//! Phaseless linear systems `|z + v_i| = n_i`.
//!
//! Each equation is a circle of radius `n_i` centred at `−v_i`. Differences
//! of the squared equations are linear in `(Re z, Im z)`:
//!
//! ```text
//! Re{z · conj(v_1 − v_j)} = ½ (n_1² − n_j² + |v_j|² − |v_1|²)
//! ```
//!
//! With a non-real ratio `(v_1 − v_p)/(v_1 − v_q)` that pins `z` down
//! uniquely; with real offsets only `Re z` is pinned and solutions come in
//! conjugate pairs.

use num_complex::Complex64;

use crate::error::{FrogError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CircleSystem {
    offsets: Vec<Complex64>,
    radii: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolutionKind {
    Unique(Complex64),
    /// `(a + ib, a − ib)` with `b ≥ 0`.
    ConjugatePair(Complex64, Complex64),
    /// Two intersections of a pair of circles, mirror images across the
    /// line through both centres.
    MirrorPair(Complex64, Complex64),
    None,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleSolution {
    pub kind: SolutionKind,
    /// `max_i ||z + v_i| − n_i|` at the candidate point (worst over a pair).
    pub residual: f64,
}

impl CircleSolution {
    pub fn candidates(&self) -> Vec<Complex64> {
        match self.kind {
            SolutionKind::Unique(z) => vec![z],
            SolutionKind::ConjugatePair(a, b) | SolutionKind::MirrorPair(a, b) => vec![a, b],
            SolutionKind::None => Vec::new(),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, SolutionKind::None)
    }
}

impl CircleSystem {
    pub fn new(offsets: Vec<Complex64>, radii: Vec<f64>) -> Result<Self> {
        if offsets.len() != radii.len() {
            return Err(FrogError::InvalidParameters(format!(
                "{} offsets but {} radii",
                offsets.len(),
                radii.len()
            )));
        }
        if offsets.len() < 2 {
            return Err(FrogError::InvalidParameters(
                "a circle system needs s ≥ 2 equations".into(),
            ));
        }
        if let Some(r) = radii.iter().find(|r| !(**r >= 0.0)) {
            return Err(FrogError::InvalidParameters(format!(
                "radius {r} is negative"
            )));
        }
        Ok(Self { offsets, radii })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// The `v_i` of `|z + v_i| = n_i`.
    pub fn offsets(&self) -> &[Complex64] {
        &self.offsets
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Geometric circle centres `−v_i`.
    pub fn centers(&self) -> Vec<Complex64> {
        self.offsets.iter().map(|v| -v).collect()
    }

    pub fn residual(&self, z: Complex64) -> f64 {
        self.offsets
            .iter()
            .zip(&self.radii)
            .map(|(v, n)| ((z + v).norm() - n).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    /// Suggested residual tolerance: `1e-8 · (1 + max n_i)`.
    pub fn default_tol(&self) -> f64 {
        1e-8 * (1.0 + self.max_radius())
    }
}

/// Default `eps` for [`ratio_is_nonreal`], relative to the ratio's modulus.
pub fn default_ratio_eps(ratio: Complex64) -> f64 {
    1e-10 * (1.0 + ratio.norm())
}

/// Whether `(v_0 − v_p)/(v_0 − v_q)` has imaginary part above `eps`.
pub fn ratio_is_nonreal(v: &[Complex64], p: usize, q: usize, eps: f64) -> Result<bool> {
    let ratio = center_ratio(v, 0, p, q)?;
    Ok(ratio.im.abs() > eps)
}

/// `(v_base − v_p)/(v_base − v_q)`, rejecting coincident centres.
pub fn center_ratio(v: &[Complex64], base: usize, p: usize, q: usize) -> Result<Complex64> {
    let len = v.len();
    if base >= len || p >= len || q >= len {
        return Err(FrogError::InvalidParameters(format!(
            "indices ({base}, {p}, {q}) out of range for {len} offsets"
        )));
    }
    let (num, den) = (v[base] - v[p], v[base] - v[q]);
    let scale = 1e-14 * (1.0 + v[base].norm());
    if num.norm() <= scale || den.norm() <= scale {
        return Err(FrogError::DegenerateSystem("coincident centres".into()));
    }
    Ok(num / den)
}

/// Unique solution of a system whose offsets are not collinear.
///
/// All pairs `(1, j)` enter a least-squares 2×2 normal system in
/// `(Re z, Im z)`. Returns `Unique` when the residual is within `tol`,
/// otherwise `None` with the residual of the least-squares point.
pub fn solve_generic(sys: &CircleSystem, tol: f64) -> Result<CircleSolution> {
    if sys.len() < 3 {
        return Err(FrogError::InvalidParameters(
            "solve_generic needs s ≥ 3 equations".into(),
        ));
    }
    let v = sys.offsets();
    let n = sys.radii();
    let nonreal = (1..v.len()).any(|p| {
        (p + 1..v.len()).any(|q| {
            center_ratio(v, 0, p, q)
                .map(|ratio| ratio.im.abs() > default_ratio_eps(ratio))
                .unwrap_or(false)
        })
    });
    if !nonreal {
        return Err(FrogError::DegenerateSystem(
            "all centre-difference ratios are real".into(),
        ));
    }

    // rows (c, -d) · (a, b) = rhs, with c + id = conj(v_1 - v_j)
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 1..v.len() {
        let w = (v[0] - v[j]).conj();
        let (c, d) = (w.re, -w.im);
        let rhs = 0.5 * (n[0] * n[0] - n[j] * n[j] + v[j].norm_sqr() - v[0].norm_sqr());
        s11 += c * c;
        s12 += c * d;
        s22 += d * d;
        t1 += c * rhs;
        t2 += d * rhs;
    }
    let det = s11 * s22 - s12 * s12;
    let a = (s22 * t1 - s12 * t2) / det;
    let b = (s11 * t2 - s12 * t1) / det;
    let z = Complex64::new(a, b);
    let residual = sys.residual(z);
    if residual <= tol {
        return Ok(CircleSolution {
            kind: SolutionKind::Unique(z),
            residual,
        });
    }
    // inconsistent radii: the least-squares point need not be the best one
    match annulus_point(sys, tol) {
        Some(w) => Ok(CircleSolution {
            kind: SolutionKind::Unique(w),
            residual: sys.residual(w),
        }),
        None => Ok(CircleSolution {
            kind: SolutionKind::None,
            residual,
        }),
    }
}

/// A point with residual `≤ tol`, if one exists.
///
/// The feasible set is an intersection of annuli `n_i − tol ≤ |z + v_i| ≤
/// n_i + tol`. When non-empty it either has a corner where two boundary
/// circles cross, or one of its boundary components is a whole circle; so
/// pairwise intersections plus one point per boundary circle suffice.
fn annulus_point(sys: &CircleSystem, tol: f64) -> Option<Complex64> {
    let mut circles = Vec::new();
    for (v, n) in sys.offsets().iter().zip(sys.radii()) {
        circles.push((-v, n + tol));
        if *n >= tol {
            circles.push((-v, n - tol));
        }
    }
    let mut candidates: Vec<Complex64> = circles.iter().map(|(c, r)| c + r).collect();
    for (i, &(c1, r1)) in circles.iter().enumerate() {
        for &(c2, r2) in &circles[i + 1..] {
            let d = c2 - c1;
            let dist = d.norm();
            if dist == 0.0 {
                continue;
            }
            let along = (dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist);
            let h = (r1 * r1 - along * along).max(0.0).sqrt();
            let u = d / dist;
            let foot = c1 + u * along;
            let perp = u * Complex64::i() * h;
            candidates.push(foot + perp);
            candidates.push(foot - perp);
        }
    }
    // corners sit on the boundary up to rounding
    let slack = tol * (1.0 + 1e-9) + 1e-15 * (1.0 + sys.max_radius());
    candidates
        .into_iter()
        .map(|z| (sys.residual(z), z))
        .filter(|(r, _)| *r <= slack)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, z)| z)
}

/// Conjugate-pair solution of a system with real offsets.
///
/// `Re z` comes from the least-squares fit over all pairs `(1, j)`, `(Im z)²`
/// from the mean of `n_i² − (Re z + v_i)²` clamped at zero.
pub fn solve_real_centers(sys: &CircleSystem, tol: f64) -> Result<CircleSolution> {
    let v = sys.offsets();
    let n = sys.radii();
    let scale = 1.0 + v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if v.iter().any(|x| x.im.abs() > 1e-12 * scale) {
        return Err(FrogError::InvalidParameters(
            "solve_real_centers needs real offsets".into(),
        ));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for j in 1..v.len() {
        let (v1, vj) = (v[0].re, v[j].re);
        let coef = 2.0 * (v1 - vj);
        let rhs = n[0] * n[0] - n[j] * n[j] - v1 * v1 + vj * vj;
        num += coef * rhs;
        den += coef * coef;
    }
    if den <= (1e-14 * scale).powi(2) {
        return Err(FrogError::Underdetermined);
    }
    let a = num / den;
    let b_sq = v
        .iter()
        .zip(n)
        .map(|(vi, ni)| ni * ni - (a + vi.re).powi(2))
        .sum::<f64>()
        / v.len() as f64;
    let b = b_sq.max(0.0).sqrt();
    let z = Complex64::new(a, b);
    let residual = sys.residual(z);
    let kind = if b_sq >= -tol * (1.0 + sys.max_radius()) && residual <= tol {
        SolutionKind::ConjugatePair(z, z.conj())
    } else {
        SolutionKind::None
    };
    Ok(CircleSolution { kind, residual })
}

/// Intersection of two circles with arbitrary complex offsets.
///
/// The plane is rotated so that both centres lie on the real axis, then
/// [`solve_real_centers`] applies; the two candidates are mirror images
/// across the line through the centres.
pub fn solve_two_circles(sys: &CircleSystem, tol: f64) -> Result<CircleSolution> {
    if sys.len() != 2 {
        return Err(FrogError::InvalidParameters(
            "solve_two_circles needs s = 2".into(),
        ));
    }
    let v = sys.offsets();
    let diff = v[1] - v[0];
    if diff.norm() <= 1e-14 * (1.0 + v[0].norm()) {
        return Err(FrogError::Underdetermined);
    }
    // t = (z + v_0)·conj(u) with u = diff/|diff|: |t| = n_0, |t + |diff|| = n_1
    let u = diff / diff.norm();
    let rotated = CircleSystem::new(
        vec![Complex64::new(0.0, 0.0), Complex64::new(diff.norm(), 0.0)],
        sys.radii().to_vec(),
    )?;
    let sol = solve_real_centers(&rotated, tol)?;
    let back = |t: Complex64| t * u - v[0];
    let kind = match sol.kind {
        SolutionKind::ConjugatePair(t1, t2) => SolutionKind::MirrorPair(back(t1), back(t2)),
        _ => SolutionKind::None,
    };
    let residual = match kind {
        SolutionKind::MirrorPair(a, b) => sys.residual(a).max(sys.residual(b)),
        _ => sol.residual,
    };
    Ok(CircleSolution { kind, residual })
}
