//! Entry-by-entry recovery of a bandlimited spectrum from its FROG trace.
//!
//! For a spectrum supported on `start, …, start+B−1` with `B ≤ N/2`, row `k`
//! of the frequency-domain trace only involves products `x̂_ℓ x̂_{k−ℓ}` of the
//! first `k+1` band coefficients (the "pyramid"). Working with the
//! normalized coefficients `ξ_j = x̂_{start+j} / x̂_start`, row `k` at shift
//! index `m` reads
//!
//! ```text
//! N ŷ_{k,m} / x̂_0² = (1 + ω^{km}) ξ_k + Σ_{ℓ=1}^{k−1} ξ_ℓ ξ_{k−ℓ} ω^{ℓm}
//! ```
//!
//! so once `ξ_0 … ξ_{k−1}` are known each usable `m` gives a circle
//! `|ξ_k + v_m| = n_m`. Steps:
//!
//! * `ξ_0 = 1`, `ξ_1 = |ξ_1|` (rotation and continuous translation gauges);
//! * `ξ_2` from real-centre circles, keeping the root with `Im ≥ 0`
//!   (reflection gauge);
//! * `ξ_3` from real-centre circles after rotating by `arg ξ_2`; both roots
//!   are carried forward and row 4 rejects the spurious one;
//! * `ξ_k`, `k ≥ 4`, from three circles with non-collinear centres, or, when
//!   no such triple exists (`r = 4`, odd `k`), from two circles whose mirror
//!   roots are pruned by later rows;
//! * rows `B … 2B−2` involve only known coefficients and act as checks.
//!
//! With `r = 3` only two shift indices are distinct, and the power
//! spectrum supplies the third circle `|ξ_k| = |x̂_k| / x̂_0`.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::{
    center_ratio, solve_generic, solve_real_centers, solve_two_circles, CircleSystem, SolutionKind,
};
use crate::error::{FrogError, Result};
use crate::signal::{twiddles, BandlimitSpec, FrogTrace, Spectrum};

/// Minimum separation between the two `ξ_3` branch residuals at row 4.
pub const BRANCH_SEPARATION: f64 = 1e2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverySettings {
    /// `r = N / L`.
    pub shifts: usize,
    pub use_power_spectrum: bool,
    /// Largest accepted circle residual, relative to `1 + max radius`.
    pub consistency_tol: f64,
    /// Relative threshold on `|Im|` of centre-difference ratios.
    pub ratio_eps: f64,
    pub max_equations_per_step: usize,
}

impl RecoverySettings {
    pub fn new(shifts: usize) -> Self {
        Self {
            shifts,
            use_power_spectrum: false,
            consistency_tol: 1e-8,
            ratio_eps: 1e-10,
            max_equations_per_step: 3,
        }
    }

    pub fn with_power_spectrum(mut self) -> Self {
        self.use_power_spectrum = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.shifts {
            r if r >= 4 => {}
            3 if self.use_power_spectrum => {}
            3 => {
                return Err(FrogError::InvalidSettings(
                    "r = 3 needs the power spectrum".into(),
                ))
            }
            r => {
                return Err(FrogError::InvalidSettings(format!(
                    "r = {r} is too small; need r ≥ 4, or r = 3 with the power spectrum"
                )))
            }
        }
        if self.max_equations_per_step < 3 {
            return Err(FrogError::InvalidSettings(
                "max_equations_per_step must be at least 3".into(),
            ));
        }
        if !(self.consistency_tol > 0.0) || !(self.ratio_eps > 0.0) {
            return Err(FrogError::InvalidSettings(
                "tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Which root of the `ξ_3` system survived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum X3Branch {
    /// `z e^{iθ}` with `Im z ≥ 0`.
    First,
    /// `conj(z) e^{iθ}`.
    Second,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryReport {
    pub spectrum: Spectrum,
    /// Relative circle residual for each band coefficient `0..B`.
    pub step_residuals: Vec<f64>,
    /// Relative residual of the check rows `B..=2B−2`.
    pub check_residuals: Vec<f64>,
    pub x3_branch: Option<X3Branch>,
    /// Row-4 residuals of the first and second `ξ_3` branches.
    pub branch_residuals: Option<[f64; 2]>,
    /// Shift indices used for each row `0..=2B−2` (band-relative rows).
    pub equations_used: Vec<Vec<usize>>,
    /// Every `(k, m)` trace entry consulted, in trace coordinates.
    pub reads: BTreeSet<(usize, usize)>,
    pub success: bool,
}

impl RecoveryReport {
    pub fn max_residual(&self) -> f64 {
        self.step_residuals
            .iter()
            .chain(&self.check_residuals)
            .copied()
            .fold(0.0, f64::max)
    }

    /// Ratio of the rejected to the accepted row-4 branch residual.
    pub fn branch_ratio(&self) -> Option<f64> {
        let [a, b] = self.branch_residuals?;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Some(if lo == 0.0 { f64::INFINITY } else { hi / lo })
    }
}

/// `ω^{km} = −1`, where the row-`k` equation at shift `m` loses `ξ_k`.
pub fn is_degenerate(k: usize, m: usize, r: usize) -> bool {
    r.is_multiple_of(2) && (k * m) % r == r / 2
}

/// Offset `v_m` of the row-`k` circle `|ξ_k + v_m| = n_m`:
///
/// ```text
/// v_m = Σ_{ℓ=1}^{k−1} p_ℓ p_{k−ℓ} ω^{ℓm} / (p_0 (1 + ω^{km}))
/// ```
///
/// `prefix` holds `p_0 … p_{k−1}`; further entries are ignored.
pub fn pyramid_centers(prefix: &[Complex64], k: usize, m: usize, r: usize) -> Result<Complex64> {
    if prefix.len() < k || k == 0 {
        return Err(FrogError::InvalidParameters(format!(
            "row {k} needs a prefix of length {k}, got {}",
            prefix.len()
        )));
    }
    if r == 0 {
        return Err(FrogError::InvalidParameters("r must be positive".into()));
    }
    if is_degenerate(k, m, r) {
        return Err(FrogError::DegenerateSystem(format!(
            "ω^(km) = −1 for k = {k}, m = {m}, r = {r}"
        )));
    }
    if prefix[0].norm() == 0.0 {
        return Err(FrogError::DegenerateSignal {
            index: 0,
            reason: "zero leading coefficient".into(),
        });
    }
    let omega = twiddles(r, 1.0);
    let sum = pyramid_sum(prefix, k, m, &omega);
    Ok(sum / (prefix[0] * (Complex64::new(1.0, 0.0) + omega[(k * m) % r])))
}

/// `Σ_{ℓ=1}^{k−1} p_ℓ p_{k−ℓ} ω^{ℓm}` with `p_j = 0` beyond the prefix.
fn pyramid_sum(prefix: &[Complex64], k: usize, m: usize, omega: &[Complex64]) -> Complex64 {
    let r = omega.len();
    let get = |j: usize| prefix.get(j).copied().unwrap_or_default();
    (1..k)
        .map(|l| get(l) * get(k - l) * omega[(l * m) % r])
        .sum()
}

/// Three shift indices for row `k` whose circles determine `ξ_k` uniquely:
/// none degenerate, no two summing to `r`, and the induced offsets not
/// collinear. Among the admissible triples the best conditioned one wins,
/// scored by `|Im((v_a − v_b)·conj(v_a − v_c))| / max|v|²`; ties go to the
/// lexicographically first.
pub fn select_equations<F>(k: usize, r: usize, mut centers: F, ratio_eps: f64) -> Result<[usize; 3]>
where
    F: FnMut(usize) -> Result<Complex64>,
{
    if r < 4 {
        return Err(FrogError::InvalidParameters(format!(
            "select_equations needs r ≥ 4, got {r}"
        )));
    }
    let usable: Vec<usize> = (0..r).filter(|&m| !is_degenerate(k, m, r)).collect();
    let mut cache: Vec<Option<Complex64>> = vec![None; r];
    let mut center = |m: usize, cache: &mut Vec<Option<Complex64>>| -> Result<Complex64> {
        if let Some(v) = cache[m] {
            return Ok(v);
        }
        let v = centers(m)?;
        cache[m] = Some(v);
        Ok(v)
    };
    let mut best: Option<(f64, [usize; 3])> = None;
    for (i, &a) in usable.iter().enumerate() {
        for (j, &b) in usable.iter().enumerate().skip(i + 1) {
            if a + b == r {
                continue;
            }
            for &c in usable.iter().skip(j + 1) {
                if a + c == r || b + c == r {
                    continue;
                }
                let v = [
                    center(a, &mut cache)?,
                    center(b, &mut cache)?,
                    center(c, &mut cache)?,
                ];
                let Ok(ratio) = center_ratio(&v, 0, 1, 2) else {
                    continue;
                };
                if ratio.im.abs() <= ratio_eps * (1.0 + ratio.norm()) {
                    continue;
                }
                let size = v.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
                let score = ((v[0] - v[1]) * (v[0] - v[2]).conj()).im.abs() / size;
                if best.is_none_or(|(s, _)| score > s) {
                    best = Some((score, [a, b, c]));
                }
            }
        }
    }
    best.map(|(_, t)| t)
        .ok_or(FrogError::EquationSelection { k, r })
}

#[derive(Clone, Debug)]
struct Branch {
    coeffs: Vec<Complex64>,
    residuals: Vec<f64>,
    equations: Vec<Vec<usize>>,
    x3: Option<X3Branch>,
}

struct Candidate {
    value: Option<Complex64>,
    residual: f64,
    ms: Vec<usize>,
    x3: Option<X3Branch>,
}

struct Recovery<'a> {
    trace: &'a FrogTrace,
    band: BandlimitSpec,
    settings: &'a RecoverySettings,
    power: Option<&'a [f64]>,
    n: usize,
    r: usize,
    omega: Vec<Complex64>,
    x0: f64,
    root_d00: f64,
    reads: BTreeSet<(usize, usize)>,
}

impl Recovery<'_> {
    /// Trace coordinates of band-relative row `k`. Reindexing the band to
    /// start at zero shifts trace rows by `2·start`.
    fn trace_row(&self, k: usize) -> usize {
        (k + 2 * self.band.start) % self.n
    }

    /// `N |ŷ_{k,m}| / x̂_0²` for band-relative row `k`.
    fn amplitude(&mut self, k: usize, m: usize) -> f64 {
        let row = self.trace_row(k);
        // columns m and r − m hold the same data
        let col = m.min((self.r - m) % self.r);
        self.reads.insert((row, col));
        self.trace.get(row, col).sqrt() / self.root_d00
    }

    /// `|x̂_k| / x̂_0` from the power spectrum, band-relative `k`.
    fn power_radius(&self, k: usize) -> Option<f64> {
        let p = self.power?;
        Some(p[(self.band.start + k) % self.n].max(0.0).sqrt() / self.x0)
    }

    fn distinct_shifts(&self) -> impl Iterator<Item = usize> {
        0..=self.r / 2
    }

    fn tol_for(&self, sys: &CircleSystem) -> f64 {
        self.settings.consistency_tol * Self::scale(sys)
    }

    /// Rounding in `|z + v_i|` grows with the offsets as well as the radii.
    fn scale(sys: &CircleSystem) -> f64 {
        let offset = sys.offsets().iter().map(|v| v.norm()).fold(0.0, f64::max);
        1.0 + sys.max_radius().max(offset)
    }

    fn relative(residual: f64, sys: &CircleSystem) -> f64 {
        residual / Self::scale(sys)
    }

    /// Circle data `(m, v_m, n_m)` for row `k` at the given shifts.
    fn circle(&mut self, prefix: &[Complex64], k: usize, m: usize) -> Result<(Complex64, f64)> {
        let v = pyramid_centers(prefix, k, m, self.r)?;
        let gain = (Complex64::new(1.0, 0.0) + self.omega[(k * m) % self.r]).norm();
        Ok((v, self.amplitude(k, m) / gain))
    }

    fn system(
        &mut self,
        prefix: &[Complex64],
        k: usize,
        ms: &[usize],
        rotate: Complex64,
    ) -> Result<CircleSystem> {
        let mut offsets = Vec::with_capacity(ms.len() + 1);
        let mut radii = Vec::with_capacity(ms.len() + 1);
        for &m in ms {
            let (v, n) = self.circle(prefix, k, m)?;
            offsets.push(v * rotate);
            radii.push(n);
        }
        if let Some(p) = self.power_radius(k) {
            offsets.push(Complex64::new(0.0, 0.0));
            radii.push(p);
        }
        CircleSystem::new(offsets, radii)
    }

    fn real_center_shifts(&self, k: usize) -> Vec<usize> {
        self.distinct_shifts()
            .filter(|&m| !is_degenerate(k, m, self.r))
            .take(self.settings.max_equations_per_step)
            .collect()
    }

    fn check_row(&mut self, branch: &Branch, k: usize) -> Candidate {
        let ms: Vec<usize> = self
            .distinct_shifts()
            .take(self.settings.max_equations_per_step)
            .collect();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for &m in &ms {
            let model = pyramid_sum(&branch.coeffs, k, m, &self.omega).norm();
            let measured = self.amplitude(k, m);
            worst = worst.max((model - measured).abs());
            scale = scale.max(measured);
        }
        Candidate {
            value: None,
            residual: worst / (1.0 + scale),
            ms,
            x3: branch.x3,
        }
    }

    fn solve_row(&mut self, branch: &Branch, k: usize) -> Result<Vec<Candidate>> {
        if k >= self.band.width {
            return Ok(vec![self.check_row(branch, k)]);
        }
        let prefix = &branch.coeffs;
        let one = Complex64::new(1.0, 0.0);
        match k {
            2 => {
                let ms = self.real_center_shifts(2);
                let sys = self.system(prefix, 2, &ms, one)?;
                let sol = solve_real_centers(&sys, self.tol_for(&sys))
                    .map_err(|e| self.degenerate(2, e))?;
                let residual = Self::relative(sol.residual, &sys);
                let value = match sol.kind {
                    SolutionKind::ConjugatePair(z, _) => Some(z),
                    _ => None,
                };
                Ok(vec![Candidate {
                    value,
                    residual,
                    ms,
                    x3: None,
                }])
            }
            3 => {
                let x2 = prefix[2];
                let rotate = if x2.norm() > 1e-12 {
                    (x2 / x2.norm()).conj()
                } else {
                    one
                };
                let ms = self.real_center_shifts(3);
                let sys = self.system(prefix, 3, &ms, rotate)?;
                let sol = solve_real_centers(&sys, self.tol_for(&sys))
                    .map_err(|e| self.degenerate(3, e))?;
                let residual = Self::relative(sol.residual, &sys);
                let unrotate = rotate.conj();
                Ok(match sol.kind {
                    SolutionKind::ConjugatePair(z, w) => vec![
                        Candidate {
                            value: Some(z * unrotate),
                            residual,
                            ms: ms.clone(),
                            x3: Some(X3Branch::First),
                        },
                        Candidate {
                            value: Some(w * unrotate),
                            residual,
                            ms,
                            x3: Some(X3Branch::Second),
                        },
                    ],
                    _ => vec![Candidate {
                        value: None,
                        residual,
                        ms,
                        x3: None,
                    }],
                })
            }
            _ => self.solve_general(branch, k),
        }
    }

    fn solve_general(&mut self, branch: &Branch, k: usize) -> Result<Vec<Candidate>> {
        let prefix = &branch.coeffs;
        let one = Complex64::new(1.0, 0.0);
        let r = self.r;
        let ms: Vec<usize> = if r >= 4 {
            match select_equations(
                k,
                r,
                |m| pyramid_centers(prefix, k, m, r),
                self.settings.ratio_eps,
            ) {
                Ok(t) => t.to_vec(),
                Err(FrogError::EquationSelection { .. }) => self.real_center_shifts(k),
                Err(e) => return Err(e),
            }
        } else {
            self.real_center_shifts(k)
        };
        let sys = self.system(prefix, k, &ms, one)?;
        let tol = self.tol_for(&sys);
        let sol = if sys.len() >= 3 {
            match solve_generic(&sys, tol) {
                Ok(sol) => sol,
                Err(FrogError::DegenerateSystem(_)) => {
                    return Err(FrogError::EquationSelection { k, r });
                }
                Err(e) => return Err(e),
            }
        } else {
            let distinct = sys
                .offsets()
                .get(1)
                .is_some_and(|v| (v - sys.offsets()[0]).norm() > 1e-12);
            if !distinct {
                return Err(FrogError::EquationSelection { k, r });
            }
            solve_two_circles(&sys, tol)?
        };
        let residual = Self::relative(sol.residual, &sys);
        let values = sol.candidates();
        if values.is_empty() {
            return Ok(vec![Candidate {
                value: None,
                residual,
                ms,
                x3: branch.x3,
            }]);
        }
        Ok(values
            .into_iter()
            .map(|z| Candidate {
                value: Some(z),
                residual: Self::relative(sys.residual(z), &sys),
                ms: ms.clone(),
                x3: branch.x3,
            })
            .collect())
    }

    fn degenerate(&self, index: usize, err: FrogError) -> FrogError {
        match err {
            FrogError::Underdetermined | FrogError::DegenerateSystem(_) => {
                FrogError::DegenerateSignal {
                    index,
                    reason: format!("row {index} circle system degenerates: {err}"),
                }
            }
            other => other,
        }
    }
}

fn extend(branch: &Branch, cand: &Candidate, k: usize, width: usize) -> Branch {
    let mut next = branch.clone();
    if k < width {
        next.coeffs.push(cand.value.unwrap_or_default());
    }
    next.residuals.push(cand.residual);
    next.equations.push(cand.ms.clone());
    next.x3 = cand.x3;
    next
}

/// Recovers a bandlimited spectrum from its trace, up to trivial ambiguities.
///
/// The recursion is anchored at one end of the band and divides by that
/// coefficient, so it is run from both ends (the reversed band has the
/// reindexed trace `d'(k, m) = d(2c − k, m)`, `c` the last band index) and
/// the better-conditioned result is kept.
///
/// The output satisfies the gauge `x̂_start ≥ 0`, `x̂_{start+1} ≥ 0` (both
/// real) and `Im x̂_{start+2} ≥ 0`.
pub fn recover(
    trace: &FrogTrace,
    band: &BandlimitSpec,
    settings: &RecoverySettings,
    power_spectrum: Option<&[f64]>,
) -> Result<RecoveryReport> {
    let up = recover_anchored(trace, band, settings, power_spectrum);
    if !band.is_half_band(trace.n()) || band.width < 2 {
        return up;
    }
    let down = recover_reversed(trace, band, settings, power_spectrum);
    let mut best = match (up, down) {
        (Ok(a), Ok(b)) => {
            if (b.success, -b.max_residual()) > (a.success, -a.max_residual()) {
                b
            } else {
                a
            }
        }
        (Ok(a), Err(_)) => a,
        (Err(_), Ok(b)) => b,
        (Err(e), Err(_)) => return Err(e),
    };
    best.spectrum = gauge_fix(&best.spectrum, band);
    Ok(best)
}

/// Runs the recursion from the top of the band and maps the result back.
fn recover_reversed(
    trace: &FrogTrace,
    band: &BandlimitSpec,
    settings: &RecoverySettings,
    power_spectrum: Option<&[f64]>,
) -> Result<RecoveryReport> {
    let n = trace.n();
    let r = trace.shifts();
    let c = band.start + band.width - 1;
    let flip_row = |k: usize| (2 * c + 2 * n - k) % n;
    let mut data = Vec::with_capacity(n * r);
    for k in 0..n {
        data.extend_from_slice(&trace.data()[flip_row(k) * r..(flip_row(k) + 1) * r]);
    }
    let flipped = FrogTrace::new(n, trace.step(), data)?;
    let power: Option<Vec<f64>> =
        power_spectrum.map(|p| (0..n).map(|k| p[(c + n - k % n) % n]).collect());
    let lower = BandlimitSpec::new(band.width, 0)?;
    let rep = recover_anchored(&flipped, &lower, settings, power.as_deref())?;
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..band.width {
        values[(c + n - j) % n] = rep.spectrum[j];
    }
    Ok(RecoveryReport {
        spectrum: Spectrum::new(values)?,
        reads: rep.reads.iter().map(|&(k, m)| (flip_row(k), m)).collect(),
        ..rep
    })
}

/// Rotation, band-unwrapped translation and reflection bringing `xhat` to
/// the gauge `x̂_start, x̂_{start+1} > 0`, `Im x̂_{start+2} ≥ 0`.
pub fn gauge_fix(xhat: &Spectrum, band: &BandlimitSpec) -> Spectrum {
    let n = xhat.len();
    let at = |j: usize| xhat[(band.start + j) % n];
    let a0 = at(0).arg();
    let slope = if band.width >= 2 {
        at(1).arg() - a0
    } else {
        0.0
    };
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..band.width.min(n) {
        values[(band.start + j) % n] = at(j) * Complex64::from_polar(1.0, -(a0 + slope * j as f64));
    }
    // real by construction; drop the rounding residue
    for j in 0..band.width.min(2) {
        let k = (band.start + j) % n;
        values[k] = Complex64::new(values[k].norm(), 0.0);
    }
    let third = values[(band.start + 2) % n];
    if band.width >= 3 && third.im < 0.0 {
        values.iter_mut().for_each(|v| *v = v.conj());
    }
    Spectrum::new(values).expect("non-empty")
}

fn recover_anchored(
    trace: &FrogTrace,
    band: &BandlimitSpec,
    settings: &RecoverySettings,
    power_spectrum: Option<&[f64]>,
) -> Result<RecoveryReport> {
    settings.validate()?;
    let n = trace.n();
    let r = trace.shifts();
    if settings.shifts != r {
        return Err(FrogError::InvalidSettings(format!(
            "settings expect r = {} but the trace has r = {r}",
            settings.shifts
        )));
    }
    band.check_len(n)?;
    if !band.is_half_band(n) {
        return Err(FrogError::InvalidParameters(format!(
            "recovery needs B ≤ N/2, got B = {} with N = {n}",
            band.width
        )));
    }
    let power = if settings.use_power_spectrum {
        let p = power_spectrum.ok_or_else(|| {
            FrogError::InvalidSettings("power spectrum requested but not supplied".into())
        })?;
        if p.len() != n {
            return Err(FrogError::InvalidParameters(format!(
                "power spectrum has {} entries, expected {n}",
                p.len()
            )));
        }
        Some(p)
    } else {
        None
    };

    let width = band.width;
    let mut rec = Recovery {
        trace,
        band: *band,
        settings,
        power,
        n,
        r,
        omega: twiddles(r, 1.0),
        x0: 0.0,
        root_d00: 0.0,
        reads: BTreeSet::new(),
    };

    // x̂_0² = N |ŷ_{0,0}|
    let row0 = rec.trace_row(0);
    rec.reads.insert((row0, 0));
    let d00 = trace.get(row0, 0);
    let trace_scale = trace.max_entry().sqrt();
    if !(d00.sqrt() > 1e-12 * trace_scale) {
        return Err(FrogError::DegenerateSignal {
            index: 0,
            reason: "x̂_0 vanishes".into(),
        });
    }
    rec.root_d00 = d00.sqrt();
    rec.x0 = (n as f64 * rec.root_d00).sqrt();

    let mut root = Branch {
        coeffs: vec![Complex64::new(1.0, 0.0)],
        residuals: vec![0.0],
        equations: vec![vec![0]],
        x3: None,
    };
    if width >= 2 {
        // |ŷ_{1,0}| = 2 x̂_0 |x̂_1| / N
        let xi1 = 0.5 * rec.amplitude(1, 0);
        if !(xi1 > 1e-12) {
            return Err(FrogError::DegenerateSignal {
                index: 1,
                reason: "x̂_1 vanishes".into(),
            });
        }
        root.coeffs.push(Complex64::new(xi1, 0.0));
        root.residuals.push(0.0);
        root.equations.push(vec![0]);
    }

    let last_row = 2 * width - 2;
    let mut branches = vec![root];
    let mut branch_residuals = None;
    let mut x3_branch = None;
    for k in 2..=last_row {
        let mut grown = Vec::new();
        for b in &branches {
            for cand in rec.solve_row(b, k)? {
                grown.push((
                    extend(b, &cand, k, width),
                    cand.residual,
                    cand.value.is_some() || k >= width,
                ));
            }
        }
        if k == 4 && grown.iter().any(|(b, _, _)| b.x3.is_some()) {
            let best = |tag: X3Branch| {
                grown
                    .iter()
                    .filter(|(b, _, _)| b.x3 == Some(tag))
                    .map(|(_, res, _)| *res)
                    .fold(f64::INFINITY, f64::min)
            };
            let first = best(X3Branch::First);
            let second = best(X3Branch::Second);
            branch_residuals = Some([first, second]);
            let (winner, lo, hi) = if first <= second {
                (X3Branch::First, first, second)
            } else {
                (X3Branch::Second, second, first)
            };
            if !(hi >= BRANCH_SEPARATION * lo) {
                return Err(FrogError::AmbiguousBranch { first, second });
            }
            x3_branch = Some(winner);
            grown.retain(|(b, _, _)| b.x3 == Some(winner));
        }
        let min_residual = grown
            .iter()
            .map(|(_, res, _)| *res)
            .fold(f64::INFINITY, f64::min);
        branches = grown
            .into_iter()
            .filter(|(_, res, ok)| *ok && *res <= settings.consistency_tol)
            .map(|(b, _, _)| b)
            .collect();
        if branches.is_empty() {
            return Err(FrogError::InconsistentTrace {
                step: k,
                residual: min_residual,
            });
        }
    }

    dedupe(&mut branches);
    if branches.len() > 1 {
        return Err(FrogError::AmbiguousRecovery {
            count: branches.len(),
        });
    }
    let best = branches.pop().expect("non-empty");

    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for (j, xi) in best.coeffs.iter().enumerate() {
        values[(band.start + j) % n] = xi * rec.x0;
    }
    let mut residuals = best.residuals;
    residuals.resize(last_row.max(width - 1) + 1, 0.0);
    let check_residuals = residuals.split_off(width);
    let report = RecoveryReport {
        spectrum: Spectrum::new(values)?,
        step_residuals: residuals,
        check_residuals,
        x3_branch,
        branch_residuals,
        equations_used: best.equations,
        reads: rec.reads,
        success: true,
    };
    let success = report.max_residual() <= settings.consistency_tol;
    Ok(RecoveryReport { success, ..report })
}

fn dedupe(branches: &mut Vec<Branch>) {
    let mut kept: Vec<Branch> = Vec::new();
    for b in branches.drain(..) {
        let scale = 1.0 + b.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let dup = kept.iter().any(|k| {
            k.coeffs
                .iter()
                .zip(&b.coeffs)
                .all(|(x, y)| (x - y).norm() <= 1e-9 * scale)
        });
        if !dup {
            kept.push(b);
        }
    }
    *branches = kept;
}
