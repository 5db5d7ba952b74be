//! Trivial ambiguities of the FROG trace and distance modulo them.
//!
//! The group is generated by a global phase `e^{iψ}`, a translation
//! (modulation of the spectrum by `e^{-2πi·shift·k/N}`) and the reflection
//! `x̃_n = conj(x_{-n})`, whose spectrum is `conj(x̂_k)`. Reflection and
//! translation do not commute: reflecting after a shift by `ℓ` equals
//! shifting by `−ℓ` after reflecting.
//!
//! For even `N` there is one more symmetry: the sign alternation
//! `x_n → (−1)^n x_n`, a cyclic shift of the spectrum by `N/2`. It
//! multiplies every product `x_n x_{n+mL}` by `(−1)^{mL}`, so the trace is
//! unchanged.
//!
//! For arbitrary signals the shift must be an integer. When the spectrum
//! has at most `⌊N/2⌋` consecutive nonzero coefficients the shift may be any
//! real number, provided the modulation exponent uses the band-unwrapped
//! index (see [`BandlimitSpec::unwrapped_index`]).

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FrogError, Result};
use crate::signal::{frog_trace, BandlimitSpec, Spectrum};

/// Relative tolerance used by [`trace_invariant`].
pub const TRACE_INVARIANCE_TOL: f64 = 1e-9;

/// Points per unit shift in the coarse continuous-shift scan.
const GRID_PER_SAMPLE: usize = 16;
const GOLDEN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityElement {
    pub psi: f64,
    pub shift: f64,
    pub reflected: bool,
    /// Sign alternation `(−1)^n` in time (even `N` only).
    #[serde(default)]
    pub alternated: bool,
}

impl Default for AmbiguityElement {
    fn default() -> Self {
        Self::identity()
    }
}

impl AmbiguityElement {
    pub fn identity() -> Self {
        Self {
            psi: 0.0,
            shift: 0.0,
            reflected: false,
            alternated: false,
        }
    }

    pub fn rotation(psi: f64) -> Self {
        Self {
            psi: psi.rem_euclid(TAU),
            ..Self::identity()
        }
    }

    pub fn translation(shift: f64) -> Self {
        Self {
            shift,
            ..Self::identity()
        }
    }

    pub fn reflection() -> Self {
        Self {
            reflected: true,
            ..Self::identity()
        }
    }

    pub fn alternation() -> Self {
        Self {
            alternated: true,
            ..Self::identity()
        }
    }

    pub fn is_integer_shift(&self) -> bool {
        self.shift.fract() == 0.0
    }

    /// `self ∘ first`: the element that applies `first`, then `self`.
    ///
    /// Moving the alternation past a shift `s` costs a phase `πs`.
    pub fn compose(&self, first: &AmbiguityElement) -> AmbiguityElement {
        let sign = if self.reflected { -1.0 } else { 1.0 };
        let carry = if self.alternated {
            PI * sign * first.shift
        } else {
            0.0
        };
        AmbiguityElement {
            psi: (self.psi + sign * first.psi + carry).rem_euclid(TAU),
            shift: self.shift + sign * first.shift,
            reflected: self.reflected ^ first.reflected,
            alternated: self.alternated ^ first.alternated,
        }
    }

    pub fn inverse(&self) -> AmbiguityElement {
        let carry = if self.alternated {
            PI * self.shift
        } else {
            0.0
        };
        if self.reflected {
            AmbiguityElement {
                psi: (self.psi + carry).rem_euclid(TAU),
                ..*self
            }
        } else {
            AmbiguityElement {
                psi: (-self.psi - carry).rem_euclid(TAU),
                shift: -self.shift,
                ..*self
            }
        }
    }
}

/// Modulation exponent index for coefficient `k`: the band-unwrapped index
/// when a band is given, `k` itself otherwise.
fn exponent_index(k: usize, n: usize, band: Option<&BandlimitSpec>) -> f64 {
    match band {
        Some(b) => b.unwrapped_index(k, n) as f64,
        None => k as f64,
    }
}

/// Applies `g` without checking that a fractional shift is legitimate.
/// Used to probe how the trace reacts to transforms that are not symmetries.
pub fn apply_unchecked(
    g: &AmbiguityElement,
    xhat: &Spectrum,
    band: Option<&BandlimitSpec>,
) -> Spectrum {
    let n = xhat.len();
    let rot = Complex64::from_polar(1.0, g.psi);
    let lag = if g.alternated { n / 2 } else { 0 };
    let values = (0..n)
        .map(|k| {
            let v = xhat[(k + n - lag) % n];
            let v = if g.reflected { v.conj() } else { v };
            let phase = -TAU * g.shift * exponent_index(k, n, band) / n as f64;
            v * Complex64::from_polar(1.0, phase) * rot
        })
        .collect();
    Spectrum::new(values).expect("same length as input")
}

/// Reflection, then alternation, then modulation by the shift, then the
/// global phase.
///
/// A fractional shift is a symmetry only for bandlimited spectra, so it
/// requires `band` with `B ≤ ⌊N/2⌋`; the spectrum is trusted to conform.
/// The alternation needs even `N` and moves the band, so it only combines
/// with integer shifts.
pub fn apply(
    g: &AmbiguityElement,
    xhat: &Spectrum,
    band: Option<&BandlimitSpec>,
) -> Result<Spectrum> {
    if g.alternated {
        if !xhat.len().is_multiple_of(2) {
            return Err(FrogError::InvalidUse(
                "sign alternation needs even N".into(),
            ));
        }
        if !g.is_integer_shift() {
            return Err(FrogError::InvalidUse(
                "sign alternation only combines with integer shifts".into(),
            ));
        }
    }
    if !g.is_integer_shift() {
        match band {
            Some(b) if b.is_half_band(xhat.len()) => {}
            Some(b) => {
                return Err(FrogError::InvalidUse(format!(
                    "fractional shift needs B ≤ N/2, got B = {} with N = {}",
                    b.width,
                    xhat.len()
                )))
            }
            None => {
                return Err(FrogError::InvalidUse(
                    "fractional shift requires a bandlimit assertion".into(),
                ))
            }
        }
    }
    Ok(apply_unchecked(g, xhat, band))
}

/// Whether the trace of `g·x̂` matches that of `x̂` to [`TRACE_INVARIANCE_TOL`].
///
/// Fractional shifts are applied with band-unwrapped indices when `x̂` has a
/// detectable half band, with raw indices otherwise.
pub fn trace_invariant(xhat: &Spectrum, g: &AmbiguityElement, step: usize) -> Result<bool> {
    let n = xhat.len();
    let tol = 1e-12 * xhat.norm();
    let band = BandlimitSpec::detect(xhat, tol).filter(|b| b.is_half_band(n));
    let moved = apply_unchecked(g, xhat, band.as_ref());
    let before = frog_trace(&xhat.idft(), step)?;
    let after = frog_trace(&moved.idft(), step)?;
    Ok(before.relative_deviation(&after) <= TRACE_INVARIANCE_TOL)
}

/// Correlation `c(s) = Σ_k w_k e^{-2πi s κ_k / N}` and its first two
/// derivatives in `s`, where `κ_k` are the exponent indices.
struct ShiftCorrelation {
    weights: Vec<Complex64>,
    kappa: Vec<f64>,
    n: f64,
}

impl ShiftCorrelation {
    fn new(a: &Spectrum, b: &Spectrum, reflected: bool, band: Option<&BandlimitSpec>) -> Self {
        let n = a.len();
        let weights = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(&x, &y)| if reflected { x.conj() } else { x } * y.conj())
            .collect();
        let kappa = (0..n).map(|k| exponent_index(k, n, band)).collect();
        Self {
            weights,
            kappa,
            n: n as f64,
        }
    }

    fn eval(&self, s: f64) -> [Complex64; 3] {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (w, &k) in self.weights.iter().zip(&self.kappa) {
            let d = Complex64::new(0.0, -TAU * k / self.n);
            let t = w * Complex64::from_polar(1.0, -TAU * s * k / self.n);
            out[0] += t;
            out[1] += t * d;
            out[2] += t * d * d;
        }
        out
    }

    fn magnitude(&self, s: f64) -> f64 {
        self.eval(s)[0].norm()
    }

    /// Golden-section maximization of `|c|` on `[lo, hi]`, then Newton
    /// polishing of `d|c|²/ds = 0`.
    fn refine(&self, lo: f64, hi: f64) -> f64 {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (self.magnitude(c), self.magnitude(d));
        while b - a > GOLDEN_TOL {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.magnitude(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.magnitude(d);
            }
        }
        let mut s = 0.5 * (a + b);
        for _ in 0..8 {
            let [c0, c1, c2] = self.eval(s);
            // g = d|c|²/ds / 2 = Re(conj(c) c'), g' = |c'|² + Re(conj(c) c'')
            let g = (c0.conj() * c1).re;
            let gp = c1.norm_sqr() + (c0.conj() * c2).re;
            if gp >= 0.0 {
                break;
            }
            let next = s - g / gp;
            if !(lo..=hi).contains(&next) || (next - s).abs() < 1e-15 * (1.0 + s.abs()) {
                if (lo..=hi).contains(&next) {
                    s = next;
                }
                break;
            }
            s = next;
        }
        s
    }
}

fn rel_distance(
    a: &Spectrum,
    b: &Spectrum,
    g: &AmbiguityElement,
    band: Option<&BandlimitSpec>,
) -> f64 {
    apply_unchecked(g, a, band).distance(b) / b.norm()
}

/// Optimal phase for fixed shift and reflection, from the inner product.
fn best_phase(corr: &ShiftCorrelation, s: f64) -> f64 {
    (-corr.eval(s)[0].arg()).rem_euclid(TAU)
}

/// `min_g ‖g·a − b‖₂ / ‖b‖₂` together with a minimizing `g`.
///
/// Without a band the shift ranges over the integers `0..N`. With a band
/// (`B ≤ N/2`) the shift is continuous: scanned on a `16N` grid over
/// `[0, N)`, then refined around the best grid point. Ties resolve toward
/// the smaller shift, then the unreflected, then the unalternated element.
///
/// The sign alternation is searched only without a band and for even `N`.
pub fn dist_mod_group(
    a: &Spectrum,
    b: &Spectrum,
    band: Option<&BandlimitSpec>,
) -> Result<(f64, AmbiguityElement)> {
    if a.len() != b.len() {
        return Err(FrogError::InvalidParameters(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Err(FrogError::InvalidParameters(
            "reference spectrum is zero".into(),
        ));
    }
    let n = a.len();
    let continuous = match band {
        Some(bd) => {
            if !bd.is_half_band(n) {
                return Err(FrogError::InvalidUse(format!(
                    "continuous alignment needs B ≤ N/2, got B = {} with N = {n}",
                    bd.width
                )));
            }
            true
        }
        None => false,
    };

    let mut variants = vec![(false, false), (true, false)];
    let mut alt = None;
    if !continuous && n.is_multiple_of(2) {
        alt = Some(apply_unchecked(&AmbiguityElement::alternation(), a, None));
        variants.extend([(false, true), (true, true)]);
    }
    let corrs: Vec<ShiftCorrelation> = variants
        .iter()
        .map(|&(r, al)| {
            ShiftCorrelation::new(if al { alt.as_ref().unwrap_or(a) } else { a }, b, r, band)
        })
        .collect();
    let (points, step) = if continuous {
        let m = GRID_PER_SAMPLE * n;
        (m, n as f64 / m as f64)
    } else {
        (n, 1.0)
    };

    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..points {
        let s = i as f64 * step;
        for (ri, corr) in corrs.iter().enumerate() {
            let mag = corr.magnitude(s);
            // strict comparison keeps the earlier (smaller shift, unreflected) candidate
            if best.is_none_or(|(bm, _, _)| mag > bm) {
                best = Some((mag, i, ri));
            }
        }
    }
    let (best_mag, i, ri) = best.expect("at least one grid point");
    let (mut ri, mut shift) = (ri, i as f64 * step);
    if continuous {
        // a secondary lobe can top the grid by less than the sampling loss,
        // so every grid peak near the best is refined
        let mut top: Option<(f64, f64, usize)> = None;
        for (ci, corr) in corrs.iter().enumerate() {
            let mags: Vec<f64> = (0..points)
                .map(|j| corr.magnitude(j as f64 * step))
                .collect();
            for j in 0..points {
                let (prev, next) = (mags[(j + points - 1) % points], mags[(j + 1) % points]);
                if mags[j] < prev || mags[j] < next || mags[j] < 0.9 * best_mag {
                    continue;
                }
                let s = j as f64 * step;
                let refined = corr.refine(s - step, s + step).rem_euclid(n as f64);
                let mag = corr.magnitude(refined);
                // ties: smaller shift, then unreflected
                let better = top.is_none_or(|(tm, ts, tc)| {
                    mag > tm * (1.0 + 1e-12)
                        || (mag >= tm * (1.0 - 1e-12) && (refined, ci) < (ts, tc))
                });
                if better {
                    top = Some((mag, refined, ci));
                }
            }
        }
        let (_, s, ci) = top.expect("the grid maximum is a local maximum");
        shift = s;
        ri = ci;
    }
    let (reflected, alternated) = variants[ri];
    let g = AmbiguityElement {
        psi: best_phase(&corrs[ri], shift),
        shift,
        reflected,
        alternated,
    };
    let dist = rel_distance(a, b, &g, band);
    Ok((dist, g))
}
