//! Signals, spectra and the SHG-FROG forward model.
//!
//! Conventions: the forward DFT is unnormalized,
//! `x̂_k = Σ_n x_n e^{-2πi kn/N}`, and the inverse carries the `1/N`.
//! All indices are cyclic modulo `N`.
//!
//! The trace is stored as squared magnitudes `|ŷ_{k,m}|²` where
//! `ŷ_{k,m}` is the DFT of the product `y_{n,m} = x_n x_{n+mL}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{FrogError, Result};

/// Length-`N` periodic time-domain signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal(Vec<Complex64>);

/// Length-`N` DFT of a [`Signal`].
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum(Vec<Complex64>);

macro_rules! vector_newtype {
    ($name:ident) => {
        impl $name {
            pub fn new(values: Vec<Complex64>) -> Result<Self> {
                if values.is_empty() {
                    return Err(FrogError::InvalidParameters(format!(
                        "{} must have positive length",
                        stringify!($name)
                    )));
                }
                Ok(Self(values))
            }

            pub fn zeros(n: usize) -> Self {
                Self(vec![Complex64::new(0.0, 0.0); n.max(1)])
            }

            pub fn from_real(values: &[f64]) -> Result<Self> {
                Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn values(&self) -> &[Complex64] {
                &self.0
            }

            pub fn values_mut(&mut self) -> &mut [Complex64] {
                &mut self.0
            }

            pub fn into_values(self) -> Vec<Complex64> {
                self.0
            }

            /// Cyclic access: `at(n) == at(n mod N)`.
            pub fn at(&self, index: i64) -> Complex64 {
                self.0[index.rem_euclid(self.0.len() as i64) as usize]
            }

            pub fn norm(&self) -> f64 {
                self.0.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
            }

            /// `‖self − other‖₂`; panics on length mismatch.
            pub fn distance(&self, other: &Self) -> f64 {
                assert_eq!(self.len(), other.len(), "length mismatch");
                self.0
                    .iter()
                    .zip(&other.0)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            }
        }

        impl std::ops::Index<usize> for $name {
            type Output = Complex64;
            fn index(&self, index: usize) -> &Complex64 {
                &self.0[index]
            }
        }
    };
}

vector_newtype!(Signal);
vector_newtype!(Spectrum);

impl Signal {
    pub fn dft(&self) -> Spectrum {
        dft(self)
    }
}

impl Spectrum {
    pub fn idft(&self) -> Signal {
        idft(self)
    }
}

/// `N − B` consecutive zero Fourier coefficients: only the `width`
/// coefficients at `start, start+1, …, start+width−1 (mod N)` may be nonzero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BandlimitSpec {
    pub width: usize,
    pub start: usize,
}

impl BandlimitSpec {
    pub fn new(width: usize, start: usize) -> Result<Self> {
        if width == 0 {
            return Err(FrogError::InvalidParameters(
                "bandwidth B must be positive".into(),
            ));
        }
        Ok(Self { width, start })
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.width > n {
            return Err(FrogError::InvalidParameters(format!(
                "bandwidth B = {} exceeds N = {n}",
                self.width
            )));
        }
        Ok(())
    }

    /// True when `B ≤ ⌊N/2⌋`, the regime where translation is a continuous symmetry.
    pub fn is_half_band(&self, n: usize) -> bool {
        self.width <= n / 2
    }

    /// Offset of `k` inside the band counted from `start`, or `None` if `k` is
    /// one of the forced zeros.
    pub fn offset(&self, k: usize, n: usize) -> Option<usize> {
        let off = (k + n - self.start % n) % n;
        (off < self.width).then_some(off)
    }

    /// Integer representative of `k` in `[s, s + N)`, where `s` is the band
    /// start taken in `(-N/2, N/2]`. Continuous modulation must use this
    /// rather than `k` itself so that the band stays contiguous in the
    /// exponent.
    pub fn unwrapped_index(&self, k: usize, n: usize) -> i64 {
        let mut start = (self.start % n) as i64;
        if 2 * start > n as i64 {
            start -= n as i64;
        }
        start + ((k as i64 - start).rem_euclid(n as i64))
    }

    pub fn indices(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.start;
        (0..self.width.min(n)).map(move |j| (start + j) % n)
    }

    /// Whether every coefficient outside the band has modulus `≤ tol`.
    pub fn conforms(&self, spectrum: &Spectrum, tol: f64) -> bool {
        let n = spectrum.len();
        (0..n).all(|k| self.offset(k, n).is_some() || spectrum[k].norm() <= tol)
    }

    /// Smallest band covering all coefficients above `tol`, found from the
    /// longest cyclic run of negligible coefficients.
    pub fn detect(spectrum: &Spectrum, tol: f64) -> Option<Self> {
        let n = spectrum.len();
        let small: Vec<bool> = spectrum.values().iter().map(|v| v.norm() <= tol).collect();
        if small.iter().all(|&s| s) {
            return None;
        }
        let mut best_len = 0;
        let mut best_end = 0;
        let mut run = 0;
        for i in 0..2 * n {
            if small[i % n] {
                run += 1;
                if run > best_len && run < n {
                    best_len = run;
                    best_end = i % n;
                }
            } else {
                run = 0;
            }
        }
        let start = if best_len == 0 { 0 } else { (best_end + 1) % n };
        Some(Self {
            width: n - best_len,
            start,
        })
    }
}

/// Returns `r = N / L`, rejecting steps that do not divide `N`.
pub fn shift_count(n: usize, step: usize) -> Result<usize> {
    if n == 0 || step == 0 {
        return Err(FrogError::InvalidParameters(format!(
            "N = {n} and L = {step} must both be positive"
        )));
    }
    if !n.is_multiple_of(step) {
        return Err(FrogError::InvalidParameters(format!(
            "L = {step} does not divide N = {n}"
        )));
    }
    Ok(n / step)
}

/// Measured FROG trace: an `N × r` grid of `|ŷ_{k,m}|²`, row-major in `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrogTrace {
    n: usize,
    step: usize,
    data: Vec<f64>,
}

impl FrogTrace {
    pub fn new(n: usize, step: usize, data: Vec<f64>) -> Result<Self> {
        let r = shift_count(n, step)?;
        if data.len() != n * r {
            return Err(FrogError::InvalidParameters(format!(
                "trace has {} entries, expected N·r = {}",
                data.len(),
                n * r
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(FrogError::InvalidParameters(format!(
                "trace entries must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self { n, step, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn shifts(&self) -> usize {
        self.n / self.step
    }

    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.data[k * self.shifts() + m]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, m: usize) -> Vec<f64> {
        (0..self.n).map(|k| self.get(k, m)).collect()
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Largest entrywise difference, relative to the larger of the two maxima.
    pub fn relative_deviation(&self, other: &FrogTrace) -> f64 {
        assert_eq!(
            (self.n, self.step),
            (other.n, other.step),
            "trace shape mismatch"
        );
        let scale = self.max_entry().max(other.max_entry());
        let diff = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

/// `e^{sign·2πi j/N}` for `j = 0..N`.
pub(crate) fn twiddles(n: usize, sign: f64) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(1.0, sign * 2.0 * PI * j as f64 / n as f64))
        .collect()
}

fn dft_with(values: &[Complex64], table: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    (0..n)
        .map(|k| {
            values
                .iter()
                .enumerate()
                .map(|(j, v)| v * table[(k * j) % n])
                .sum()
        })
        .collect()
}

pub fn dft(x: &Signal) -> Spectrum {
    Spectrum(dft_with(x.values(), &twiddles(x.len(), -1.0)))
}

pub fn idft(xhat: &Spectrum) -> Signal {
    let n = xhat.len() as f64;
    let mut out = dft_with(xhat.values(), &twiddles(xhat.len(), 1.0));
    out.iter_mut().for_each(|v| *v /= n);
    Signal(out)
}

/// `y_n = x_n · x_{n+mL}`.
pub fn product_signal(x: &Signal, m: usize, step: usize) -> Result<Signal> {
    let n = x.len();
    let r = shift_count(n, step)?;
    if m >= r {
        return Err(FrogError::InvalidParameters(format!(
            "shift index m = {m} must be < r = {r}"
        )));
    }
    let lag = m * step;
    Ok(Signal((0..n).map(|i| x[i] * x[(i + lag) % n]).collect()))
}

/// Time-domain FROG trace `|DFT(x_n x_{n+mL})_k|²`.
pub fn frog_trace(x: &Signal, step: usize) -> Result<FrogTrace> {
    let n = x.len();
    let r = shift_count(n, step)?;
    let table = twiddles(n, -1.0);
    let mut data = vec![0.0; n * r];
    for m in 0..r {
        let y = product_signal(x, m, step)?;
        for (k, v) in dft_with(y.values(), &table).into_iter().enumerate() {
            data[k * r + m] = v.norm_sqr();
        }
    }
    FrogTrace::new(n, step, data)
}

/// Frequency-domain form of the trace amplitudes:
/// `out[k][m] = (1/N) Σ_ℓ x̂_ℓ x̂_{k−ℓ} ω^{ℓm}` with `ω = e^{2πi/r}`.
pub fn frog_freq_coeffs(xhat: &Spectrum, step: usize) -> Result<Vec<Vec<Complex64>>> {
    let n = xhat.len();
    let r = shift_count(n, step)?;
    let omega = twiddles(r, 1.0);
    let inv_n = 1.0 / n as f64;
    let out = (0..n)
        .map(|k| {
            (0..r)
                .map(|m| {
                    let s: Complex64 = (0..n)
                        .map(|l| xhat[l] * xhat[(k + n - l) % n] * omega[(l * m) % r])
                        .sum();
                    s * inv_n
                })
                .collect()
        })
        .collect();
    Ok(out)
}
