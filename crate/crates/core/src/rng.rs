//! Seeded random sources.
//!
//! Every random draw goes through [`ChaCha20Rng`], whose output stream is
//! fixed by its seed on every platform. Uniform `f64` values come from the
//! top 53 bits of a `u64` scaled by `2^-53` (the `rand` `Standard`
//! mapping); normal variates use the `rand_distr` ziggurat sampler.
//! Sub-streams are keyed with [`derive_seed`], so a trial's draws do not
//! depend on which thread runs it.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::signal::{BandlimitSpec, Signal, Spectrum};

pub type FrogRng = ChaCha20Rng;

pub fn seeded(seed: u64) -> FrogRng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of indices into an independent sub-seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn standard_normal(rng: &mut FrogRng) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex normal with independent standard normal real and imaginary parts.
pub fn complex_normal(rng: &mut FrogRng) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng))
}

/// Real signal with i.i.d. standard normal entries.
pub fn real_normal_signal(n: usize, rng: &mut FrogRng) -> Signal {
    Signal::from_real(&(0..n).map(|_| standard_normal(rng)).collect::<Vec<_>>()).expect("n > 0")
}

/// Complex signal with i.i.d. complex normal entries (generic full band).
pub fn complex_normal_signal(n: usize, rng: &mut FrogRng) -> Signal {
    Signal::new((0..n).map(|_| complex_normal(rng)).collect()).expect("n > 0")
}

/// Spectrum with i.i.d. complex normal coefficients on the band and exact
/// zeros elsewhere.
pub fn bandlimited_spectrum(n: usize, band: &BandlimitSpec, rng: &mut FrogRng) -> Result<Spectrum> {
    band.check_len(n)?;
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for k in band.indices(n) {
        values[k] = complex_normal(rng);
    }
    Spectrum::new(values)
}

pub fn uniform(rng: &mut FrogRng) -> f64 {
    rng.gen::<f64>()
}

pub fn sign(rng: &mut FrogRng) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}
