//! The trivial ambiguities of FROG.
//!
//! Three different signals on N = 11 (a spectrum, its 3-sample shift and
//! its 1.5-sample shift) share one trace because the spectrum is
//! bandlimited. A full-band control loses the fractional-shift symmetry.
//!
//! ```bash
//! cargo run --example trivial_ambiguities
//! ```

use frogkit::ambiguity::apply_unchecked;
use frogkit::rng::{complex_normal_signal, seeded};
use frogkit::{apply, dist_mod_group, frog_trace, AmbiguityElement, BandlimitSpec, Spectrum};
use num_complex::Complex64;

fn main() -> frogkit::Result<()> {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut v = vec![zero; 11];
    v[0] = one;
    v[1] = i;
    v[2] = -i;
    v[9] = i;
    v[10] = -i;
    let xhat = Spectrum::new(v)?;
    let band = BandlimitSpec::detect(&xhat, 1e-12).expect("bandlimited");
    println!(
        "detected band: B = {} starting at {}",
        band.width, band.start
    );

    let shifted = apply(&AmbiguityElement::translation(3.0), &xhat, Some(&band))?;
    let half = apply(&AmbiguityElement::translation(1.5), &xhat, Some(&band))?;
    let t0 = frog_trace(&xhat.idft(), 1)?;
    let t3 = frog_trace(&shifted.idft(), 1)?;
    let t15 = frog_trace(&half.idft(), 1)?;
    println!(
        "3-shift   trace deviation {:.2e}",
        t0.relative_deviation(&t3)
    );
    println!(
        "1.5-shift trace deviation {:.2e}",
        t0.relative_deviation(&t15)
    );
    println!(
        "signals differ by {:.3} and {:.3}",
        xhat.distance(&shifted),
        xhat.distance(&half)
    );

    let control = complex_normal_signal(11, &mut seeded(5)).dft();
    let moved = apply_unchecked(&AmbiguityElement::translation(1.5), &control, None);
    let tc = frog_trace(&control.idft(), 1)?;
    let tm = frog_trace(&moved.idft(), 1)?;
    println!(
        "full-band control, 1.5-shift: trace deviation {:.2e}",
        tc.relative_deviation(&tm)
    );

    // reflection and shift do not commute: R∘T(ℓ) = T(−ℓ)∘R
    let r = AmbiguityElement::reflection();
    let t = AmbiguityElement::translation(2.0);
    let lhs = r.compose(&t);
    let rhs = AmbiguityElement::translation(-2.0).compose(&r);
    println!("R∘T(2) = {lhs:?}\nT(−2)∘R = {rhs:?}");

    let g = AmbiguityElement {
        psi: 0.7,
        shift: 1.25,
        reflected: true,
        alternated: false,
    };
    let image = apply(&g, &xhat, Some(&band))?;
    let (d, found) = dist_mod_group(&image, &xhat, Some(&band))?;
    println!("aligning g·x̂ back onto x̂: distance {d:.2e} via {found:?}");
    Ok(())
}
