//! Recursive recovery of bandlimited signals from their FROG traces.
//!
//! Sweeps seeded random signals for a few (N, B, L) regimes and reports
//! how many are recovered up to the trivial ambiguities.
//!
//! ```bash
//! cargo run --release --example recursive_recovery
//! ```

use frogkit::rng::{bandlimited_spectrum, derive_seed, seeded};
use frogkit::{dist_mod_group, frog_trace, recover, BandlimitSpec, RecoverySettings};

fn sweep(
    n: usize,
    b: usize,
    start: usize,
    step: usize,
    power: bool,
    trials: u64,
) -> frogkit::Result<()> {
    let band = BandlimitSpec::new(b, start)?;
    let r = n / step;
    let mut ok = 0;
    let mut min_ratio = f64::INFINITY;
    for t in 0..trials {
        let xhat = bandlimited_spectrum(
            n,
            &band,
            &mut seeded(derive_seed(
                n as u64,
                &[b as u64, start as u64, step as u64, t],
            )),
        )?;
        let x = xhat.idft();
        let trace = frog_trace(&x, step)?;
        let mut settings = RecoverySettings::new(r);
        let ps: Vec<f64> = xhat.values().iter().map(|v| v.norm_sqr()).collect();
        if power {
            settings = settings.with_power_spectrum();
        }
        match recover(&trace, &band, &settings, power.then_some(ps.as_slice())) {
            Ok(rep) => {
                let (d, _) = dist_mod_group(&rep.spectrum, &xhat, Some(&band))?;
                if d <= 1e-6 * xhat.norm() {
                    ok += 1;
                } else {
                    println!("  seed {t}: wrong orbit, distance {d:.3e}");
                }
                if let Some(q) = rep.branch_ratio() {
                    min_ratio = min_ratio.min(q);
                }
            }
            Err(e) => println!("  seed {t}: {e}"),
        }
    }
    println!(
        "N={n:>3} B={b:>2} start={start:>2} L={step:>2} r={r:>2} power={power:<5} recovered {ok}/{trials}  min x3 branch ratio {min_ratio:.3e}"
    );
    Ok(())
}

fn main() -> frogkit::Result<()> {
    // r = 4, the smallest ratio that needs no side information
    for n in [16, 20, 24] {
        sweep(n, n / 4, 0, n / 4, false, 100)?;
    }
    // r = 3 with the power spectrum as a third circle
    sweep(15, 5, 0, 5, true, 100)?;
    sweep(16, 4, 0, 2, false, 50)?;
    sweep(16, 4, 0, 1, false, 50)?;
    sweep(12, 6, 0, 3, false, 50)?;
    sweep(11, 5, 9, 1, false, 50)?;
    sweep(32, 8, 27, 8, false, 50)?;
    sweep(32, 12, 3, 4, false, 50)?;
    Ok(())
}
