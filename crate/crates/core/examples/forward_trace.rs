//! Forward model: the FROG trace of a signal, computed directly in time and
//! through the frequency-domain product sums.
//!
//! ```bash
//! cargo run --example forward_trace
//! ```

use frogkit::rng::{complex_normal_signal, seeded};
use frogkit::{frog_freq_coeffs, frog_trace};

fn main() -> frogkit::Result<()> {
    let (n, step) = (12, 3);
    let x = complex_normal_signal(n, &mut seeded(3));
    let trace = frog_trace(&x, step)?;
    let coeffs = frog_freq_coeffs(&x.dft(), step)?;

    println!("N = {n}, L = {step}, r = {}", trace.shifts());
    println!(
        "{:>3} {}",
        "k",
        (0..trace.shifts())
            .map(|m| format!("{:>12}", format!("m={m}")))
            .collect::<String>()
    );
    for k in 0..n {
        print!("{k:>3} ");
        for m in 0..trace.shifts() {
            print!("{:>12.5}", trace.get(k, m));
        }
        println!();
    }

    let mut worst: f64 = 0.0;
    for k in 0..n {
        for m in 0..trace.shifts() {
            worst = worst.max((coeffs[k][m].norm_sqr() - trace.get(k, m)).abs());
        }
    }
    println!(
        "max |time − frequency| = {:.2e} (relative {:.2e})",
        worst,
        worst / trace.max_entry()
    );

    // columns m and r − m coincide
    let r = trace.shifts();
    let gap = (0..n)
        .map(|k| (trace.get(k, 1) - trace.get(k, r - 1)).abs())
        .fold(0.0, f64::max);
    println!("max |d(k,1) − d(k,{})| = {gap:.2e}", r - 1);
    Ok(())
}
