//! Least-squares fitting of a signal to its trace by gradient descent,
//! from a slightly perturbed and from a random start.
//!
//! ```bash
//! cargo run --release --example least_squares_fit
//! ```

use frogkit::rng::{complex_normal_signal, real_normal_signal, seeded, sign};
use frogkit::{dist_mod_group, frog_trace, ls_minimize, LsOptions, Signal};

fn main() -> frogkit::Result<()> {
    let (n, step) = (24, 1);
    let x = real_normal_signal(n, &mut seeded(11));
    let trace = frog_trace(&x, step)?;
    let opts = LsOptions::default();

    let mut rng = seeded(12);
    let near: Vec<f64> = x
        .values()
        .iter()
        .map(|v| v.re + 0.01 * sign(&mut rng))
        .collect();
    let far = complex_normal_signal(n, &mut seeded(13));
    for (label, z0) in [("x + 0.01ζ", Signal::from_real(&near)?), ("random", far)] {
        let out = ls_minimize(&z0, &trace, step, &opts)?;
        let (err, g) = dist_mod_group(&out.signal.dft(), &x.dft(), None)?;
        println!(
            "{label:<10} objective {:.3e} → {:.3e} in {} steps ({:?}); error {err:.2e}, aligned by {g:?}",
            out.history[0], out.objective, out.iterations, out.stop
        );
    }
    Ok(())
}
