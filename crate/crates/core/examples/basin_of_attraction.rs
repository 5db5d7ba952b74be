//! Basin-of-attraction sweep for the least-squares solver.
//!
//! Real Gaussian signals are perturbed by `σ ζ` with random signs `ζ` and
//! fed to gradient descent; success means the result lies within 1e-6 of
//! the truth modulo the trivial ambiguities.
//!
//! ```bash
//! cargo run --release --example basin_of_attraction -- 24 100 basin.csv
//! ```

use std::fs::File;
use std::time::Instant;

use frogkit::io::write_basin_csv;
use frogkit::{basin_experiment, LsOptions};

fn main() -> frogkit::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(24);
    let trials: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);
    let out = args.next();

    let steps = [1, 2, 4, 8];
    let sigmas = [0.0, 0.25, 0.5, 1.0, 2.0];
    let started = Instant::now();
    let grid = basin_experiment(n, &steps, &sigmas, trials, 7, &LsOptions::default())?;

    print!("{:>6}", "sigma");
    for l in steps {
        print!("  L={l:<4}");
    }
    println!();
    for (si, sigma) in sigmas.iter().enumerate() {
        print!("{sigma:>6.2}");
        for li in 0..steps.len() {
            print!("  {:<6.2}", grid.rate(si, li));
        }
        println!();
    }
    print!("{:>6}", "mean");
    for li in 0..steps.len() {
        print!("  {:<6.2}", grid.aggregate_rate(li));
    }
    println!("\n{} trials per cell in {:.1?}", trials, started.elapsed());

    if let Some(path) = out {
        write_basin_csv(&grid, File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
