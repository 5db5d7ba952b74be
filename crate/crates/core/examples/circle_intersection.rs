//! Phaseless linear systems `|z + v_i| = n_i`: three circles with generic
//! centres meet in at most one point, real centres give conjugate pairs.
//!
//! ```bash
//! cargo run --example circle_intersection
//! ```

use frogkit::{solve_generic, solve_real_centers, CircleSystem};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn main() -> frogkit::Result<()> {
    let offsets = vec![c(0.0, 0.0), c(-1.0, 0.0), c(0.0, -1.0)];
    let z = c(2.0, 1.0);
    let radii: Vec<f64> = offsets.iter().map(|v| (z + v).norm()).collect();
    let sys = CircleSystem::new(offsets.clone(), radii)?;
    let sol = solve_generic(&sys, sys.default_tol())?;
    println!(
        "planted 2+i: {:?} (residual {:.1e})",
        sol.kind, sol.residual
    );

    let sys = CircleSystem::new(offsets, vec![1.0, 1.0, 10.0])?;
    let sol = solve_generic(&sys, sys.default_tol())?;
    println!(
        "random radii: {:?} (residual {:.2})",
        sol.kind, sol.residual
    );

    let real = CircleSystem::new(vec![c(0.0, 0.0), c(2.0, 0.0)], vec![5f64.sqrt(), 1.0])?;
    let sol = solve_real_centers(&real, real.default_tol())?;
    println!("real centres: {:?}", sol.kind);
    Ok(())
}
