//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use frogkit::ambiguity::apply_unchecked;
use frogkit::rng::{
    bandlimited_spectrum, complex_normal_signal, derive_seed, seeded, uniform, FrogRng,
};
use frogkit::*;
use num_complex::Complex64;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    Outcome {
        pass: out.pass && took <= limit,
        detail: format!("{} [{:.1?} of {:?}]", out.detail, took, limit),
    }
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|l| n.is_multiple_of(*l)).collect()
}

/// 1. Time-domain trace vs frequency-domain product sums.
fn forward_model() -> Outcome {
    let mut rng = seeded(derive_seed(1, &[]));
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(4..=64);
        let ls = divisors(n);
        let l = ls[rng.gen_range(0..ls.len())];
        let x = complex_normal_signal(n, &mut rng);
        let t = frog_trace(&x, l).unwrap();
        let c = frog_freq_coeffs(&x.dft(), l).unwrap();
        for k in 0..n {
            for m in 0..t.shifts() {
                worst = worst.max((c[k][m].norm_sqr() - t.get(k, m)).abs() / t.max_entry());
            }
        }
    }
    check(
        worst <= 1e-9,
        format!("200 cases, max relative deviation {worst:.2e} (limit 1e-9)"),
    )
}

/// 2. The three N = 11 signals of the bandlimited example share a trace.
fn three_signal_example() -> Outcome {
    let i = Complex64::i();
    let mut v = vec![Complex64::new(0.0, 0.0); 11];
    v[0] = Complex64::new(1.0, 0.0);
    v[1] = i;
    v[2] = -i;
    v[9] = i;
    v[10] = -i;
    let xhat = Spectrum::new(v).unwrap();
    let band = BandlimitSpec::new(5, 9).unwrap();
    let base = frog_trace(&xhat.idft(), 1).unwrap();
    let mut worst: f64 = 0.0;
    for s in [3.0, 1.5] {
        let y = apply(&AmbiguityElement::translation(s), &xhat, Some(&band)).unwrap();
        let t = frog_trace(&y.idft(), 1).unwrap();
        for (a, b) in base.data().iter().zip(t.data()) {
            worst = worst.max((a - b).abs());
        }
    }
    let control = complex_normal_signal(11, &mut seeded(derive_seed(2, &[]))).dft();
    let moved = apply_unchecked(&AmbiguityElement::translation(1.5), &control, None);
    let tc = frog_trace(&control.idft(), 1).unwrap();
    let tm = frog_trace(&moved.idft(), 1).unwrap();
    let control_dev = tc
        .data()
        .iter()
        .zip(tm.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(
        worst <= 1e-10 && control_dev > 1e-3,
        format!("variant deviation {worst:.2e} (limit 1e-10), full-band control deviation {control_dev:.3} (needs > 1e-3)"),
    )
}

struct RecoveryStats {
    recovered: usize,
    total: usize,
    ratios: Vec<f64>,
    spurious_over_tol: Vec<f64>,
}

fn recovery_run(
    n: usize,
    b: usize,
    l: usize,
    power: bool,
    trials: u64,
    seed: u64,
) -> RecoveryStats {
    let band = BandlimitSpec::new(b, 0).unwrap();
    let mut settings = RecoverySettings::new(n / l);
    if power {
        settings = settings.with_power_spectrum();
    }
    let mut stats = RecoveryStats {
        recovered: 0,
        total: trials as usize,
        ratios: Vec::new(),
        spurious_over_tol: Vec::new(),
    };
    for t in 0..trials {
        let xhat =
            bandlimited_spectrum(n, &band, &mut seeded(derive_seed(seed, &[n as u64, t]))).unwrap();
        let trace = frog_trace(&xhat.idft(), l).unwrap();
        let ps: Vec<f64> = xhat.values().iter().map(|v| v.norm_sqr()).collect();
        let Ok(rep) = recover(&trace, &band, &settings, power.then_some(ps.as_slice())) else {
            continue;
        };
        let (d, _) = dist_mod_group(&rep.spectrum, &xhat, Some(&band)).unwrap();
        if rep.success && d <= 1e-6 {
            stats.recovered += 1;
            if let (Some(q), Some([a, c])) = (rep.branch_ratio(), rep.branch_residuals) {
                stats.ratios.push(q);
                stats
                    .spurious_over_tol
                    .push(a.max(c) / settings.consistency_tol);
            }
        }
    }
    stats
}

/// 3 and 5. Recursive recovery at r = 4 and the x̂₃ branch separation.
fn recovery_r4() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    let mut ratios = Vec::new();
    let mut spurious = Vec::new();
    for n in [16, 20, 24] {
        let s = recovery_run(n, n / 4, n / 4, false, 100, 3);
        pass &= s.recovered >= 99;
        lines.push(format!("N={n}: {}/{}", s.recovered, s.total));
        ratios.extend(s.ratios);
        spurious.extend(s.spurious_over_tol);
    }
    let took = start.elapsed();
    let limit = Duration::from_secs(60);
    let c3 = check(
        pass && took <= limit,
        format!(
            "{} (need >= 99/100 each) [{took:.1?} of {limit:?}]",
            lines.join(", ")
        ),
    );
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let min_spurious = spurious.iter().copied().fold(f64::INFINITY, f64::min);
    let c5 = check(
        !ratios.is_empty() && min_ratio >= 1e2 && min_spurious > 1e3,
        format!(
            "{} successful runs, min branch residual ratio {min_ratio:.3e} (need >= 1e2), min spurious residual {min_spurious:.3e} x tol (need > 1e3)",
            ratios.len()
        ),
    );
    (c3, c5)
}

/// 4. r = 3 with the power spectrum; the validator rejects r = 3 without.
fn recovery_r3() -> Outcome {
    let s = recovery_run(15, 5, 5, true, 100, 4);
    let rejected = matches!(
        RecoverySettings::new(3).validate(),
        Err(FrogError::InvalidSettings(_))
    );
    let band = BandlimitSpec::new(5, 0).unwrap();
    let xhat = bandlimited_spectrum(15, &band, &mut seeded(9)).unwrap();
    let trace = frog_trace(&xhat.idft(), 5).unwrap();
    let run_rejected = recover(&trace, &band, &RecoverySettings::new(3), None).is_err();
    check(
        s.recovered >= 99 && rejected && run_rejected,
        format!(
            "{}/{} recovered (need >= 99), run without power spectrum rejected: {}",
            s.recovered,
            s.total,
            rejected && run_rejected
        ),
    )
}

/// `max_i ||z + v_i| − n_i|`, 1-Lipschitz in `z`.
fn worst_residual(v: &[Complex64], radii: &[f64], z: Complex64) -> f64 {
    v.iter()
        .zip(radii)
        .map(|(vi, ni)| ((z + vi).norm() - ni).abs())
        .fold(0.0, f64::max)
}

/// Whether some `z ∈ [−R, R]²` has residual `≤ tol`, by adaptive grid
/// refinement with the Lipschitz bound pruning cells.
fn grid_oracle(v: &[Complex64], radii: &[f64], r: f64, tol: f64) -> bool {
    let mut cells = Vec::new();
    let coarse = 64;
    let h0 = r / coarse as f64;
    for i in 0..2 * coarse {
        for j in 0..2 * coarse {
            cells.push((
                Complex64::new(-r + (2 * i + 1) as f64 * h0, -r + (2 * j + 1) as f64 * h0),
                h0,
            ));
        }
    }
    while let Some((c, h)) = cells.pop() {
        let f = worst_residual(v, radii, c);
        if f <= tol {
            return true;
        }
        if f - h * std::f64::consts::SQRT_2 > tol || h < 1e-9 * r {
            continue;
        }
        let q = h / 2.0;
        for (dx, dy) in [(-q, -q), (-q, q), (q, -q), (q, q)] {
            cells.push((c + Complex64::new(dx, dy), q));
        }
    }
    false
}

/// 6. Three-circle solver against planted solutions and a grid oracle.
fn circle_oracle() -> Outcome {
    let mut rng: FrogRng = seeded(derive_seed(6, &[]));
    let draw =
        |rng: &mut FrogRng| Complex64::new(2.0 * uniform(rng) - 1.0, 2.0 * uniform(rng) - 1.0);
    let mut planted_worst: f64 = 0.0;
    let mut planted_bad = 0;
    for _ in 0..1000 {
        let z = draw(&mut rng);
        let v = vec![draw(&mut rng), draw(&mut rng), draw(&mut rng)];
        let radii: Vec<f64> = v.iter().map(|vi| (z + vi).norm()).collect();
        let sys = CircleSystem::new(v, radii).unwrap();
        match solve_generic(&sys, sys.default_tol()) {
            Ok(CircleSolution {
                kind: SolutionKind::Unique(got),
                ..
            }) => {
                planted_worst = planted_worst.max((got - z).norm());
            }
            _ => planted_bad += 1,
        }
    }
    // |z + v_i| = n_i forces |z| ≤ |v_i| + n_i ≤ √2 + 2
    let r = 4.0;
    let tol = 1e-3 * r;
    let mut disagreements = 0;
    let mut unique = 0;
    for _ in 0..1000 {
        let v = vec![draw(&mut rng), draw(&mut rng), draw(&mut rng)];
        let radii: Vec<f64> = (0..3).map(|_| 2.0 * uniform(&mut rng)).collect();
        let sys = CircleSystem::new(v.clone(), radii.clone()).unwrap();
        let solver = matches!(
            solve_generic(&sys, tol).map(|s| s.kind),
            Ok(SolutionKind::Unique(_))
        );
        unique += solver as usize;
        if solver != grid_oracle(&v, &radii, r, tol) {
            disagreements += 1;
        }
    }
    check(
        planted_bad == 0 && planted_worst <= 1e-9 && disagreements == 0,
        format!(
            "planted: {} unsolved, max error {planted_worst:.2e} (limit 1e-9); random radii: {unique} unique / {} none, {disagreements} disagreements with the grid oracle",
            planted_bad,
            1000 - unique
        ),
    )
}

/// 7. Gradient against finite differences.
fn gradient_check() -> Outcome {
    let mut rng = seeded(derive_seed(7, &[]));
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(4..=16);
        let ls = divisors(n);
        let l = ls[rng.gen_range(0..ls.len())];
        let x = complex_normal_signal(n, &mut rng);
        let z = complex_normal_signal(n, &mut rng);
        let trace = frog_trace(&x, l).unwrap();
        let g = ls_gradient(&z, &trace, l).unwrap();
        let gmax = g
            .values()
            .iter()
            .map(|v| v.re.abs().max(v.im.abs()))
            .fold(0.0, f64::max);
        for p in 0..n {
            // the objective is quartic, so the five-point stencil is exact
            // up to rounding and h can be large
            let h = 1e-3 * (1.0 + z[p].norm());
            for (dir, analytic) in [
                (Complex64::new(h, 0.0), g[p].re),
                (Complex64::new(0.0, h), g[p].im),
            ] {
                let at = |t: f64| {
                    let mut w = z.clone();
                    w.values_mut()[p] += dir * t;
                    ls_objective(&w, &trace, l).unwrap()
                };
                let fd = (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h);
                worst = worst.max((fd - analytic).abs() / (analytic.abs() + 1e-6 * gmax));
            }
        }
    }
    check(
        worst <= 1e-5,
        format!("50 instances, max relative error {worst:.2e} (limit 1e-5)"),
    )
}

/// 8. Basin-of-attraction trends.
fn basin_trends() -> Outcome {
    let steps = [1, 2, 4, 8];
    let sigmas = [0.0, 0.25, 0.5, 1.0, 2.0];
    let grid = basin_experiment(24, &steps, &sigmas, 100, 8, &LsOptions::default()).unwrap();
    let zero_row = (0..steps.len()).all(|li| grid.rate(0, li) == 1.0);
    let mut worst_rise: f64 = 0.0;
    for li in 0..steps.len() {
        for si in 1..sigmas.len() {
            worst_rise = worst_rise.max(grid.rate(si, li) - grid.rate(si - 1, li));
        }
    }
    let agg1 = grid.aggregate_rate(0);
    let agg8 = grid.aggregate_rate(3);
    let rows: Vec<String> = (0..sigmas.len())
        .map(|si| {
            format!(
                "{}:{:?}",
                sigmas[si],
                (0..steps.len())
                    .map(|li| grid.rate(si, li))
                    .collect::<Vec<_>>()
            )
        })
        .collect();
    check(
        zero_row && worst_rise <= 0.1 && agg1 >= agg8,
        format!(
            "sigma=0 row all 1.0: {zero_row}; largest rise in sigma {worst_rise:.2} (limit 0.1); aggregate L=1 {agg1:.3} vs L=8 {agg8:.3}; rates {}",
            rows.join(" ")
        ),
    )
}

/// 9. Symmetry generators, continuous shift and the semi-direct relation.
fn ambiguity_suite() -> Outcome {
    let mut rng = seeded(derive_seed(9, &[]));
    let mut total = 0;
    let mut passed = 0;
    for _ in 0..60 {
        let n = rng.gen_range(4..=32);
        let ls = divisors(n);
        let l = ls[rng.gen_range(0..ls.len())];
        let xhat = complex_normal_signal(n, &mut rng).dft();
        let gens = [
            AmbiguityElement::rotation(TAU * uniform(&mut rng)),
            AmbiguityElement::translation(rng.gen_range(1..n) as f64),
            AmbiguityElement::reflection(),
        ];
        for g in gens {
            total += 1;
            passed += trace_invariant(&xhat, &g, l).unwrap() as usize;
        }
        let shift = AmbiguityElement::translation(0.37);
        // full band: must break
        total += 1;
        let moved = apply_unchecked(&shift, &xhat, None);
        let dev = frog_trace(&moved.idft(), l)
            .unwrap()
            .relative_deviation(&frog_trace(&xhat.idft(), l).unwrap());
        passed += (dev > 1e-9) as usize;
        // half band: must hold
        let band = BandlimitSpec::new(n / 2, rng.gen_range(0..n)).unwrap();
        let bl = bandlimited_spectrum(n, &band, &mut rng).unwrap();
        total += 1;
        let y = apply(&shift, &bl, Some(&band)).unwrap();
        let dev = frog_trace(&y.idft(), l)
            .unwrap()
            .relative_deviation(&frog_trace(&bl.idft(), l).unwrap());
        passed += (dev <= 1e-9) as usize;
        // reflect ∘ shift(ℓ) = shift(−ℓ) ∘ reflect
        let ell = rng.gen_range(0..n) as f64;
        let r = AmbiguityElement::reflection();
        let lhs = apply(
            &r,
            &apply(&AmbiguityElement::translation(ell), &xhat, None).unwrap(),
            None,
        )
        .unwrap();
        let rhs = apply(
            &AmbiguityElement::translation(-ell),
            &apply(&r, &xhat, None).unwrap(),
            None,
        )
        .unwrap();
        total += 1;
        passed += (lhs.distance(&rhs) <= 1e-12 * xhat.norm()) as usize;
    }
    check(
        passed == total,
        format!("{passed}/{total} checks passed (need 100%)"),
    )
}

fn main() {
    let (c3, c5) = recovery_r4();
    let results = [
        (
            "1 forward-model oracle equivalence",
            timed(Duration::from_secs(10), forward_model),
        ),
        ("2 bandlimited three-signal example", three_signal_example()),
        ("3 recovery at r = 4", c3),
        ("4 recovery at r = 3 with power spectrum", recovery_r3()),
        ("5 x3 branch rejection", c5),
        ("6 circle solver oracle", circle_oracle()),
        ("7 gradient check", gradient_check()),
        (
            "8 basin-of-attraction trends",
            timed(Duration::from_secs(600), basin_trends),
        ),
        ("9 ambiguity suite", ambiguity_suite()),
    ];
    let mut failed = 0;
    for (name, out) in &results {
        println!(
            "criterion {name}: {} | {}",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail
        );
        failed += (!out.pass) as usize;
    }
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
