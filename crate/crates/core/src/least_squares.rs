//! Least-squares fitting of a signal to a FROG trace.
//!
//! The loss is the degree-eight polynomial
//!
//! ```text
//! f(z) = ½ Σ_{k,m} ( d_{k,m} − |Σ_n z_n z_{n+mL} e^{−2πi nk/N}|² )²
//! ```
//!
//! minimized by gradient descent with a backtracking (Armijo) line search.
//! The gradient is returned as `∂f/∂Re z + i ∂f/∂Im z`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::ambiguity::dist_mod_group;
use crate::error::{FrogError, Result};
use crate::rng::{derive_seed, real_normal_signal, seeded, sign};
use crate::signal::{frog_trace, shift_count, FrogTrace, Signal};

/// Recovery error below which a basin trial counts as a success.
pub const SUCCESS_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsOptions {
    pub max_iters: usize,
    /// Stop once `‖∇f‖₂ ≤ grad_tol · ‖d‖₂^{3/2}`, where `d` is the trace.
    pub grad_tol: f64,
    pub initial_step: f64,
    pub shrink: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Start each line search from the Barzilai–Borwein step when available.
    pub bb_steps: bool,
    /// Stop when the objective drops by less than `stall_tol` (relative)
    /// over `stall_window` accepted steps; `0` disables the check.
    pub stall_window: usize,
    pub stall_tol: f64,
}

impl Default for LsOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: 1e-13,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            bb_steps: true,
            stall_window: 500,
            stall_tol: 1e-9,
        }
    }
}

impl LsOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(FrogError::InvalidParameters("max_iters must be ≥ 1".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(FrogError::InvalidParameters(
                "shrink factor must lie in (0, 1)".into(),
            ));
        }
        if !(self.stall_tol >= 0.0) {
            return Err(FrogError::InvalidParameters(
                "stall_tol must be non-negative".into(),
            ));
        }
        if !(self.initial_step > 0.0) || !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(FrogError::InvalidParameters(
                "initial step must be positive and the Armijo constant in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    StepUnderflow,
    Stalled,
}

#[derive(Clone, Debug)]
pub struct LsOutcome {
    pub signal: Signal,
    pub objective: f64,
    /// Accepted descent steps.
    pub iterations: usize,
    pub stop: StopReason,
    /// Objective after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

/// Loss evaluation with cached FFT plans.
struct Problem<'a> {
    trace: &'a FrogTrace,
    n: usize,
    step: usize,
    r: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl<'a> Problem<'a> {
    fn new(trace: &'a FrogTrace, n: usize, step: usize) -> Result<Self> {
        let r = shift_count(n, step)?;
        if trace.n() != n || trace.step() != step {
            return Err(FrogError::InvalidParameters(format!(
                "signal of length {n} with L = {step} does not match a trace with N = {}, L = {}",
                trace.n(),
                trace.step()
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            trace,
            n,
            step,
            r,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    /// `Y_{·,m}` for one shift index.
    fn model_column(&self, z: &[Complex64], m: usize, buf: &mut [Complex64]) {
        let lag = m * self.step;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = z[i] * z[(i + lag) % self.n];
        }
        self.forward.process(buf);
    }

    fn value(&self, z: &[Complex64]) -> f64 {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        let mut total = 0.0;
        for m in 0..self.r {
            self.model_column(z, m, &mut buf);
            for (k, y) in buf.iter().enumerate() {
                let res = y.norm_sqr() - self.trace.get(k, m);
                total += res * res;
            }
        }
        0.5 * total
    }

    fn value_and_gradient(&self, z: &[Complex64]) -> (f64, Vec<Complex64>) {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut grad = vec![Complex64::new(0.0, 0.0); n];
        let mut total = 0.0;
        for m in 0..self.r {
            self.model_column(z, m, &mut buf);
            for (k, y) in buf.iter_mut().enumerate() {
                let res = y.norm_sqr() - self.trace.get(k, m);
                total += res * res;
                *y *= res;
            }
            // w_m(n) = Σ_k res·Y e^{+2πi nk/N}
            self.inverse.process(&mut buf);
            let lag = m * self.step;
            for p in 0..n {
                let back = (p + n - lag) % n;
                grad[p] += z[(p + lag) % n].conj() * buf[p] + z[back].conj() * buf[back];
            }
        }
        // ∂f/∂Re + i ∂f/∂Im = 2 ∂f/∂conj(z)
        grad.iter_mut().for_each(|g| *g *= 2.0);
        (0.5 * total, grad)
    }
}

fn check_len(z: &Signal, trace: &FrogTrace) -> Result<()> {
    if z.len() != trace.n() {
        return Err(FrogError::InvalidParameters(format!(
            "signal length {} does not match trace N = {}",
            z.len(),
            trace.n()
        )));
    }
    Ok(())
}

pub fn ls_objective(z: &Signal, trace: &FrogTrace, step: usize) -> Result<f64> {
    check_len(z, trace)?;
    Ok(Problem::new(trace, z.len(), step)?.value(z.values()))
}

pub fn ls_gradient(z: &Signal, trace: &FrogTrace, step: usize) -> Result<Signal> {
    check_len(z, trace)?;
    let (_, g) = Problem::new(trace, z.len(), step)?.value_and_gradient(z.values());
    Signal::new(g)
}

fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// Gradient descent with backtracking from `z0`. The objective sequence
/// is non-increasing; non-convergence is reported through [`StopReason`].
pub fn ls_minimize(
    z0: &Signal,
    trace: &FrogTrace,
    step: usize,
    opts: &LsOptions,
) -> Result<LsOutcome> {
    opts.validate()?;
    check_len(z0, trace)?;
    let problem = Problem::new(trace, z0.len(), step)?;
    let data_norm = trace.data().iter().map(|d| d * d).sum::<f64>().sqrt();
    let grad_floor = opts.grad_tol * data_norm.powf(1.5).max(f64::MIN_POSITIVE);

    let mut z = z0.values().to_vec();
    let (mut f, mut g) = problem.value_and_gradient(&z);
    let mut history = vec![f];
    let mut prev: Option<(Vec<Complex64>, Vec<Complex64>)> = None;
    let mut t_prev = opts.initial_step;
    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;

    while iterations < opts.max_iters {
        let g_sq = norm_sq(&g);
        if g_sq.sqrt() <= grad_floor {
            stop = StopReason::GradientTolerance;
            break;
        }
        let mut t = match (&prev, opts.bb_steps) {
            (Some((dz, dg)), true) => {
                let sy: f64 = dz.iter().zip(dg).map(|(a, b)| (a.conj() * b).re).sum();
                let ss = norm_sq(dz);
                if sy > 0.0 {
                    ss / sy
                } else {
                    t_prev * 2.0
                }
            }
            _ => t_prev,
        };
        let mut accepted = None;
        while t * g_sq.sqrt() > 1e-300 {
            let trial: Vec<Complex64> = z.iter().zip(&g).map(|(zi, gi)| zi - gi * t).collect();
            let ft = problem.value(&trial);
            if ft <= f - opts.armijo * t * g_sq {
                accepted = Some((trial, ft));
                break;
            }
            t *= opts.shrink;
            let moved = z.iter().zip(&g).any(|(zi, gi)| *zi - gi * t != *zi);
            if !moved {
                break;
            }
        }
        let Some((next, _)) = accepted else {
            stop = StopReason::StepUnderflow;
            break;
        };
        let (fn_, gn) = problem.value_and_gradient(&next);
        let dz: Vec<Complex64> = next.iter().zip(&z).map(|(a, b)| a - b).collect();
        let dg: Vec<Complex64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        prev = Some((dz, dg));
        t_prev = t;
        z = next;
        f = fn_;
        g = gn;
        history.push(f);
        iterations += 1;
        if opts.stall_window > 0 && iterations >= opts.stall_window {
            let before = history[iterations - opts.stall_window];
            if before - f <= opts.stall_tol * before {
                stop = StopReason::Stalled;
                break;
            }
        }
    }
    Ok(LsOutcome {
        signal: Signal::new(z)?,
        objective: f,
        iterations,
        stop,
        history,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinGrid {
    pub sigma_values: Vec<f64>,
    pub step_values: Vec<usize>,
    pub trials: usize,
    /// `successes[σ][L]`.
    pub successes: Vec<Vec<usize>>,
    pub seed: u64,
}

impl BasinGrid {
    pub fn rate(&self, sigma_index: usize, step_index: usize) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.successes[sigma_index][step_index] as f64 / self.trials as f64
    }

    pub fn success_rate(&self) -> Vec<Vec<f64>> {
        (0..self.sigma_values.len())
            .map(|i| {
                (0..self.step_values.len())
                    .map(|j| self.rate(i, j))
                    .collect()
            })
            .collect()
    }

    /// Mean success rate over all σ for one step value.
    pub fn aggregate_rate(&self, step_index: usize) -> f64 {
        let rows = self.sigma_values.len().max(1) as f64;
        (0..self.sigma_values.len())
            .map(|i| self.rate(i, step_index))
            .sum::<f64>()
            / rows
    }
}

/// Outcome of a single basin trial.
pub fn basin_trial(
    n: usize,
    step: usize,
    sigma: f64,
    signal_seed: u64,
    perturb_seed: u64,
    opts: &LsOptions,
) -> Result<bool> {
    let x = real_normal_signal(n, &mut seeded(signal_seed));
    let mut rng = seeded(perturb_seed);
    let z0 = Signal::from_real(
        &x.values()
            .iter()
            .map(|v| v.re + sigma * sign(&mut rng))
            .collect::<Vec<_>>(),
    )?;
    let trace = frog_trace(&x, step)?;
    let out = ls_minimize(&z0, &trace, step, opts)?;
    let (err, _) = dist_mod_group(&out.signal.dft(), &x.dft(), None)?;
    Ok(err <= SUCCESS_THRESHOLD)
}

/// Success rate of [`ls_minimize`] from `x + σζ`, `ζ ∈ {±1}^N`, for a real
/// Gaussian `x`, over a grid of `σ` and `L`.
///
/// Trial `t` uses the same `x` in every cell (seeded from `(seed, t)`) and a
/// perturbation seeded from `(seed, σ index, L index, t)`, so the grid does
/// not depend on thread scheduling.
pub fn basin_experiment(
    n: usize,
    step_values: &[usize],
    sigma_values: &[f64],
    trials: usize,
    seed: u64,
    opts: &LsOptions,
) -> Result<BasinGrid> {
    for &l in step_values {
        shift_count(n, l)?;
    }
    let jobs: Vec<(usize, usize, usize)> = (0..sigma_values.len())
        .flat_map(|si| {
            (0..step_values.len()).flat_map(move |li| (0..trials).map(move |t| (si, li, t)))
        })
        .collect();
    let outcomes: Vec<Result<bool>> = with_thread_cap(|| {
        jobs.par_iter()
            .map(|&(si, li, t)| {
                basin_trial(
                    n,
                    step_values[li],
                    sigma_values[si],
                    derive_seed(seed, &[t as u64]),
                    derive_seed(seed, &[si as u64, li as u64, t as u64, 1]),
                    opts,
                )
            })
            .collect()
    });
    let mut successes = vec![vec![0; step_values.len()]; sigma_values.len()];
    for (&(si, li, _), ok) in jobs.iter().zip(outcomes) {
        if ok? {
            successes[si][li] += 1;
        }
    }
    Ok(BasinGrid {
        sigma_values: sigma_values.to_vec(),
        step_values: step_values.to_vec(),
        trials,
        successes,
        seed,
    })
}

/// Runs `f` on a pool capped by the `FROGKIT_THREADS` environment variable,
/// or on the global pool when it is unset.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var("FROGKIT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    match cap.filter(|&c| c > 0) {
        Some(c) => match rayon::ThreadPoolBuilder::new().num_threads(c).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::complex_normal_signal;

    /// Central finite differences on real and imaginary parts.
    fn numeric_gradient(z: &Signal, trace: &FrogTrace, step: usize) -> Vec<Complex64> {
        let f = |w: &Signal| ls_objective(w, trace, step).unwrap();
        (0..z.len())
            .map(|p| {
                let h = 1e-6 * (1.0 + z[p].norm());
                let mut parts = [0.0; 2];
                for (i, dir) in [Complex64::new(h, 0.0), Complex64::new(0.0, h)]
                    .iter()
                    .enumerate()
                {
                    let mut plus = z.clone();
                    plus.values_mut()[p] += dir;
                    let mut minus = z.clone();
                    minus.values_mut()[p] -= dir;
                    parts[i] = (f(&plus) - f(&minus)) / (2.0 * h);
                }
                Complex64::new(parts[0], parts[1])
            })
            .collect()
    }

    #[test]
    fn objective_vanishes_at_truth_and_zero_gives_half_sum_squares() {
        let x = complex_normal_signal(8, &mut seeded(1));
        let trace = frog_trace(&x, 2).unwrap();
        let scale: f64 = trace.data().iter().map(|d| d * d).sum();
        assert!(ls_objective(&x, &trace, 2).unwrap() <= 1e-18 * scale);
        let zero = Signal::zeros(8);
        let f0 = ls_objective(&zero, &trace, 2).unwrap();
        assert!((f0 - 0.5 * scale).abs() <= 1e-12 * scale);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seeded(2);
        let x = complex_normal_signal(8, &mut rng);
        let z = complex_normal_signal(8, &mut rng);
        let trace = frog_trace(&x, 2).unwrap();
        let g = ls_gradient(&z, &trace, 2).unwrap();
        let num = numeric_gradient(&z, &trace, 2);
        let scale = num.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in g.values().iter().zip(&num) {
            assert!((a - b).norm() <= 1e-5 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn real_restriction_matches_real_part() {
        let mut rng = seeded(3);
        let x = real_normal_signal(6, &mut rng);
        let z = real_normal_signal(6, &mut rng);
        let trace = frog_trace(&x, 1).unwrap();
        let g = ls_gradient(&z, &trace, 1).unwrap();
        let f = |w: &Signal| ls_objective(w, &trace, 1).unwrap();
        for p in 0..6 {
            let h = 1e-6 * (1.0 + z[p].norm());
            let mut plus = z.clone();
            plus.values_mut()[p] += h;
            let mut minus = z.clone();
            minus.values_mut()[p] -= h;
            let d = (f(&plus) - f(&minus)) / (2.0 * h);
            assert!((d - g[p].re).abs() <= 1e-5 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn minimize_from_truth_takes_no_steps() {
        let x = real_normal_signal(12, &mut seeded(4));
        let trace = frog_trace(&x, 3).unwrap();
        let out = ls_minimize(&x, &trace, 3, &LsOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.signal, x);
    }

    #[test]
    fn options_validation() {
        let bad = LsOptions {
            shrink: 1.0,
            ..LsOptions::default()
        };
        assert!(bad.validate().is_err());
        let bad = LsOptions {
            max_iters: 0,
            ..LsOptions::default()
        };
        assert!(bad.validate().is_err());
    }
}
