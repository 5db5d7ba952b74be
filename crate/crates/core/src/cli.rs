//! Command-line front end.
//!
//! Exit codes: `0` success, `1` recovery or verification failure, `2` usage
//! error (bad flags, unreadable inputs, parameters outside the supported
//! regime).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ambiguity::{dist_mod_group, trace_invariant, AmbiguityElement};
use crate::error::{FrogError, Result};
use crate::io::{
    power_spectrum_from_json, power_spectrum_to_json, read_to_string, read_trace_csv,
    report_to_json, signal_from_json, signal_to_json, write_basin_csv, write_string,
    write_trace_csv, ComplexVectorJson,
};
use crate::least_squares::{basin_experiment, ls_minimize, LsOptions, StopReason};
use crate::recovery::{recover, RecoverySettings};
use crate::rng::{bandlimited_spectrum, complex_normal_signal, seeded};
use crate::signal::{frog_trace, BandlimitSpec, FrogTrace, Signal};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "frogkit",
    version,
    about = "Discrete SHG-FROG synthesis, analysis and recovery"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Recursive,
    Ls,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random bandlimited signal (complex normal spectrum on the band).
    Synthesize {
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Bandwidth B (≤ N/2).
        #[arg(long, default_value_t = 4)]
        b: usize,
        /// First index of the band.
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the power spectrum |x̂_k|² as JSON.
        #[arg(long)]
        power_spectrum_out: Option<PathBuf>,
    },
    /// Compute the FROG trace of a signal file as CSV.
    Trace {
        #[arg(long)]
        signal: PathBuf,
        #[arg(long, default_value_t = 1)]
        l: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        power_spectrum_out: Option<PathBuf>,
    },
    /// Recover a signal from a trace CSV.
    Recover {
        #[arg(long)]
        trace: PathBuf,
        /// Bandwidth B of the sought signal.
        #[arg(long)]
        b: usize,
        #[arg(long, default_value_t = 0)]
        start: usize,
        /// Step L; must match the trace when given.
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, value_enum, default_value_t = Mode::Recursive)]
        mode: Mode,
        /// Power spectrum JSON (required when N/L = 3).
        #[arg(long)]
        power_spectrum: Option<PathBuf>,
        /// Initial signal for --mode ls; a seeded random start otherwise.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Consistency tolerance (recursive) or relative objective tolerance (ls).
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 1e-10)]
        ratio_eps: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iters: usize,
        /// Gradient tolerance of the least-squares solver (scaled by ‖d‖^{3/2}).
        #[arg(long, default_value_t = 1e-13)]
        grad_tol: f64,
        /// Stall window of the least-squares solver; 0 disables.
        #[arg(long, default_value_t = 500)]
        stall_window: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Basin-of-attraction experiment for the least-squares solver.
    Experiment {
        #[arg(long, default_value_t = 24)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        l_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1,2")]
        sigma_list: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 20_000)]
        max_iters: usize,
        /// Gradient tolerance of the least-squares solver (scaled by ‖d‖^{3/2}).
        #[arg(long, default_value_t = 1e-13)]
        grad_tol: f64,
        /// Stall window of the least-squares solver; 0 disables.
        #[arg(long, default_value_t = 500)]
        stall_window: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check trace invariance under each symmetry generator.
    Verify {
        #[arg(long)]
        signal: PathBuf,
        #[arg(long, default_value_t = 1)]
        l: usize,
        /// Compare the trace against this second signal as well.
        #[arg(long)]
        compare: Option<PathBuf>,
        /// Fractional shift probed for the continuous translation.
        #[arg(long, default_value_t = 0.37)]
        shift: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn exit_code_for(err: &FrogError) -> i32 {
    match err {
        FrogError::InvalidParameters(_)
        | FrogError::InvalidUse(_)
        | FrogError::InvalidSettings(_)
        | FrogError::Io(_)
        | FrogError::Json(_)
        | FrogError::Csv(_)
        | FrogError::Format(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(FrogError::InvalidParameters(format!(
            "{} is not a readable file",
            path.display()
        )));
    }
    Ok(())
}

fn load_signal(path: &Path) -> Result<Signal> {
    require_file(path)?;
    signal_from_json(&read_to_string(path)?)
}

fn load_trace(path: &Path) -> Result<FrogTrace> {
    require_file(path)?;
    read_trace_csv(BufReader::new(File::open(path)?))
}

fn power_of(signal: &Signal) -> Vec<f64> {
    signal.dft().values().iter().map(|v| v.norm_sqr()).collect()
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Synthesize {
            n,
            b,
            start,
            seed,
            out,
            power_spectrum_out,
        } => cmd_synthesize(n, b, start, seed, &out, power_spectrum_out.as_deref()),
        Command::Trace {
            signal,
            l,
            out,
            power_spectrum_out,
        } => cmd_trace(&signal, l, &out, power_spectrum_out.as_deref()),
        Command::Recover {
            trace,
            b,
            start,
            l,
            mode,
            power_spectrum,
            init,
            seed,
            tol,
            ratio_eps,
            max_iters,
            grad_tol,
            stall_window,
            out,
        } => {
            let args = RecoverArgs {
                band: BandlimitSpec::new(b, start)?,
                step: l,
                mode,
                power_spectrum,
                init,
                seed,
                tol,
                ratio_eps,
                ls: LsOptions {
                    max_iters,
                    grad_tol,
                    stall_window,
                    ..LsOptions::default()
                },
            };
            cmd_recover(&trace, &args, &out)
        }
        Command::Experiment {
            n,
            l_list,
            sigma_list,
            trials,
            seed,
            max_iters,
            grad_tol,
            stall_window,
            out,
        } => {
            let opts = LsOptions {
                max_iters,
                grad_tol,
                stall_window,
                ..LsOptions::default()
            };
            cmd_experiment(n, &l_list, &sigma_list, trials, seed, &opts, &out)
        }
        Command::Verify {
            signal,
            l,
            compare,
            shift,
            out,
        } => cmd_verify(&signal, l, compare.as_deref(), shift, out.as_deref()),
    }
}

pub fn cmd_synthesize(
    n: usize,
    b: usize,
    start: usize,
    seed: u64,
    out: &Path,
    power_out: Option<&Path>,
) -> Result<i32> {
    let band = BandlimitSpec::new(b, start)?;
    band.check_len(n)?;
    if !band.is_half_band(n) {
        return Err(FrogError::InvalidParameters(format!(
            "B = {b} exceeds N/2 for N = {n}"
        )));
    }
    let spectrum = bandlimited_spectrum(n, &band, &mut seeded(seed))?;
    let signal = spectrum.idft();
    write_string(out, &signal_to_json(&signal)?)?;
    if let Some(p) = power_out {
        let power: Vec<f64> = spectrum.values().iter().map(|v| v.norm_sqr()).collect();
        write_string(p, &power_spectrum_to_json(&power)?)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_trace(signal: &Path, l: usize, out: &Path, power_out: Option<&Path>) -> Result<i32> {
    let x = load_signal(signal)?;
    let trace = frog_trace(&x, l)?;
    write_trace_csv(&trace, BufWriter::new(File::create(out)?))?;
    if let Some(p) = power_out {
        write_string(p, &power_spectrum_to_json(&power_of(&x))?)?;
    }
    Ok(EXIT_OK)
}

#[derive(Clone, Debug)]
pub struct RecoverArgs {
    pub band: BandlimitSpec,
    pub step: Option<usize>,
    pub mode: Mode,
    pub power_spectrum: Option<PathBuf>,
    pub init: Option<PathBuf>,
    pub seed: u64,
    pub tol: f64,
    pub ratio_eps: f64,
    pub ls: LsOptions,
}

#[derive(Serialize)]
struct LsReportJson {
    mode: &'static str,
    signal: ComplexVectorJson,
    spectrum: ComplexVectorJson,
    final_objective: f64,
    relative_objective: f64,
    iterations: usize,
    stop: StopReason,
    success: bool,
}

pub fn cmd_recover(trace_path: &Path, args: &RecoverArgs, out: &Path) -> Result<i32> {
    let trace = load_trace(trace_path)?;
    if let Some(l) = args.step {
        if l != trace.step() {
            return Err(FrogError::InvalidParameters(format!(
                "--l {l} does not match the trace (L = {})",
                trace.step()
            )));
        }
    }
    let power = match &args.power_spectrum {
        Some(p) => {
            require_file(p)?;
            Some(power_spectrum_from_json(&read_to_string(p)?)?)
        }
        None => None,
    };
    match args.mode {
        Mode::Recursive => {
            let settings = RecoverySettings {
                use_power_spectrum: power.is_some(),
                consistency_tol: args.tol,
                ratio_eps: args.ratio_eps,
                ..RecoverySettings::new(trace.shifts())
            };
            settings.validate()?;
            let report = recover(&trace, &args.band, &settings, power.as_deref())?;
            write_string(out, &report_to_json(&report)?)?;
            Ok(if report.success {
                EXIT_OK
            } else {
                EXIT_FAILURE
            })
        }
        Mode::Ls => {
            let n = trace.n();
            let z0 = match &args.init {
                Some(p) => load_signal(p)?,
                None => {
                    // match the trace energy: Σ_k d[k][0] = N Σ |x_n|⁴
                    let energy: f64 = trace.column(0).iter().sum::<f64>() / n as f64;
                    let amp = (energy / n as f64).powf(0.25) / 2f64.sqrt();
                    let z = complex_normal_signal(n, &mut seeded(args.seed));
                    Signal::new(z.values().iter().map(|v| v * amp).collect())?
                }
            };
            let outcome = ls_minimize(&z0, &trace, trace.step(), &args.ls)?;
            let scale = 0.5 * trace.data().iter().map(|d| d * d).sum::<f64>();
            let relative = if scale > 0.0 {
                outcome.objective / scale
            } else {
                outcome.objective
            };
            let success = relative <= args.tol;
            let report = LsReportJson {
                mode: "ls",
                signal: (&outcome.signal).into(),
                spectrum: (&outcome.signal.dft()).into(),
                final_objective: outcome.objective,
                relative_objective: relative,
                iterations: outcome.iterations,
                stop: outcome.stop,
                success,
            };
            write_string(out, &serde_json::to_string_pretty(&report)?)?;
            Ok(if success { EXIT_OK } else { EXIT_FAILURE })
        }
    }
}

pub fn cmd_experiment(
    n: usize,
    l_list: &[usize],
    sigma_list: &[f64],
    trials: usize,
    seed: u64,
    opts: &LsOptions,
    out: &Path,
) -> Result<i32> {
    let grid = basin_experiment(n, l_list, sigma_list, trials, seed, opts)?;
    write_basin_csv(&grid, BufWriter::new(File::create(out)?))?;
    Ok(EXIT_OK)
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorCheck {
    pub generator: String,
    pub element: AmbiguityElement,
    pub invariant: bool,
    /// Whether invariance is guaranteed for this input.
    pub expected: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub n: usize,
    pub step: usize,
    pub band: Option<BandlimitSpec>,
    pub checks: Vec<GeneratorCheck>,
    pub compare_equal: Option<bool>,
    pub compare_distance: Option<f64>,
    pub pass: bool,
}

pub fn verify_signal(
    x: &Signal,
    l: usize,
    shift: f64,
    other: Option<&Signal>,
) -> Result<VerifyReport> {
    let n = x.len();
    let xhat = x.dft();
    let band = BandlimitSpec::detect(&xhat, 1e-12 * xhat.norm()).filter(|b| b.is_half_band(n));
    let int_shift = if n > 1 { (n / 3).max(1) as f64 } else { 0.0 };
    let generators = [
        ("rotation", AmbiguityElement::rotation(1.234), true),
        (
            "integer_shift",
            AmbiguityElement::translation(int_shift),
            true,
        ),
        ("reflection", AmbiguityElement::reflection(), true),
        (
            "continuous_shift",
            AmbiguityElement::translation(shift),
            band.is_some(),
        ),
    ];
    let mut generators = generators.to_vec();
    if n.is_multiple_of(2) {
        generators.push(("alternation", AmbiguityElement::alternation(), true));
    }
    let mut checks = Vec::new();
    for (name, g, expected) in generators {
        checks.push(GeneratorCheck {
            generator: name.to_string(),
            element: g,
            invariant: trace_invariant(&xhat, &g, l)?,
            expected,
        });
    }
    let (compare_equal, compare_distance) = match other {
        Some(y) => {
            if y.len() != n {
                return Err(FrogError::InvalidParameters(
                    "compared signals differ in length".into(),
                ));
            }
            let tx = frog_trace(x, l)?;
            let ty = frog_trace(y, l)?;
            let equal = tx.relative_deviation(&ty) <= crate::ambiguity::TRACE_INVARIANCE_TOL;
            let (d, _) = dist_mod_group(&y.dft(), &xhat, band.as_ref())?;
            (Some(equal), Some(d))
        }
        None => (None, None),
    };
    let pass = checks.iter().all(|c| !c.expected || c.invariant) && compare_equal.unwrap_or(true);
    Ok(VerifyReport {
        n,
        step: l,
        band,
        checks,
        compare_equal,
        compare_distance,
        pass,
    })
}

pub fn cmd_verify(
    signal: &Path,
    l: usize,
    compare: Option<&Path>,
    shift: f64,
    out: Option<&Path>,
) -> Result<i32> {
    let x = load_signal(signal)?;
    let other = compare.map(load_signal).transpose()?;
    let report = verify_signal(&x, l, shift, other.as_ref())?;
    match report.band {
        Some(b) => println!("band: B = {} starting at {}", b.width, b.start),
        None => println!("band: none with B ≤ N/2"),
    }
    for c in &report.checks {
        let verdict = if c.invariant {
            "invariant"
        } else {
            "NOT invariant"
        };
        let note = if c.expected {
            ""
        } else {
            " (not a symmetry for this input)"
        };
        println!("{:<17} {verdict}{note}", c.generator);
    }
    if let Some(eq) = report.compare_equal {
        println!(
            "compare           {} (group distance {:.3e})",
            if eq {
                "equal traces"
            } else {
                "DIFFERENT traces"
            },
            report.compare_distance.unwrap_or(f64::NAN)
        );
    }
    if let Some(p) = out {
        write_string(p, &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_FAILURE })
}
