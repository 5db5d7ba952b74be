//! Discrete SHG-FROG: forward model, trivial ambiguities, and recovery of
//! bandlimited pulses from their traces.
//!
//! * [`signal`]: signals, spectra, the trace in time and frequency domains.
//! * [`ambiguity`]: rotation, translation, reflection and sign-alternation
//!   symmetries and the distance between spectra modulo them.
//! * [`circle`]: phaseless linear systems `|z + v_i| = n_i`.
//! * [`recovery`]: the constructive coefficient-by-coefficient inversion.
//! * [`least_squares`]: the quartic least-squares loss and a descent solver.
//! * [`io`]: JSON and CSV file formats.

pub mod ambiguity;
pub mod circle;
pub mod cli;
pub mod error;
pub mod io;
pub mod least_squares;
pub mod recovery;
pub mod rng;
pub mod signal;

pub use ambiguity::{apply, dist_mod_group, trace_invariant, AmbiguityElement};
pub use circle::{
    ratio_is_nonreal, solve_generic, solve_real_centers, CircleSolution, CircleSystem, SolutionKind,
};
pub use error::{FrogError, Result};
pub use least_squares::{
    basin_experiment, ls_gradient, ls_minimize, ls_objective, BasinGrid, LsOptions, LsOutcome,
};
pub use recovery::{
    pyramid_centers, recover, select_equations, RecoveryReport, RecoverySettings, X3Branch,
};
pub use signal::{
    dft, frog_freq_coeffs, frog_trace, idft, product_signal, BandlimitSpec, FrogTrace, Signal,
    Spectrum,
};
