//! Fixture files: a signal as JSON, its trace as CSV, and a recovery report
//! read back from disk.
//!
//! ```bash
//! cargo run --example file_roundtrip -- /tmp/frog
//! ```

use std::fs::{self, File};
use std::path::PathBuf;

use frogkit::io::{
    read_trace_csv, report_to_json, signal_from_json, signal_to_json, write_trace_csv,
};
use frogkit::rng::{bandlimited_spectrum, seeded};
use frogkit::{dist_mod_group, frog_trace, recover, BandlimitSpec, RecoverySettings};

fn main() -> frogkit::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("frogkit-roundtrip"));
    fs::create_dir_all(&dir)?;

    let band = BandlimitSpec::new(4, 3)?;
    let x = bandlimited_spectrum(16, &band, &mut seeded(7))?.idft();
    let signal_path = dir.join("signal.json");
    fs::write(&signal_path, signal_to_json(&x)?)?;

    let x = signal_from_json(&fs::read_to_string(&signal_path)?)?;
    let trace_path = dir.join("trace.csv");
    write_trace_csv(&frog_trace(&x, 4)?, File::create(&trace_path)?)?;

    let trace = read_trace_csv(File::open(&trace_path)?)?;
    let report = recover(&trace, &band, &RecoverySettings::new(trace.shifts()), None)?;
    fs::write(dir.join("report.json"), report_to_json(&report)?)?;

    let (d, g) = dist_mod_group(&report.spectrum, &x.dft(), Some(&band))?;
    println!("files in {}", dir.display());
    println!(
        "recovered from {} trace entries, error {d:.2e}, aligned by {g:?}",
        report.reads.len()
    );
    Ok(())
}
