//! File formats.
//!
//! * complex vectors (signals and spectra): JSON `{"n": N, "re": [..], "im": [..]}`;
//! * power spectra: JSON `{"n": N, "values": [..]}`;
//! * traces: CSV with header `k,m,value`, row-major in `k`;
//! * basin grids: CSV with header `sigma,L,trials,successes,rate`;
//! * recovery reports and ambiguity elements: JSON.
//!
//! Floats in CSV files are written in scientific notation with 17
//! significant digits.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FrogError, Result};
use crate::least_squares::BasinGrid;
use crate::recovery::{RecoveryReport, X3Branch};
use crate::signal::{FrogTrace, Signal, Spectrum};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexVectorJson {
    pub n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexVectorJson {
    pub fn from_values(values: &[Complex64]) -> Self {
        Self {
            n: values.len(),
            re: values.iter().map(|v| v.re).collect(),
            im: values.iter().map(|v| v.im).collect(),
        }
    }

    pub fn to_values(&self) -> Result<Vec<Complex64>> {
        if self.re.len() != self.n || self.im.len() != self.n {
            return Err(FrogError::Format(format!(
                "declared n = {} but re has {} and im has {} entries",
                self.n,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect())
    }
}

impl From<&Signal> for ComplexVectorJson {
    fn from(s: &Signal) -> Self {
        Self::from_values(s.values())
    }
}

impl From<&Spectrum> for ComplexVectorJson {
    fn from(s: &Spectrum) -> Self {
        Self::from_values(s.values())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrumJson {
    pub n: usize,
    pub values: Vec<f64>,
}

pub fn signal_to_json(s: &Signal) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ComplexVectorJson::from(s))?)
}

pub fn signal_from_json(text: &str) -> Result<Signal> {
    let v: ComplexVectorJson = serde_json::from_str(text)?;
    Signal::new(v.to_values()?)
}

pub fn spectrum_to_json(s: &Spectrum) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ComplexVectorJson::from(s))?)
}

pub fn spectrum_from_json(text: &str) -> Result<Spectrum> {
    let v: ComplexVectorJson = serde_json::from_str(text)?;
    Spectrum::new(v.to_values()?)
}

pub fn power_spectrum_to_json(values: &[f64]) -> Result<String> {
    Ok(serde_json::to_string_pretty(&PowerSpectrumJson {
        n: values.len(),
        values: values.to_vec(),
    })?)
}

pub fn power_spectrum_from_json(text: &str) -> Result<Vec<f64>> {
    let p: PowerSpectrumJson = serde_json::from_str(text)?;
    if p.values.len() != p.n {
        return Err(FrogError::Format(format!(
            "declared n = {} but found {} values",
            p.n,
            p.values.len()
        )));
    }
    Ok(p.values)
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace_csv<W: Write>(trace: &FrogTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "m", "value"])?;
    for k in 0..trace.n() {
        for m in 0..trace.shifts() {
            w.write_record([k.to_string(), m.to_string(), fmt_float(trace.get(k, m))])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct TraceRow {
    k: usize,
    m: usize,
    value: f64,
}

/// Reads a trace CSV; `N` and `r` are inferred from the largest indices,
/// and every `(k, m)` cell must appear exactly once.
pub fn read_trace_csv<R: Read>(input: R) -> Result<FrogTrace> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["k", "m", "value"] {
        return Err(FrogError::Format(format!(
            "expected header k,m,value, found {headers:?}"
        )));
    }
    let mut cells = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: TraceRow = row?;
        if cells.insert((row.k, row.m), row.value).is_some() {
            return Err(FrogError::Format(format!(
                "duplicate cell ({}, {})",
                row.k, row.m
            )));
        }
    }
    let n = cells.keys().map(|(k, _)| k + 1).max().unwrap_or(0);
    let r = cells.keys().map(|(_, m)| m + 1).max().unwrap_or(0);
    if n == 0 || r == 0 || cells.len() != n * r {
        return Err(FrogError::Format(format!(
            "trace is not a complete grid: {} cells for N = {n}, r = {r}",
            cells.len()
        )));
    }
    if n % r != 0 {
        return Err(FrogError::Format(format!(
            "r = {r} does not divide N = {n}"
        )));
    }
    FrogTrace::new(n, n / r, cells.into_values().collect())
}

pub fn write_basin_csv<W: Write>(grid: &BasinGrid, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sigma", "L", "trials", "successes", "rate"])?;
    for (si, sigma) in grid.sigma_values.iter().enumerate() {
        for (li, step) in grid.step_values.iter().enumerate() {
            w.write_record([
                fmt_float(*sigma),
                step.to_string(),
                grid.trials.to_string(),
                grid.successes[si][li].to_string(),
                fmt_float(grid.rate(si, li)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReportJson {
    pub n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub step_residuals: Vec<f64>,
    pub check_residuals: Vec<f64>,
    pub x3_branch: Option<X3Branch>,
    pub branch_residuals: Option<[f64; 2]>,
    pub equations_used: Vec<Vec<usize>>,
    pub reads: Vec<[usize; 2]>,
    pub success: bool,
}

impl From<&RecoveryReport> for RecoveryReportJson {
    fn from(r: &RecoveryReport) -> Self {
        let spec = ComplexVectorJson::from(&r.spectrum);
        Self {
            n: spec.n,
            re: spec.re,
            im: spec.im,
            step_residuals: r.step_residuals.clone(),
            check_residuals: r.check_residuals.clone(),
            x3_branch: r.x3_branch,
            branch_residuals: r.branch_residuals,
            equations_used: r.equations_used.clone(),
            reads: r.reads.iter().map(|&(k, m)| [k, m]).collect(),
            success: r.success,
        }
    }
}

pub fn report_to_json(report: &RecoveryReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(&RecoveryReportJson::from(
        report,
    ))?)
}

pub fn read_to_string(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn write_string(path: &Path, text: &str) -> Result<()> {
    Ok(std::fs::write(path, text)?)
}
