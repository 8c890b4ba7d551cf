//! CSV and TOML artifacts of one run.
//!
//! Every CSV has a header row and writes reals with 17 significant digits,
//! so files reproduce byte for byte and parse back to the same doubles.
//! Wall-clock time appears only in `summary.toml`.

use std::fs;
use std::path::Path;

use pawl_core::binning::BoundaryEvent;
use pawl_core::engine::{AcceptanceRow, FlatHistogramEvent, TraceRow};
use pawl_core::targets::format_real;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::HarnessError;

pub const THETA_TRACE: &str = "theta-trace.csv";
pub const NU_TRACE: &str = "nu-trace.csv";
pub const BOUNDARY_EVENTS: &str = "boundary-events.csv";
pub const ACCEPTANCE: &str = "acceptance.csv";
pub const SAMPLES: &str = "samples.csv";
pub const FLAT_HISTOGRAM: &str = "flat-histogram.csv";
pub const ESS_TRACE: &str = "ess-trace.csv";
pub const METRICS: &str = "metrics.csv";
pub const SUMMARY: &str = "summary.toml";
pub const FAILURE_MARKER: &str = "FAILED";

/// Every CSV a run writes, in a fixed order.
pub const CSV_FILES: [&str; 8] = [
    THETA_TRACE,
    NU_TRACE,
    BOUNDARY_EVENTS,
    ACCEPTANCE,
    SAMPLES,
    FLAT_HISTOGRAM,
    ESS_TRACE,
    METRICS,
];

/// Named scalar results in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics(pub Vec<(String, f64)>);

impl Metrics {
    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.0.push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Everything written for a finished run apart from the summary.
#[derive(Debug, Clone, Default)]
pub struct Tables {
    pub theta: Vec<TraceRow>,
    pub nu: Vec<TraceRow>,
    pub boundary: Vec<BoundaryEvent>,
    pub acceptance: Vec<AcceptanceRow>,
    pub flat_histogram: Vec<FlatHistogramEvent>,
    pub ess: Vec<f64>,
    pub sample_header: Vec<String>,
    pub sample_rows: Vec<Vec<String>>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// `ok` or `failed`.
    pub status: String,
    pub target: String,
    pub algorithm: String,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    pub density_evaluations: u64,
    pub resampling_events: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: ExperimentConfig,
}

impl RunSummary {
    pub fn read(dir: &Path) -> Result<Self, HarnessError> {
        let path = dir.join(SUMMARY);
        let text = fs::read_to_string(&path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| HarnessError::Io(format!("cannot serialise summary: {e}")))?;
        fs::write(dir.join(SUMMARY), text)?;
        Ok(())
    }
}

fn writer(dir: &Path, name: &str, header: &[&str]) -> Result<csv::Writer<fs::File>, HarnessError> {
    let mut w = csv::Writer::from_path(dir.join(name))?;
    w.write_record(header)?;
    Ok(w)
}

fn write_trace(
    dir: &Path,
    name: &str,
    column: &str,
    rows: &[TraceRow],
) -> Result<(), HarnessError> {
    let mut w = writer(dir, name, &["iteration", "bin", column])?;
    for row in rows {
        let t = row.iteration.to_string();
        for (bin, v) in row.values.iter().enumerate() {
            w.write_record([t.as_str(), &bin.to_string(), &format_real(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

impl Tables {
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        write_trace(dir, THETA_TRACE, "theta", &self.theta)?;
        write_trace(dir, NU_TRACE, "nu", &self.nu)?;

        let mut w = writer(dir, BOUNDARY_EVENTS, &["iteration", "kind", "bin", "value"])?;
        for e in &self.boundary {
            w.write_record([
                e.iteration.to_string(),
                e.kind.as_str().to_string(),
                e.bin.to_string(),
                format_real(e.value),
            ])?;
        }
        w.flush()?;

        let mut w = writer(dir, ACCEPTANCE, &["iteration", "acceptance", "scale"])?;
        for a in &self.acceptance {
            w.write_record([
                a.iteration.to_string(),
                format_real(a.acceptance),
                a.scale.map(format_real).unwrap_or_default(),
            ])?;
        }
        w.flush()?;

        let mut w = writer(
            dir,
            FLAT_HISTOGRAM,
            &["iteration", "max_deviation", "threshold"],
        )?;
        for e in &self.flat_histogram {
            w.write_record([
                e.iteration.to_string(),
                format_real(e.max_deviation),
                format_real(e.threshold),
            ])?;
        }
        w.flush()?;

        let mut w = writer(dir, ESS_TRACE, &["step", "ess"])?;
        for (k, e) in self.ess.iter().enumerate() {
            w.write_record([(k + 1).to_string(), format_real(*e)])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join(SAMPLES))?;
        w.write_record(&self.sample_header)?;
        for row in &self.sample_rows {
            w.write_record(row)?;
        }
        w.flush()?;

        write_metrics(dir, &self.metrics)
    }
}

pub fn write_metrics(dir: &Path, metrics: &Metrics) -> Result<(), HarnessError> {
    let mut w = writer(dir, METRICS, &["metric", "value"])?;
    for (name, v) in &metrics.0 {
        w.write_record([name.as_str(), &format_real(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics(dir: &Path) -> Result<Metrics, HarnessError> {
    let path = dir.join(METRICS);
    let mut r = csv::Reader::from_path(&path)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Metrics::default();
    for record in r.records() {
        let record = record?;
        let value = record
            .get(1)
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| {
                HarnessError::Io(format!("{}: malformed row {:?}", path.display(), record))
            })?;
        out.push(record.get(0).unwrap_or_default(), value);
    }
    Ok(out)
}
