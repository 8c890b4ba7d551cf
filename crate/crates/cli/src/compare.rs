//! Side-by-side table of finished runs with per-algorithm medians.

use std::path::{Path, PathBuf};

use pawl_core::targets::format_real;

use crate::artifacts::{read_metrics, Metrics, RunSummary};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub run: String,
    pub algorithm: String,
    pub seed: u64,
    pub metrics: Metrics,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub target: String,
    /// Metric names in order of first appearance across the runs.
    pub metric_names: Vec<String>,
    pub runs: Vec<RunRow>,
}

/// Loads every run directory. All runs must share a target and have
/// finished successfully.
pub fn compare_runs<P: AsRef<Path>>(dirs: &[P]) -> Result<Comparison, HarnessError> {
    if dirs.is_empty() {
        return Err(HarnessError::Config(
            "compare needs at least one run directory".into(),
        ));
    }
    let mut runs = Vec::with_capacity(dirs.len());
    let mut target: Option<String> = None;
    let mut metric_names: Vec<String> = Vec::new();
    for dir in dirs {
        let dir = dir.as_ref();
        let summary = RunSummary::read(dir)?;
        if summary.status != "ok" {
            return Err(HarnessError::Config(format!(
                "{}: run did not finish ({})",
                dir.display(),
                summary.error.as_deref().unwrap_or("no message")
            )));
        }
        match &target {
            None => target = Some(summary.target.clone()),
            Some(t) if *t != summary.target => {
                return Err(HarnessError::Config(format!(
                    "mixed targets: {t} and {} ({})",
                    summary.target,
                    dir.display()
                )))
            }
            Some(_) => {}
        }
        let metrics = read_metrics(dir)?;
        for (name, _) in &metrics.0 {
            if !metric_names.contains(name) {
                metric_names.push(name.clone());
            }
        }
        runs.push(RunRow {
            run: run_label(dir),
            algorithm: summary.algorithm,
            seed: summary.seed,
            metrics,
            wall_time_seconds: summary.wall_clock_seconds,
        });
    }
    Ok(Comparison {
        target: target.unwrap_or_default(),
        metric_names,
        runs,
    })
}

fn run_label(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| PathBuf::from(dir).display().to_string())
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    values.retain(|v| !v.is_nan());
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

impl Comparison {
    /// Algorithms in order of first appearance.
    pub fn algorithms(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.runs {
            if !out.contains(&r.algorithm) {
                out.push(r.algorithm.clone());
            }
        }
        out
    }

    /// Median of `metric` over the runs of `algorithm` that report it.
    pub fn median(&self, algorithm: &str, metric: &str) -> Option<f64> {
        median(
            self.runs
                .iter()
                .filter(|r| r.algorithm == algorithm)
                .filter_map(|r| r.metrics.get(metric))
                .collect(),
        )
    }

    fn median_wall_time(&self, algorithm: &str) -> Option<f64> {
        median(
            self.runs
                .iter()
                .filter(|r| r.algorithm == algorithm)
                .map(|r| r.wall_time_seconds)
                .collect(),
        )
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["run".to_string(), "algorithm".into(), "seed".into()];
        h.extend(self.metric_names.iter().cloned());
        h.push("wall_time_seconds".into());
        h
    }

    /// One row per run followed by one `median` row per algorithm.
    pub fn rows(&self) -> Vec<Vec<String>> {
        let cell = |v: Option<f64>| v.map(format_real).unwrap_or_default();
        let mut rows: Vec<Vec<String>> = self
            .runs
            .iter()
            .map(|r| {
                let mut row = vec![r.run.clone(), r.algorithm.clone(), r.seed.to_string()];
                row.extend(self.metric_names.iter().map(|m| cell(r.metrics.get(m))));
                row.push(format_real(r.wall_time_seconds));
                row
            })
            .collect();
        for alg in self.algorithms() {
            let mut row = vec!["median".to_string(), alg.clone(), String::new()];
            row.extend(self.metric_names.iter().map(|m| cell(self.median(&alg, m))));
            row.push(cell(self.median_wall_time(&alg)));
            rows.push(row);
        }
        rows
    }

    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header())?;
        for row in self.rows() {
            w.write_record(row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| HarnessError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
    }
}
