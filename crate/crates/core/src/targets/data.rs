//! Dataset and image ingestion.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

pub const POLLUTION_PREDICTORS: usize = 15;

/// Regression data for the variable-selection target.
///
/// `x` holds standardised predictors (zero mean, unit sample variance) in
/// row-major order and `y` the centred response; the raw column means and
/// standard deviations are kept for reference.
#[derive(Debug, Clone, PartialEq)]
pub struct PollutionData {
    pub names: Vec<String>,
    pub n: usize,
    pub p: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_mean: Vec<f64>,
    pub x_sd: Vec<f64>,
    pub y_mean: f64,
}

impl PollutionData {
    /// Standardise raw rows (`p` predictors followed by the response).
    pub fn from_raw(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::Config(format!("need at least 2 rows, got {n}")));
        }
        let p = rows[0].len() - 1;
        let mut x_mean = vec![0.0; p];
        let mut x_sd = vec![0.0; p];
        for j in 0..p {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            if var <= 0.0 {
                return Err(Error::Config(format!("predictor {j} is constant")));
            }
            x_mean[j] = mean;
            x_sd[j] = var.sqrt();
        }
        let y_mean = rows.iter().map(|r| r[p]).sum::<f64>() / n as f64;
        let mut x = Vec::with_capacity(n * p);
        for r in rows {
            for j in 0..p {
                x.push((r[j] - x_mean[j]) / x_sd[j]);
            }
        }
        let y = rows.iter().map(|r| r[p] - y_mean).collect();
        Ok(PollutionData {
            names,
            n,
            p,
            x,
            y,
            x_mean,
            x_sd,
            y_mean,
        })
    }

    pub fn x_at(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.p + j]
    }
}

/// Parse comma-separated text with a header row and 16 columns (15
/// predictors, then the response).
pub fn parse_pollution_data(text: &str, origin: &str) -> Result<PollutionData> {
    let columns = POLLUTION_PREDICTORS + 1;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: origin.to_string(),
        line: 1,
        column: 1,
        message: "empty file".into(),
    })?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if names.len() != columns {
        return Err(Error::Parse {
            path: origin.to_string(),
            line: 1,
            column: names.len(),
            message: format!("expected {columns} header columns, found {}", names.len()),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: idx + 1,
                column: fields.len(),
                message: format!("expected {columns} columns, found {}", fields.len()),
            });
        }
        let row = fields
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: origin.to_string(),
                    line: idx + 1,
                    column: c + 1,
                    message: format!("not a number: {:?}", f.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    PollutionData::from_raw(names, &rows)
}

pub fn load_pollution_data(path: impl AsRef<Path>) -> Result<PollutionData> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_pollution_data(&text, &path.display().to_string())
}

/// Parse a binary image: one row per line, `0`/`1` characters.
pub fn parse_grid_image(text: &str, origin: &str) -> Result<super::Grid> {
    let mut width = None;
    let mut cells = Vec::new();
    let mut height = 0;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let row: Vec<bool> = line
            .chars()
            .enumerate()
            .map(|(c, ch)| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse {
                    path: origin.to_string(),
                    line: idx + 1,
                    column: c + 1,
                    message: format!("non-binary pixel {ch:?}"),
                }),
            })
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: idx + 1,
                    column: row.len().min(w) + 1,
                    message: format!("row has {} pixels, expected {w}", row.len()),
                })
            }
            _ => {}
        }
        cells.extend(row);
        height += 1;
    }
    let width = width.ok_or_else(|| Error::Parse {
        path: origin.to_string(),
        line: 1,
        column: 1,
        message: "empty image".into(),
    })?;
    Ok(super::Grid::from_cells(height, width, cells))
}

pub fn load_grid_image(path: impl AsRef<Path>) -> Result<super::Grid> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_grid_image(&text, &path.display().to_string())
}

/// Parse one real number per non-blank line.
pub fn parse_real_values(text: &str, origin: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            l.trim().parse().map_err(|_| Error::Parse {
                path: origin.to_string(),
                line: idx + 1,
                column: 1,
                message: format!("not a number: {:?}", l.trim()),
            })
        })
        .collect()
}

pub fn load_real_values(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_real_values(&text, &path.display().to_string())
}
