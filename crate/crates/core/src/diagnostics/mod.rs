//! Post-run estimates and error measures.

mod quadrature;

pub use quadrature::adaptive_simpson;

use crate::engine::RunRecord;
use crate::targets::{Flippable, StateView};
use crate::{log_sum_exp, Error, Result};

/// True mean of every component location in the mixture benchmark.
pub const MIXTURE_MEAN_TARGET: f64 = 1.5;

/// Normalised importance weights over a set of states.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample<S> {
    pub states: Vec<S>,
    pub weights: Vec<f64>,
    pub run_id: String,
}

impl<S> WeightedSample<S> {
    /// Equal weights.
    pub fn uniform(states: Vec<S>, run_id: impl Into<String>) -> Self {
        let w = 1.0 / states.len().max(1) as f64;
        WeightedSample {
            weights: vec![w; states.len()],
            states,
            run_id: run_id.into(),
        }
    }

    /// Weights from unnormalised log weights.
    pub fn from_log_weights(
        states: Vec<S>,
        log_weights: &[f64],
        run_id: impl Into<String>,
    ) -> Result<Self> {
        let z = log_sum_exp(log_weights);
        if states.is_empty() || !z.is_finite() {
            return Err(Error::EmptySample("no usable weights".into()));
        }
        Ok(WeightedSample {
            weights: log_weights.iter().map(|w| (w - z).exp()).collect(),
            states,
            run_id: run_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `sum_i w_i f(x_i)`.
    pub fn expectation(&self, f: impl Fn(&S) -> f64) -> f64 {
        self.states
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }
}

/// Weights each recorded sample after the first `burn_in` by the final
/// bias of its bin. Bins are recomputed from the stored reaction coordinate
/// with the final partition, so samples recorded before later splits are
/// weighted consistently.
pub fn reweight<S: Clone>(record: &RunRecord<S>, burn_in: usize) -> Result<WeightedSample<S>> {
    let kept = record.samples.get(burn_in..).unwrap_or(&[]);
    if kept.is_empty() {
        return Err(Error::EmptySample(format!(
            "no samples left after discarding {burn_in} of {}",
            record.samples.len()
        )));
    }
    let log_w: Vec<f64> = kept
        .iter()
        .map(|s| record.final_log_theta[record.final_partition.locate(s.xi)])
        .collect();
    WeightedSample::from_log_weights(
        kept.iter().map(|s| s.state.clone()).collect(),
        &log_w,
        "wang-landau",
    )
}

/// [`reweight`] discarding the first `fraction` of the recorded samples.
pub fn reweight_fraction<S: Clone>(
    record: &RunRecord<S>,
    fraction: f64,
) -> Result<WeightedSample<S>> {
    let burn_in = (fraction.clamp(0.0, 1.0) * record.samples.len() as f64).floor() as usize;
    reweight(record, burn_in)
}

/// `max_i |log theta_i - log psi_i|` after normalising both.
pub fn theta_error(log_theta: &[f64], log_psi: &[f64]) -> Result<f64> {
    if log_theta.len() != log_psi.len() {
        return Err(Error::DimensionMismatch {
            expected: log_psi.len(),
            found: log_theta.len(),
        });
    }
    let zt = log_sum_exp(log_theta);
    let zp = log_sum_exp(log_psi);
    Ok(log_theta
        .iter()
        .zip(log_psi)
        .map(|(t, p)| ((t - zt) - (p - zp)).abs())
        .fold(0.0, f64::max))
}

/// Weighted mean of each location slot `mu_1..K` of mixture states laid
/// out as `(log w, mu, log lambda, log beta)`.
pub fn component_means(sample: &WeightedSample<Vec<f64>>, k: usize) -> Vec<f64> {
    (0..k).map(|c| sample.expectation(|x| x[k + c])).collect()
}

/// `sqrt(sum_k (mu_k - 1.5)^2)` over slot means.
pub fn mixture_error_from_means(means: &[f64]) -> f64 {
    means
        .iter()
        .map(|m| (m - MIXTURE_MEAN_TARGET).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn mixture_error(sample: &WeightedSample<Vec<f64>>, k: usize) -> f64 {
    mixture_error_from_means(&component_means(sample, k))
}

/// Weight within `radius` of each centre (nearest centre wins), followed by
/// the unassigned remainder. Distances use the leading coordinates.
pub fn mode_occupancy(
    sample: &WeightedSample<Vec<f64>>,
    centers: &[Vec<f64>],
    radius: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; centers.len() + 1];
    for (x, w) in sample.states.iter().zip(&sample.weights) {
        let nearest = centers
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let d2: f64 = c.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
                (i, d2)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((i, d2)) if d2.sqrt() <= radius => out[i] += w,
            _ => out[centers.len()] += w,
        }
    }
    out
}

/// Weighted per-site average of binary states.
pub fn mean_state<S: Flippable + StateView>(sample: &WeightedSample<S>) -> Vec<f64> {
    let Some(first) = sample.states.first() else {
        return Vec::new();
    };
    let n = first.n_sites();
    let mut out = vec![0.0; n];
    for (x, w) in sample.states.iter().zip(&sample.weights) {
        for (i, o) in out.iter_mut().enumerate() {
            *o += w * x.coordinate(i).unwrap_or(0.0);
        }
    }
    out
}

/// Lowest and highest reaction coordinate visited by the chains; falls back
/// to the recorded samples when the run did not track it.
pub fn energy_range<S>(record: &RunRecord<S>) -> Option<(f64, f64)> {
    record.xi_range.or_else(|| {
        record.samples.iter().map(|s| s.xi).fold(None, |acc, v| {
            Some(match acc {
                None => (v, v),
                Some((lo, hi)) => (f64::min(lo, v), f64::max(hi, v)),
            })
        })
    })
}
