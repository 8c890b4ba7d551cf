//! Parallel adaptive Wang-Landau (PAWL) density exploration.
//!
//! The crate is organised around the sampler loop in [`engine`]:
//!
//! * [`binning`] manages the partition of the reaction coordinate (initial
//!   bins, within-bin flatness tests, splitting and low-end extension),
//! * [`proposals`] provides the adaptive random walks and flip moves,
//! * [`targets`] holds the target abstraction and the benchmark posteriors,
//! * [`baselines`] has the comparison samplers (PAMH, tempered MH, SMC),
//! * [`diagnostics`] turns finished runs into estimates and error metrics.
//!
//! ```
//! use pawl_core::binning::BinPartition;
//! use pawl_core::engine::{wl_run, WangLandauConfig};
//! use pawl_core::proposals::ScaledRandomWalk;
//! use pawl_core::targets::TrimodalTarget;
//!
//! let target = TrimodalTarget::default();
//! let mut config = WangLandauConfig::default();
//! config.n_chains = 2;
//! config.iterations = 200;
//! config.prelim_iterations = 100;
//! config.binning.n_bins = 3;
//! let record = wl_run(&target, ScaledRandomWalk::new(1.0), &config, 7).unwrap();
//! assert_eq!(record.theta_trace.len(), 201);
//! ```

// `!(a > b)` is deliberate: NaN inputs take the error path.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::derivable_impls
)]

pub mod baselines;
pub mod binning;
pub mod diagnostics;
pub mod engine;
mod error;
pub mod proposals;
pub mod rng;
pub mod schedule;
pub mod targets;

pub use error::{Error, Result};

/// `log(sum(exp(values)))` without overflow. Returns `-inf` for an empty
/// slice or when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}
