//! Comparison samplers: parallel adaptive MH, tempered MH and tempered SMC.

pub mod pamh;
pub mod smc;
mod tempered;

pub use pamh::{pamh_run, PamhConfig};
pub use smc::{
    ess, smc_run, systematic_resample, GaussianInitial, InitialDistribution, SmcConfig, SmcOutput,
};
pub use tempered::{tempered_log_density, Tempered};
