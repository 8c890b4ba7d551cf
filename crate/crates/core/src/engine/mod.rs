//! The Wang-Landau loop with interacting chains.

mod bias;
mod ensemble;
mod record;
mod run;

pub use bias::BiasState;
pub use ensemble::{Chain, ChainEnsemble, SweepOutcome};
pub use record::{AcceptanceRow, FlatHistogramEvent, RunRecord, SampleRecord, TraceRow};
pub use run::{initial_ensemble, wl_run, WangLandau, WangLandauConfig};

use crate::binning::BinPartition;

/// `log pi(x) - log theta(bin(xi))`, the biased log density up to a constant.
pub fn biased_log_density(
    xi: f64,
    log_pi: f64,
    log_theta: &[f64],
    partition: &BinPartition,
) -> f64 {
    log_pi - log_theta[partition.locate(xi)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bias_ratio_between_bins() {
        let p = BinPartition::from_boundaries(vec![1.0], 0.0).unwrap();
        let lt = [0.9f64.ln(), 0.1f64.ln()];
        let a = biased_log_density(0.5, -1.0, &lt, &p);
        let b = biased_log_density(1.5, -1.0, &lt, &p);
        assert!((a - b - (0.1f64 / 0.9).ln()).abs() < 1e-12);
        assert!((a - b + 2.1972).abs() < 1e-4);
    }
}
