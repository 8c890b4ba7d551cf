use crate::binning::{BinPartition, BoundaryEvent};

/// A vector-valued trace entry.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceRow {
    pub iteration: u64,
    pub acceptance: f64,
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord<S> {
    pub iteration: u64,
    pub chain: usize,
    pub state: S,
    pub log_density: f64,
    pub xi: f64,
    /// Bin index under the partition in force when the sample was taken.
    pub bin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatHistogramEvent {
    pub iteration: u64,
    pub max_deviation: f64,
    pub threshold: f64,
}

/// Everything a run leaves behind.
#[derive(Debug, Clone)]
pub struct RunRecord<S> {
    pub n_chains: usize,
    pub iterations: usize,
    pub prelim_iterations: usize,
    /// Normalised bias weights, starting with iteration 0.
    pub theta_trace: Vec<TraceRow>,
    /// Occupancy frequencies since the last reset, from iteration 1.
    pub nu_trace: Vec<TraceRow>,
    pub boundary_events: Vec<BoundaryEvent>,
    pub acceptance_trace: Vec<AcceptanceRow>,
    pub samples: Vec<SampleRecord<S>>,
    pub fh_events: Vec<FlatHistogramEvent>,
    pub final_partition: BinPartition,
    pub final_log_theta: Vec<f64>,
    pub final_phi: Vec<f64>,
    pub final_states: Vec<S>,
    /// Density evaluations of the preliminary and main stages,
    /// `n_chains * (iterations + prelim_iterations)`.
    pub density_evaluations: u64,
    /// Evaluations at the initial states, counted separately.
    pub initial_evaluations: u64,
    pub nonfinite_rejections: u64,
    /// Lowest and highest reaction coordinate of the chain states over the
    /// main stage.
    pub xi_range: Option<(f64, f64)>,
}

impl<S> RunRecord<S> {
    pub fn fh_times(&self) -> Vec<u64> {
        self.fh_events.iter().map(|e| e.iteration).collect()
    }

    pub fn n_splits(&self) -> usize {
        self.boundary_events
            .iter()
            .filter(|e| e.kind == crate::binning::BoundaryKind::Split)
            .count()
    }

    pub fn final_theta(&self) -> Vec<f64> {
        self.final_log_theta.iter().map(|v| v.exp()).collect()
    }
}
