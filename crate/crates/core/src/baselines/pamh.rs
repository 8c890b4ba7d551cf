//! Parallel adaptive Metropolis-Hastings: the interacting-chain sampler
//! without bias. Also used as the preliminary exploration stage.

use crate::binning::{BinPartition, ReactionCoordinate};
use crate::engine::{
    initial_ensemble, AcceptanceRow, ChainEnsemble, RunRecord, SampleRecord, TraceRow,
};
use crate::proposals::Proposal;
use crate::targets::Target;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct PamhConfig {
    pub n_chains: usize,
    pub iterations: usize,
    pub thin: usize,
    pub adapt_proposal: bool,
}

impl Default for PamhConfig {
    fn default() -> Self {
        PamhConfig {
            n_chains: 10,
            iterations: 1000,
            thin: 10,
            adapt_proposal: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExploreOutput {
    /// Reaction coordinate of every chain after every iteration.
    pub xi_values: Vec<f64>,
    pub nonfinite: u64,
}

/// Run `iterations` unbiased sweeps on an existing ensemble, adapting the
/// proposal as the main loop would.
pub fn explore<T, P>(
    target: &T,
    proposal: &mut P,
    xi: &ReactionCoordinate<T::State>,
    ensemble: &mut ChainEnsemble<T::State>,
    iterations: usize,
    adapt: bool,
) -> ExploreOutput
where
    T: Target,
    P: Proposal<T::State>,
{
    let single = BinPartition::single(f64::NEG_INFINITY);
    let flat = [0.0];
    let mut out = ExploreOutput {
        xi_values: Vec::with_capacity(iterations * ensemble.len()),
        nonfinite: 0,
    };
    for _ in 0..iterations {
        let sweep = ensemble.mh_sweep(target, &*proposal, xi, &flat, &single);
        out.nonfinite += sweep.nonfinite as u64;
        if adapt {
            proposal.adapt(&ensemble.states(), sweep.acceptance());
        }
        out.xi_values.extend(ensemble.xis());
    }
    out
}

/// PAMH run from states drawn by the target's initial sampler.
pub fn pamh_run<T, P>(
    target: &T,
    proposal: P,
    config: &PamhConfig,
    seed: u64,
) -> Result<RunRecord<T::State>>
where
    T: Target,
    P: Proposal<T::State>,
{
    pamh_run_from(target, proposal, config, seed, None)
}

/// PAMH run, optionally from explicit initial states. The record has the
/// same layout as a Wang-Landau record with a single bin.
pub fn pamh_run_from<T, P>(
    target: &T,
    mut proposal: P,
    config: &PamhConfig,
    seed: u64,
    initial_states: Option<Vec<T::State>>,
) -> Result<RunRecord<T::State>>
where
    T: Target,
    P: Proposal<T::State>,
{
    let xi = ReactionCoordinate::NegLogDensity;
    let n = config.n_chains;
    if n == 0 {
        return Err(crate::Error::Config("n_chains must be at least 1".into()));
    }
    let mut ensemble = initial_ensemble(target, &xi, n, initial_states, seed)?;
    let mut partition = BinPartition::single(f64::INFINITY);
    let flat = [0.0];
    let mut record = RunRecord {
        n_chains: n,
        iterations: config.iterations,
        prelim_iterations: 0,
        theta_trace: vec![TraceRow {
            iteration: 0,
            values: vec![1.0],
        }],
        nu_trace: Vec::with_capacity(config.iterations),
        boundary_events: Vec::new(),
        acceptance_trace: Vec::with_capacity(config.iterations),
        samples: Vec::new(),
        fh_events: Vec::new(),
        final_partition: partition.clone(),
        final_log_theta: vec![0.0],
        final_phi: vec![1.0],
        final_states: Vec::new(),
        density_evaluations: (n * config.iterations) as u64,
        initial_evaluations: n as u64,
        nonfinite_rejections: 0,
        xi_range: None,
    };
    let mut lowest = f64::INFINITY;
    let mut highest = f64::NEG_INFINITY;
    for t in 1..=config.iterations as u64 {
        let sweep = ensemble.mh_sweep(target, &proposal, &xi, &flat, &partition);
        record.nonfinite_rejections += sweep.nonfinite as u64;
        if config.adapt_proposal {
            proposal.adapt(&ensemble.states(), sweep.acceptance());
        }
        for v in ensemble.xis() {
            lowest = lowest.min(v);
            highest = highest.max(v);
        }
        record.theta_trace.push(TraceRow {
            iteration: t,
            values: vec![1.0],
        });
        record.nu_trace.push(TraceRow {
            iteration: t,
            values: vec![1.0],
        });
        record.acceptance_trace.push(AcceptanceRow {
            iteration: t,
            acceptance: sweep.acceptance(),
            scale: proposal.scale(),
        });
        if config.thin > 0 && t % config.thin as u64 == 0 {
            record.samples.extend(
                ensemble
                    .chains
                    .iter()
                    .enumerate()
                    .map(|(j, c)| SampleRecord {
                        iteration: t,
                        chain: j,
                        state: c.state.clone(),
                        log_density: c.log_density,
                        xi: c.xi,
                        bin: 0,
                    }),
            );
        }
    }
    if lowest.is_finite() {
        partition.extend_range(lowest);
        record.xi_range = Some((lowest, highest));
    }
    record.final_partition = partition;
    record.final_states = ensemble.chains.into_iter().map(|c| c.state).collect();
    Ok(record)
}
