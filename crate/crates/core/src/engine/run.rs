use crate::baselines::pamh::explore;
use crate::binning::{
    init_partition, BinPartition, BinningConfig, BoundaryEvent, BoundaryKind, RangePolicy,
    ReactionCoordinate,
};
use crate::proposals::Proposal;
use crate::rng::chain_rngs;
use crate::schedule::Schedule;
use crate::targets::Target;
use crate::{Error, Result};

use super::{
    AcceptanceRow, BiasState, Chain, ChainEnsemble, FlatHistogramEvent, RunRecord, SampleRecord,
    TraceRow,
};

#[derive(Debug, Clone, PartialEq)]
pub struct WangLandauConfig {
    pub n_chains: usize,
    pub iterations: usize,
    /// Flat-histogram tolerance `c`.
    pub flat_tolerance: f64,
    pub gamma: Schedule,
    /// Bias updates every `comm_period` iterations from the summed occupancy.
    pub comm_period: usize,
    /// Keep every chain state each `thin` iterations; 0 keeps none.
    pub thin: usize,
    pub adapt_proposal: bool,
    pub freeze_proposal_after_fh: bool,
    /// Unbiased iterations used to place the initial bins. Skipped when the
    /// range is manual or a partition is supplied.
    pub prelim_iterations: usize,
    pub binning: BinningConfig,
}

impl Default for WangLandauConfig {
    fn default() -> Self {
        WangLandauConfig {
            n_chains: 10,
            iterations: 10_000,
            flat_tolerance: 0.5,
            gamma: Schedule::inverse(),
            comm_period: 1,
            thin: 10,
            adapt_proposal: true,
            freeze_proposal_after_fh: false,
            prelim_iterations: 1000,
            binning: BinningConfig::default(),
        }
    }
}

impl WangLandauConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::Config("n_chains must be at least 1".into()));
        }
        if !(self.flat_tolerance > 0.0 && self.flat_tolerance <= 1.0) {
            return Err(Error::Config(format!(
                "flat_tolerance must lie in (0, 1], got {}",
                self.flat_tolerance
            )));
        }
        if self.comm_period == 0 {
            return Err(Error::Config("comm_period must be at least 1".into()));
        }
        if self.binning.n_bins == 0 {
            return Err(Error::Config("n_bins must be at least 1".into()));
        }
        if !(self.binning.split_threshold > 0.0 && self.binning.split_threshold < 1.0) {
            return Err(Error::Config(format!(
                "split_threshold must lie in (0, 1), got {}",
                self.binning.split_threshold
            )));
        }
        if let RangePolicy::Manual { lo, hi } = self.binning.range {
            if !(hi > lo) {
                return Err(Error::Config(format!("empty manual range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Builds chains from explicit states or from `Target::sample_initial`
/// drawn on each chain's own stream.
pub fn initial_ensemble<T: Target>(
    target: &T,
    xi: &ReactionCoordinate<T::State>,
    n_chains: usize,
    states: Option<Vec<T::State>>,
    seed: u64,
) -> Result<ChainEnsemble<T::State>> {
    let mut rngs = chain_rngs(seed, n_chains);
    let states = match states {
        Some(s) if s.len() != n_chains => {
            return Err(Error::DimensionMismatch {
                expected: n_chains,
                found: s.len(),
            })
        }
        Some(s) => s,
        None => rngs.iter_mut().map(|r| target.sample_initial(r)).collect(),
    };
    let mut chains = Vec::with_capacity(n_chains);
    for (index, (state, rng)) in states.into_iter().zip(rngs).enumerate() {
        let log_density = target.log_density(&state);
        let value = xi.evaluate(&state, log_density);
        if !log_density.is_finite() || !value.is_finite() {
            return Err(Error::NonFiniteInitial {
                chain: index,
                log_density,
                state: format!("{state:?}"),
            });
        }
        chains.push(Chain {
            state,
            log_density,
            xi: value,
            bin: 0,
            rng,
        });
    }
    Ok(ChainEnsemble { chains })
}

/// A configured run.
pub struct WangLandau<'a, T: Target, P> {
    target: &'a T,
    proposal: P,
    config: WangLandauConfig,
    xi: ReactionCoordinate<T::State>,
    initial_states: Option<Vec<T::State>>,
    partition: Option<BinPartition>,
    initial_log_theta: Option<Vec<f64>>,
}

impl<'a, T, P> WangLandau<'a, T, P>
where
    T: Target,
    P: Proposal<T::State>,
{
    pub fn new(target: &'a T, proposal: P, config: WangLandauConfig) -> Self {
        WangLandau {
            target,
            proposal,
            config,
            xi: ReactionCoordinate::NegLogDensity,
            initial_states: None,
            partition: None,
            initial_log_theta: None,
        }
    }

    pub fn with_reaction_coordinate(mut self, xi: ReactionCoordinate<T::State>) -> Self {
        self.xi = xi;
        self
    }

    pub fn with_initial_states(mut self, states: Vec<T::State>) -> Self {
        self.initial_states = Some(states);
        self
    }

    /// Use this partition instead of one built from a preliminary run.
    pub fn with_partition(mut self, partition: BinPartition) -> Self {
        self.partition = Some(partition);
        self
    }

    /// Start from these log bias weights instead of uniform ones. The length
    /// must match the number of bins of the initial partition.
    pub fn with_initial_bias(mut self, log_theta: Vec<f64>) -> Self {
        self.initial_log_theta = Some(log_theta);
        self
    }

    pub fn run(self, seed: u64) -> Result<RunRecord<T::State>> {
        self.run_with_observer(seed, |_, _| {})
    }

    /// Runs and calls `observer(t, ensemble)` after every completed iteration.
    pub fn run_with_observer<F>(self, seed: u64, mut observer: F) -> Result<RunRecord<T::State>>
    where
        F: FnMut(u64, &ChainEnsemble<T::State>),
    {
        let WangLandau {
            target,
            mut proposal,
            config: cfg,
            xi,
            initial_states,
            partition,
            initial_log_theta,
        } = self;
        cfg.validate()?;
        let n = cfg.n_chains;
        let mut ensemble = initial_ensemble(target, &xi, n, initial_states, seed)?;
        let mut nonfinite = 0u64;

        let manual = matches!(cfg.binning.range, RangePolicy::Manual { .. });
        let prelim = if partition.is_none() && !manual {
            cfg.prelim_iterations
        } else {
            0
        };
        let mut partition = match partition {
            Some(p) => p,
            None => {
                let values = if prelim > 0 {
                    let out = explore(
                        target,
                        &mut proposal,
                        &xi,
                        &mut ensemble,
                        prelim,
                        cfg.adapt_proposal,
                    );
                    nonfinite += out.nonfinite;
                    out.xi_values
                } else {
                    ensemble.xis().collect()
                };
                init_partition(&values, cfg.binning.n_bins, cfg.binning.range)?.0
            }
        };
        if target.is_discrete() {
            partition = partition.with_discrete_snapping(true);
        }
        ensemble.relocate(&partition);

        let mut bias = match initial_log_theta {
            Some(lt) if lt.len() != partition.n_bins() => {
                return Err(Error::DimensionMismatch {
                    expected: partition.n_bins(),
                    found: lt.len(),
                })
            }
            Some(lt) => BiasState::from_log_theta(&lt, cfg.flat_tolerance, cfg.gamma),
            None => BiasState::uniform(partition.n_bins(), cfg.flat_tolerance, cfg.gamma),
        };
        let mut theta_trace = vec![TraceRow {
            iteration: 0,
            values: bias.theta(),
        }];
        let mut nu_trace = Vec::with_capacity(cfg.iterations);
        let mut acceptance_trace = Vec::with_capacity(cfg.iterations);
        let mut boundary_events: Vec<BoundaryEvent> = Vec::new();
        let mut fh_events = Vec::new();
        let mut samples = Vec::new();
        let mut lowest_since_tick = f64::INFINITY;
        let mut xi_range: Option<(f64, f64)> = None;
        let mut window = vec![0.0; partition.n_bins()];
        let mut window_steps = 0usize;
        let period = cfg.binning.check_period.max(1) as u64;

        for t in 1..=cfg.iterations as u64 {
            let outcome = ensemble.mh_sweep(target, &proposal, &xi, bias.log_theta(), &partition);
            nonfinite += outcome.nonfinite as u64;

            let adapt = cfg.adapt_proposal && !(cfg.freeze_proposal_after_fh && bias.stage() > 0);
            if adapt {
                proposal.adapt(&ensemble.states(), outcome.acceptance());
            }

            for value in ensemble.xis() {
                if cfg.binning.adaptive {
                    partition.observe(value);
                }
                lowest_since_tick = lowest_since_tick.min(value);
                xi_range = Some(match xi_range {
                    None => (value, value),
                    Some((lo, hi)) => (lo.min(value), hi.max(value)),
                });
            }

            if t % period == 0 {
                if partition.extend_range(lowest_since_tick) {
                    boundary_events.push(BoundaryEvent {
                        iteration: t,
                        kind: BoundaryKind::Extend,
                        bin: 0,
                        value: lowest_since_tick,
                    });
                }
                lowest_since_tick = f64::INFINITY;
                if cfg.binning.adaptive {
                    let fh_reached = bias.stage() > 0;
                    let events = partition.maintenance_tick(&mut bias, t, &cfg.binning, fh_reached);
                    for e in events
                        .iter()
                        .rev()
                        .filter(|e| e.kind == BoundaryKind::Split)
                    {
                        let half = 0.5 * window[e.bin];
                        window[e.bin] = half;
                        window.insert(e.bin + 1, half);
                    }
                    if !events.is_empty() {
                        ensemble.relocate(&partition);
                    }
                    boundary_events.extend(events);
                }
            }

            let proportions = bias.update_proportions(&ensemble.bins());
            for (w, p) in window.iter_mut().zip(&proportions) {
                *w += p;
            }
            window_steps += 1;

            nu_trace.push(TraceRow {
                iteration: t,
                values: bias.nu(),
            });
            if bias.flat_histogram_check() {
                fh_events.push(FlatHistogramEvent {
                    iteration: t,
                    max_deviation: bias.max_deviation(),
                    threshold: bias.flat_threshold(),
                });
                bias.register_flat_histogram();
            }
            if t % cfg.comm_period as u64 == 0 {
                bias.update_bias_accumulated(&window, window_steps);
                window.iter_mut().for_each(|w| *w = 0.0);
                window_steps = 0;
            }

            theta_trace.push(TraceRow {
                iteration: t,
                values: bias.theta(),
            });
            acceptance_trace.push(AcceptanceRow {
                iteration: t,
                acceptance: outcome.acceptance(),
                scale: proposal.scale(),
            });
            if cfg.thin > 0 && t % cfg.thin as u64 == 0 {
                samples.extend(
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
                            bin: c.bin,
                        }),
                );
            }
            observer(t, &ensemble);
        }

        Ok(RunRecord {
            n_chains: n,
            iterations: cfg.iterations,
            prelim_iterations: prelim,
            theta_trace,
            nu_trace,
            boundary_events,
            acceptance_trace,
            samples,
            fh_events,
            final_log_theta: bias.log_theta().to_vec(),
            final_phi: bias.phi().to_vec(),
            final_partition: partition,
            final_states: ensemble.chains.into_iter().map(|c| c.state).collect(),
            density_evaluations: (n * (cfg.iterations + prelim)) as u64,
            initial_evaluations: n as u64,
            nonfinite_rejections: nonfinite,
            xi_range,
        })
    }
}

/// Convenience wrapper around [`WangLandau`] with default reaction
/// coordinate and sampled initial states.
pub fn wl_run<T, P>(
    target: &T,
    proposal: P,
    config: &WangLandauConfig,
    seed: u64,
) -> Result<RunRecord<T::State>>
where
    T: Target,
    P: Proposal<T::State>,
{
    WangLandau::new(target, proposal, config.clone()).run(seed)
}
