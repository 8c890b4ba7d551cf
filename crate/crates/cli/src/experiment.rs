//! Runs one configured experiment and writes its artifact directory.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use pawl_core::baselines::smc::{smc_run, GaussianInitial, InitialDistribution, SmcConfig};
use pawl_core::baselines::{pamh_run, PamhConfig, Tempered};
use pawl_core::diagnostics::{
    component_means, energy_range, mean_state, mixture_error_from_means, mode_occupancy,
    theta_error, WeightedSample,
};
use pawl_core::engine::{RunRecord, WangLandau};
use pawl_core::proposals::{
    FlipProposal, MixtureRandomWalk, Proposal, RandomWalk, ScaledRandomWalk,
};
use pawl_core::schedule::Schedule;
use pawl_core::targets::{
    bundled_icefloe, bundled_mixture_data, bundled_pollution, enumerate_psi, format_real,
    load_grid_image, load_pollution_data, load_real_values, Flippable, GPriorTarget,
    GaussianMixture1d, IsingTarget, MixturePosteriorTarget, MixturePrior, StandardGaussian,
    StateView, Target, TrimodalTarget,
};
use rand::Rng;
use rayon::prelude::*;

use crate::artifacts::{Metrics, RunSummary, Tables, FAILURE_MARKER};
use crate::config::{Algorithm, ExperimentConfig, ProposalKind, TargetName};
use crate::{HarnessError, OUTPUT_ROOT_VAR};

/// Parent directory for run directories: `output_dir`, then
/// `$PAWL_OUTPUT_ROOT`, then `runs`.
pub fn output_root(config: &ExperimentConfig) -> PathBuf {
    config
        .output_dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Validates, runs and writes artifacts. Returns the run directory.
///
/// Configuration errors are raised before anything is written. A failure
/// after the run started leaves `summary.toml` with `status = "failed"` and
/// a `FAILED` marker holding the message.
pub fn run_experiment(config: &ExperimentConfig) -> Result<PathBuf, HarnessError> {
    config.validate()?;
    let target = build_target(config)?;
    let dir = output_root(config).join(config.run_name());
    fs::create_dir_all(&dir)?;
    let marker = dir.join(FAILURE_MARKER);
    if marker.exists() {
        fs::remove_file(&marker)?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| HarnessError::Runtime(format!("cannot start thread pool: {e}")))?;
    let started = Instant::now();
    let result = pool.install(|| target.execute(config));
    let wall = started.elapsed().as_secs_f64();

    let mut summary = RunSummary {
        status: "ok".into(),
        target: config.target.name.as_str().into(),
        algorithm: config.algorithm.as_str().into(),
        seed: config.seed,
        wall_clock_seconds: wall,
        density_evaluations: 0,
        resampling_events: 0,
        error: None,
        config: config.clone(),
    };
    match result {
        Ok(run) => {
            summary.density_evaluations = run.density_evaluations;
            summary.resampling_events = run.resampling_events;
            run.tables.write(&dir)?;
            summary.write(&dir)?;
            Ok(dir)
        }
        Err(e) => {
            summary.status = "failed".into();
            summary.error = Some(e.to_string());
            summary.write(&dir)?;
            fs::write(&marker, format!("{e}\n"))?;
            Err(e)
        }
    }
}

/// Runs each seed of `config` concurrently. Results come back in seed order.
pub fn run_seeds(config: &ExperimentConfig, seeds: &[u64]) -> Vec<Result<PathBuf, HarnessError>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut c = config.clone();
            c.seed = seed;
            run_experiment(&c)
        })
        .collect()
}

struct Finished {
    tables: Tables,
    density_evaluations: u64,
    resampling_events: u64,
}

enum BuiltTarget {
    Trimodal(TrimodalTarget),
    Gaussian(StandardGaussian),
    Bimodal(GaussianMixture1d),
    Mixture(MixturePosteriorTarget),
    Gprior(GPriorTarget),
    Ising(IsingTarget),
}

fn data_error(e: pawl_core::Error) -> HarnessError {
    HarnessError::Config(format!("target.data: {e}"))
}

fn build_target(config: &ExperimentConfig) -> Result<BuiltTarget, HarnessError> {
    let t = &config.target;
    let data = t.data.as_deref();
    Ok(match t.name {
        TargetName::Trimodal => BuiltTarget::Trimodal(TrimodalTarget::default()),
        TargetName::Gaussian => BuiltTarget::Gaussian(StandardGaussian { dim: t.dim }),
        TargetName::Bimodal => BuiltTarget::Bimodal(GaussianMixture1d::bimodal()),
        TargetName::Mixture => {
            let y = match data {
                Some(p) => load_real_values(p).map_err(data_error)?,
                None => bundled_mixture_data(),
            };
            let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let kappa = 4.0 / ((hi - lo) * (hi - lo));
            if !(hi > lo && kappa.is_finite() && kappa > 0.0) {
                return Err(HarnessError::Config(
                    "target.data: observations must take at least two distinct values within a finite, representable range".into(),
                ));
            }
            let target = MixturePosteriorTarget::new(y, t.components);
            BuiltTarget::Mixture(if t.concentrated_initial {
                target.with_concentrated_initial()
            } else {
                target
            })
        }
        TargetName::Gprior => {
            let d = match data {
                Some(p) => load_pollution_data(p).map_err(data_error)?,
                None => bundled_pollution(),
            };
            BuiltTarget::Gprior(GPriorTarget::new(&d, t.log_g))
        }
        TargetName::Ising => {
            let image = match data {
                Some(p) => load_grid_image(p).map_err(data_error)?,
                None => bundled_icefloe(),
            };
            BuiltTarget::Ising(IsingTarget::new(image, t.alpha, t.beta))
        }
    })
}

impl BuiltTarget {
    fn execute(&self, cfg: &ExperimentConfig) -> Result<Finished, HarnessError> {
        match self {
            BuiltTarget::Trimodal(t) => {
                let centers: Vec<Vec<f64>> = t.means.iter().map(|m| m.to_vec()).collect();
                let radius = cfg.diagnostics.mode_radius;
                continuous(t, cfg, gaussian_start(cfg, 2)?, |ws, m| {
                    let occ = mode_occupancy(ws, &centers, radius);
                    for (i, o) in occ[..centers.len()].iter().enumerate() {
                        m.push(format!("occupancy_mode{}", i + 1), *o);
                    }
                    m.push("occupancy_rest", occ[centers.len()]);
                })
            }
            BuiltTarget::Gaussian(t) => continuous(t, cfg, gaussian_start(cfg, t.dim)?, |ws, m| {
                for j in 0..t.dim {
                    m.push(format!("mean_x{j}"), ws.expectation(|x| x[j]));
                }
            }),
            BuiltTarget::Bimodal(t) => continuous(t, cfg, gaussian_start(cfg, 1)?, |ws, m| {
                m.push("mean_x0", ws.expectation(|x| x[0]));
                m.push(
                    "mass_positive",
                    ws.expectation(|x| f64::from(u8::from(x[0] > 0.0))),
                );
            }),
            BuiltTarget::Mixture(t) => {
                let k = t.k();
                continuous(
                    t,
                    cfg,
                    SmcStart::Prior(t.initial_distribution()),
                    |ws, m| {
                        let means = component_means(ws, k);
                        m.push("mixture_error", mixture_error_from_means(&means));
                        for (c, mu) in means.iter().enumerate() {
                            m.push(format!("mu_{}", c + 1), *mu);
                        }
                    },
                )
            }
            BuiltTarget::Gprior(t) => discrete(t, cfg, |ws, record, m| {
                for (j, p) in mean_bits(ws).iter().enumerate() {
                    m.push(format!("inclusion_{}", j + 1), *p);
                }
                if let Some(r) = record.filter(|_| cfg.algorithm == Algorithm::Pawl) {
                    let psi = enumerate_psi(t, &r.final_partition);
                    let log_psi: Vec<f64> = psi.iter().map(|p| p.ln()).collect();
                    let err = theta_error(&r.final_log_theta, &log_psi)?;
                    m.push("theta_error", err);
                }
                Ok(())
            }),
            BuiltTarget::Ising(t) => discrete(t, cfg, |ws, _, m| {
                let p = mean_state(ws);
                let mean = p.iter().sum::<f64>() / p.len().max(1) as f64;
                m.push("mean_foreground", mean);
                Ok(())
            }),
        }
    }
}

fn mean_bits(ws: &WeightedSample<Vec<bool>>) -> Vec<f64> {
    let Some(first) = ws.states.first() else {
        return Vec::new();
    };
    (0..first.n_sites())
        .map(|j| ws.expectation(|x| f64::from(u8::from(x[j]))))
        .collect()
}

/// Starting distribution for SMC on continuous targets.
enum SmcStart<'a> {
    Prior(&'a MixturePrior),
    Gaussian(GaussianInitial),
}

impl InitialDistribution for SmcStart<'_> {
    fn dim(&self) -> usize {
        match self {
            SmcStart::Prior(p) => InitialDistribution::dim(*p),
            SmcStart::Gaussian(g) => g.dim(),
        }
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        match self {
            SmcStart::Prior(p) => InitialDistribution::log_density(*p, x),
            SmcStart::Gaussian(g) => g.log_density(x),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            SmcStart::Prior(p) => InitialDistribution::sample(*p, rng),
            SmcStart::Gaussian(g) => g.sample(rng),
        }
    }
}

fn gaussian_start(cfg: &ExperimentConfig, dim: usize) -> Result<SmcStart<'static>, HarnessError> {
    let mean = cfg
        .smc
        .initial_mean
        .clone()
        .unwrap_or_else(|| vec![0.0; dim]);
    if mean.len() != dim {
        return Err(HarnessError::Config(format!(
            "smc.initial_mean: expected {dim} values, got {}",
            mean.len()
        )));
    }
    Ok(SmcStart::Gaussian(GaussianInitial {
        mean,
        sd: cfg.smc.initial_sd,
    }))
}

fn random_walk(cfg: &ExperimentConfig, dim: usize) -> RandomWalk {
    let p = &cfg.proposal;
    match p.kind {
        ProposalKind::Scaled => {
            let mut rw = ScaledRandomWalk::new(p.sigma0);
            rw.adapter.target_rate = p.target_rate;
            rw.adapter.rho = Schedule::Power {
                scale: p.rho_scale,
                exponent: p.rho_exponent,
            };
            RandomWalk::Scaled(rw)
        }
        _ => {
            let mut rw = MixtureRandomWalk::new(dim, p.sigma0).with_safety_weight(p.safety_weight);
            if let Some(s) = p.safety_scale {
                rw.adapter.safety_scale = s;
            }
            RandomWalk::Mixture(rw)
        }
    }
}

fn continuous<T>(
    target: &T,
    cfg: &ExperimentConfig,
    start: SmcStart<'_>,
    extra: impl Fn(&WeightedSample<Vec<f64>>, &mut Metrics),
) -> Result<Finished, HarnessError>
where
    T: Target<State = Vec<f64>>,
{
    let dim = match target.state_space() {
        pawl_core::targets::StateSpace::Continuous { dim } => dim,
        _ => unreachable!("continuous targets only"),
    };
    if cfg.algorithm == Algorithm::Smc {
        return run_smc(target, cfg, &start, extra);
    }
    let (mut finished, sample, _) = run_mcmc(target, random_walk(cfg, dim), cfg)?;
    extra(&sample, &mut finished.tables.metrics);
    Ok(finished)
}

fn discrete<T>(
    target: &T,
    cfg: &ExperimentConfig,
    extra: impl Fn(
        &WeightedSample<T::State>,
        Option<&RunRecord<T::State>>,
        &mut Metrics,
    ) -> pawl_core::Result<()>,
) -> Result<Finished, HarnessError>
where
    T: Target,
    T::State: Flippable,
{
    let flip = FlipProposal {
        flip_count: cfg.proposal.flip_count,
    };
    let (mut finished, sample, record) = run_mcmc(target, flip, cfg)?;
    extra(&sample, Some(&record), &mut finished.tables.metrics)?;
    Ok(finished)
}

type McmcOutput<S> = (Finished, WeightedSample<S>, RunRecord<S>);

/// PAWL, PAMH or tempered MH. Returns the artifacts, the reweighted sample
/// after burn-in and the record.
fn run_mcmc<T, P>(
    target: &T,
    proposal: P,
    cfg: &ExperimentConfig,
) -> Result<McmcOutput<T::State>, HarnessError>
where
    T: Target,
    P: Proposal<T::State>,
{
    let pamh = PamhConfig {
        n_chains: cfg.run.n_chains,
        iterations: cfg.run.iterations,
        thin: cfg.run.thin,
        adapt_proposal: cfg.proposal.adapt,
    };
    let (record, log_weights) = match cfg.algorithm {
        Algorithm::Pawl => {
            let record = WangLandau::new(target, proposal, cfg.wang_landau()).run(cfg.seed)?;
            let w = record
                .samples
                .iter()
                .map(|s| record.final_log_theta[record.final_partition.locate(s.xi)])
                .collect();
            (record, w)
        }
        Algorithm::Pamh => {
            let record = pamh_run(target, proposal, &pamh, cfg.seed)?;
            let w = vec![0.0; record.samples.len()];
            (record, w)
        }
        Algorithm::TemperedMh => {
            let tau = cfg.run.temperature;
            let mut record = pamh_run(&Tempered::new(target, tau), proposal, &pamh, cfg.seed)?;
            // back to the untempered scale; weights are pi / pi^(1/tau)
            for s in &mut record.samples {
                s.log_density *= tau;
                s.xi *= tau;
            }
            record.xi_range = record.xi_range.map(|(lo, hi)| (lo * tau, hi * tau));
            let w = record
                .samples
                .iter()
                .map(|s| (1.0 - 1.0 / tau) * s.log_density)
                .collect();
            (record, w)
        }
        Algorithm::Smc => unreachable!("smc is dispatched before the MCMC runners"),
    };

    let burn = (cfg.diagnostics.burn_in * record.samples.len() as f64).floor() as usize;
    let kept = &record.samples[burn.min(record.samples.len())..];
    let sample = WeightedSample::from_log_weights(
        kept.iter().map(|s| s.state.clone()).collect(),
        &log_weights[burn.min(log_weights.len())..],
        cfg.run_name(),
    )?;

    let mut metrics = Metrics::default();
    metrics.push("density_evaluations", record.density_evaluations as f64);
    metrics.push("samples_used", kept.len() as f64);
    if let Some((lo, hi)) = energy_range(&record) {
        metrics.push("energy_min", lo);
        metrics.push("energy_max", hi);
        metrics.push("energy_width", hi - lo);
    }
    let acc = &record.acceptance_trace;
    if !acc.is_empty() {
        let mean = acc.iter().map(|a| a.acceptance).sum::<f64>() / acc.len() as f64;
        metrics.push("mean_acceptance", mean);
    }
    if cfg.algorithm == Algorithm::Pawl {
        metrics.push("n_bins", record.final_partition.n_bins() as f64);
        metrics.push("n_splits", record.n_splits() as f64);
        metrics.push("fh_count", record.fh_events.len() as f64);
        if let Some(first) = record.fh_events.first() {
            metrics.push("first_fh_iteration", first.iteration as f64);
        }
    }

    let (sample_header, sample_rows) = sample_table(&record, &log_weights);
    let tables = Tables {
        theta: record.theta_trace.clone(),
        nu: record.nu_trace.clone(),
        boundary: record.boundary_events.clone(),
        acceptance: record.acceptance_trace.clone(),
        flat_histogram: record.fh_events.clone(),
        ess: Vec::new(),
        sample_header,
        sample_rows,
        metrics,
    };
    let finished = Finished {
        tables,
        density_evaluations: record.density_evaluations,
        resampling_events: 0,
    };
    Ok((finished, sample, record))
}

const SAMPLE_COLUMNS: [&str; 6] = [
    "iteration",
    "chain",
    "log_density",
    "xi",
    "bin",
    "log_weight",
];

fn sample_table<S: StateView>(
    record: &RunRecord<S>,
    log_weights: &[f64],
) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = SAMPLE_COLUMNS.iter().map(|s| s.to_string()).collect();
    if let Some(first) = record.samples.first() {
        header.extend(first.state.column_names());
    }
    let rows = record
        .samples
        .iter()
        .zip(log_weights)
        .map(|(s, w)| {
            let mut row = vec![
                s.iteration.to_string(),
                s.chain.to_string(),
                format_real(s.log_density),
                format_real(s.xi),
                s.bin.to_string(),
                format_real(*w),
            ];
            row.extend(s.state.fields());
            row
        })
        .collect();
    (header, rows)
}

fn run_smc<T>(
    target: &T,
    cfg: &ExperimentConfig,
    start: &SmcStart<'_>,
    extra: impl Fn(&WeightedSample<Vec<f64>>, &mut Metrics),
) -> Result<Finished, HarnessError>
where
    T: Target<State = Vec<f64>>,
{
    let dim = match target.state_space() {
        pawl_core::targets::StateSpace::Continuous { dim } => dim,
        _ => unreachable!("continuous targets only"),
    };
    if start.dim() != dim {
        return Err(HarnessError::Config(format!(
            "smc initial distribution has dimension {}, target has {dim}",
            start.dim()
        )));
    }
    let smc = SmcConfig {
        n_particles: cfg.smc.particles,
        n_steps: cfg.smc.steps,
        ess_threshold: cfg.smc.ess_threshold,
        n_moves: cfg.smc.moves,
        move_scale: cfg.smc.move_scale,
    };
    let out = smc_run(target, start, &smc, cfg.seed)?;
    let sample =
        WeightedSample::from_log_weights(out.particles.clone(), &out.log_weights, cfg.run_name())?;

    // Output-only evaluations; not part of the algorithm's count.
    let log_density: Vec<f64> = out
        .particles
        .par_iter()
        .map(|x| target.log_density(x))
        .collect();
    let mut header: Vec<String> = SAMPLE_COLUMNS.iter().map(|s| s.to_string()).collect();
    if let Some(first) = out.particles.first() {
        header.extend(first.column_names());
    }
    let step = cfg.smc.steps.to_string();
    let sample_rows = out
        .particles
        .iter()
        .zip(&log_density)
        .zip(&out.log_weights)
        .enumerate()
        .map(|(i, ((x, ld), w))| {
            let mut row = vec![
                step.clone(),
                i.to_string(),
                format_real(*ld),
                format_real(-ld),
                "0".to_string(),
                format_real(*w),
            ];
            row.extend(x.fields());
            row
        })
        .collect();

    let mut metrics = Metrics::default();
    metrics.push("density_evaluations", out.density_evaluations as f64);
    metrics.push("samples_used", out.particles.len() as f64);
    let finite = log_density.iter().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(-v), hi.max(-v))
    });
    if lo <= hi {
        metrics.push("energy_min", lo);
        metrics.push("energy_max", hi);
        metrics.push("energy_width", hi - lo);
    }
    metrics.push("resampling_events", out.resampling_events as f64);
    if let Some(e) = out.ess_trace.last() {
        metrics.push("final_ess", *e);
    }
    extra(&sample, &mut metrics);

    Ok(Finished {
        tables: Tables {
            ess: out.ess_trace.clone(),
            acceptance: out
                .move_acceptance
                .iter()
                .enumerate()
                .map(|(i, a)| pawl_core::engine::AcceptanceRow {
                    iteration: i as u64 + 1,
                    acceptance: *a,
                    scale: None,
                })
                .collect(),
            sample_header: header,
            sample_rows,
            metrics,
            ..Tables::default()
        },
        density_evaluations: out.density_evaluations,
        resampling_events: out.resampling_events as u64,
    })
}
