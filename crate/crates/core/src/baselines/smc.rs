//! Tempered sequential Monte Carlo from an initial distribution `p0` to the
//! target through `pi^zeta p0^(1 - zeta)`, `zeta_k = k / K`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::rng::{chain_rngs, shared_rng, StreamRng};
use crate::targets::{MixturePrior, Target};
use crate::{log_sum_exp, Error, Result};

/// A distribution that can be sampled and evaluated, used to start SMC.
pub trait InitialDistribution: Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, x: &[f64]) -> f64;
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64>;
}

impl InitialDistribution for MixturePrior {
    fn dim(&self) -> usize {
        MixturePrior::dim(self)
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        MixturePrior::log_density(self, x)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        MixturePrior::sample(self, rng)
    }
}

/// Isotropic Gaussian `N(mean, sd^2 I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianInitial {
    pub mean: Vec<f64>,
    pub sd: f64,
}

impl InitialDistribution for GaussianInitial {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.mean.len() as f64;
        let ss: f64 = x
            .iter()
            .zip(&self.mean)
            .map(|(a, m)| ((a - m) / self.sd).powi(2))
            .sum();
        -0.5 * ss - d * (self.sd.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .map(|m| m + self.sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmcConfig {
    pub n_particles: usize,
    pub n_steps: usize,
    /// Resample when ESS drops below this fraction of the particle count.
    pub ess_threshold: f64,
    pub n_moves: usize,
    /// Move covariance is this fraction of the particle covariance.
    pub move_scale: f64,
}

impl Default for SmcConfig {
    fn default() -> Self {
        SmcConfig {
            n_particles: 10_000,
            n_steps: 100,
            ess_threshold: 0.9,
            n_moves: 5,
            move_scale: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmcOutput {
    pub particles: Vec<Vec<f64>>,
    pub log_weights: Vec<f64>,
    pub resampling_events: usize,
    /// Target evaluations, including the initial one per particle.
    pub density_evaluations: u64,
    /// ESS after each reweighting.
    pub ess_trace: Vec<f64>,
    pub move_acceptance: Vec<f64>,
}

impl SmcOutput {
    pub fn weights(&self) -> Vec<f64> {
        let z = log_sum_exp(&self.log_weights);
        self.log_weights.iter().map(|w| (w - z).exp()).collect()
    }
}

/// Effective sample size `(sum w)^2 / sum w^2`.
pub fn ess(log_weights: &[f64]) -> Result<f64> {
    let z = log_sum_exp(log_weights);
    if log_weights.is_empty() || !z.is_finite() {
        return Err(Error::DegenerateWeights { step: 0 });
    }
    let sq: f64 = log_weights.iter().map(|w| (2.0 * (w - z)).exp()).sum();
    Ok(1.0 / sq)
}

/// Systematic resampling with a uniform shift drawn from `rng`.
pub fn systematic_resample<R: Rng + ?Sized>(
    log_weights: &[f64],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let u: f64 = rng.random();
    systematic_resample_with_shift(log_weights, u)
}

/// Systematic resampling with points `(shift + j) / M`, `shift` in `[0, 1)`.
pub fn systematic_resample_with_shift(log_weights: &[f64], shift: f64) -> Result<Vec<usize>> {
    let m = log_weights.len();
    let top = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if m == 0 || !top.is_finite() {
        return Err(Error::DegenerateWeights { step: 0 });
    }
    let scaled: Vec<f64> = log_weights.iter().map(|w| (w - top).exp()).collect();
    let factor = m as f64 / scaled.iter().sum::<f64>();
    let mut out = Vec::with_capacity(m);
    let mut cumulative = scaled[0] * factor;
    let mut i = 0;
    for j in 0..m {
        let point = shift + j as f64;
        while cumulative <= point && i + 1 < m {
            i += 1;
            cumulative += scaled[i] * factor;
        }
        out.push(i);
    }
    Ok(out)
}

struct Particle {
    x: Vec<f64>,
    log_target: f64,
    log_initial: f64,
    rng: StreamRng,
}

fn bridge(log_target: f64, log_initial: f64, zeta: f64) -> f64 {
    let v = if zeta <= 0.0 {
        log_initial
    } else if zeta >= 1.0 {
        log_target
    } else if log_target == f64::NEG_INFINITY || log_initial == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        zeta * log_target + (1.0 - zeta) * log_initial
    };
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn particle_covariance(particles: &[Particle], dim: usize) -> DMatrix<f64> {
    let m = particles.len() as f64;
    let mut mean = DVector::zeros(dim);
    for p in particles {
        mean += DVector::from_column_slice(&p.x);
    }
    mean /= m;
    let mut cov = DMatrix::zeros(dim, dim);
    for p in particles {
        let d = DVector::from_column_slice(&p.x) - &mean;
        cov += &d * d.transpose();
    }
    cov / (m - 1.0).max(1.0)
}

pub fn smc_run<T, D>(target: &T, initial: &D, config: &SmcConfig, seed: u64) -> Result<SmcOutput>
where
    T: Target<State = Vec<f64>>,
    D: InitialDistribution,
{
    let m = config.n_particles;
    let k_steps = config.n_steps;
    if m < 2 || k_steps == 0 {
        return Err(Error::Config(
            "SMC needs at least 2 particles and 1 step".into(),
        ));
    }
    let dim = initial.dim();
    let mut shared = shared_rng(seed);
    let mut particles: Vec<Particle> = chain_rngs(seed, m)
        .into_iter()
        .map(|mut rng| {
            let x = initial.sample(&mut rng);
            let log_target = target.log_density(&x);
            let log_initial = initial.log_density(&x);
            Particle {
                x,
                log_target: if log_target.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    log_target
                },
                log_initial,
                rng,
            }
        })
        .collect();
    let mut log_weights = vec![0.0; m];
    let mut out = SmcOutput {
        particles: Vec::new(),
        log_weights: Vec::new(),
        resampling_events: 0,
        density_evaluations: m as u64,
        ess_trace: Vec::with_capacity(k_steps),
        move_acceptance: Vec::new(),
    };

    for step in 1..=k_steps {
        let zeta_prev = (step - 1) as f64 / k_steps as f64;
        let current_ess = ess(&log_weights).map_err(|_| Error::DegenerateWeights { step })?;
        if current_ess < config.ess_threshold * m as f64 {
            let ancestors = systematic_resample(&log_weights, &mut shared)
                .map_err(|_| Error::DegenerateWeights { step })?;
            let copies: Vec<(Vec<f64>, f64, f64)> = ancestors
                .iter()
                .map(|&a| {
                    let p = &particles[a];
                    (p.x.clone(), p.log_target, p.log_initial)
                })
                .collect();
            for (p, (x, lt, li)) in particles.iter_mut().zip(copies) {
                p.x = x;
                p.log_target = lt;
                p.log_initial = li;
            }
            log_weights.iter_mut().for_each(|w| *w = 0.0);
            out.resampling_events += 1;

            let mut cov = particle_covariance(&particles, dim) * config.move_scale;
            let ridge = 1e-10 * cov.trace() / dim as f64;
            for i in 0..dim {
                cov[(i, i)] += ridge.max(f64::MIN_POSITIVE);
            }
            let chol = cov
                .cholesky()
                .map(|c| c.l())
                .ok_or(Error::DegenerateWeights { step })?;
            let n_moves = config.n_moves;
            let accepted: usize = particles
                .par_iter_mut()
                .map(|p| {
                    let mut acc = 0;
                    for _ in 0..n_moves {
                        let z: Vec<f64> = (0..dim).map(|_| p.rng.sample(StandardNormal)).collect();
                        let step_vec = &chol * DVector::from_vec(z);
                        let y: Vec<f64> =
                            p.x.iter()
                                .zip(step_vec.iter())
                                .map(|(a, b)| a + b)
                                .collect();
                        let lt = target.log_density(&y);
                        let li = initial.log_density(&y);
                        let u: f64 = p.rng.random();
                        let new = bridge(lt, li, zeta_prev);
                        let old = bridge(p.log_target, p.log_initial, zeta_prev);
                        if new.is_finite() && u.ln() < new - old {
                            p.x = y;
                            p.log_target = lt;
                            p.log_initial = li;
                            acc += 1;
                        }
                    }
                    acc
                })
                .sum();
            out.density_evaluations += (m * n_moves) as u64;
            out.move_acceptance
                .push(accepted as f64 / (m * n_moves).max(1) as f64);
        }
        let dz = 1.0 / k_steps as f64;
        for (w, p) in log_weights.iter_mut().zip(&particles) {
            let inc = bridge(p.log_target, p.log_initial, zeta_prev + dz)
                - bridge(p.log_target, p.log_initial, zeta_prev);
            *w += if inc.is_nan() { f64::NEG_INFINITY } else { inc };
        }
        out.ess_trace
            .push(ess(&log_weights).map_err(|_| Error::DegenerateWeights { step })?);
    }
    out.particles = particles.into_iter().map(|p| p.x).collect();
    out.log_weights = log_weights;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ess_cases() {
        assert!((ess(&[0.0; 8]).unwrap() - 8.0).abs() < 1e-12);
        let ninf = f64::NEG_INFINITY;
        assert!((ess(&[0.0, ninf, ninf]).unwrap() - 1.0).abs() < 1e-12);
        let h = 0.5f64.ln();
        assert!((ess(&[h, h, ninf, ninf]).unwrap() - 2.0).abs() < 1e-12);
        assert!(ess(&[ninf, ninf]).is_err());
    }

    #[test]
    fn systematic_cases() {
        let ninf = f64::NEG_INFINITY;
        assert_eq!(
            systematic_resample_with_shift(&[0.0, ninf, ninf, ninf], 0.7).unwrap(),
            vec![0; 4]
        );
        for u in [0.0, 0.3, 0.999] {
            assert_eq!(
                systematic_resample_with_shift(&[0.0; 5], u).unwrap(),
                vec![0, 1, 2, 3, 4]
            );
        }
    }
}
