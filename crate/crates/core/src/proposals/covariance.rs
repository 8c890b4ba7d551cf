use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Proposal, Proposed};
use crate::{Error, Result};

/// Streaming mean and covariance of every fed point, plus the Cholesky
/// factor of the regularised covariance used by the adaptive component.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceAdapter {
    dim: usize,
    count: u64,
    mean: DVector<f64>,
    comoment: DMatrix<f64>,
    factor: Option<DMatrix<f64>>,
    /// Weight of the isotropic component.
    pub safety_weight: f64,
    /// Scale of the isotropic component.
    pub safety_scale: f64,
}

impl CovarianceAdapter {
    pub fn new(dim: usize, safety_scale: f64) -> Self {
        CovarianceAdapter {
            dim,
            count: 0,
            mean: DVector::zeros(dim),
            comoment: DMatrix::zeros(dim, dim),
            factor: None,
            safety_weight: 0.05,
            safety_scale,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn feed_point(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        self.count += 1;
        let x = DVector::from_column_slice(x);
        let before = &x - &self.mean;
        self.mean += &before / self.count as f64;
        let after = &x - &self.mean;
        self.comoment += &before * after.transpose();
        Ok(())
    }

    /// Feed a batch and refresh the proposal factor.
    pub fn feed<P: AsRef<[f64]>>(&mut self, batch: &[P]) -> Result<()> {
        for x in batch {
            self.feed_point(x.as_ref())?;
        }
        self.refresh_factor();
        Ok(())
    }

    /// Sample covariance (divisor `n - 1`); zeros below two points.
    pub fn covariance(&self) -> DMatrix<f64> {
        if self.count < 2 {
            return DMatrix::zeros(self.dim, self.dim);
        }
        let c = &self.comoment / (self.count - 1) as f64;
        (&c + c.transpose()) * 0.5
    }

    fn refresh_factor(&mut self) {
        self.factor = None;
        if self.count < self.dim as u64 + 1 {
            return;
        }
        let mut sigma = self.covariance();
        let ridge = 1e-10 * sigma.trace() / self.dim as f64;
        for i in 0..self.dim {
            sigma[(i, i)] += ridge;
        }
        self.factor = sigma.cholesky().map(|c| c.l());
    }

    /// Whether the adaptive component is available.
    pub fn is_ready(&self) -> bool {
        self.factor.is_some()
    }
}

/// Mixture of an adaptive Gaussian random walk with covariance
/// `(2.38^2 / p) Sigma` and an isotropic one with variance `sigma_I^2 / p`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureRandomWalk {
    pub adapter: CovarianceAdapter,
}

impl MixtureRandomWalk {
    /// `initial_scale` is `sigma_0`; the isotropic scale is `10 sigma_0`.
    pub fn new(dim: usize, initial_scale: f64) -> Self {
        MixtureRandomWalk {
            adapter: CovarianceAdapter::new(dim, 10.0 * initial_scale),
        }
    }

    pub fn with_safety_weight(mut self, w: f64) -> Self {
        self.adapter.safety_weight = w;
        self
    }
}

impl Proposal<Vec<f64>> for MixtureRandomWalk {
    fn propose<R: Rng + ?Sized>(&self, current: &Vec<f64>, rng: &mut R) -> Proposed<Vec<f64>> {
        let a = &self.adapter;
        let p = a.dim as f64;
        let u: f64 = rng.random();
        let z: Vec<f64> = (0..a.dim).map(|_| rng.sample(StandardNormal)).collect();
        let state = match &a.factor {
            Some(l) if u >= a.safety_weight => {
                let step = l * DVector::from_vec(z) * (2.38 / p.sqrt());
                current
                    .iter()
                    .zip(step.iter())
                    .map(|(x, s)| x + s)
                    .collect()
            }
            _ => {
                let s = a.safety_scale / p.sqrt();
                current.iter().zip(&z).map(|(x, z)| x + s * z).collect()
            }
        };
        Proposed::symmetric(state)
    }

    fn adapt(&mut self, states: &[&Vec<f64>], _acceptance: f64) {
        if let Err(e) = self.adapter.feed(states) {
            log::warn!("covariance adaptation skipped: {e}");
        }
    }
}
