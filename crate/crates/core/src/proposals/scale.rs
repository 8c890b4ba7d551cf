use rand::Rng;
use rand_distr::StandardNormal;

use super::{Proposal, Proposed};
use crate::schedule::Schedule;

/// Robbins-Monro control of a random-walk scale towards a target
/// acceptance rate:
/// `sigma <- max(floor, sigma + rho_t (2 * 1[A > target] - 1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleAdapter {
    pub sigma: f64,
    pub target_rate: f64,
    pub rho: Schedule,
    pub floor: f64,
    steps: u64,
}

impl ScaleAdapter {
    pub fn new(sigma: f64) -> Self {
        ScaleAdapter {
            sigma,
            target_rate: 0.234,
            rho: Schedule::inverse(),
            floor: 1e-9,
            steps: 0,
        }
    }

    /// Update with an explicit step index `t >= 1`.
    pub fn update_at(&mut self, acceptance: f64, t: u64) -> f64 {
        let direction = if acceptance > self.target_rate {
            1.0
        } else {
            -1.0
        };
        self.sigma = (self.sigma + self.rho.at(t) * direction).max(self.floor);
        self.sigma
    }

    /// Update using the internal step counter.
    pub fn update(&mut self, acceptance: f64) -> f64 {
        self.steps += 1;
        self.update_at(acceptance, self.steps)
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// `x' = x + sigma * z`, `z ~ N(0, I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledRandomWalk {
    pub adapter: ScaleAdapter,
}

impl ScaledRandomWalk {
    pub fn new(sigma: f64) -> Self {
        ScaledRandomWalk {
            adapter: ScaleAdapter::new(sigma),
        }
    }
}

impl Proposal<Vec<f64>> for ScaledRandomWalk {
    fn propose<R: Rng + ?Sized>(&self, current: &Vec<f64>, rng: &mut R) -> Proposed<Vec<f64>> {
        let s = self.adapter.sigma;
        let state = current
            .iter()
            .map(|x| x + s * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Proposed::symmetric(state)
    }

    fn adapt(&mut self, _states: &[&Vec<f64>], acceptance: f64) {
        self.adapter.update(acceptance);
    }

    fn scale(&self) -> Option<f64> {
        Some(self.adapter.sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn robbins_monro_steps() {
        let mut a = ScaleAdapter::new(1.0);
        assert_eq!(a.update_at(0.5, 1), 2.0);
        let mut a = ScaleAdapter::new(1.0);
        assert_eq!(a.update_at(0.1, 2), 0.5);
        let mut a = ScaleAdapter::new(0.1);
        assert_eq!(a.update_at(0.0, 1), 1e-9);
    }

    #[test]
    fn exact_target_rate_counts_as_too_low() {
        let mut a = ScaleAdapter::new(1.0);
        assert_eq!(a.update_at(0.234, 4), 0.75);
    }
}
