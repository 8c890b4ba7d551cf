//! Proposal kernels and their adaptation.

mod covariance;
mod flip;
mod scale;

pub use covariance::{CovarianceAdapter, MixtureRandomWalk};
pub use flip::{FlipProposal, UniformJump};
pub use scale::{ScaleAdapter, ScaledRandomWalk};

use rand::Rng;

/// A proposed state with the log proposal correction
/// `log q(x' -> x) - log q(x -> x')` (zero for symmetric kernels).
#[derive(Debug, Clone, PartialEq)]
pub struct Proposed<S> {
    pub state: S,
    pub log_correction: f64,
    /// Set when the proposal differs from the current state at exactly one
    /// site, so targets can evaluate the density change locally.
    pub flipped: Option<usize>,
}

impl<S> Proposed<S> {
    pub fn symmetric(state: S) -> Self {
        Proposed {
            state,
            log_correction: 0.0,
            flipped: None,
        }
    }
}

pub trait Proposal<S>: Send + Sync {
    fn propose<R: Rng + ?Sized>(&self, current: &S, rng: &mut R) -> Proposed<S>;

    /// Called once per iteration with every chain's state and the ensemble
    /// acceptance fraction of that iteration.
    fn adapt(&mut self, _states: &[&S], _acceptance: f64) {}

    /// Current random-walk scale, when there is one.
    fn scale(&self) -> Option<f64> {
        None
    }
}

/// Continuous random-walk kernels selectable at run time.
#[derive(Debug, Clone)]
pub enum RandomWalk {
    Scaled(ScaledRandomWalk),
    Mixture(MixtureRandomWalk),
}

impl Proposal<Vec<f64>> for RandomWalk {
    fn propose<R: Rng + ?Sized>(&self, current: &Vec<f64>, rng: &mut R) -> Proposed<Vec<f64>> {
        match self {
            RandomWalk::Scaled(p) => p.propose(current, rng),
            RandomWalk::Mixture(p) => p.propose(current, rng),
        }
    }

    fn adapt(&mut self, states: &[&Vec<f64>], acceptance: f64) {
        match self {
            RandomWalk::Scaled(p) => p.adapt(states, acceptance),
            RandomWalk::Mixture(p) => p.adapt(states, acceptance),
        }
    }

    fn scale(&self) -> Option<f64> {
        match self {
            RandomWalk::Scaled(p) => p.scale(),
            RandomWalk::Mixture(p) => p.scale(),
        }
    }
}
