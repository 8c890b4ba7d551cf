use rand::seq::index::sample;
use rand::Rng;

use super::{Proposal, Proposed};
use crate::targets::Flippable;

/// Flips `flip_count` distinct sites chosen uniformly. Symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipProposal {
    pub flip_count: usize,
}

impl Default for FlipProposal {
    fn default() -> Self {
        FlipProposal { flip_count: 1 }
    }
}

impl<S: Flippable + Clone + Send + Sync> Proposal<S> for FlipProposal {
    fn propose<R: Rng + ?Sized>(&self, current: &S, rng: &mut R) -> Proposed<S> {
        let n = current.n_sites();
        let mut state = current.clone();
        if self.flip_count <= 1 {
            let site = rng.random_range(0..n);
            state.flip(site);
            return Proposed {
                state,
                log_correction: 0.0,
                flipped: Some(site),
            };
        }
        for site in sample(rng, n, self.flip_count.min(n)) {
            state.flip(site);
        }
        Proposed::symmetric(state)
    }
}

/// Uniform jump to one of the other `size - 1` states of a finite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformJump {
    pub size: usize,
}

impl Proposal<usize> for UniformJump {
    fn propose<R: Rng + ?Sized>(&self, current: &usize, rng: &mut R) -> Proposed<usize> {
        let j = rng.random_range(0..self.size - 1);
        Proposed::symmetric(if j >= *current { j + 1 } else { j })
    }
}
