use rand::Rng;
use rayon::prelude::*;

use crate::binning::{BinPartition, ReactionCoordinate};
use crate::proposals::Proposal;
use crate::rng::StreamRng;
use crate::targets::{StateView, Target};

/// Ensembles at least this large are swept in parallel.
const PARALLEL_MIN_CHAINS: usize = 32;

/// One Markov chain with its cached density, reaction coordinate and bin.
#[derive(Debug, Clone)]
pub struct Chain<S> {
    pub state: S,
    pub log_density: f64,
    pub xi: f64,
    pub bin: usize,
    pub rng: StreamRng,
}

#[derive(Debug, Clone)]
pub struct ChainEnsemble<S> {
    pub chains: Vec<Chain<S>>,
}

/// Result of one sweep over all chains.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SweepOutcome {
    pub accepted: usize,
    pub nonfinite: usize,
    pub n_chains: usize,
}

impl SweepOutcome {
    pub fn acceptance(&self) -> f64 {
        if self.n_chains == 0 {
            0.0
        } else {
            self.accepted as f64 / self.n_chains as f64
        }
    }
}

impl<S: Clone + StateView + Send + Sync> ChainEnsemble<S> {
    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn states(&self) -> Vec<&S> {
        self.chains.iter().map(|c| &c.state).collect()
    }

    pub fn bins(&self) -> Vec<usize> {
        self.chains.iter().map(|c| c.bin).collect()
    }

    pub fn xis(&self) -> impl Iterator<Item = f64> + '_ {
        self.chains.iter().map(|c| c.xi)
    }

    /// Re-derive every chain's bin after the partition changed.
    pub fn relocate(&mut self, partition: &BinPartition) {
        for c in &mut self.chains {
            c.bin = partition.locate(c.xi);
        }
    }

    /// One Metropolis-Hastings step per chain against the biased density
    /// `log pi(x) - log theta(bin(x))`.
    ///
    /// Each chain draws its proposal first, then one uniform for the
    /// acceptance test. Proposals with a non-finite log density or reaction
    /// coordinate are rejected and counted.
    pub fn mh_sweep<T, P>(
        &mut self,
        target: &T,
        proposal: &P,
        xi: &ReactionCoordinate<S>,
        log_theta: &[f64],
        partition: &BinPartition,
    ) -> SweepOutcome
    where
        T: Target<State = S>,
        P: Proposal<S>,
    {
        let step = |c: &mut Chain<S>| mh_step(c, target, proposal, xi, log_theta, partition);
        let results: Vec<(bool, bool)> = if self.chains.len() >= PARALLEL_MIN_CHAINS {
            self.chains.par_iter_mut().map(step).collect()
        } else {
            self.chains.iter_mut().map(step).collect()
        };
        let mut out = SweepOutcome {
            n_chains: results.len(),
            ..Default::default()
        };
        for (acc, bad) in results {
            out.accepted += acc as usize;
            out.nonfinite += bad as usize;
        }
        out
    }
}

fn mh_step<S, T, P>(
    chain: &mut Chain<S>,
    target: &T,
    proposal: &P,
    xi: &ReactionCoordinate<S>,
    log_theta: &[f64],
    partition: &BinPartition,
) -> (bool, bool)
where
    S: Clone + StateView,
    T: Target<State = S>,
    P: Proposal<S>,
{
    let proposed = proposal.propose(&chain.state, &mut chain.rng);
    let log_density = proposed
        .flipped
        .and_then(|site| target.flip_delta(&chain.state, site))
        .map(|delta| chain.log_density + delta)
        .unwrap_or_else(|| target.log_density(&proposed.state));
    let u: f64 = chain.rng.random();
    if !log_density.is_finite() {
        return (false, true);
    }
    let xi_new = xi.evaluate(&proposed.state, log_density);
    if !xi_new.is_finite() {
        return (false, true);
    }
    let bin_new = partition.locate(xi_new);
    let log_ratio = (log_density - log_theta[bin_new]) - (chain.log_density - log_theta[chain.bin])
        + proposed.log_correction;
    if u.ln() < log_ratio {
        chain.state = proposed.state;
        chain.log_density = log_density;
        chain.xi = xi_new;
        chain.bin = bin_new;
        (true, false)
    } else {
        (false, false)
    }
}
