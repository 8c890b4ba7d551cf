//! Target distributions.
//!
//! A [`Target`] exposes an unnormalised log-density over some state type,
//! an initial sampler and, for binary states, an O(1) single-site delta.
//! The four benchmark posteriors live in the submodules.

mod data;
mod gprior;
mod ising;
mod mixture;
mod trimodal;

use std::fmt::Debug;

use rand::Rng;

pub use data::{
    load_grid_image, load_pollution_data, load_real_values, parse_grid_image, parse_pollution_data,
    parse_real_values, PollutionData,
};
pub use gprior::{
    bundled_pollution, enumerate_log_densities, enumerate_psi, render_pollution_csv,
    synthetic_pollution, GPriorTarget, POLLUTION_SEED,
};
pub use ising::{bundled_icefloe, synthetic_icefloe_image, Grid, IsingTarget, ICEFLOE_SEED};
pub use mixture::{
    bundled_mixture_data, generate_mixture_data, MixtureHyper, MixturePosteriorTarget,
    MixturePrior, MIXTURE_SEED,
};
pub use trimodal::TrimodalTarget;

/// Shape of a target's state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSpace {
    Continuous { dim: usize },
    Binary { len: usize },
    Grid { height: usize, width: usize },
    Finite { size: usize },
}

/// Uniform read access to states for output and coordinate projections.
pub trait StateView {
    /// Column names used when writing the state to CSV.
    fn column_names(&self) -> Vec<String>;
    /// Field values matching [`StateView::column_names`].
    fn fields(&self) -> Vec<String>;
    /// Real-valued coordinate `i`, when it exists.
    fn coordinate(&self, i: usize) -> Option<f64>;
}

/// States whose sites can be switched on/off one at a time.
pub trait Flippable {
    fn n_sites(&self) -> usize;
    fn flip(&mut self, site: usize);
}

/// An unnormalised target density.
pub trait Target: Sync {
    type State: Clone + Debug + Send + Sync + StateView;

    fn name(&self) -> &str;

    fn state_space(&self) -> StateSpace;

    /// `log pi(x)` up to an additive constant; `-inf` outside the support.
    fn log_density(&self, x: &Self::State) -> f64;

    /// Draw a starting state.
    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    /// Change in log-density caused by flipping `site` of `x`, if the target
    /// can compute it locally.
    fn flip_delta(&self, _x: &Self::State, _site: usize) -> Option<f64> {
        None
    }

    /// Finite state spaces have gaps in their energy values; the binning
    /// module snaps split points onto observed values for them.
    fn is_discrete(&self) -> bool {
        !matches!(self.state_space(), StateSpace::Continuous { .. })
    }
}

impl StateView for Vec<f64> {
    fn column_names(&self) -> Vec<String> {
        (0..self.len()).map(|i| format!("x{i}")).collect()
    }

    fn fields(&self) -> Vec<String> {
        self.iter().map(|v| format_real(*v)).collect()
    }

    fn coordinate(&self, i: usize) -> Option<f64> {
        self.get(i).copied()
    }
}

impl StateView for Vec<bool> {
    fn column_names(&self) -> Vec<String> {
        vec!["state".to_string()]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.iter().map(|&b| if b { '1' } else { '0' }).collect()]
    }

    fn coordinate(&self, i: usize) -> Option<f64> {
        self.get(i).map(|&b| if b { 1.0 } else { 0.0 })
    }
}

impl StateView for usize {
    fn column_names(&self) -> Vec<String> {
        vec!["state".to_string()]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.to_string()]
    }

    fn coordinate(&self, i: usize) -> Option<f64> {
        (i == 0).then_some(*self as f64)
    }
}

impl Flippable for Vec<bool> {
    fn n_sites(&self) -> usize {
        self.len()
    }

    fn flip(&mut self, site: usize) {
        self[site] = !self[site];
    }
}

/// Round-trip safe real formatting: 17 significant digits.
pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Finite target over `0..probabilities.len()`, used by balance tests and
/// small examples. The initial state is drawn uniformly.
#[derive(Debug, Clone)]
pub struct FiniteTarget {
    log_probs: Vec<f64>,
}

impl FiniteTarget {
    pub fn new(weights: &[f64]) -> Self {
        FiniteTarget {
            log_probs: weights.iter().map(|w| w.ln()).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.log_probs.len()
    }
}

impl Target for FiniteTarget {
    type State = usize;

    fn name(&self) -> &str {
        "finite"
    }

    fn state_space(&self) -> StateSpace {
        StateSpace::Finite {
            size: self.log_probs.len(),
        }
    }

    fn log_density(&self, x: &usize) -> f64 {
        self.log_probs.get(*x).copied().unwrap_or(f64::NEG_INFINITY)
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.log_probs.len())
    }
}

/// Standard Gaussian in `dim` dimensions, started at the origin.
#[derive(Debug, Clone)]
pub struct StandardGaussian {
    pub dim: usize,
}

impl Target for StandardGaussian {
    type State = Vec<f64>;

    fn name(&self) -> &str {
        "gaussian"
    }

    fn state_space(&self) -> StateSpace {
        StateSpace::Continuous { dim: self.dim }
    }

    fn log_density(&self, x: &Vec<f64>) -> f64 {
        -0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }

    fn sample_initial<R: Rng + ?Sized>(&self, _rng: &mut R) -> Vec<f64> {
        vec![0.0; self.dim]
    }
}

/// One-dimensional Gaussian mixture with normalised density, started at the
/// first component mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture1d {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl GaussianMixture1d {
    /// Two modes: `0.3 N(-2, 1) + 0.7 N(2, 0.75^2)`.
    pub fn bimodal() -> Self {
        GaussianMixture1d {
            weights: vec![0.3, 0.7],
            means: vec![-2.0, 2.0],
            sds: vec![1.0, 0.75],
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((w, m), s)| w * (-0.5 * ((x - m) / s).powi(2)).exp() / (s * norm))
            .sum()
    }
}

impl Target for GaussianMixture1d {
    type State = Vec<f64>;

    fn name(&self) -> &str {
        "mixture1d"
    }

    fn state_space(&self) -> StateSpace {
        StateSpace::Continuous { dim: 1 }
    }

    fn log_density(&self, x: &Vec<f64>) -> f64 {
        match x.as_slice() {
            [v] => self.density(*v).ln(),
            _ => f64::NEG_INFINITY,
        }
    }

    fn sample_initial<R: Rng + ?Sized>(&self, _rng: &mut R) -> Vec<f64> {
        vec![self.means[0]]
    }
}
