//! Bayesian univariate Gaussian mixture posterior with unnormalised weights.
//!
//! States are `3K + 1` vectors `(log w_1..K, mu_1..K, log lambda_1..K, log beta)`;
//! the positive coordinates are sampled on the log scale and the log-Jacobian
//! is part of the density.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Normal};
use statrs::function::gamma::ln_gamma;

use super::{StateSpace, Target};
use crate::log_sum_exp;
use crate::rng::shared_rng;

const BUNDLED_MIXTURE: &str = include_str!("../../data/mixture.csv");

/// Seed of the bundled 100-point dataset.
pub const MIXTURE_SEED: u64 = 2005;

/// Prior hyperparameters: `mu_k ~ N(m, 1/kappa)`, `lambda_k ~ Gamma(alpha, beta)`,
/// `beta ~ Gamma(g, h)` (rate parametrisation), `w_k ~ Exp(1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureHyper {
    pub k: usize,
    pub m: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub g: f64,
    pub h: f64,
}

impl MixtureHyper {
    /// Data-dependent defaults: `kappa = 4/R^2`, `alpha = 2`, `g = 0.2`,
    /// `h = 100 g / (alpha R^2)`, `m = mean(y)`, `R = range(y)`.
    pub fn from_data(y: &[f64], k: usize) -> Self {
        let min = y.iter().copied().fold(f64::INFINITY, f64::min);
        let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = max - min;
        let alpha = 2.0;
        let g = 0.2;
        MixtureHyper {
            k,
            m: y.iter().sum::<f64>() / y.len() as f64,
            kappa: 4.0 / (range * range),
            alpha,
            g,
            h: 100.0 * g / (alpha * range * range),
        }
    }
}

/// The prior as a distribution over transformed states; doubles as the
/// initial distribution of chains and SMC particles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixturePrior {
    pub hyper: MixtureHyper,
}

impl MixturePrior {
    pub fn dim(&self) -> usize {
        3 * self.hyper.k + 1
    }

    /// Log prior density of a transformed state, Jacobian included.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let hp = &self.hyper;
        let k = hp.k;
        let log_beta = x[3 * k];
        let beta = log_beta.exp();
        let mut total = hp.g * hp.h.ln() - ln_gamma(hp.g) + hp.g * log_beta - hp.h * beta;
        let mu_norm = 0.5 * hp.kappa.ln() - 0.5 * (2.0 * PI).ln();
        for c in 0..k {
            let (lw, mu, ll) = (x[c], x[k + c], x[2 * k + c]);
            total += lw - lw.exp();
            total += mu_norm - 0.5 * hp.kappa * (mu - hp.m).powi(2);
            total += hp.alpha * log_beta - ln_gamma(hp.alpha) + hp.alpha * ll - beta * ll.exp();
        }
        if total.is_nan() {
            f64::NEG_INFINITY
        } else {
            total
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let hp = &self.hyper;
        let k = hp.k;
        let beta: f64 = Gamma::new(hp.g, 1.0 / hp.h).unwrap().sample(rng);
        let mu = Normal::new(hp.m, hp.kappa.sqrt().recip()).unwrap();
        let lambda = Gamma::new(hp.alpha, 1.0 / beta).unwrap();
        let mut x = vec![0.0; 3 * k + 1];
        for c in 0..k {
            x[c] = rng.sample::<f64, _>(Exp1).ln();
        }
        for c in 0..k {
            x[k + c] = mu.sample(rng);
        }
        for c in 0..k {
            x[2 * k + c] = lambda.sample(rng).ln();
        }
        x[3 * k] = beta.ln();
        x
    }
}

#[derive(Debug, Clone)]
pub struct MixturePosteriorTarget {
    data: Vec<f64>,
    prior: MixturePrior,
    initial: MixturePrior,
}

impl MixturePosteriorTarget {
    pub fn new(data: Vec<f64>, k: usize) -> Self {
        let prior = MixturePrior {
            hyper: MixtureHyper::from_data(&data, k),
        };
        MixturePosteriorTarget {
            data,
            prior,
            initial: prior,
        }
    }

    /// Bundled data, `K = 4`.
    pub fn bundled() -> Self {
        Self::new(bundled_mixture_data(), 4)
    }

    /// Draw initial states from the prior with `kappa = 1` instead of
    /// `4/R^2`; the posterior is unchanged.
    pub fn with_concentrated_initial(mut self) -> Self {
        self.initial.hyper.kappa = 1.0;
        self
    }

    pub fn k(&self) -> usize {
        self.prior.hyper.k
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn prior(&self) -> &MixturePrior {
        &self.prior
    }

    pub fn initial_distribution(&self) -> &MixturePrior {
        &self.initial
    }

    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        let k = self.k();
        let log_total_w = log_sum_exp(&x[..k]);
        let comps: Vec<(f64, f64, f64)> = (0..k)
            .map(|c| {
                let ll = x[2 * k + c];
                let norm = x[c] - log_total_w + 0.5 * ll - 0.5 * (2.0 * PI).ln();
                (norm, x[k + c], ll.exp())
            })
            .collect();
        let mut terms = vec![0.0; k];
        self.data
            .iter()
            .map(|&y| {
                for (t, (norm, mu, lambda)) in terms.iter_mut().zip(&comps) {
                    *t = norm - 0.5 * lambda * (y - mu).powi(2);
                }
                log_sum_exp(&terms)
            })
            .sum()
    }

    /// Components reordered by (mu, log w, log lambda) so that evaluation is
    /// bitwise invariant under label permutations.
    fn canonical(&self, x: &[f64]) -> Vec<f64> {
        let k = self.k();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            x[k + a]
                .total_cmp(&x[k + b])
                .then(x[a].total_cmp(&x[b]))
                .then(x[2 * k + a].total_cmp(&x[2 * k + b]))
        });
        let mut out = vec![0.0; x.len()];
        for (slot, &c) in order.iter().enumerate() {
            out[slot] = x[c];
            out[k + slot] = x[k + c];
            out[2 * k + slot] = x[2 * k + c];
        }
        out[3 * k] = x[3 * k];
        out
    }
}

impl Target for MixturePosteriorTarget {
    type State = Vec<f64>;

    fn name(&self) -> &str {
        "mixture"
    }

    fn state_space(&self) -> StateSpace {
        StateSpace::Continuous {
            dim: self.prior.dim(),
        }
    }

    fn log_density(&self, x: &Vec<f64>) -> f64 {
        if x.len() != self.prior.dim() || x.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let x = self.canonical(x);
        let value = self.log_likelihood(&x) + self.prior.log_density(&x);
        if value.is_nan() {
            f64::NEG_INFINITY
        } else {
            value
        }
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.initial.sample(rng)
    }
}

/// 100 draws from the equal-weight mixture of N(-3, 0.55^2), N(0, 0.55^2),
/// N(3, 0.55^2), N(6, 0.55^2).
pub fn generate_mixture_data(seed: u64) -> Vec<f64> {
    const MEANS: [f64; 4] = [-3.0, 0.0, 3.0, 6.0];
    let mut rng = shared_rng(seed);
    let noise = Normal::new(0.0, 0.55).unwrap();
    (0..100)
        .map(|_| {
            let c = rng.random_range(0..4);
            MEANS[c] + noise.sample(&mut rng)
        })
        .collect()
}

pub fn bundled_mixture_data() -> Vec<f64> {
    super::parse_real_values(BUNDLED_MIXTURE, "bundled mixture.csv")
        .expect("bundled mixture data parses")
}
