use crate::log_sum_exp;
use crate::schedule::Schedule;

/// Bias weights, desired frequencies and occupancy counts of the bins.
///
/// `log_theta` is kept normalised (`sum exp = 1`) after every update.
/// `counts` are cumulative visits since the last flat-histogram event and
/// `k` is the number of such events so far.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasState {
    log_theta: Vec<f64>,
    counts: Vec<u64>,
    phi: Vec<f64>,
    k: u64,
    c: f64,
    gamma: Schedule,
}

impl BiasState {
    /// Uniform weights and frequencies over `d` bins.
    pub fn uniform(d: usize, c: f64, gamma: Schedule) -> Self {
        let d = d.max(1);
        BiasState {
            log_theta: vec![-(d as f64).ln(); d],
            counts: vec![0; d],
            phi: vec![1.0 / d as f64; d],
            k: 0,
            c,
            gamma,
        }
    }

    /// Start from given weights (normalised on entry) and frequencies.
    pub fn from_theta(theta: &[f64], phi: &[f64], c: f64, gamma: Schedule) -> Self {
        assert_eq!(theta.len(), phi.len());
        let mut s = BiasState {
            log_theta: theta.iter().map(|t| t.ln()).collect(),
            counts: vec![0; theta.len()],
            phi: phi.to_vec(),
            k: 0,
            c,
            gamma,
        };
        s.normalize();
        s
    }

    /// Start from given log weights (normalised on entry) and uniform
    /// frequencies.
    pub fn from_log_theta(log_theta: &[f64], c: f64, gamma: Schedule) -> Self {
        let d = log_theta.len();
        let mut s = BiasState {
            log_theta: log_theta.to_vec(),
            counts: vec![0; d],
            phi: vec![1.0 / d as f64; d],
            k: 0,
            c,
            gamma,
        };
        s.normalize();
        s
    }

    pub fn n_bins(&self) -> usize {
        self.log_theta.len()
    }

    pub fn log_theta(&self) -> &[f64] {
        &self.log_theta
    }

    pub fn theta(&self) -> Vec<f64> {
        self.log_theta.iter().map(|v| v.exp()).collect()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of flat-histogram events so far.
    pub fn stage(&self) -> u64 {
        self.k
    }

    pub fn tolerance(&self) -> f64 {
        self.c
    }

    /// Current step size `gamma_k`.
    pub fn step_size(&self) -> f64 {
        self.gamma.at(self.k)
    }

    /// Occupancy frequencies since the last reset (zeros before any visit).
    pub fn nu(&self) -> Vec<f64> {
        let total: u64 = self.counts.iter().sum();
        if total == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts
            .iter()
            .map(|&n| n as f64 / total as f64)
            .collect()
    }

    /// `max_i |nu_i - phi_i|`.
    pub fn max_deviation(&self) -> f64 {
        self.nu()
            .iter()
            .zip(&self.phi)
            .map(|(n, p)| (n - p).abs())
            .fold(0.0, f64::max)
    }

    pub fn flat_threshold(&self) -> f64 {
        self.c / self.n_bins() as f64
    }

    /// Whether the occupancy is flat: `max |nu - phi| < c / d`.
    pub fn flat_histogram_check(&self) -> bool {
        self.counts.iter().any(|&n| n > 0) && self.max_deviation() < self.flat_threshold()
    }

    /// Move to the next stage and forget the occupancy counts.
    pub fn register_flat_histogram(&mut self) {
        self.k += 1;
        self.counts.iter_mut().for_each(|n| *n = 0);
    }

    /// Add the current bins of the chains to the counts and return the
    /// proportion of chains in each bin.
    pub fn update_proportions(&mut self, bins: &[usize]) -> Vec<f64> {
        let mut props = vec![0.0; self.n_bins()];
        let w = 1.0 / bins.len().max(1) as f64;
        for &b in bins {
            self.counts[b] += 1;
            props[b] += w;
        }
        props
    }

    /// `log theta += gamma_k (proportions - phi)`, then renormalise.
    pub fn update_bias(&mut self, proportions: &[f64]) {
        self.update_bias_accumulated(proportions, 1);
    }

    /// Update from proportions summed over `steps` iterations:
    /// `log theta += gamma_k (sum - steps * phi)`.
    pub fn update_bias_accumulated(&mut self, summed: &[f64], steps: usize) {
        let g = self.step_size();
        let m = steps as f64;
        for ((lt, s), p) in self.log_theta.iter_mut().zip(summed).zip(&self.phi) {
            *lt += g * (s - m * p);
        }
        self.normalize();
    }

    pub fn normalize(&mut self) {
        let z = log_sum_exp(&self.log_theta);
        self.log_theta.iter_mut().for_each(|v| *v -= z);
    }

    /// Replace bin `i` by two children sharing its weight, frequency and
    /// count. The count remainder goes to the left child.
    pub(crate) fn split(&mut self, i: usize) {
        let half = self.log_theta[i] - std::f64::consts::LN_2;
        self.log_theta[i] = half;
        self.log_theta.insert(i + 1, half);
        let p = 0.5 * self.phi[i];
        self.phi[i] = p;
        self.phi.insert(i + 1, p);
        let n = self.counts[i];
        self.counts[i] = n - n / 2;
        self.counts.insert(i + 1, n / 2);
    }
}
