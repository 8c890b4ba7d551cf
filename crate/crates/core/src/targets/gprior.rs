//! Zellner g-prior variable selection over `{0,1}^p`.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::data::{parse_pollution_data, PollutionData, POLLUTION_PREDICTORS};
use super::{StateSpace, Target};
use crate::binning::BinPartition;
use crate::log_sum_exp;
use crate::rng::shared_rng;

const BUNDLED_POLLUTION: &str = include_str!("../../data/pollution.csv");

/// Seed of the bundled synthetic regression data.
pub const POLLUTION_SEED: u64 = 1973;

/// Posterior over inclusion indicators `gamma` under a g-prior:
///
/// `log pi(gamma) = -(q+1)/2 log(g+1) - n/2 log(y'y - g/(g+1) y'X_g (X_g'X_g)^-1 X_g'y)`
///
/// The Gram matrix `X'X` and `X'y` are precomputed; each evaluation factors
/// the `q x q` sub-Gram matrix.
#[derive(Debug, Clone)]
pub struct GPriorTarget {
    n: usize,
    p: usize,
    gram: Vec<f64>,
    xty: Vec<f64>,
    yty: f64,
    log_g_plus_one: f64,
    shrink: f64,
}

impl GPriorTarget {
    /// `log_g` is `log g`; the reference setting is `g = exp(20)`.
    pub fn new(data: &PollutionData, log_g: f64) -> Self {
        let (n, p) = (data.n, data.p);
        let mut gram = vec![0.0; p * p];
        let mut xty = vec![0.0; p];
        for i in 0..n {
            for a in 0..p {
                let xa = data.x_at(i, a);
                xty[a] += xa * data.y[i];
                for b in 0..p {
                    gram[a * p + b] += xa * data.x_at(i, b);
                }
            }
        }
        let yty = data.y.iter().map(|v| v * v).sum();
        // log(g + 1) and g / (g + 1) without forming g
        let log_g_plus_one = log_g + (-log_g).exp().ln_1p();
        let shrink = 1.0 / (1.0 + (-log_g).exp());
        GPriorTarget {
            n,
            p,
            gram,
            xty,
            yty,
            log_g_plus_one,
            shrink,
        }
    }

    /// Target on the bundled data with `g = exp(20)`.
    pub fn bundled() -> Self {
        Self::new(&bundled_pollution(), 20.0)
    }

    pub fn n_predictors(&self) -> usize {
        self.p
    }

    pub fn n_observations(&self) -> usize {
        self.n
    }

    /// `y'X_g (X_g'X_g)^-1 X_g'y` for the selected columns.
    fn projection(&self, idx: &[usize]) -> f64 {
        let q = idx.len();
        if q == 0 {
            return 0.0;
        }
        // Cholesky of the selected Gram block, then forward substitution.
        let mut l = vec![0.0; q * q];
        for i in 0..q {
            for j in 0..=i {
                let mut s = self.gram[idx[i] * self.p + idx[j]];
                for k in 0..j {
                    s -= l[i * q + k] * l[j * q + k];
                }
                if i == j {
                    if s <= 1e-12 * self.gram[idx[i] * self.p + idx[i]] {
                        return self.projection_pinv(idx);
                    }
                    l[i * q + i] = s.sqrt();
                } else {
                    l[i * q + j] = s / l[j * q + j];
                }
            }
        }
        let mut quad = 0.0;
        let mut z = vec![0.0; q];
        for i in 0..q {
            let mut s = self.xty[idx[i]];
            for k in 0..i {
                s -= l[i * q + k] * z[k];
            }
            z[i] = s / l[i * q + i];
            quad += z[i] * z[i];
        }
        quad
    }

    fn projection_pinv(&self, idx: &[usize]) -> f64 {
        warn!("rank-deficient design for columns {idx:?}; using pseudo-inverse");
        let q = idx.len();
        let a = DMatrix::from_fn(q, q, |i, j| self.gram[idx[i] * self.p + idx[j]]);
        let b = DVector::from_fn(q, |i, _| self.xty[idx[i]]);
        let pinv = a
            .pseudo_inverse(1e-10)
            .expect("pseudo-inverse of a symmetric matrix");
        b.dot(&(pinv * &b))
    }

    pub fn log_density_bits(&self, bits: u32) -> f64 {
        let idx: Vec<usize> = (0..self.p).filter(|j| bits >> j & 1 == 1).collect();
        self.log_density_indices(&idx)
    }

    fn log_density_indices(&self, idx: &[usize]) -> f64 {
        let q = idx.len() as f64;
        let resid = self.yty - self.shrink * self.projection(idx);
        if resid <= 0.0 {
            return f64::NEG_INFINITY;
        }
        -0.5 * (q + 1.0) * self.log_g_plus_one - 0.5 * self.n as f64 * resid.ln()
    }
}

impl Target for GPriorTarget {
    type State = Vec<bool>;

    fn name(&self) -> &str {
        "gprior"
    }

    fn state_space(&self) -> StateSpace {
        StateSpace::Binary { len: self.p }
    }

    fn log_density(&self, gamma: &Vec<bool>) -> f64 {
        let idx: Vec<usize> = gamma
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
            .collect();
        self.log_density_indices(&idx)
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        (0..self.p).map(|_| rng.random::<bool>()).collect()
    }
}

/// Log-densities of all `2^p` models; entry `b` has `gamma_j = (b >> j) & 1`.
pub fn enumerate_log_densities(target: &GPriorTarget) -> Vec<f64> {
    assert!(target.p <= 24, "enumeration over 2^{} models", target.p);
    (0..1u32 << target.p)
        .map(|bits| target.log_density_bits(bits))
        .collect()
}

/// Exact per-bin posterior masses along the energy `-log pi`, by exhaustive
/// enumeration. Bins that contain no model get mass 0.
pub fn enumerate_psi(target: &GPriorTarget, partition: &BinPartition) -> Vec<f64> {
    let log_pi = enumerate_log_densities(target);
    let mut per_bin: Vec<Vec<f64>> = vec![Vec::new(); partition.n_bins()];
    for lp in &log_pi {
        per_bin[partition.locate(-lp)].push(*lp);
    }
    let log_mass: Vec<f64> = per_bin.iter().map(|v| log_sum_exp(v)).collect();
    let total = log_sum_exp(&log_mass);
    log_mass.iter().map(|m| (m - total).exp()).collect()
}

pub fn bundled_pollution() -> PollutionData {
    parse_pollution_data(BUNDLED_POLLUTION, "bundled pollution.csv")
        .expect("bundled pollution data parses")
}

const COLUMNS: [(&str, f64, f64); POLLUTION_PREDICTORS] = [
    ("PREC", 37.4, 10.0),
    ("JANT", 34.0, 10.2),
    ("JULT", 74.6, 4.8),
    ("OVR65", 8.8, 1.5),
    ("POPN", 3.26, 0.14),
    ("EDUC", 10.97, 0.85),
    ("HOUS", 80.9, 5.1),
    ("DENS", 3876.0, 1454.0),
    ("NONW", 11.9, 8.9),
    ("WWDRK", 46.2, 4.6),
    ("POOR", 14.4, 4.2),
    ("HC", 3.0, 1.1),
    ("NOX", 2.6, 1.0),
    ("SO2", 3.5, 1.1),
    ("HUMID", 57.7, 5.4),
];

/// Synthetic stand-in for the 60-city mortality/pollution table: 15
/// correlated predictors driven by four latent factors and a mortality-like
/// response. HC, NOX and SO2 are log-normal, HC and NOX nearly collinear.
///
/// Returns the raw rows (predictors then response) and column names.
pub fn synthetic_pollution(seed: u64) -> (Vec<String>, Vec<Vec<f64>>) {
    const N: usize = 60;
    // loadings on (climate, socio-economic, urban, pollution) factors
    const LOADINGS: [[f64; 4]; POLLUTION_PREDICTORS] = [
        [0.8, -0.2, 0.0, 0.0],
        [0.6, 0.0, 0.2, 0.0],
        [0.7, 0.3, 0.0, 0.0],
        [0.0, 0.4, -0.3, 0.0],
        [0.0, -0.6, 0.2, 0.0],
        [-0.3, 0.7, 0.0, 0.0],
        [0.0, 0.6, -0.3, 0.0],
        [0.0, 0.0, 0.8, 0.2],
        [0.5, -0.6, 0.0, 0.0],
        [-0.2, 0.7, 0.2, 0.0],
        [0.4, -0.8, 0.0, 0.0],
        [0.0, 0.0, 0.4, 0.9],
        [0.0, 0.0, 0.4, 0.9],
        [-0.2, 0.0, 0.6, 0.5],
        [-0.4, 0.0, 0.0, 0.2],
    ];
    const EFFECTS: [f64; POLLUTION_PREDICTORS] = [
        16.0, -14.0, -6.0, 0.0, 0.0, -12.0, 0.0, 4.0, 34.0, 0.0, 0.0, -30.0, 36.0, 14.0, 0.0,
    ];
    const NOISE_SD: f64 = 33.0;
    // puts the lowest model energy near 377.4 under g = exp(20)
    const RESPONSE_SCALE: f64 = 1.0726;
    let mut rng = shared_rng(seed);
    let mut normal = || rng.sample::<f64, _>(StandardNormal);
    let mut rows = Vec::with_capacity(N);
    for _ in 0..N {
        let factors: Vec<f64> = (0..4).map(|_| normal()).collect();
        let mut z = [0.0; POLLUTION_PREDICTORS];
        for j in 0..POLLUTION_PREDICTORS {
            let common: f64 = LOADINGS[j].iter().zip(&factors).map(|(l, f)| l * f).sum();
            let own = (1.0 - LOADINGS[j].iter().map(|l| l * l).sum::<f64>()).max(0.02);
            z[j] = common + own.sqrt() * normal();
        }
        let signal: f64 = z.iter().zip(EFFECTS).map(|(a, b)| a * b).sum();
        let mortality = 940.0 + RESPONSE_SCALE * (signal + NOISE_SD * normal());
        let mut row: Vec<f64> = z
            .iter()
            .zip(COLUMNS)
            .enumerate()
            .map(|(j, (v, (_, mean, sd)))| {
                let raw = mean + sd * v;
                // pollution potentials are reported on the raw, skewed scale
                if (11..=13).contains(&j) {
                    raw.exp()
                } else {
                    raw
                }
            })
            .map(|v| (v * 1e4).round() / 1e4)
            .collect();
        row.push((mortality * 1e4).round() / 1e4);
        rows.push(row);
    }
    let mut names: Vec<String> = COLUMNS.iter().map(|c| c.0.to_string()).collect();
    names.push("MORT".to_string());
    (names, rows)
}

/// Render rows in the pollution CSV format.
pub fn render_pollution_csv(names: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = names.join(",");
    out.push('\n');
    for r in rows {
        let fields: Vec<String> = r.iter().map(|v| format!("{v:.4}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
