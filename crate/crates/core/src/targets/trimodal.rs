use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{StateSpace, Target};
use crate::log_sum_exp;

/// Equal-weight mixture of three bivariate Gaussians with means (8,8),
/// (6,6), (0,0) and correlations 0.9, -0.9 and 0.
#[derive(Debug, Clone)]
pub struct TrimodalTarget {
    pub means: [[f64; 2]; 3],
    /// Correlation of each unit-variance component.
    pub correlations: [f64; 3],
    /// Chains start from N(0, initial_variance * I).
    pub initial_variance: f64,
}

impl Default for TrimodalTarget {
    fn default() -> Self {
        TrimodalTarget {
            means: [[8.0, 8.0], [6.0, 6.0], [0.0, 0.0]],
            correlations: [0.9, -0.9, 0.0],
            initial_variance: 0.1,
        }
    }
}

impl TrimodalTarget {
    pub fn log_density_at(&self, x: f64, y: f64) -> f64 {
        let terms: Vec<f64> = self
            .means
            .iter()
            .zip(self.correlations)
            .map(|(m, r)| {
                let det = 1.0 - r * r;
                let (dx, dy) = (x - m[0], y - m[1]);
                let quad = (dx * dx - 2.0 * r * dx * dy + dy * dy) / det;
                -(2.0 * PI).ln() - 0.5 * det.ln() - 0.5 * quad - 3f64.ln()
            })
            .collect();
        log_sum_exp(&terms)
    }
}

impl Target for TrimodalTarget {
    type State = Vec<f64>;

    fn name(&self) -> &str {
        "trimodal"
    }

    fn state_space(&self) -> StateSpace {
        StateSpace::Continuous { dim: 2 }
    }

    fn log_density(&self, x: &Vec<f64>) -> f64 {
        self.log_density_at(x[0], x[1])
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let sd = self.initial_variance.sqrt();
        (0..2)
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}
