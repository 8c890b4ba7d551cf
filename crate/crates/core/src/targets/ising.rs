//! Binary image posterior with an 8-neighbour Ising prior.

use rand::Rng;

use super::{Flippable, StateSpace, StateView, Target};
use crate::rng::shared_rng;
use crate::{Error, Result};

const BUNDLED_ICEFLOE: &str = include_str!("../../data/icefloe.txt");

/// Seed of the bundled synthetic ice-floe image.
pub const ICEFLOE_SEED: u64 = 1992;

/// Binary `height x width` grid stored row-major. Sites are indexed
/// `row * width + col`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    height: usize,
    width: usize,
    cells: Vec<bool>,
}

impl Grid {
    pub fn from_cells(height: usize, width: usize, cells: Vec<bool>) -> Self {
        assert_eq!(cells.len(), height * width);
        Grid {
            height,
            width,
            cells,
        }
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Self {
        Self::from_cells(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    /// One text line of `0`/`1` per row.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.cells.len() + self.height);
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|&b| if b { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }
}

impl Flippable for Grid {
    fn n_sites(&self) -> usize {
        self.cells.len()
    }

    fn flip(&mut self, site: usize) {
        self.cells[site] = !self.cells[site];
    }
}

impl StateView for Grid {
    fn column_names(&self) -> Vec<String> {
        vec!["state".to_string()]
    }

    fn fields(&self) -> Vec<String> {
        vec![self
            .cells
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()]
    }

    fn coordinate(&self, i: usize) -> Option<f64> {
        self.cells.get(i).map(|&b| if b { 1.0 } else { 0.0 })
    }
}

/// Offsets that enumerate each unordered 8-neighbour pair exactly once.
const FORWARD: [(isize, isize); 4] = [(0, 1), (1, -1), (1, 0), (1, 1)];
const ALL_NEIGHBOURS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// `log pi(x | y) = alpha * #{i : y_i = x_i} + beta * #{i ~ j : x_i = x_j}`.
#[derive(Debug, Clone)]
pub struct IsingTarget {
    pub observed: Grid,
    pub alpha: f64,
    pub beta: f64,
}

impl IsingTarget {
    pub fn new(observed: Grid, alpha: f64, beta: f64) -> Self {
        IsingTarget {
            observed,
            alpha,
            beta,
        }
    }

    /// Bundled 40x40 synthetic image with `alpha = 1`, `beta = 0.7`.
    pub fn bundled() -> Self {
        Self::new(bundled_icefloe(), 1.0, 0.7)
    }

    fn neighbour(&self, site: usize, (dr, dc): (isize, isize)) -> Option<usize> {
        let (r, c) = (site / self.observed.width, site % self.observed.width);
        let (nr, nc) = (r as isize + dr, c as isize + dc);
        (nr >= 0
            && nc >= 0
            && (nr as usize) < self.observed.height
            && (nc as usize) < self.observed.width)
            .then(|| nr as usize * self.observed.width + nc as usize)
    }

    fn same_shape(&self, x: &Grid) -> bool {
        (x.height, x.width) == (self.observed.height, self.observed.width)
    }

    /// Log density, failing on a state whose shape differs from the image.
    pub fn evaluate(&self, x: &Grid) -> Result<f64> {
        if !self.same_shape(x) {
            return Err(Error::Config(format!(
                "state is {}x{} but the image is {}x{}",
                x.height, x.width, self.observed.height, self.observed.width
            )));
        }
        Ok(self.log_density(x))
    }

    /// Integer sufficient statistics: (pixels agreeing with the image,
    /// agreeing neighbour pairs). Panics on a shape mismatch.
    pub fn counts(&self, x: &Grid) -> (i64, i64) {
        assert!(self.same_shape(x), "state and image shapes differ");
        let mut agree = 0;
        let mut pairs = 0;
        for site in 0..x.cells.len() {
            agree += (x.cells[site] == self.observed.cells[site]) as i64;
            for off in FORWARD {
                if let Some(nb) = self.neighbour(site, off) {
                    pairs += (x.cells[site] == x.cells[nb]) as i64;
                }
            }
        }
        (agree, pairs)
    }

    /// Change of [`IsingTarget::counts`] when flipping `site`.
    pub fn flip_count_delta(&self, x: &Grid, site: usize) -> (i64, i64) {
        let v = x.cells[site];
        let d_agree = if v == self.observed.cells[site] {
            -1
        } else {
            1
        };
        let mut d_pairs = 0;
        for off in ALL_NEIGHBOURS {
            if let Some(nb) = self.neighbour(site, off) {
                d_pairs += if x.cells[nb] == v { -1 } else { 1 };
            }
        }
        (d_agree, d_pairs)
    }
}

impl Target for IsingTarget {
    type State = Grid;

    fn name(&self) -> &str {
        "ising"
    }

    fn state_space(&self) -> StateSpace {
        StateSpace::Grid {
            height: self.observed.height,
            width: self.observed.width,
        }
    }

    fn log_density(&self, x: &Grid) -> f64 {
        if !self.same_shape(x) {
            return f64::NEG_INFINITY;
        }
        let (agree, pairs) = self.counts(x);
        self.alpha * agree as f64 + self.beta * pairs as f64
    }

    fn sample_initial<R: Rng + ?Sized>(&self, _rng: &mut R) -> Grid {
        self.observed.clone()
    }

    fn flip_delta(&self, x: &Grid, site: usize) -> Option<f64> {
        let (da, dp) = self.flip_count_delta(x, site);
        Some(self.alpha * da as f64 + self.beta * dp as f64)
    }
}

pub fn bundled_icefloe() -> Grid {
    super::parse_grid_image(BUNDLED_ICEFLOE, "bundled icefloe.txt").expect("bundled image parses")
}

/// 40x40 image of two overlapping discs with 10% salt-and-pepper noise.
pub fn synthetic_icefloe_image(seed: u64) -> Grid {
    const SIZE: usize = 40;
    let discs = [(14.0, 13.0, 9.0), (25.0, 26.0, 10.0)];
    let mut rng = shared_rng(seed);
    let cells = (0..SIZE * SIZE)
        .map(|site| {
            let (r, c) = ((site / SIZE) as f64, (site % SIZE) as f64);
            let inside = discs
                .iter()
                .any(|(cr, cc, rad)| (r - cr).powi(2) + (c - cc).powi(2) <= rad * rad);
            let noisy: bool = rng.random_bool(0.1);
            inside ^ noisy
        })
        .collect();
    Grid::from_cells(SIZE, SIZE, cells)
}
