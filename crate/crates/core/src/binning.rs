//! Partition of the reaction coordinate.
//!
//! Bins are half-open intervals `[e_{i-1}, e_i)`. The first bin starts at
//! `e_min`, the lowest value observed so far, and absorbs anything below it;
//! the last bin is `[e_{d-1}, +inf)`. While the partition is not frozen, each
//! finite bin keeps a histogram of the values that fell left/right of its
//! midpoint, which drives the split rule.

use std::fmt;
use std::sync::Arc;

use crate::engine::BiasState;
use crate::targets::StateView;
use crate::{Error, Result};

/// Scalar summary of a state used to define the bins.
#[derive(Clone)]
pub enum ReactionCoordinate<S> {
    /// `xi(x) = -log pi(x)`, the default.
    NegLogDensity,
    /// `xi(x) = x_j`.
    Projection(usize),
    Custom(Arc<dyn Fn(&S) -> f64 + Send + Sync>),
}

impl<S> Default for ReactionCoordinate<S> {
    fn default() -> Self {
        ReactionCoordinate::NegLogDensity
    }
}

impl<S> fmt::Debug for ReactionCoordinate<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReactionCoordinate::NegLogDensity => write!(f, "NegLogDensity"),
            ReactionCoordinate::Projection(j) => write!(f, "Projection({j})"),
            ReactionCoordinate::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl<S: StateView> ReactionCoordinate<S> {
    /// `log_density` is the cached `log pi(x)`.
    pub fn evaluate(&self, x: &S, log_density: f64) -> f64 {
        match self {
            ReactionCoordinate::NegLogDensity => -log_density,
            ReactionCoordinate::Projection(j) => x.coordinate(*j).unwrap_or(f64::NAN),
            ReactionCoordinate::Custom(f) => f(x),
        }
    }
}

/// How the preliminary values are turned into an initial range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangePolicy {
    /// `[q_lo, q_lo + factor * (q_hi - q_lo)]` from empirical quantiles.
    Quantile { lower: f64, upper: f64, factor: f64 },
    /// `[min, max]` of the values.
    MinMax,
    /// A fixed range; preliminary values are not needed.
    Manual { lo: f64, hi: f64 },
}

impl Default for RangePolicy {
    fn default() -> Self {
        RangePolicy::Quantile {
            lower: 0.1,
            upper: 0.9,
            factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinningConfig {
    pub n_bins: usize,
    pub range: RangePolicy,
    /// Split checks run every `check_period` iterations.
    pub check_period: usize,
    pub split_threshold: f64,
    /// Use `min(L, M - L) / M` instead of the left ratio `L / M`.
    pub symmetric_split: bool,
    /// Disable to keep the initial partition (range extension still applies).
    pub adaptive: bool,
    /// Samples a bin needs before it can be split; `None` means
    /// `20 / split_threshold`.
    pub min_occupancy: Option<u64>,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig {
            n_bins: 20,
            range: RangePolicy::default(),
            check_period: 100,
            split_threshold: 0.25,
            symmetric_split: false,
            adaptive: true,
            min_occupancy: None,
        }
    }
}

impl BinningConfig {
    pub fn min_occupancy(&self) -> u64 {
        self.min_occupancy
            .unwrap_or_else(|| (20.0 / self.split_threshold).ceil() as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Split,
    Extend,
    Freeze,
}

impl BoundaryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryKind::Split => "split",
            BoundaryKind::Extend => "extend",
            BoundaryKind::Freeze => "freeze",
        }
    }
}

/// A structural change of the partition. For splits `bin` is the index of
/// the bin that was split and `value` the new boundary; for extensions
/// `value` is the new `e_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEvent {
    pub iteration: u64,
    pub kind: BoundaryKind,
    pub bin: usize,
    pub value: f64,
}

/// Counts of values left of the midpoint of a bin, and the distinct values
/// seen (only tracked for discrete targets).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WithinBin {
    pub left: u64,
    pub total: u64,
    distinct: Vec<f64>,
}

impl WithinBin {
    fn record(&mut self, xi: f64, midpoint: f64, track_distinct: bool) {
        self.total += 1;
        if xi < midpoint {
            self.left += 1;
        }
        if track_distinct {
            let pos = self.distinct.partition_point(|v| *v < xi);
            if self.distinct.get(pos) != Some(&xi) {
                self.distinct.insert(pos, xi);
            }
        }
    }

    pub fn distinct_values(&self) -> &[f64] {
        &self.distinct
    }
}

/// Why a split was not carried out.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitRefusal {
    Frozen,
    UnboundedLastBin,
    DegenerateWidth,
    /// Discrete target and the bin holds at most one distinct value.
    NoDistinctValues,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinPartition {
    inner: Vec<f64>,
    e_min: f64,
    frozen: bool,
    histograms: Vec<WithinBin>,
    snap_to_observed: bool,
}

impl BinPartition {
    /// Partition from strictly increasing inner boundaries.
    pub fn from_boundaries(inner: Vec<f64>, e_min: f64) -> Result<Self> {
        if inner.windows(2).any(|w| w[0] >= w[1]) || inner.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "bin boundaries must be finite and strictly increasing: {inner:?}"
            )));
        }
        if let Some(first) = inner.first() {
            if e_min > *first {
                return Err(Error::Config(format!(
                    "lowest value {e_min} exceeds the first boundary {first}"
                )));
            }
        }
        let d = inner.len() + 1;
        Ok(BinPartition {
            inner,
            e_min,
            frozen: false,
            histograms: vec![WithinBin::default(); d],
            snap_to_observed: false,
        })
    }

    pub fn single(e_min: f64) -> Self {
        Self::from_boundaries(Vec::new(), e_min).expect("empty boundary list is valid")
    }

    /// `n_bins` equal-width bins over `[lo, hi]`; the last one is unbounded
    /// above and the first starts at `lo`.
    pub fn equal_width(lo: f64, hi: f64, n_bins: usize) -> Result<Self> {
        if n_bins == 0 || !(hi > lo) {
            return Err(Error::Config(format!(
                "need n_bins >= 1 and lo < hi, got {n_bins} bins over [{lo}, {hi}]"
            )));
        }
        let width = (hi - lo) / n_bins as f64;
        let inner = (1..n_bins).map(|j| lo + j as f64 * width).collect();
        Self::from_boundaries(inner, lo)
    }

    /// Snap split points onto observed values (finite state spaces).
    pub fn with_discrete_snapping(mut self, on: bool) -> Self {
        self.snap_to_observed = on;
        self
    }

    pub fn n_bins(&self) -> usize {
        self.inner.len() + 1
    }

    pub fn inner_boundaries(&self) -> &[f64] {
        &self.inner
    }

    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn histogram(&self, bin: usize) -> &WithinBin {
        &self.histograms[bin]
    }

    /// Index of the bin containing `xi` (0-based). Ties go right.
    pub fn locate(&self, xi: f64) -> usize {
        self.inner.partition_point(|e| *e <= xi)
    }

    /// `(lower, upper)` edges of a bin; the last upper edge is `+inf`.
    pub fn bounds(&self, bin: usize) -> (f64, f64) {
        let lo = if bin == 0 {
            self.e_min
        } else {
            self.inner[bin - 1]
        };
        let hi = self.inner.get(bin).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    fn midpoint(&self, bin: usize) -> f64 {
        let (lo, hi) = self.bounds(bin);
        0.5 * (lo + hi)
    }

    /// Record a reaction-coordinate value in its bin's histogram.
    pub fn observe(&mut self, xi: f64) {
        if self.frozen || !xi.is_finite() {
            return;
        }
        let bin = self.locate(xi);
        if bin + 1 == self.n_bins() {
            return;
        }
        let mid = self.midpoint(bin);
        let snap = self.snap_to_observed;
        self.histograms[bin].record(xi, mid, snap);
    }

    /// Widen the first bin so that it includes `xi`. Returns whether `e_min`
    /// moved. Allowed on frozen partitions.
    pub fn extend_range(&mut self, xi: f64) -> bool {
        if xi < self.e_min {
            self.e_min = xi;
            self.histograms[0] = WithinBin::default();
            true
        } else {
            false
        }
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
        for h in &mut self.histograms {
            *h = WithinBin::default();
        }
    }

    fn split_point(&self, bin: usize) -> std::result::Result<f64, SplitRefusal> {
        let (lo, hi) = self.bounds(bin);
        let mid = 0.5 * (lo + hi);
        if !self.snap_to_observed {
            return Ok(mid);
        }
        let v = &self.histograms[bin].distinct;
        if v.len() < 2 {
            return Err(SplitRefusal::NoDistinctValues);
        }
        let above = v.partition_point(|x| *x < mid);
        let (a, b) = if above == 0 {
            (v[0], v[1])
        } else if above == v.len() {
            (v[v.len() - 2], v[v.len() - 1])
        } else {
            (v[above - 1], v[above])
        };
        Ok(0.5 * (a + b))
    }

    /// Split `bin` in two; each child gets half the weight, half the desired
    /// frequency and half the visit count of the parent (remainder left).
    pub fn split_bin(
        &mut self,
        bias: &mut BiasState,
        bin: usize,
    ) -> std::result::Result<f64, SplitRefusal> {
        if self.frozen {
            return Err(SplitRefusal::Frozen);
        }
        if bin + 1 >= self.n_bins() {
            return Err(SplitRefusal::UnboundedLastBin);
        }
        let (lo, hi) = self.bounds(bin);
        let at = self.split_point(bin)?;
        if !(at > lo && at < hi) {
            return Err(SplitRefusal::DegenerateWidth);
        }
        self.inner.insert(bin, at);
        self.histograms[bin] = WithinBin::default();
        self.histograms.insert(bin + 1, WithinBin::default());
        bias.split(bin);
        Ok(at)
    }

    /// Periodic maintenance. On the first call after the flat histogram
    /// criterion was met the partition freezes; before that, every
    /// `period`-th iteration splits the finite bins whose within-bin
    /// histogram is skewed.
    pub fn maintenance_tick(
        &mut self,
        bias: &mut BiasState,
        iteration: u64,
        config: &BinningConfig,
        fh_reached: bool,
    ) -> Vec<BoundaryEvent> {
        let period = config.check_period.max(1) as u64;
        if self.frozen || !iteration.is_multiple_of(period) {
            return Vec::new();
        }
        if fh_reached {
            self.freeze();
            return vec![BoundaryEvent {
                iteration,
                kind: BoundaryKind::Freeze,
                bin: self.n_bins(),
                value: f64::NAN,
            }];
        }
        let min_occupancy = config.min_occupancy();
        let triggered: Vec<usize> = (0..self.n_bins() - 1)
            .filter(|&i| {
                let h = &self.histograms[i];
                let left = if config.symmetric_split {
                    h.left.min(h.total - h.left)
                } else {
                    h.left
                };
                split_check(left, h.total, config.split_threshold, min_occupancy)
            })
            .collect();
        let mut events = Vec::new();
        for &bin in triggered.iter().rev() {
            match self.split_bin(bias, bin) {
                Ok(value) => events.push(BoundaryEvent {
                    iteration,
                    kind: BoundaryKind::Split,
                    bin,
                    value,
                }),
                Err(reason) => log::debug!("bin {bin} not split at {iteration}: {reason:?}"),
            }
        }
        events.reverse();
        events
    }
}

/// Within-bin flatness test: split when fewer than `threshold` of the
/// `total` values fell left of the midpoint. Bins with fewer than
/// `min_occupancy` values never trigger.
pub fn split_check(left: u64, total: u64, threshold: f64, min_occupancy: u64) -> bool {
    total > 0 && total >= min_occupancy && (left as f64) < threshold * total as f64
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Initial partition from preliminary reaction-coordinate values.
///
/// Returns the partition and, when the values carry no spread, a warning
/// describing the fallback to a single bin.
pub fn init_partition(
    samples: &[f64],
    n_bins: usize,
    policy: RangePolicy,
) -> Result<(BinPartition, Option<String>)> {
    if n_bins == 0 {
        return Err(Error::Config("n_bins must be at least 1".into()));
    }
    let finite: Vec<f64> = samples.iter().copied().filter(|v| v.is_finite()).collect();
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    if let RangePolicy::Manual { lo, hi } = policy {
        let part = BinPartition::equal_width(lo, hi, n_bins)?;
        let e_min = if min < lo { min } else { lo };
        return Ok((BinPartition { e_min, ..part }, None));
    }
    if finite.is_empty() {
        return Err(Error::EmptySample(
            "no finite preliminary values to initialise the bins".into(),
        ));
    }
    let mut sorted = finite;
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = match policy {
        RangePolicy::Quantile {
            lower,
            upper,
            factor,
        } => {
            let ql = quantile(&sorted, lower);
            let qh = quantile(&sorted, upper);
            (ql, ql + factor * (qh - ql))
        }
        RangePolicy::MinMax => (sorted[0], sorted[sorted.len() - 1]),
        RangePolicy::Manual { .. } => unreachable!(),
    };
    if !(hi > lo) {
        let msg = format!("preliminary values have no spread (all near {lo}); using a single bin");
        log::warn!("{msg}");
        return Ok((BinPartition::single(min), Some(msg)));
    }
    let part = BinPartition::equal_width(lo, hi, n_bins)?;
    Ok((
        BinPartition {
            e_min: min.min(lo),
            ..part
        },
        None,
    ))
}
