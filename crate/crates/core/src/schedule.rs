//! Decreasing gain sequences (the bias stepsize and the proposal-scale gain).

/// A gain sequence indexed by a nonnegative counter.
///
/// `Power` yields `scale / n^exponent` for `n >= 1` and `scale` at `n = 0`,
/// so the default `Power { scale: 1, exponent: 1 }` is `1, 1, 1/2, 1/3, ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Power { scale: f64, exponent: f64 },
    Constant(f64),
}

impl Schedule {
    pub const fn inverse() -> Self {
        Schedule::Power {
            scale: 1.0,
            exponent: 1.0,
        }
    }

    pub fn at(&self, n: u64) -> f64 {
        match *self {
            Schedule::Power { scale, exponent } => {
                if n == 0 {
                    scale
                } else {
                    scale / (n as f64).powf(exponent)
                }
            }
            Schedule::Constant(v) => v,
        }
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::inverse()
    }
}
