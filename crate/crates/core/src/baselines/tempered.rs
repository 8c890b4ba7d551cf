use rand::Rng;

use crate::targets::{StateSpace, Target};

/// `log pi(x) / temperature`.
pub fn tempered_log_density<T: Target>(target: &T, x: &T::State, temperature: f64) -> f64 {
    target.log_density(x) / temperature
}

/// The target `pi^(1/temperature)`.
#[derive(Debug, Clone)]
pub struct Tempered<'a, T> {
    pub inner: &'a T,
    pub temperature: f64,
}

impl<'a, T: Target> Tempered<'a, T> {
    pub fn new(inner: &'a T, temperature: f64) -> Self {
        Tempered { inner, temperature }
    }
}

impl<T: Target> Target for Tempered<'_, T> {
    type State = T::State;

    fn name(&self) -> &str {
        self.inner.name()
    }

    fn state_space(&self) -> StateSpace {
        self.inner.state_space()
    }

    fn log_density(&self, x: &T::State) -> f64 {
        tempered_log_density(self.inner, x, self.temperature)
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> T::State {
        self.inner.sample_initial(rng)
    }

    fn flip_delta(&self, x: &T::State, site: usize) -> Option<f64> {
        self.inner.flip_delta(x, site).map(|d| d / self.temperature)
    }

    fn is_discrete(&self) -> bool {
        self.inner.is_discrete()
    }
}
