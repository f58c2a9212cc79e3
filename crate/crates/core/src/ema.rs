//! Exponential moving average with first-observation seeding.

/// EMA accumulator following `value_{t+1} = (1 - beta) * o_t + beta * value_t`.
///
/// The first observation seeds the accumulator directly; there is no bias
/// correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmaAccumulator {
    value: f64,
    beta: f64,
    initialized: bool,
}

impl EmaAccumulator {
    /// `beta` must lie in `[0, 1)`.
    pub fn new(beta: f64) -> Self {
        assert!((0.0..1.0).contains(&beta), "EMA beta must be in [0, 1)");
        EmaAccumulator { value: 0.0, beta, initialized: false }
    }

    /// Feed one observation and return the smoothed value.
    pub fn observe(&mut self, obs: f64) -> f64 {
        if self.initialized {
            self.value = (1.0 - self.beta) * obs + self.beta * self.value;
        } else {
            self.value = obs;
            self.initialized = true;
        }
        self.value
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }
}
