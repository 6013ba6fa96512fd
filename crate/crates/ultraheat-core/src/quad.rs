//! Composite Simpson quadrature on `[s, t]`, shared by the evolution and
//! stochastic modules.

use crate::error::{Error, Result};

/// Number of Simpson subintervals; must be even and at least 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadratureConfig {
    pub subintervals: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { subintervals: 64 }
    }
}

impl QuadratureConfig {
    pub fn new(subintervals: usize) -> Result<Self> {
        if subintervals < 2 || !subintervals.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "Simpson subinterval count must be even and >= 2, got {subintervals}"
            )));
        }
        Ok(QuadratureConfig { subintervals })
    }

    /// The `K + 1` quadrature nodes.
    pub fn nodes(&self, s: f64, t: f64) -> Vec<f64> {
        let k = self.subintervals;
        (0..=k).map(|i| s + (t - s) * i as f64 / k as f64).collect()
    }

    /// Simpson weights matching [`QuadratureConfig::nodes`].
    pub fn weights(&self, s: f64, t: f64) -> Vec<f64> {
        let k = self.subintervals;
        let h = (t - s) / k as f64;
        (0..=k)
            .map(|i| {
                let c = if i == 0 || i == k {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect()
    }

    pub fn integrate(&self, s: f64, t: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        if s == t {
            return 0.0;
        }
        self.nodes(s, t)
            .iter()
            .zip(self.weights(s, t))
            .map(|(&x, w)| w * f(x))
            .sum()
    }
}
