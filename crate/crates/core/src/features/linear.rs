use ndarray::{Array2, ArrayView2};

use crate::error::{invalid, Result};

/// `h(x) = x / σ`, the map behind a σ-bandwidth kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMap {
    sigma: f64,
    dim: usize,
}

impl LinearMap {
    pub fn new(sigma: f64, dim: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid(format!(
                "bandwidth must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { sigma, dim })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz(&self) -> f64 {
        1.0 / self.sigma
    }

    pub(crate) fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.mapv(|v| v / self.sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_bandwidth() {
        assert!(LinearMap::new(0.0, 1).is_err());
        assert!(LinearMap::new(-1.0, 1).is_err());
        assert!(LinearMap::new(f64::NAN, 1).is_err());
    }
}
