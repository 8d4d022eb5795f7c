use ndarray::{concatenate, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// The two-sample dataset: `x` holds `m` draws from P, `y` holds `n` draws from Q.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledSample {
    x: Array2<f64>,
    y: Array2<f64>,
}

impl PooledSample {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::DimensionMismatch {
                expected: x.ncols(),
                found: y.ncols(),
            });
        }
        if x.nrows() == 0 || y.nrows() == 0 {
            return Err(Error::InsufficientSamples {
                context: "pooled sample",
                m: x.nrows(),
                n: y.nrows(),
                required: 1,
            });
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView2<'_, f64> {
        self.y.view()
    }

    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    /// Total size N = m + n.
    pub fn total(&self) -> usize {
        self.m() + self.n()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Imbalance ratio ρ* = max(N/m, N/n); equals 2 exactly when m = n.
    pub fn rho_star(&self) -> f64 {
        let total = self.total() as f64;
        (total / self.m() as f64).max(total / self.n() as f64)
    }

    /// Frobenius norm of the pooled data matrix.
    pub fn frobenius(&self) -> f64 {
        let sq: f64 = self.x.iter().chain(self.y.iter()).map(|v| v * v).sum();
        sq.sqrt()
    }

    /// The pooled matrix with the `m` rows of X on top of the `n` rows of Y.
    pub fn pooled(&self) -> Array2<f64> {
        concatenate(Axis(0), &[self.x.view(), self.y.view()]).expect("column counts agree")
    }

    /// Rebuilds a sample from pooled rows: the first `m` indices go to X.
    pub fn from_pooled_indices(
        pooled: ArrayView2<'_, f64>,
        indices: &[usize],
        m: usize,
    ) -> Result<Self> {
        let x = pooled.select(Axis(0), &indices[..m]);
        let y = pooled.select(Axis(0), &indices[m..]);
        Self::new(x, y)
    }

    /// Returns the same sample with the roles of X and Y exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    pub(crate) fn require_min(&self, required: usize, context: &'static str) -> Result<()> {
        if self.m() < required || self.n() < required {
            return Err(Error::InsufficientSamples {
                context,
                m: self.m(),
                n: self.n(),
                required,
            });
        }
        Ok(())
    }
}
