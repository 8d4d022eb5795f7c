//! Feature maps `h` for composite kernels: the linear bandwidth map, the
//! polynomial lift, and a LeakyReLU MLP.

mod linear;
mod mlp;
mod poly;
pub mod spectral;

pub use linear::LinearMap;
pub use mlp::{Layer, MlpArch, MlpCache, MlpGradient, MlpMap};
pub use poly::{PolynomialBasis, PolynomialMap};

use std::sync::Arc;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum FeatureMap {
    /// `h(x) = x`; convenient for raw-input kernels.
    Identity {
        dim: usize,
    },
    Linear(LinearMap),
    Polynomial(PolynomialMap),
    Mlp(Arc<MlpMap>),
}

impl FeatureMap {
    pub fn identity(dim: usize) -> Self {
        FeatureMap::Identity { dim }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::Linear(l) => l.dim(),
            FeatureMap::Polynomial(p) => p.basis().dim(),
            FeatureMap::Mlp(m) => m.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::Linear(l) => l.dim(),
            FeatureMap::Polynomial(p) => p.basis().output_dim(),
            FeatureMap::Mlp(m) => m.output_dim(),
        }
    }

    /// Applies the map to every row of `x`.
    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        Ok(match self {
            FeatureMap::Identity { .. } => x.to_owned(),
            FeatureMap::Linear(l) => l.apply(x),
            FeatureMap::Polynomial(p) => p.apply(x),
            FeatureMap::Mlp(m) => m.forward(x)?,
        })
    }

    pub fn apply_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let row = ArrayView2::from_shape((1, x.len()), x).expect("contiguous row");
        Ok(self.apply(row)?.into_raw_vec_and_offset().0)
    }

    /// Lipschitz constant `L(h)`: `1/σ`, `L_Ψ/σ`, or the spectral product.
    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            FeatureMap::Identity { .. } => 1.0,
            FeatureMap::Linear(l) => l.lipschitz(),
            FeatureMap::Polynomial(p) => p.lipschitz(),
            FeatureMap::Mlp(m) => m.spectral_product(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FeatureMap::Identity { .. } => "identity".into(),
            FeatureMap::Linear(l) => format!("linear(sigma={})", l.sigma()),
            FeatureMap::Polynomial(p) => {
                format!("poly(p={}, sigma={})", p.basis().degree(), p.sigma())
            }
            FeatureMap::Mlp(m) => {
                let widths: Vec<String> = m.widths().iter().map(|w| w.to_string()).collect();
                format!("mlp({})", widths.join("-"))
            }
        }
    }
}
