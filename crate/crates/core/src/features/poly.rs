use std::sync::Arc;

use ndarray::{Array2, ArrayView2};

use crate::error::{invalid, Error, Result};

/// The monomial lift `Ψ_p(x) = (x^α)_{1 ≤ |α| ≤ p}` in graded-lex order:
/// by total degree, then lexicographically with `x_1` most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialBasis {
    dim: usize,
    degree: u32,
    indices: Vec<Vec<u32>>,
    psi_lipschitz: Option<f64>,
}

fn push_indices(dim: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() == dim - 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for a in (0..=total).rev() {
        prefix.push(a);
        push_indices(dim, total - a, prefix, out);
        prefix.pop();
    }
}

impl PolynomialBasis {
    pub fn new(dim: usize, degree: u32) -> Result<Self> {
        if dim == 0 || degree == 0 {
            return Err(invalid(format!(
                "polynomial lift needs d >= 1 and p >= 1 (d = {dim}, p = {degree})"
            )));
        }
        let mut indices = Vec::new();
        for k in 1..=degree {
            push_indices(dim, k, &mut Vec::with_capacity(dim), &mut indices);
        }
        Ok(Self {
            dim,
            degree,
            indices,
            psi_lipschitz: None,
        })
    }

    /// Sets `L_Ψ` to the largest Jacobian Frobenius norm over the rows of `data`.
    pub fn with_lipschitz_bound(mut self, data: ArrayView2<'_, f64>) -> Result<Self> {
        if data.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: data.ncols(),
            });
        }
        let bound = data
            .rows()
            .into_iter()
            .map(|r| self.jacobian_frobenius(&r.to_vec()))
            .fold(0.0, f64::max);
        self.psi_lipschitz = Some(bound);
        Ok(self)
    }

    pub fn with_lipschitz(mut self, value: f64) -> Self {
        self.psi_lipschitz = Some(value);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// `D_p = C(d + p, p) - 1`.
    pub fn output_dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    pub fn psi_lipschitz(&self) -> Option<f64> {
        self.psi_lipschitz
    }

    fn power_table(&self, x: &[f64]) -> Vec<f64> {
        let p = self.degree as usize + 1;
        let mut table = vec![1.0; self.dim * p];
        for (i, &xi) in x.iter().enumerate() {
            for e in 1..p {
                table[i * p + e] = table[i * p + e - 1] * xi;
            }
        }
        table
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut out = vec![0.0; self.output_dim()];
        self.features_into(x, &mut out);
        Ok(out)
    }

    fn features_into(&self, x: &[f64], out: &mut [f64]) {
        let p = self.degree as usize + 1;
        let pw = self.power_table(x);
        for (o, alpha) in out.iter_mut().zip(&self.indices) {
            *o = alpha
                .iter()
                .enumerate()
                .map(|(i, &a)| pw[i * p + a as usize])
                .product();
        }
    }

    /// Frobenius norm of `∂Ψ_p/∂x` at `x`, an upper bound on its operator norm.
    pub fn jacobian_frobenius(&self, x: &[f64]) -> f64 {
        let p = self.degree as usize + 1;
        let pw = self.power_table(x);
        let mut sq = 0.0;
        for alpha in &self.indices {
            for (i, &ai) in alpha.iter().enumerate() {
                if ai == 0 {
                    continue;
                }
                let mut g = f64::from(ai) * pw[i * p + ai as usize - 1];
                for (j, &aj) in alpha.iter().enumerate() {
                    if j != i {
                        g *= pw[j * p + aj as usize];
                    }
                }
                sq += g * g;
            }
        }
        sq.sqrt()
    }
}

/// `h(x) = Ψ_p(x) / σ` with Lipschitz constant `L_Ψ / σ`.
#[derive(Debug, Clone)]
pub struct PolynomialMap {
    basis: Arc<PolynomialBasis>,
    sigma: f64,
}

impl PolynomialMap {
    pub fn new(basis: Arc<PolynomialBasis>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid(format!(
                "bandwidth must be positive and finite, got {sigma}"
            )));
        }
        if basis.psi_lipschitz.is_none() {
            return Err(invalid(
                "polynomial map needs a Lipschitz bound on its basis",
            ));
        }
        Ok(Self { basis, sigma })
    }

    pub fn basis(&self) -> &PolynomialBasis {
        &self.basis
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lipschitz(&self) -> f64 {
        self.basis.psi_lipschitz.unwrap_or(f64::NAN) / self.sigma
    }

    /// `Ψ_p` applied row-wise, without the `1/σ` scaling.
    pub(crate) fn lift(basis: &PolynomialBasis, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), basis.output_dim()));
        for (row, mut o) in x.rows().into_iter().zip(out.rows_mut()) {
            basis.features_into(&row.to_vec(), o.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub(crate) fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Self::lift(&self.basis, x);
        out.mapv_inplace(|v| v / self.sigma);
        out
    }
}
