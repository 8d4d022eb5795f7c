//! Bounded Lipschitz base kernels, composite kernels `k(h(x), h(x'))`, and
//! dense Gram blocks.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::features::FeatureMap;

/// Shape of a unit-bandwidth base kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BaseFamily {
    /// `exp(-|u - v|^2 / 2)`
    GaussianUnit,
    /// `exp(-|u - v|)`
    LaplacianUnit,
    /// `c`, independent of the inputs. Only useful for tests.
    Constant(f64),
}

/// A base kernel with its boundedness constant `nu` and Lipschitz constant `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    family: BaseFamily,
    nu: f64,
    lipschitz: f64,
}

impl KernelSpec {
    /// Unit Gaussian. The tight Lipschitz constant is `exp(-1/2)`; we record 1.
    pub fn gaussian() -> Self {
        Self {
            family: BaseFamily::GaussianUnit,
            nu: 1.0,
            lipschitz: 1.0,
        }
    }

    pub fn laplacian() -> Self {
        Self {
            family: BaseFamily::LaplacianUnit,
            nu: 1.0,
            lipschitz: 1.0,
        }
    }

    /// Constant kernel `c` with `nu = max(c, tiny)`; `c` must lie in `[0, nu]`.
    pub fn constant(c: f64, nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !(0.0..=nu).contains(&c) {
            return Err(invalid(format!(
                "constant kernel needs 0 <= c <= nu, nu > 0 (c = {c}, nu = {nu})"
            )));
        }
        Ok(Self {
            family: BaseFamily::Constant(c),
            nu,
            lipschitz: 0.0,
        })
    }

    pub fn family(&self) -> BaseFamily {
        self.family
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Kernel value as a function of the squared distance between its arguments.
    #[inline]
    pub fn from_sq_dist(&self, sq: f64) -> f64 {
        match self.family {
            BaseFamily::GaussianUnit => (-0.5 * sq).exp(),
            BaseFamily::LaplacianUnit => (-sq.sqrt()).exp(),
            BaseFamily::Constant(c) => c,
        }
    }

    /// Multiplier `c` such that `d k(u, v) / d u = -c * (u - v)`, given the
    /// squared distance and kernel value.
    #[inline]
    pub(crate) fn grad_coefficient(&self, sq: f64, k: f64) -> f64 {
        match self.family {
            BaseFamily::GaussianUnit => k,
            BaseFamily::LaplacianUnit => {
                // Subgradient 0 at coincident points.
                if sq > 0.0 {
                    k / sq.sqrt()
                } else {
                    0.0
                }
            }
            BaseFamily::Constant(_) => 0.0,
        }
    }

    /// Evaluates the base kernel on two points of the same dimension.
    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                found: v.len(),
            });
        }
        let sq: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(self.from_sq_dist(sq))
    }
}

/// `k_h(x, x') = base(h(x), h(x'))`.
#[derive(Debug, Clone)]
pub struct CompositeKernel {
    pub base: KernelSpec,
    pub feature: FeatureMap,
}

impl CompositeKernel {
    pub fn new(base: KernelSpec, feature: FeatureMap) -> Self {
        Self { base, feature }
    }

    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        let a = self.feature.apply_one(x)?;
        let b = self.feature.apply_one(x2)?;
        self.base.eval(&a, &b)
    }

    /// Short human-readable description used in reports.
    pub fn describe(&self) -> String {
        let base = match self.base.family {
            BaseFamily::GaussianUnit => "gaussian".to_string(),
            BaseFamily::LaplacianUnit => "laplacian".to_string(),
            BaseFamily::Constant(c) => format!("constant({c})"),
        };
        format!("{base}∘{}", self.feature.describe())
    }

    /// Gram matrix of the kernel on the rows of `points`.
    pub fn gram(&self, points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let feats = self.feature.apply(points)?;
        Ok(gram_from_sq_dists(&self.base, &self_sq_dists(feats.view())))
    }
}

/// The three Gram blocks needed by the unbiased MMD estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct GramBlocks {
    pub xx: Array2<f64>,
    pub yy: Array2<f64>,
    pub xy: Array2<f64>,
}

impl GramBlocks {
    pub fn m(&self) -> usize {
        self.xx.nrows()
    }

    pub fn n(&self) -> usize {
        self.yy.nrows()
    }

    /// Splits a pooled Gram matrix whose first `m` rows belong to X.
    pub fn from_pooled(gram: ArrayView2<'_, f64>, m: usize) -> Self {
        let n = gram.nrows() - m;
        Self {
            xx: gram.slice(ndarray::s![..m, ..m]).to_owned(),
            yy: gram.slice(ndarray::s![m.., m..]).to_owned(),
            xy: gram.slice(ndarray::s![..m, m..m + n]).to_owned(),
        }
    }
}

/// Computes `K_XX`, `K_YY` and `K_XY` for the composite kernel.
pub fn gram_blocks(
    kernel: &CompositeKernel,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Result<GramBlocks> {
    if x.nrows() < 2 || y.nrows() < 2 {
        return Err(Error::InsufficientSamples {
            context: "gram blocks",
            m: x.nrows(),
            n: y.nrows(),
            required: 2,
        });
    }
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: y.ncols(),
        });
    }
    let fx = kernel.feature.apply(x)?;
    let fy = kernel.feature.apply(y)?;
    Ok(GramBlocks {
        xx: gram_from_sq_dists(&kernel.base, &self_sq_dists(fx.view())),
        yy: gram_from_sq_dists(&kernel.base, &self_sq_dists(fy.view())),
        xy: gram_from_sq_dists(&kernel.base, &cross_sq_dists(fx.view(), fy.view())),
    })
}

pub(crate) fn gram_from_sq_dists(base: &KernelSpec, sq: &Array2<f64>) -> Array2<f64> {
    sq.mapv(|d| base.from_sq_dist(d))
}

fn row_sq_norms(a: ArrayView2<'_, f64>) -> ndarray::Array1<f64> {
    a.map_axis(Axis(1), |r: ArrayView1<'_, f64>| r.dot(&r))
}

/// Pairwise squared distances between rows of `a` and rows of `b`, via the
/// norm expansion with a clamp at zero.
pub fn cross_sq_dists(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    let na = row_sq_norms(a);
    let nb = row_sq_norms(b);
    let mut out = a.dot(&b.t());
    for ((i, j), v) in out.indexed_iter_mut() {
        *v = (na[i] + nb[j] - 2.0 * *v).max(0.0);
    }
    out
}

/// Pairwise squared distances among rows of `a`; exactly symmetric with a
/// zero diagonal.
pub fn self_sq_dists(a: ArrayView2<'_, f64>) -> Array2<f64> {
    let norms = row_sq_norms(a);
    let inner = a.dot(&a.t());
    let n = a.nrows();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (norms[i] + norms[j] - 2.0 * inner[[i, j]]).max(0.0);
            out[[i, j]] = d;
            out[[j, i]] = d;
        }
    }
    out
}
