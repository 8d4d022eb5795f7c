//! Unbiased MMD, Liu's variance-normalized ratio, the univariate Gaussian
//! population oracle, and gradients through the Gram matrix.

use ndarray::{s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMap, MlpGradient};
use crate::kernels::{gram_from_sq_dists, self_sq_dists, CompositeKernel, GramBlocks, KernelSpec};
pub use crate::sample::PooledSample;

pub const DEFAULT_LIU_LAMBDA: f64 = 1e-8;

fn check_sizes(m: usize, n: usize, context: &'static str) -> Result<()> {
    if m < 2 || n < 2 {
        return Err(Error::InsufficientSamples {
            context,
            m,
            n,
            required: 2,
        });
    }
    Ok(())
}

fn off_diagonal_sum(k: ArrayView2<'_, f64>) -> f64 {
    k.sum() - k.diag().sum()
}

/// The unbiased U-statistic estimate of the squared MMD. May be negative.
pub fn mmd_unbiased(blocks: &GramBlocks) -> Result<f64> {
    mmd_unbiased_views(blocks.xx.view(), blocks.yy.view(), blocks.xy.view())
}

pub fn mmd_unbiased_views(
    xx: ArrayView2<'_, f64>,
    yy: ArrayView2<'_, f64>,
    xy: ArrayView2<'_, f64>,
) -> Result<f64> {
    let (m, n) = (xx.nrows(), yy.nrows());
    check_sizes(m, n, "unbiased MMD")?;
    if xy.dim() != (m, n) {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            found: xy.len(),
        });
    }
    let (mf, nf) = (m as f64, n as f64);
    Ok(
        off_diagonal_sum(xx) / (mf * (mf - 1.0)) + off_diagonal_sum(yy) / (nf * (nf - 1.0))
            - 2.0 * xy.sum() / (mf * nf),
    )
}

/// Unbiased MMD from a pooled Gram matrix, with `is_x[i]` assigning row `i`
/// to the first sample. Used to re-index one Gram matrix per permutation.
pub fn mmd_from_pooled_labels(gram: ArrayView2<'_, f64>, is_x: &[bool]) -> f64 {
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    let m = is_x.iter().filter(|&&b| b).count();
    let n = is_x.len() - m;
    for (i, row) in gram.axis_iter(Axis(0)).enumerate() {
        let (mut to_x, mut to_y) = (0.0, 0.0);
        for (&k, &jx) in row.iter().zip(is_x) {
            if jx {
                to_x += k;
            } else {
                to_y += k;
            }
        }
        if is_x[i] {
            sxx += to_x - row[i];
            sxy += to_y;
        } else {
            syy += to_y - row[i];
        }
    }
    let (mf, nf) = (m as f64, n as f64);
    sxx / (mf * (mf - 1.0)) + syy / (nf * (nf - 1.0)) - 2.0 * sxy / (mf * nf)
}

/// Population squared MMD between `N(0, s_p²)` and `N(0, s_q²)` under the
/// σ-bandwidth Gaussian kernel.
pub fn population_mmd_gaussian_oracle(sigma: f64, s_p: f64, s_q: f64) -> f64 {
    let s2 = sigma * sigma;
    (1.0 + 2.0 * s_p * s_p / s2).powf(-0.5) + (1.0 + 2.0 * s_q * s_q / s2).powf(-0.5)
        - 2.0 * (1.0 + (s_p * s_p + s_q * s_q) / s2).powf(-0.5)
}

/// `J_Liu = √n · mmd / τ` together with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiuRatio {
    pub j_liu: f64,
    pub mmd: f64,
    pub tau: f64,
    /// Unclamped variance estimate.
    pub variance: f64,
}

struct LiuParts {
    ratio: LiuRatio,
    /// `∂σ̂²/∂H_ij`
    dvar_dh: Array2<f64>,
}

fn liu_parts(
    xx: ArrayView2<'_, f64>,
    yy: ArrayView2<'_, f64>,
    xy: ArrayView2<'_, f64>,
    lambda: f64,
) -> Result<LiuParts> {
    let (m, n) = (xx.nrows(), yy.nrows());
    if m != n {
        return Err(Error::Unsupported(format!(
            "the ratio criterion needs balanced samples (m = {m}, n = {n})"
        )));
    }
    if !(lambda > 0.0) {
        return Err(crate::error::invalid(format!(
            "variance regularizer must be positive, got {lambda}"
        )));
    }
    let mmd = mmd_unbiased_views(xx, yy, xy)?;
    let mut h = xx.to_owned();
    h += &yy;
    h -= &xy;
    h -= &xy.t();
    let r = h.sum_axis(Axis(1));
    let total = r.sum();
    let nf = n as f64;
    let variance = 4.0 * r.dot(&r) / nf.powi(3) - 4.0 * total * total / nf.powi(4);
    let tau = (variance.max(0.0) + lambda).sqrt();
    let mut dvar_dh = Array2::zeros((n, n));
    for (i, mut row) in dvar_dh.axis_iter_mut(Axis(0)).enumerate() {
        row.fill(8.0 * r[i] / nf.powi(3) - 8.0 * total / nf.powi(4));
    }
    Ok(LiuParts {
        ratio: LiuRatio {
            j_liu: nf.sqrt() * mmd / tau,
            mmd,
            tau,
            variance,
        },
        dvar_dh,
    })
}

/// Liu et al.'s H1-variance estimate on paired samples, with `τ` floored by
/// `sqrt(lambda)`. Requires `m = n`.
pub fn liu_ratio(blocks: &GramBlocks, lambda: f64) -> Result<LiuRatio> {
    Ok(liu_parts(blocks.xx.view(), blocks.yy.view(), blocks.xy.view(), lambda)?.ratio)
}

/// Pooled weight matrix `W` with `mmd = Σ W ∘ K` for the X-first ordering.
pub(crate) fn mmd_weights(m: usize, n: usize) -> Array2<f64> {
    let total = m + n;
    let (mf, nf) = (m as f64, n as f64);
    let mut w = Array2::zeros((total, total));
    w.slice_mut(s![..m, ..m]).fill(1.0 / (mf * (mf - 1.0)));
    w.slice_mut(s![m.., m..]).fill(1.0 / (nf * (nf - 1.0)));
    w.slice_mut(s![..m, m..]).fill(-1.0 / (mf * nf));
    w.slice_mut(s![m.., ..m]).fill(-1.0 / (mf * nf));
    for i in 0..total {
        w[[i, i]] = 0.0;
    }
    w
}

/// Gradient with respect to the features `F` of `Σ A ∘ K(F)`.
fn feature_grad_from_adjoint(
    base: &KernelSpec,
    f: ArrayView2<'_, f64>,
    sq: &Array2<f64>,
    k: &Array2<f64>,
    a: &Array2<f64>,
) -> Array2<f64> {
    let total = f.nrows();
    let mut coef = Array2::zeros((total, total));
    for i in 0..total {
        for j in 0..total {
            if i != j {
                coef[[i, j]] =
                    (a[[i, j]] + a[[j, i]]) * base.grad_coefficient(sq[[i, j]], k[[i, j]]);
            }
        }
    }
    let row = coef.sum_axis(Axis(1)).insert_axis(Axis(1));
    coef.dot(&f) - &(&f * &row)
}

/// Value of a Gram-based criterion and its gradient with respect to the
/// pooled features (first `m` rows are X).
#[derive(Debug, Clone)]
pub(crate) struct FeatureGradient {
    pub mmd: f64,
    pub liu: Option<LiuRatio>,
    pub grad: Array2<f64>,
}

pub(crate) fn mmd_feature_grad(
    base: &KernelSpec,
    f: ArrayView2<'_, f64>,
    m: usize,
) -> Result<FeatureGradient> {
    let n = f.nrows() - m;
    check_sizes(m, n, "MMD gradient")?;
    let sq = self_sq_dists(f);
    let k = gram_from_sq_dists(base, &sq);
    let w = mmd_weights(m, n);
    let mmd = (&w * &k).sum();
    let grad = feature_grad_from_adjoint(base, f, &sq, &k, &w);
    Ok(FeatureGradient {
        mmd,
        liu: None,
        grad,
    })
}

pub(crate) fn liu_feature_grad(
    base: &KernelSpec,
    f: ArrayView2<'_, f64>,
    m: usize,
    lambda: f64,
) -> Result<FeatureGradient> {
    let n = f.nrows() - m;
    check_sizes(m, n, "ratio gradient")?;
    let sq = self_sq_dists(f);
    let k = gram_from_sq_dists(base, &sq);
    let parts = liu_parts(
        k.slice(s![..m, ..m]),
        k.slice(s![m.., m..]),
        k.slice(s![..m, m..]),
        lambda,
    )?;
    let ratio = parts.ratio;
    let nf = n as f64;
    let d_mmd = nf.sqrt() / ratio.tau;
    let d_var = if ratio.variance > 0.0 {
        -nf.sqrt() * ratio.mmd / (2.0 * ratio.tau.powi(3))
    } else {
        0.0
    };
    let mut a = mmd_weights(m, n) * d_mmd;
    if d_var != 0.0 {
        let g = &parts.dvar_dh * d_var;
        let mut xx = a.slice_mut(s![..m, ..m]);
        xx += &g;
        let mut yy = a.slice_mut(s![m.., m..]);
        yy += &g;
        let mut xy = a.slice_mut(s![..m, m..]);
        xy -= &g;
        xy -= &g.t();
    }
    let grad = feature_grad_from_adjoint(base, f, &sq, &k, &a);
    Ok(FeatureGradient {
        mmd: ratio.mmd,
        liu: Some(ratio),
        grad,
    })
}

/// Exact gradient of the unbiased MMD with respect to the parameters of an
/// MLP feature map. Returns the MMD value alongside.
pub fn mmd_gradient_wrt_features(
    sample: &PooledSample,
    kernel: &CompositeKernel,
) -> Result<(f64, MlpGradient)> {
    let FeatureMap::Mlp(mlp) = &kernel.feature else {
        return Err(Error::Unsupported(format!(
            "parameter gradients need an MLP feature map, got {}",
            kernel.feature.describe()
        )));
    };
    sample.require_min(2, "MMD gradient")?;
    let cache = mlp.forward_cached(sample.pooled().view())?;
    let fg = mmd_feature_grad(&kernel.base, cache.output().view(), sample.m())?;
    let grad = mlp.backward(&cache, fg.grad.view())?;
    Ok((fg.mmd, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Layer, MlpMap};
    use crate::kernels::gram_blocks;
    use approx::assert_relative_eq;
    use ndarray::{array, Array1};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::sync::Arc;

    fn gaussian_identity(d: usize) -> CompositeKernel {
        CompositeKernel::new(KernelSpec::gaussian(), FeatureMap::identity(d))
    }

    #[test]
    fn constant_kernel_cancels() {
        let k = CompositeKernel::new(
            KernelSpec::constant(0.7, 1.0).unwrap(),
            FeatureMap::identity(1),
        );
        let b = gram_blocks(
            &k,
            array![[0.0], [1.0], [4.0]].view(),
            array![[2.0], [9.0]].view(),
        )
        .unwrap();
        assert_relative_eq!(mmd_unbiased(&b).unwrap(), 0.0, epsilon = 1e-15);
        let liu = liu_ratio(
            &GramBlocks::from_pooled(Array2::from_elem((4, 4), 0.5).view(), 2),
            1e-8,
        )
        .unwrap();
        assert_eq!(liu.mmd, 0.0);
        assert_eq!(liu.j_liu, 0.0);
    }

    #[test]
    fn linear_kernel_by_hand() {
        // k(x, y) = x y on X = {0, 2}, Y = {1, 1}.
        let x = [0.0, 2.0];
        let y = [1.0, 1.0];
        let outer =
            |a: &[f64], b: &[f64]| Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j]);
        let v = mmd_unbiased_views(
            outer(&x, &x).view(),
            outer(&y, &y).view(),
            outer(&x, &y).view(),
        )
        .unwrap();
        assert_relative_eq!(v, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_tiny_samples() {
        let one = Array2::ones((1, 1));
        let two = Array2::ones((2, 2));
        assert!(matches!(
            mmd_unbiased_views(one.view(), two.view(), Array2::ones((1, 2)).view()),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn population_oracle_values() {
        let expect = 3f64.powf(-0.5) + 9f64.powf(-0.5) - 2.0 * 6f64.powf(-0.5);
        assert_relative_eq!(
            population_mmd_gaussian_oracle(1.0, 1.0, 2.0),
            expect,
            epsilon = 1e-15
        );
        assert!((population_mmd_gaussian_oracle(1.0, 1.0, 2.0) - 0.094187).abs() < 1e-6);
        assert_eq!(population_mmd_gaussian_oracle(0.7, 1.3, 1.3), 0.0);
    }

    /// `E k(X, X')` by Gauss–Hermite-free midpoint quadrature on a wide grid.
    fn quadrature_mean_kernel(sigma: f64, s1: f64, s2: f64) -> f64 {
        let h = 0.02;
        let lim = 8.0;
        let steps = (2.0 * lim / h) as i64;
        let pdf = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = 0.0;
        for a in 0..steps {
            let za = -lim + (a as f64 + 0.5) * h;
            for b in 0..steps {
                let zb = -lim + (b as f64 + 0.5) * h;
                let d = s1 * za - s2 * zb;
                acc += pdf(za) * pdf(zb) * (-d * d / (2.0 * sigma * sigma)).exp() * h * h;
            }
        }
        acc
    }

    #[test]
    fn population_oracle_matches_quadrature() {
        for &(sigma, sp, sq) in &[(1.0, 1.0, 2.0), (1.0, 10.0, 20.0), (0.5, 0.3, 1.1)] {
            let quad = quadrature_mean_kernel(sigma, sp, sp)
                + quadrature_mean_kernel(sigma, sq, sq)
                - 2.0 * quadrature_mean_kernel(sigma, sp, sq);
            assert!(
                (population_mmd_gaussian_oracle(sigma, sp, sq) - quad).abs() < 1e-6,
                "({sigma}, {sp}, {sq})"
            );
        }
        // Wider scales shrink the discrepancy.
        let wide = population_mmd_gaussian_oracle(1.0, 10.0, 20.0);
        assert!((wide - 0.016514).abs() < 1e-6);
        assert!(wide < population_mmd_gaussian_oracle(1.0, 1.0, 2.0));
    }

    #[test]
    fn liu_variance_by_brute_force() {
        let b = GramBlocks {
            xx: array![[1.0, 0.6], [0.6, 1.0]],
            yy: array![[1.0, 0.2], [0.2, 1.0]],
            xy: array![[0.3, 0.5], [0.1, 0.4]],
        };
        let n = 2usize;
        let hij = |i: usize, j: usize| b.xx[[i, j]] + b.yy[[i, j]] - b.xy[[i, j]] - b.xy[[j, i]];
        let mut v1 = 0.0;
        for i in 0..n {
            let mut ri = 0.0;
            for j in 0..n {
                ri += hij(i, j);
            }
            v1 += ri * ri;
        }
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += hij(i, j);
            }
        }
        let var = 4.0 * v1 / 8.0 - 4.0 * s * s / 16.0;
        let out = liu_ratio(&b, 1e-8).unwrap();
        assert_relative_eq!(out.variance, var, epsilon = 1e-14);
        assert_relative_eq!(out.tau, (var.max(0.0) + 1e-8).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(out.j_liu, 2f64.sqrt() * out.mmd / out.tau, epsilon = 1e-12);
    }

    #[test]
    fn liu_needs_balance() {
        let k = gaussian_identity(1);
        let b = gram_blocks(
            &k,
            array![[0.0], [1.0], [2.0]].view(),
            array![[0.5], [1.5]].view(),
        )
        .unwrap();
        assert!(matches!(liu_ratio(&b, 1e-8), Err(Error::Unsupported(_))));
    }

    #[test]
    fn liu_floor_inflates_ratio() {
        // A near-degenerate kernel with a small positive statistic hits the floor.
        let f = array![[0.0], [0.0], [0.0], [0.0]];
        let fg = liu_feature_grad(&KernelSpec::gaussian(), f.view(), 2, 1e-8).unwrap();
        assert_eq!(fg.liu.unwrap().tau, 1e-4);
        let r = LiuRatio {
            mmd: 0.016,
            tau: 1e-4,
            j_liu: 200f64.sqrt() * 0.016 / 1e-4,
            variance: 0.0,
        };
        assert!(r.j_liu > 1e3 && r.j_liu < 1e5);
    }

    #[test]
    fn pooled_label_mmd_matches_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pooled = Array2::from_shape_simple_fn((9, 2), || StandardNormal.sample(&mut rng));
        let k = gaussian_identity(2);
        let gram = k.gram(pooled.view()).unwrap();
        let mut is_x = vec![false; 9];
        for i in [0, 3, 4, 8] {
            is_x[i] = true;
        }
        let xs: Vec<usize> = (0..9).filter(|&i| is_x[i]).collect();
        let ys: Vec<usize> = (0..9).filter(|&i| !is_x[i]).collect();
        let b = gram_blocks(
            &k,
            pooled.select(Axis(0), &xs).view(),
            pooled.select(Axis(0), &ys).view(),
        )
        .unwrap();
        assert_relative_eq!(
            mmd_from_pooled_labels(gram.view(), &is_x),
            mmd_unbiased(&b).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn unbiased_under_scale_alternative() {
        // Smaller Monte Carlo than the acceptance run; same oracle.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let k = gaussian_identity(1);
        let reps = 2000;
        let vals: Vec<f64> = (0..reps)
            .map(|_| {
                let x = Array2::from_shape_simple_fn((50, 1), || StandardNormal.sample(&mut rng));
                let y = Array2::from_shape_simple_fn((50, 1), || {
                    2.0 * {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        z
                    }
                });
                mmd_unbiased(&gram_blocks(&k, x.view(), y.view()).unwrap()).unwrap()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let sd =
            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0)).sqrt();
        let se = sd / (reps as f64).sqrt();
        assert!(
            (mean - population_mmd_gaussian_oracle(1.0, 1.0, 2.0)).abs() <= 3.0 * se,
            "mean {mean} se {se}"
        );
    }

    #[test]
    fn null_mean_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let k = gaussian_identity(2);
        let reps = 2000;
        let vals: Vec<f64> = (0..reps)
            .map(|_| {
                let x = Array2::from_shape_simple_fn((20, 2), || StandardNormal.sample(&mut rng));
                let y = Array2::from_shape_simple_fn((20, 2), || StandardNormal.sample(&mut rng));
                mmd_unbiased(&gram_blocks(&k, x.view(), y.view()).unwrap()).unwrap()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let sd =
            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0)).sqrt();
        assert!(mean.abs() <= 3.0 * sd / (reps as f64).sqrt());
    }

    fn random_mlp(rng: &mut ChaCha8Rng, widths: &[usize]) -> MlpMap {
        let layers = widths
            .windows(2)
            .map(|io| {
                let w = Array2::from_shape_simple_fn((io[1], io[0]), || rng.gen_range(-1.0..1.0));
                let b = Array1::from_shape_simple_fn(io[1], || rng.gen_range(-0.3..0.3));
                Layer::new(w, b).unwrap()
            })
            .collect();
        MlpMap::from_layers(layers, 0.2).unwrap()
    }

    fn perturbed(mlp: &MlpMap, k: usize, h: f64) -> MlpMap {
        let mut out = mlp.clone();
        *out.params_mut().nth(k).unwrap() += h;
        out
    }

    fn criterion_value(
        base: &KernelSpec,
        mlp: &MlpMap,
        pooled: &Array2<f64>,
        m: usize,
        liu: bool,
    ) -> f64 {
        let f = mlp.forward(pooled.view()).unwrap();
        if liu {
            liu_feature_grad(base, f.view(), m, 1e-8)
                .unwrap()
                .liu
                .unwrap()
                .j_liu
        } else {
            mmd_feature_grad(base, f.view(), m).unwrap().mmd
        }
    }

    fn check_gradient(seed: u64, base: KernelSpec, liu: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 2 + (seed as usize % 3);
        let widths = [d, 3 + seed as usize % 6, 2 + seed as usize % 4];
        let mlp = random_mlp(&mut rng, &widths);
        let m = 2 + seed as usize % 2;
        let n = if liu { m } else { 2 + seed as usize % 3 };
        let pooled = Array2::from_shape_simple_fn((m + n, d), || rng.gen_range(-1.5..1.5));
        let cache = mlp.forward_cached(pooled.view()).unwrap();
        let fg = if liu {
            liu_feature_grad(&base, cache.output().view(), m, 1e-8).unwrap()
        } else {
            mmd_feature_grad(&base, cache.output().view(), m).unwrap()
        };
        let g = mlp.backward(&cache, fg.grad.view()).unwrap();
        let analytic: Vec<f64> = g.values().copied().collect();
        let h = 1e-5;
        let scale = analytic.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (k, &a) in analytic.iter().enumerate() {
            let fd = (criterion_value(&base, &perturbed(&mlp, k, h), &pooled, m, liu)
                - criterion_value(&base, &perturbed(&mlp, k, -h), &pooled, m, liu))
                / (2.0 * h);
            let err = (fd - a).abs() / a.abs().max(1e-2 * scale).max(1e-8);
            assert!(err < 1e-4, "seed {seed} param {k}: fd {fd} analytic {a}");
        }
    }

    #[test]
    fn mmd_gradient_matches_finite_differences() {
        for seed in 0..20 {
            check_gradient(seed, KernelSpec::gaussian(), false);
        }
    }

    #[test]
    fn laplacian_gradient_matches_finite_differences() {
        for seed in 20..25 {
            check_gradient(seed, KernelSpec::laplacian(), false);
        }
    }

    #[test]
    fn liu_gradient_matches_finite_differences() {
        for seed in 30..40 {
            check_gradient(seed, KernelSpec::gaussian(), true);
        }
    }

    #[test]
    fn degenerate_and_constant_kernels_have_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut mlp = random_mlp(&mut rng, &[2, 4, 3]);
        let x = Array2::from_shape_simple_fn((3, 2), || rng.gen_range(-1.0..1.0));
        let y = Array2::from_shape_simple_fn((3, 2), || rng.gen_range(-1.0..1.0));
        let sample = PooledSample::new(x, y).unwrap();

        let constant = CompositeKernel::new(
            KernelSpec::constant(0.5, 1.0).unwrap(),
            FeatureMap::Mlp(Arc::new(mlp.clone())),
        );
        let (_, g) = mmd_gradient_wrt_features(&sample, &constant).unwrap();
        assert!(g.values().all(|&v| v == 0.0));

        mlp.params_mut().for_each(|p| *p = 0.0);
        let zero = CompositeKernel::new(KernelSpec::gaussian(), FeatureMap::Mlp(Arc::new(mlp)));
        let (v, g) = mmd_gradient_wrt_features(&sample, &zero).unwrap();
        assert_relative_eq!(v, 0.0, epsilon = 1e-15);
        assert!(g.values().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_needs_mlp() {
        let sample = PooledSample::new(array![[0.0], [1.0]], array![[2.0], [3.0]]).unwrap();
        assert!(matches!(
            mmd_gradient_wrt_features(&sample, &gaussian_identity(1)),
            Err(Error::Unsupported(_))
        ));
    }

    proptest! {
        #[test]
        fn exchange_and_swap_symmetry(
            pts in proptest::collection::vec(-3.0f64..3.0, 16),
            shift in 0usize..4,
        ) {
            let x = Array2::from_shape_vec((4, 2), pts[..8].to_vec()).unwrap();
            let y = Array2::from_shape_vec((4, 2), pts[8..].to_vec()).unwrap();
            let k = gaussian_identity(2);
            let base = mmd_unbiased(&gram_blocks(&k, x.view(), y.view()).unwrap()).unwrap();
            let order: Vec<usize> = (0..4).map(|i| (i + shift) % 4).collect();
            let xp = x.select(Axis(0), &order);
            let yp = y.select(Axis(0), &[3, 1, 2, 0]);
            let permuted = mmd_unbiased(&gram_blocks(&k, xp.view(), yp.view()).unwrap()).unwrap();
            prop_assert!((base - permuted).abs() < 1e-12);
            let swapped = mmd_unbiased(&gram_blocks(&k, y.view(), x.view()).unwrap()).unwrap();
            prop_assert!((base - swapped).abs() < 1e-12);
        }
    }
}
