use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::kernels::{gram_blocks, CompositeKernel};
use crate::mmd::mmd_unbiased;
use crate::sample::PooledSample;

pub(crate) fn median_of_sq_dists(mut sq: Vec<f64>) -> Result<f64> {
    if sq.is_empty() {
        return Err(Error::InsufficientSamples {
            context: "median heuristic",
            m: 1,
            n: 0,
            required: 2,
        });
    }
    let len = sq.len();
    let mid = len / 2;
    let (_, &mut upper, _) = sq.select_nth_unstable_by(mid, f64::total_cmp);
    let med = if len % 2 == 1 {
        upper.sqrt()
    } else {
        let lower = sq[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower.sqrt() + upper.sqrt())
    };
    if med <= 0.0 {
        return Err(Error::DegenerateBandwidth);
    }
    Ok(med)
}

/// Median Euclidean distance over all distinct unordered pairs of rows.
pub fn median_distance(points: ArrayView2<'_, f64>) -> Result<f64> {
    let n = points.nrows();
    let mut sq = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            sq.push(
                points
                    .row(i)
                    .iter()
                    .zip(points.row(j).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum(),
            );
        }
    }
    median_of_sq_dists(sq)
}

/// Median pairwise distance of the pooled sample.
pub fn median_heuristic(pooled_train: &PooledSample) -> Result<f64> {
    median_distance(pooled_train.pooled().view())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSelection {
    pub index: usize,
    pub regret_bound: f64,
    pub mmds: Vec<f64>,
}

/// Picks the kernel with the largest unbiased MMD (first on ties) and
/// reports the regret bound `2 C2 sqrt(ln(2B/δ) / N)`.
pub fn grid_argmax_selector(
    kernels: &[CompositeKernel],
    train: &PooledSample,
    delta: f64,
) -> Result<GridSelection> {
    if kernels.is_empty() {
        return Err(crate::error::invalid(
            "grid selection needs at least one kernel",
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(crate::error::invalid(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let mmds = kernels
        .iter()
        .map(|k| mmd_unbiased(&gram_blocks(k, train.x(), train.y())?))
        .collect::<Result<Vec<_>>>()?;
    let mut index = 0;
    for (j, v) in mmds.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NumericalAbort {
                stage: "grid selection",
                last_finite: None,
            });
        }
        if *v > mmds[index] {
            index = j;
        }
    }
    let nu = kernels.iter().map(|k| k.base.nu()).fold(0.0, f64::max);
    let c2 = 4.0 * nu * train.rho_star();
    let b = kernels.len() as f64;
    let regret_bound = 2.0 * c2 * ((2.0 * b / delta).ln() / train.total() as f64).sqrt();
    Ok(GridSelection {
        index,
        regret_bound,
        mmds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureMap, LinearMap};
    use crate::kernels::KernelSpec;
    use ndarray::array;

    #[test]
    fn median_examples() {
        assert_eq!(median_distance(array![[0.0], [2.0]].view()).unwrap(), 2.0);
        assert_eq!(
            median_distance(array![[0.0], [1.0], [3.0]].view()).unwrap(),
            2.0
        );
        // Distances {1, 2, 3, 1, 2, 1}: central values 1 and 2.
        assert_eq!(
            median_distance(array![[0.0], [1.0], [2.0], [3.0]].view()).unwrap(),
            1.5
        );
        assert!(matches!(
            median_distance(array![[0.0], [0.0], [0.0]].view()),
            Err(Error::DegenerateBandwidth)
        ));
    }

    fn gaussian(sigma: f64) -> CompositeKernel {
        CompositeKernel::new(
            KernelSpec::gaussian(),
            FeatureMap::Linear(LinearMap::new(sigma, 1).unwrap()),
        )
    }

    #[test]
    fn single_and_tied_kernels() {
        let s = PooledSample::new(array![[0.0], [1.0]], array![[2.0], [4.0]]).unwrap();
        let one = grid_argmax_selector(&[gaussian(1.0)], &s, 0.05).unwrap();
        assert_eq!(one.index, 0);
        assert!((one.regret_bound - 2.0 * 8.0 * ((2.0f64 / 0.05).ln() / 4.0).sqrt()).abs() < 1e-12);
        let tied = grid_argmax_selector(&[gaussian(1.0), gaussian(1.0)], &s, 0.05).unwrap();
        assert_eq!(tied.index, 0);
    }
}
