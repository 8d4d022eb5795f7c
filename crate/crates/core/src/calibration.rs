//! Null-permutation calibration of the penalty coefficient `Ĉ1`.
//!
//! Each calibration run shuffles the pooled training half, re-splits it at the
//! original sizes, maximizes the plain MMD over the kernel class, and records
//! `r = γ̂² / G̃` at the maximizer. `Ĉ1` is the `⌈(1-α)(n_cal+1)⌉`-th smallest
//! ratio, or the largest one when that rank exceeds `n_cal`.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::features::MlpMap;
use crate::kernels::KernelSpec;
use crate::sample::PooledSample;
use crate::seed::{derive_seed, rng_from_seed, stream, tags};
use crate::selection::{
    select_deep, Criterion, OptimizerConfig, Regime, ScalarClass, ScalarObjective,
};

/// Ratios below this count as degenerate.
pub const DEGENERATE_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantileConvention {
    /// The `rank`-th smallest ratio (1-based).
    Quantile { rank: usize },
    /// Largest ratio; used when the quantile rank exceeds `n_cal`.
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CalibrationWarning {
    /// More than half the ratios are essentially zero. Typical of very wide
    /// networks; calibrate at the largest well-behaved width instead.
    DegenerateRatios {
        below: usize,
        n_cal: usize,
        surrogate: String,
    },
    /// Every ratio was negative; `Ĉ1` was floored at 0.
    AllNegative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub c1_hat: f64,
    /// Ratios in permutation order.
    pub ratios: Vec<f64>,
    pub n_cal: usize,
    pub alpha: f64,
    pub convention: QuantileConvention,
    pub warnings: Vec<CalibrationWarning>,
}

/// Order statistic of `ratios` at level `alpha`.
pub fn calibration_quantile(ratios: &[f64], alpha: f64) -> Result<(f64, QuantileConvention)> {
    if ratios.is_empty() {
        return Err(invalid("calibration needs at least one ratio"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = ratios.len();
    let mut sorted = ratios.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((1.0 - alpha) * (n as f64 + 1.0)).ceil() as usize;
    if rank > n {
        Ok((sorted[n - 1], QuantileConvention::Max))
    } else {
        let rank = rank.max(1);
        Ok((sorted[rank - 1], QuantileConvention::Quantile { rank }))
    }
}

fn ratio(mmd: f64, proxy: f64) -> Result<f64> {
    if proxy == 0.0 || !proxy.is_finite() {
        return Err(Error::DegenerateProxy);
    }
    Ok(mmd / proxy)
}

fn permutation(total: usize, seed: u64, index: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..total).collect();
    perm.shuffle(&mut stream(seed, index as u64, tags::CALIBRATION));
    perm
}

/// Calibrates `Ĉ1` for `regime` on the training half. Deep runs use the
/// optimizer settings of deployment with a plain-MMD objective.
pub fn calibrate_c1(
    regime: &Regime,
    train: &PooledSample,
    n_cal: usize,
    alpha: f64,
    opt: &OptimizerConfig,
    seed: u64,
) -> Result<CalibrationResult> {
    if n_cal == 0 {
        return Err(invalid("n_cal must be at least 1"));
    }
    train.require_min(2, "calibration")?;
    let total = train.total();
    let ratios: Vec<f64> = match regime {
        Regime::Linear | Regime::Polynomial { .. } => {
            let class = match regime {
                Regime::Polynomial { degree } => ScalarClass::polynomial(*degree, train)?,
                _ => ScalarClass::linear(),
            };
            let obj = ScalarObjective::new(&class, train)?;
            let (lo, hi) = obj.default_range()?;
            (0..n_cal)
                .into_par_iter()
                .map(|pi| {
                    let perm = permutation(total, seed, pi);
                    let mut is_x = vec![false; total];
                    for &p in &perm[..train.m()] {
                        is_x[p] = true;
                    }
                    let (_, traj) = obj.search(&Criterion::Plain, lo, hi, &is_x)?;
                    let rec = traj.selected_record().expect("nonempty trajectory");
                    ratio(rec.mmd, rec.proxy)
                })
                .collect::<Result<_>>()?
        }
        Regime::Deep(arch) => {
            let pooled = train.pooled();
            (0..n_cal)
                .into_par_iter()
                .map(|pi| {
                    let perm = permutation(total, seed, pi);
                    let shuffled =
                        PooledSample::from_pooled_indices(pooled.view(), &perm, train.m())?;
                    let mut rng = rng_from_seed(derive_seed(seed, pi as u64, tags::MLP_INIT));
                    let mlp0 = MlpMap::from_arch(arch, train.dim(), &mut rng)?;
                    let out = select_deep(
                        &Criterion::Plain,
                        &shuffled,
                        &mlp0,
                        &KernelSpec::gaussian(),
                        opt,
                    )?;
                    let rec = out
                        .trajectory
                        .selected_record()
                        .expect("nonempty trajectory");
                    ratio(rec.mmd, rec.proxy)
                })
                .collect::<Result<_>>()?
        }
    };
    finish(ratios, alpha)
}

fn finish(ratios: Vec<f64>, alpha: f64) -> Result<CalibrationResult> {
    let n_cal = ratios.len();
    let (value, convention) = calibration_quantile(&ratios, alpha)?;
    let mut warnings = Vec::new();
    let below = ratios.iter().filter(|&&r| r < DEGENERATE_RATIO).count();
    if 2 * below > n_cal {
        log::warn!("{below} of {n_cal} calibration ratios are below {DEGENERATE_RATIO}");
        warnings.push(CalibrationWarning::DegenerateRatios {
            below,
            n_cal,
            surrogate: "calibrate at the largest well-behaved width and reuse the coefficient"
                .into(),
        });
    }
    let c1_hat = if ratios.iter().all(|&r| r < 0.0) {
        log::warn!("all calibration ratios are negative; flooring the coefficient at 0");
        warnings.push(CalibrationWarning::AllNegative);
        0.0
    } else {
        value.max(0.0)
    };
    Ok(CalibrationResult {
        c1_hat,
        ratios,
        n_cal,
        alpha,
        convention,
        warnings,
    })
}
