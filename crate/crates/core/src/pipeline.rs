//! The sample-split testing protocol: split, select a kernel on the training
//! half, then run a permutation test with that kernel on the held-out half.

use std::sync::Arc;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_c1, CalibrationResult};
use crate::criterion::{power_certificate, PowerCertificate, PowerCertificateInput, UciConstants};
use crate::error::{invalid, Error, Result};
use crate::features::{FeatureMap, LinearMap, MlpArch, MlpMap};
use crate::kernels::{CompositeKernel, KernelSpec};
use crate::mmd::{mmd_from_pooled_labels, DEFAULT_LIU_LAMBDA};
use crate::sample::PooledSample;
use crate::seed::{derive_seed, stream, tags};
use crate::selection::{
    grid_argmax_selector, median_heuristic, select_deep, select_scalar_bandwidth, Criterion,
    OptimizerConfig, Regime, ScalarClass, Trajectory,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub n_perm: usize,
    pub n_cal: usize,
    pub split_fraction: f64,
    pub seed: u64,
    /// Skips calibration and uses this coefficient.
    pub c1_override: Option<f64>,
    /// Confidence of the concentration terms in the certificate.
    pub delta: f64,
    pub delta_prime: f64,
    pub liu_lambda: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            n_perm: 200,
            n_cal: 10,
            split_fraction: 0.5,
            seed: 0,
            c1_override: None,
            delta: 0.05,
            delta_prime: 0.05,
            liu_lambda: DEFAULT_LIU_LAMBDA,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.n_perm == 0 {
            return Err(invalid("n_perm must be at least 1"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(invalid(format!(
                "split fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        if let Some(c1) = self.c1_override {
            if !(c1 >= 0.0) || !c1.is_finite() {
                return Err(invalid(format!(
                    "c1 must be finite and nonnegative, got {c1}"
                )));
            }
        }
        Ok(())
    }
}

/// How the test kernel is chosen on the training half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// Penalized selection with a calibrated (or injected) coefficient.
    CpMmd(Regime),
    /// Unpenalized maximization.
    Plain(Regime),
    /// Variance-normalized ratio on an MLP.
    Liu(MlpArch),
    /// Gaussian kernel at the median pairwise distance.
    Median,
    /// Empirical-MMD argmax over Gaussian and Laplacian kernels at
    /// `multiplier × median` bandwidths.
    GridArgmax { multipliers: Vec<f64> },
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::CpMmd(r) => format!("cpmmd[{r}]"),
            Method::Plain(r) => format!("plain[{r}]"),
            Method::Liu(a) => format!("liu[{}]", Regime::Deep(a.clone())),
            Method::Median => "median".into(),
            Method::GridArgmax { multipliers } => {
                format!("grid_argmax[B={}]", 2 * multipliers.len())
            }
        }
    }

    /// Dyadic multipliers `2^-2 .. 2^2` for both base kernels (`B = 10`).
    pub fn default_grid() -> Self {
        Method::GridArgmax {
            multipliers: vec![0.25, 0.5, 1.0, 2.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationOutcome {
    pub reject: bool,
    pub p_value: f64,
    pub statistic: f64,
    pub c_alpha: f64,
    pub n_perm: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub records: usize,
    pub selected: usize,
    pub train_mmd: f64,
    pub train_proxy: f64,
    pub max_proxy: f64,
    /// `L(h)` at the last visited candidate; `Π^(T)` for MLPs.
    pub final_lipschitz: f64,
    pub selected_lipschitz: f64,
}

impl TrajectorySummary {
    fn from_trajectory(t: &Trajectory) -> Option<Self> {
        let sel = t.selected_record()?;
        Some(Self {
            records: t.records.len(),
            selected: t.selected,
            train_mmd: sel.mmd,
            train_proxy: sel.proxy,
            max_proxy: t.max_proxy(),
            final_lipschitz: t.last()?.lipschitz,
            selected_lipschitz: sel.lipschitz,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub reject: bool,
    pub p_value: f64,
    pub statistic: f64,
    pub c_alpha: f64,
    pub n_perm: usize,
    pub method: String,
    pub kernel: String,
    pub c1_hat: Option<f64>,
    pub c1_injected: bool,
    pub calibration: Option<CalibrationResult>,
    pub certificate: Option<PowerCertificate>,
    pub trajectory: Option<TrajectorySummary>,
}

/// Splits each class uniformly at random; the training half gets
/// `floor(fraction · size)` points of each class.
pub fn stratified_split(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    fraction: f64,
    seed: u64,
) -> Result<(PooledSample, PooledSample)> {
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: y.ncols(),
        });
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let (m, n) = (x.nrows(), y.nrows());
    if m < 4 || n < 4 {
        return Err(Error::InsufficientSamples {
            context: "stratified split",
            m,
            n,
            required: 4,
        });
    }
    let halve = |size: usize, class: u64| {
        let mut idx: Vec<usize> = (0..size).collect();
        idx.shuffle(&mut stream(seed, class, tags::SPLIT));
        let k = (fraction * size as f64).floor() as usize;
        let mut train = idx[..k].to_vec();
        let mut test = idx[k..].to_vec();
        train.sort_unstable();
        test.sort_unstable();
        (train, test)
    };
    let (xtr, xte) = halve(m, 0);
    let (ytr, yte) = halve(n, 1);
    for (a, b) in [(&xtr, &ytr), (&xte, &yte)] {
        if a.len() < 2 || b.len() < 2 {
            return Err(Error::InsufficientSamples {
                context: "split half",
                m: a.len(),
                n: b.len(),
                required: 2,
            });
        }
    }
    Ok((
        PooledSample::new(x.select(Axis(0), &xtr), y.select(Axis(0), &ytr))?,
        PooledSample::new(x.select(Axis(0), &xte), y.select(Axis(0), &yte))?,
    ))
}

/// Level-`alpha` permutation test with a fixed kernel. The pooled Gram matrix
/// is computed once; each permutation relabels its rows.
pub fn permutation_test(
    kernel: &CompositeKernel,
    test_half: &PooledSample,
    n_perm: usize,
    alpha: f64,
    seed: u64,
) -> Result<PermutationOutcome> {
    test_half.require_min(2, "permutation test")?;
    if n_perm == 0 {
        return Err(invalid("n_perm must be at least 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let gram = kernel.gram(test_half.pooled().view())?;
    let (m, total) = (test_half.m(), test_half.total());
    let observed: Vec<bool> = (0..total).map(|i| i < m).collect();
    let statistic = mmd_from_pooled_labels(gram.view(), &observed);
    if !statistic.is_finite() {
        return Err(Error::NumericalAbort {
            stage: "permutation test",
            last_finite: None,
        });
    }
    let mut rng = stream(seed, 0, tags::PERMUTATION);
    let mut idx: Vec<usize> = (0..total).collect();
    let mut labels = vec![false; total];
    let mut permuted = Vec::with_capacity(n_perm);
    for _ in 0..n_perm {
        idx.shuffle(&mut rng);
        labels.fill(false);
        for &i in &idx[..m] {
            labels[i] = true;
        }
        permuted.push(mmd_from_pooled_labels(gram.view(), &labels));
    }
    let exceed = permuted.iter().filter(|&&s| s >= statistic).count();
    let p_value = (1 + exceed) as f64 / (n_perm + 1) as f64;
    permuted.sort_by(f64::total_cmp);
    let rank = (((1.0 - alpha) * (n_perm + 1) as f64).ceil() as usize).clamp(1, n_perm);
    Ok(PermutationOutcome {
        reject: p_value <= alpha,
        p_value,
        statistic,
        c_alpha: permuted[rank - 1],
        n_perm,
    })
}

struct Selected {
    kernel: CompositeKernel,
    trajectory: Option<Trajectory>,
}

fn select_with(
    criterion: Criterion,
    regime: &Regime,
    train: &PooledSample,
    cfg: &TestConfig,
    opt: &OptimizerConfig,
) -> Result<Selected> {
    match regime {
        Regime::Linear | Regime::Polynomial { .. } => {
            let class = match regime {
                Regime::Polynomial { degree } => ScalarClass::polynomial(*degree, train)?,
                _ => ScalarClass::linear(),
            };
            let (sigma, trajectory) = select_scalar_bandwidth(&criterion, &class, train, None)?;
            Ok(Selected {
                kernel: class.kernel(sigma, train.dim())?,
                trajectory: Some(trajectory),
            })
        }
        Regime::Deep(arch) => {
            let mlp0 = MlpMap::from_arch(
                arch,
                train.dim(),
                &mut stream(cfg.seed, opt.seed, tags::MLP_INIT),
            )?;
            let base = KernelSpec::gaussian();
            let out = select_deep(&criterion, train, &mlp0, &base, opt)?;
            Ok(Selected {
                kernel: CompositeKernel::new(base, FeatureMap::Mlp(Arc::new(out.mlp))),
                trajectory: Some(out.trajectory),
            })
        }
    }
}

/// Runs the full protocol with the given selection method.
pub fn run_test(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    method: &Method,
    cfg: &TestConfig,
    opt: &OptimizerConfig,
) -> Result<TestReport> {
    cfg.validate()?;
    let (train, test) =
        stratified_split(x, y, cfg.split_fraction, cfg.seed).map_err(|e| e.in_stage("split"))?;

    let mut c1_hat = None;
    let mut calibration = None;
    let selected = match method {
        Method::CpMmd(regime) => {
            let c1 = match cfg.c1_override {
                Some(c1) => c1,
                None => {
                    let cal = calibrate_c1(
                        regime,
                        &train,
                        cfg.n_cal,
                        cfg.alpha,
                        opt,
                        derive_seed(cfg.seed, 0, tags::CALIBRATION),
                    )
                    .map_err(|e| e.in_stage("calibration"))?;
                    let c1 = cal.c1_hat;
                    calibration = Some(cal);
                    c1
                }
            };
            c1_hat = Some(c1);
            select_with(Criterion::Cp { c1 }, regime, &train, cfg, opt)
        }
        Method::Plain(regime) => select_with(Criterion::Plain, regime, &train, cfg, opt),
        Method::Liu(arch) => select_with(
            Criterion::Liu {
                lambda: cfg.liu_lambda,
            },
            &Regime::Deep(arch.clone()),
            &train,
            cfg,
            opt,
        ),
        Method::Median => median_heuristic(&train).and_then(|sigma| {
            Ok(Selected {
                kernel: CompositeKernel::new(
                    KernelSpec::gaussian(),
                    FeatureMap::Linear(LinearMap::new(sigma, train.dim())?),
                ),
                trajectory: None,
            })
        }),
        Method::GridArgmax { multipliers } => median_heuristic(&train).and_then(|med| {
            let mut kernels = Vec::with_capacity(2 * multipliers.len());
            for base in [KernelSpec::gaussian(), KernelSpec::laplacian()] {
                for &k in multipliers {
                    kernels.push(CompositeKernel::new(
                        base,
                        FeatureMap::Linear(LinearMap::new(k * med, train.dim())?),
                    ));
                }
            }
            let pick = grid_argmax_selector(&kernels, &train, cfg.delta)?;
            Ok(Selected {
                kernel: kernels.swap_remove(pick.index),
                trajectory: None,
            })
        }),
    }
    .map_err(|e| e.in_stage("selection"))?;

    let summary = selected
        .trajectory
        .as_ref()
        .and_then(TrajectorySummary::from_trajectory);
    let certificate = match (c1_hat, summary) {
        (Some(c1), Some(s)) => Some(
            power_certificate(&PowerCertificateInput {
                mmd_train: s.train_mmd,
                proxy: s.max_proxy,
                c1,
                c2: UciConstants::for_sample(&selected.kernel.base, &train).c2,
                n_train: train.total(),
                n_holdout: test.total(),
                alpha: cfg.alpha,
                delta: cfg.delta,
                delta_prime: cfg.delta_prime,
                nu: selected.kernel.base.nu(),
            })
            .map_err(|e| e.in_stage("certificate"))?,
        ),
        _ => None,
    };

    let outcome = permutation_test(
        &selected.kernel,
        &test,
        cfg.n_perm,
        cfg.alpha,
        derive_seed(cfg.seed, 0, tags::PERMUTATION),
    )
    .map_err(|e| e.in_stage("test"))?;
    Ok(TestReport {
        reject: outcome.reject,
        p_value: outcome.p_value,
        statistic: outcome.statistic,
        c_alpha: outcome.c_alpha,
        n_perm: outcome.n_perm,
        method: method.name(),
        kernel: selected.kernel.describe(),
        c1_hat,
        c1_injected: cfg.c1_override.is_some() && c1_hat.is_some(),
        calibration,
        certificate,
        trajectory: summary,
    })
}

/// Split, calibrate, select by the penalized criterion, and test.
pub fn run_cpmmd_test(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    regime: &Regime,
    cfg: &TestConfig,
    opt: &OptimizerConfig,
) -> Result<TestReport> {
    run_test(x, y, &Method::CpMmd(regime.clone()), cfg, opt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub se: f64,
    pub reps: usize,
}

impl RateEstimate {
    pub fn from_counts(hits: usize, reps: usize) -> Self {
        let rate = hits as f64 / reps as f64;
        Self {
            rate,
            se: (rate * (1.0 - rate) / reps as f64).sqrt(),
            reps,
        }
    }
}

/// Rejection rate of `test` over `n_reps` replicates. Replicate `r` receives
/// the seed derived from `(seed, r)`; replicates run in parallel.
pub fn monte_carlo_rate<F>(test: F, n_reps: usize, seed: u64) -> Result<RateEstimate>
where
    F: Fn(u64) -> Result<bool> + Sync,
{
    if n_reps == 0 {
        return Err(invalid("n_reps must be at least 1"));
    }
    let outcomes = (0..n_reps as u64)
        .into_par_iter()
        .map(|r| test(derive_seed(seed, r, tags::REPLICATE)))
        .collect::<Result<Vec<bool>>>()?;
    Ok(RateEstimate::from_counts(
        outcomes.iter().filter(|&&b| b).count(),
        n_reps,
    ))
}
