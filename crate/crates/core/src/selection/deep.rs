use serde::{Deserialize, Serialize};

use super::{Criterion, Trajectory, TrajectoryRecord};
use crate::error::{invalid, Error, Result};
use crate::features::{MlpGradient, MlpMap};
use crate::kernels::KernelSpec;
use crate::mmd::{liu_feature_grad, mmd_feature_grad};
use crate::sample::PooledSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub steps: usize,
    pub lr: f64,
    pub clip: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Master seed for MLP initialization.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            lr: 0.005,
            clip: 5.0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !(self.clip > 0.0) {
            return Err(invalid("learning rate and clip norm must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.eps > 0.0)
        {
            return Err(invalid("Adam moments need beta in [0, 1) and eps > 0"));
        }
        Ok(())
    }
}

/// Adam with bias correction, stepping uphill.
#[derive(Debug, Clone)]
pub struct Adam {
    m: MlpGradient,
    v: MlpGradient,
    t: i32,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(params: &MlpMap, cfg: &OptimizerConfig) -> Self {
        Self {
            m: MlpGradient::zeros_like(params),
            v: MlpGradient::zeros_like(params),
            t: 0,
            lr: cfg.lr,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.eps,
        }
    }

    pub fn ascend(&mut self, params: &mut MlpMap, grad: &MlpGradient) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (((p, g), m), v) in params
            .params_mut()
            .zip(grad.values())
            .zip(self.m.values_mut())
            .zip(self.v.values_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p += lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeepSelection {
    /// Parameters at the selected step.
    pub mlp: MlpMap,
    pub trajectory: Trajectory,
}

fn abort(traj: &Trajectory) -> Error {
    Error::NumericalAbort {
        stage: "deep selection",
        last_finite: traj.last().map(|r| Box::new(*r)),
    }
}

/// Runs `cfg.steps` clipped Adam ascent steps on the criterion over `train`.
/// The penalized criterion returns its best iterate; the plain and ratio
/// criteria return the final one.
pub fn select_deep(
    criterion: &Criterion,
    train: &PooledSample,
    mlp0: &MlpMap,
    base: &KernelSpec,
    cfg: &OptimizerConfig,
) -> Result<DeepSelection> {
    cfg.validate()?;
    train.require_min(2, "deep selection")?;
    if matches!(criterion, Criterion::Liu { .. }) && train.m() != train.n() {
        return Err(Error::Unsupported(format!(
            "the ratio criterion needs balanced samples (m = {}, n = {})",
            train.m(),
            train.n()
        )));
    }
    let pooled = train.pooled();
    let m = train.m();
    let scale = train.frobenius() / train.total() as f64;
    let mut mlp = mlp0.clone();
    let mut best = mlp0.clone();
    let mut best_value = f64::NEG_INFINITY;
    let mut adam = Adam::new(&mlp, cfg);
    let mut traj = Trajectory::default();

    for step in 0..=cfg.steps {
        let cache = mlp.forward_cached(pooled.view())?;
        let fg = match criterion {
            Criterion::Liu { lambda } => liu_feature_grad(base, cache.output().view(), m, *lambda)?,
            _ => mmd_feature_grad(base, cache.output().view(), m)?,
        };
        let (pi, pi_grad) = match criterion {
            Criterion::Cp { .. } => {
                let (pi, g) = mlp.spectral_product_grad();
                (pi, Some(g))
            }
            _ => (mlp.spectral_product(), None),
        };
        let proxy = pi * scale;
        let value = match criterion {
            Criterion::Cp { c1 } => fg.mmd - c1 * proxy,
            Criterion::Plain => fg.mmd,
            Criterion::Liu { .. } => fg.liu.map_or(f64::NAN, |l| l.j_liu),
        };
        if !value.is_finite() {
            return Err(abort(&traj));
        }
        traj.records.push(TrajectoryRecord {
            step,
            criterion: value,
            mmd: fg.mmd,
            proxy,
            lipschitz: pi,
            sigma: None,
            tau: fg.liu.map(|l| l.tau),
            grad_norm: None,
        });
        if matches!(criterion, Criterion::Cp { .. }) && value > best_value {
            best_value = value;
            best = mlp.clone();
        }
        if step == cfg.steps {
            break;
        }

        let mut grad = mlp.backward(&cache, fg.grad.view())?;
        if let (Criterion::Cp { c1 }, Some(g)) = (criterion, pi_grad) {
            grad.add_scaled(&g, -c1 * scale);
        }
        if !grad.is_finite() {
            return Err(abort(&traj));
        }
        let norm = grad.global_norm();
        if norm > cfg.clip {
            grad.scale(cfg.clip / norm);
        }
        traj.records[step].grad_norm = Some(grad.global_norm());
        adam.ascend(&mut mlp, &grad);
    }

    let (mlp, selected) = match criterion {
        Criterion::Cp { .. } => (best, traj.argmax()),
        _ => (mlp, cfg.steps),
    };
    traj.selected = selected;
    Ok(DeepSelection {
        mlp,
        trajectory: traj,
    })
}
