//! Complexity proxy, the penalized criterion, and the concentration
//! certificates built on them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::features::FeatureMap;
use crate::kernels::KernelSpec;
use crate::sample::PooledSample;

/// Constant in the held-out rejection threshold.
pub const HELDOUT_CONSTANT: f64 = 16.0;

/// `G̃(h) = L(h) · ‖D‖_F / N`.
pub fn complexity_proxy(h: &FeatureMap, sample: &PooledSample) -> f64 {
    proxy_from_parts(h.lipschitz_constant(), sample)
}

pub fn proxy_from_parts(lipschitz: f64, sample: &PooledSample) -> f64 {
    lipschitz * sample.frobenius() / sample.total() as f64
}

/// `J_CP = mmd - c1 · proxy`.
pub fn j_cp(mmd: f64, c1_hat: f64, proxy: f64) -> f64 {
    mmd - c1_hat * proxy
}

fn check_confidence(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// Worst-case constants of the uniform concentration inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UciConstants {
    pub c1: f64,
    pub c2: f64,
}

impl UciConstants {
    pub fn new(kernel: &KernelSpec, rho_star: f64) -> Self {
        Self {
            c1: 2.0
                * (2.0 * std::f64::consts::PI).sqrt()
                * kernel.lipschitz()
                * rho_star
                * (1.0 + rho_star),
            c2: 4.0 * kernel.nu() * rho_star,
        }
    }

    pub fn for_sample(kernel: &KernelSpec, sample: &PooledSample) -> Self {
        Self::new(kernel, sample.rho_star())
    }

    /// `C2 · sqrt(ln(2/δ) / N)`.
    pub fn concentration(&self, total: usize, delta: f64) -> Result<f64> {
        check_confidence("delta", delta)?;
        Ok(self.c2 * ((2.0 / delta).ln() / total as f64).sqrt())
    }
}

/// `B_N(δ) = C1 · G + C2 · sqrt(ln(2/δ) / N)`.
pub fn uci_bound(consts: &UciConstants, proxy_class: f64, total: usize, delta: f64) -> Result<f64> {
    Ok(consts.c1 * proxy_class + consts.concentration(total, delta)?)
}

/// Lower confidence bound on the population MMD of a selected kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub lower_bound: f64,
    pub delta: f64,
    pub mmd: f64,
    pub complexity_term: f64,
    pub concentration_term: f64,
}

/// `L_δ = mmd - c1 · G - C2 · sqrt(ln(2/δ) / N)`; `c1` may be the worst-case
/// constant or a calibrated one.
pub fn certificate(
    mmd: f64,
    c1: f64,
    proxy_class: f64,
    consts: &UciConstants,
    total: usize,
    delta: f64,
) -> Result<Certificate> {
    let complexity_term = c1 * proxy_class;
    let concentration_term = consts.concentration(total, delta)?;
    Ok(Certificate {
        lower_bound: mmd - complexity_term - concentration_term,
        delta,
        mmd,
        complexity_term,
        concentration_term,
    })
}

/// Inputs of the held-out power certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCertificateInput {
    pub mmd_train: f64,
    pub proxy: f64,
    pub c1: f64,
    pub c2: f64,
    pub n_train: usize,
    pub n_holdout: usize,
    pub alpha: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCertificate {
    pub satisfied: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// Checks whether the training-half lower bound clears the held-out
/// rejection threshold `16 ν sqrt((ln(2/α) + ln(2/δ)) / N_ho)`.
pub fn power_certificate(input: &PowerCertificateInput) -> Result<PowerCertificate> {
    check_confidence("alpha", input.alpha)?;
    check_confidence("delta", input.delta)?;
    check_confidence("delta'", input.delta_prime)?;
    if input.n_train == 0 || input.n_holdout == 0 {
        return Err(invalid("certificate needs nonempty halves"));
    }
    let lhs = input.mmd_train
        - input.c1 * input.proxy
        - input.c2 * ((2.0 / input.delta_prime).ln() / input.n_train as f64).sqrt();
    let rhs = HELDOUT_CONSTANT
        * input.nu
        * (((2.0 / input.alpha).ln() + (2.0 / input.delta).ln()) / input.n_holdout as f64).sqrt();
    Ok(PowerCertificate {
        satisfied: lhs >= rhs,
        lhs,
        rhs,
    })
}
