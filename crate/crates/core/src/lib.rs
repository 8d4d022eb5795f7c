//! Kernel two-sample testing with complexity-penalized kernel selection.
//!
//! The crate selects a kernel on one half of the data by maximizing
//! `J_CP(h) = γ̂²(h) - Ĉ1 · G̃(h)`, the unbiased MMD net of a calibrated
//! Lipschitz penalty, then runs a permutation test on the other half.
//!
//! ```no_run
//! use cpmmd::datagen::{two_sample, Family};
//! use cpmmd::pipeline::{run_cpmmd_test, TestConfig};
//! use cpmmd::selection::{OptimizerConfig, Regime};
//!
//! let data = two_sample(&Family::GaussianMeanShift { d: 5, delta: 0.5 }, 100, 100, 7, 0)?;
//! let report = run_cpmmd_test(data.x(), data.y(), &Regime::Linear, &TestConfig::default(), &OptimizerConfig::default())?;
//! println!("reject = {}, p = {}", report.reject, report.p_value);
//! # Ok::<(), cpmmd::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod criterion;
pub mod datagen;
mod error;
pub mod features;
pub mod kernels;
pub mod mmd;
pub mod pipeline;
mod sample;
pub mod seed;
pub mod selection;

pub use error::{Error, Result};
pub use sample::PooledSample;
