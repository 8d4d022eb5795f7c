// Full deep-regime test on a high-dimensional mean shift: calibrate the
// penalty, train the MLP on one half, test on the other.

use cpmmd::datagen::{two_sample, Family};
use cpmmd::features::MlpArch;
use cpmmd::pipeline::{run_cpmmd_test, TestConfig};
use cpmmd::selection::{OptimizerConfig, Regime};

pub fn run_example() -> cpmmd::Result<()> {
    let data = two_sample(
        &Family::GaussianMeanShift { d: 20, delta: 0.5 },
        100,
        100,
        11,
        0,
    )?;
    let cfg = TestConfig {
        seed: 11,
        n_cal: 5,
        ..Default::default()
    };
    let opt = OptimizerConfig {
        steps: 50,
        ..Default::default()
    };
    let report = run_cpmmd_test(
        data.x(),
        data.y(),
        &Regime::Deep(MlpArch::two_hidden(32)),
        &cfg,
        &opt,
    )?;

    println!("reject = {} (p = {:.4})", report.reject, report.p_value);
    println!("c1_hat = {:.4}", report.c1_hat.unwrap_or(f64::NAN));
    if let Some(t) = &report.trajectory {
        println!(
            "selected step {} of {}, train mmd {:.4}, spectral product {:.2}",
            t.selected,
            t.records - 1,
            t.train_mmd,
            t.selected_lipschitz
        );
    }
    if let Some(c) = &report.certificate {
        println!(
            "power certificate: {} ({:.4} vs {:.4})",
            c.satisfied, c.lhs, c.rhs
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
