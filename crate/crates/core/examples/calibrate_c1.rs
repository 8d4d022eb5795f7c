// Permutation calibration of the penalty coefficient in each regime.

use cpmmd::calibration::calibrate_c1;
use cpmmd::datagen::{two_sample, Family};
use cpmmd::features::MlpArch;
use cpmmd::selection::{OptimizerConfig, Regime};

pub fn run_example() -> cpmmd::Result<()> {
    let train = two_sample(
        &Family::GaussianMeanShift { d: 5, delta: 0.3 },
        60,
        60,
        17,
        0,
    )?;
    let opt = OptimizerConfig {
        steps: 40,
        ..Default::default()
    };
    for regime in [
        Regime::Linear,
        Regime::Polynomial { degree: 2 },
        Regime::Deep(MlpArch::two_hidden(16)),
    ] {
        let cal = calibrate_c1(&regime, &train, 10, 0.05, &opt, 17)?;
        let ratios: Vec<String> = cal.ratios.iter().map(|r| format!("{r:.2e}")).collect();
        println!(
            "{regime:<8} c1_hat {:.3e} ({:?})",
            cal.c1_hat, cal.convention
        );
        println!("         ratios [{}]", ratios.join(", "));
        for w in &cal.warnings {
            println!("         warning: {w:?}");
        }
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
