// Ratio ascent against penalized ascent on null data, step by step.

use cpmmd::criterion::j_cp;
use cpmmd::datagen::{two_sample, Family};
use cpmmd::features::{MlpArch, MlpMap};
use cpmmd::kernels::KernelSpec;
use cpmmd::seed::{stream, tags};
use cpmmd::selection::{select_deep, Criterion, OptimizerConfig};

pub fn run_example() -> cpmmd::Result<()> {
    let data = two_sample(
        &Family::GaussianMeanShift { d: 10, delta: 0.0 },
        100,
        100,
        5,
        0,
    )?;
    let mlp0 = MlpMap::from_arch(
        &MlpArch::two_hidden(32),
        10,
        &mut stream(5, 0, tags::MLP_INIT),
    )?;
    let opt = OptimizerConfig {
        steps: 60,
        ..Default::default()
    };
    let base = KernelSpec::gaussian();
    let c1 = 0.008;

    let liu = select_deep(&Criterion::Liu { lambda: 1e-8 }, &data, &mlp0, &base, &opt)?;
    let cp = select_deep(&Criterion::Cp { c1 }, &data, &mlp0, &base, &opt)?;

    println!(
        "{:>4}  {:>9} {:>9} {:>9} {:>8}  {:>9} {:>8}",
        "step", "J_liu", "mmd", "tau", "J_cp", "cp mmd", "cp L"
    );
    for (a, b) in liu
        .trajectory
        .records
        .iter()
        .zip(&cp.trajectory.records)
        .step_by(10)
    {
        println!(
            "{:>4}  {:>9.3} {:>9.5} {:>9.2e} {:>8.4}  {:>9.5} {:>8.2}",
            a.step,
            a.criterion,
            a.mmd,
            a.tau.unwrap_or(f64::NAN),
            j_cp(a.mmd, c1, a.proxy),
            b.mmd,
            b.lipschitz
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
