// Empirical-MMD argmax over a finite bandwidth grid and its regret bound,
// checked against population values.

use cpmmd::datagen::{two_sample, Family};
use cpmmd::features::{FeatureMap, LinearMap};
use cpmmd::kernels::{CompositeKernel, KernelSpec};
use cpmmd::mmd::population_mmd_gaussian_oracle;
use cpmmd::selection::grid_argmax_selector;

pub fn run_example() -> cpmmd::Result<()> {
    let sigmas: Vec<f64> = (0..10).map(|j| 0.25 * 1.5f64.powi(j)).collect();
    let kernels = sigmas
        .iter()
        .map(|&s| {
            Ok(CompositeKernel::new(
                KernelSpec::gaussian(),
                FeatureMap::Linear(LinearMap::new(s, 1)?),
            ))
        })
        .collect::<cpmmd::Result<Vec<_>>>()?;
    let population: Vec<f64> = sigmas
        .iter()
        .map(|&s| population_mmd_gaussian_oracle(s, 1.0, 2.0))
        .collect();
    let best = population.iter().copied().fold(f64::MIN, f64::max);

    let sample = two_sample(
        &Family::GaussianScale { s_p: 1.0, s_q: 2.0 },
        200,
        200,
        1,
        0,
    )?;
    let sel = grid_argmax_selector(&kernels, &sample, 0.05)?;
    for (j, s) in sigmas.iter().enumerate() {
        let mark = if j == sel.index { "<-" } else { "" };
        println!(
            "sigma {s:>7.3}  empirical {:+.4}  population {:.4} {mark}",
            sel.mmds[j], population[j]
        );
    }
    let regret = best - population[sel.index];
    println!(
        "regret {regret:.4} within bound {:.4}: {}",
        sel.regret_bound,
        regret <= sel.regret_bound
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
