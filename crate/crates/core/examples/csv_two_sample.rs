// Round trip through CSV files: write two samples, read them back and test.

use cpmmd::datagen::{load_csv_pair, two_sample, write_csv_matrix, Family};
use cpmmd::pipeline::{run_cpmmd_test, TestConfig};
use cpmmd::selection::{OptimizerConfig, Regime};

pub fn run_example() -> cpmmd::Result<()> {
    let dir = std::env::temp_dir().join(format!("cpmmd-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let (px, py) = (dir.join("x.csv"), dir.join("y.csv"));

    let data = two_sample(
        &Family::GaussianMeanShift { d: 3, delta: 0.6 },
        80,
        80,
        23,
        0,
    )?;
    write_csv_matrix(&px, data.x())?;
    write_csv_matrix(&py, data.y())?;

    let loaded = load_csv_pair(&px, &py)?;
    assert_eq!(loaded, data);
    let report = run_cpmmd_test(
        loaded.x(),
        loaded.y(),
        &Regime::Linear,
        &TestConfig {
            seed: 23,
            ..Default::default()
        },
        &OptimizerConfig::default(),
    )?;
    println!("{} rows x {} columns per file", loaded.m(), loaded.dim());
    println!("kernel {}", report.kernel);
    println!("reject = {}, p = {:.4}", report.reject, report.p_value);

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
