use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{unix_now, RunManifest};
use super::{config_error, Command, Experiment};
use crate::calibration::{calibrate_c1, QuantileConvention};
use crate::criterion::j_cp;
use crate::datagen::{load_csv_pair, two_sample, write_csv_matrix, Family};
use crate::error::Result;
use crate::features::{MlpArch, MlpMap};
use crate::kernels::KernelSpec;
use crate::pipeline::{monte_carlo_rate, run_test, Method, TestConfig, TestReport};
use crate::sample::PooledSample;
use crate::seed::{derive_seed, stream, tags};
use crate::selection::{select_deep, Criterion, OptimizerConfig, Regime};

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct TestRow<'a> {
    reject: bool,
    p_value: f64,
    statistic: f64,
    c_alpha: f64,
    c1_hat: Option<f64>,
    selected_kernel: &'a str,
    certificate_lhs: Option<f64>,
    certificate_rhs: Option<f64>,
}

impl<'a> From<&'a TestReport> for TestRow<'a> {
    fn from(r: &'a TestReport) -> Self {
        Self {
            reject: r.reject,
            p_value: r.p_value,
            statistic: r.statistic,
            c_alpha: r.c_alpha,
            c1_hat: r.c1_hat,
            selected_kernel: &r.kernel,
            certificate_lhs: r.certificate.map(|c| c.lhs),
            certificate_rhs: r.certificate.map(|c| c.rhs),
        }
    }
}

#[derive(Debug, Serialize)]
struct CalibrationRow {
    permutation: usize,
    ratio: f64,
    c1_hat: f64,
    convention: String,
    warnings: usize,
}

/// One (cell, method) power estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub experiment: String,
    pub d: usize,
    pub n: usize,
    /// Shift for multiscale/hdgm, degrees of freedom for kurtosis.
    pub param: f64,
    pub method: String,
    pub power: f64,
    pub se: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseRow {
    pub width: usize,
    pub seed: u64,
    pub j_liu: f64,
    pub mmd: f64,
    pub tau: f64,
    pub proxy: f64,
    pub j_cp: f64,
    pub collapsed: bool,
}

#[derive(Debug, Serialize)]
struct AblationRow {
    c1: f64,
    d: usize,
    n: usize,
    delta: f64,
    power: f64,
    se: f64,
    mean_final_spectral_product: f64,
    reps: usize,
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(config_error("reps must be at least 1"));
    }
    Ok(())
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| config_error(format!("bad grid value {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        return Err(config_error("empty grid"));
    }
    Ok(v)
}

fn parse_cells(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',')
        .map(|t| {
            let (d, n) = t
                .trim()
                .split_once('x')
                .ok_or_else(|| config_error(format!("hdgm cells look like DxN, got {t:?}")))?;
            let d = d
                .parse()
                .map_err(|_| config_error(format!("bad cell {t:?}")))?;
            let n = n
                .parse()
                .map_err(|_| config_error(format!("bad cell {t:?}")))?;
            Ok((d, n))
        })
        .collect()
}

fn parse_family(s: &str) -> Result<Family> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| config_error(format!("bad family spec {s:?}")))
    };
    match parts[0] {
        "multiscale" => Ok(Family::multiscale(num(1)?)),
        "hdgm" => Ok(Family::GaussianMeanShift {
            d: num(1)? as usize,
            delta: num(2)?,
        }),
        "t" => Ok(Family::ScaledStudentT {
            d: num(1)? as usize,
            df: num(2)?,
        }),
        "scale" => Ok(Family::GaussianScale {
            s_p: num(1)?,
            s_q: num(2)?,
        }),
        _ => Err(config_error(format!("unknown family {s:?}"))),
    }
}

fn power_of(
    family: &Family,
    n: usize,
    method: &Method,
    cfg: &TestConfig,
    opt: &OptimizerConfig,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let est = monte_carlo_rate(
        |s| {
            let data = two_sample(family, n, n, s, 0)?;
            let cfg = TestConfig {
                seed: s,
                ..cfg.clone()
            };
            Ok(run_test(data.x(), data.y(), method, &cfg, opt)?.reject)
        },
        reps,
        seed,
    )?;
    Ok((est.rate, est.se))
}

/// Runs one null-data ratio ascent and applies the three-flag collapse rule.
#[allow(clippy::too_many_arguments)]
pub(crate) fn collapse_run(
    width: usize,
    seed: u64,
    master: u64,
    d: usize,
    n: usize,
    steps: usize,
    c1: f64,
    lambda: f64,
) -> Result<CollapseRow> {
    let data = two_sample(
        &Family::GaussianMeanShift { d, delta: 0.0 },
        n,
        n,
        master,
        seed,
    )?;
    let arch = MlpArch::two_hidden(width);
    let mlp0 = MlpMap::from_arch(&arch, d, &mut stream(master, seed, tags::MLP_INIT))?;
    let opt = OptimizerConfig {
        steps,
        ..Default::default()
    };
    let out = select_deep(
        &Criterion::Liu { lambda },
        &data,
        &mlp0,
        &KernelSpec::gaussian(),
        &opt,
    )?;
    let last = *out.trajectory.last().expect("nonempty trajectory");
    let tau = last.tau.unwrap_or(f64::NAN);
    Ok(CollapseRow {
        width,
        seed,
        j_liu: last.criterion,
        mmd: last.mmd,
        tau,
        proxy: last.proxy,
        j_cp: j_cp(last.mmd, c1, last.proxy),
        collapsed: steps > 0 && last.mmd < 0.01 && tau < 0.001 && last.criterion > 10.0,
    })
}

fn finish(command: Command, seed: u64, started: f64, outputs: Vec<PathBuf>) -> Result<RunManifest> {
    let manifest = RunManifest {
        command: command.name().to_string(),
        config: command,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: unix_now(),
        outputs,
    };
    if let Some(first) = manifest.outputs.first() {
        manifest.write(&RunManifest::path_for(first))?;
    }
    Ok(manifest)
}

pub(super) fn execute(command: Command, seed: u64) -> Result<RunManifest> {
    let started = unix_now();
    match &command {
        Command::Test {
            x,
            y,
            regime,
            alpha,
            n_perm,
            n_cal,
            c1,
            steps,
            out,
        } => {
            let regime: Regime = regime.parse()?;
            let data = load_csv_pair(x, y)?;
            let cfg = TestConfig {
                alpha: *alpha,
                n_perm: *n_perm,
                n_cal: *n_cal,
                seed,
                c1_override: *c1,
                ..Default::default()
            };
            let opt = OptimizerConfig {
                steps: *steps,
                ..Default::default()
            };
            let report = crate::pipeline::run_cpmmd_test(data.x(), data.y(), &regime, &cfg, &opt)?;
            log::info!("reject = {}, p = {}", report.reject, report.p_value);
            write_rows(out, &[TestRow::from(&report)])?;
            let out = out.clone();
            finish(command, seed, started, vec![out])
        }
        Command::Calibrate {
            x,
            y,
            regime,
            n_cal,
            alpha,
            steps,
            out,
        } => {
            let regime: Regime = regime.parse()?;
            let data = load_csv_pair(x, y)?;
            let opt = OptimizerConfig {
                steps: *steps,
                ..Default::default()
            };
            let cal = calibrate_c1(&regime, &data, *n_cal, *alpha, &opt, seed)?;
            let convention = match cal.convention {
                QuantileConvention::Max => "max".to_string(),
                QuantileConvention::Quantile { rank } => format!("quantile:{rank}"),
            };
            for w in &cal.warnings {
                eprintln!("warning: {w:?}");
            }
            let rows: Vec<CalibrationRow> = cal
                .ratios
                .iter()
                .enumerate()
                .map(|(i, &ratio)| CalibrationRow {
                    permutation: i,
                    ratio,
                    c1_hat: cal.c1_hat,
                    convention: convention.clone(),
                    warnings: cal.warnings.len(),
                })
                .collect();
            write_rows(out, &rows)?;
            let out = out.clone();
            finish(command, seed, started, vec![out])
        }
        Command::PowerSweep {
            experiment,
            grid,
            n,
            reps,
            width,
            delta,
            degree,
            c1,
            n_perm,
            steps,
            out,
        } => {
            check_reps(*reps)?;
            let cfg = TestConfig {
                n_perm: *n_perm,
                c1_override: *c1,
                ..Default::default()
            };
            let opt = OptimizerConfig {
                steps: *steps,
                ..Default::default()
            };
            let mut rows = Vec::new();
            let push = |rows: &mut Vec<SweepRow>,
                        name: &str,
                        d: usize,
                        n: usize,
                        param: f64,
                        method: &str,
                        (power, se): (f64, f64)| {
                rows.push(SweepRow {
                    experiment: name.into(),
                    d,
                    n,
                    param,
                    method: method.into(),
                    power,
                    se,
                    reps: *reps,
                })
            };
            match experiment {
                Experiment::Multiscale => {
                    let n = n.unwrap_or(200);
                    let shifts =
                        parse_floats(grid.as_deref().unwrap_or("0,0.05,0.1,0.15,0.2,0.3"))?;
                    for (c, &shift) in shifts.iter().enumerate() {
                        let fam = Family::multiscale(shift);
                        let cell_seed = derive_seed(seed, c as u64, "cell");
                        for (label, method) in [
                            ("cpmmd", Method::CpMmd(Regime::Linear)),
                            ("median", Method::Median),
                        ] {
                            let p = power_of(&fam, n, &method, &cfg, &opt, *reps, cell_seed)?;
                            push(&mut rows, "multiscale", 2, n, shift, label, p);
                        }
                    }
                }
                Experiment::Kurtosis => {
                    let n = n.unwrap_or(200);
                    let dfs = parse_floats(grid.as_deref().unwrap_or("5,8,12,20"))?;
                    for (c, &df) in dfs.iter().enumerate() {
                        let fam = Family::ScaledStudentT { d: 10, df };
                        let cell_seed = derive_seed(seed, c as u64, "cell");
                        for (label, method) in [
                            (
                                "cpmmd_poly",
                                Method::CpMmd(Regime::Polynomial { degree: *degree }),
                            ),
                            ("grid_argmax", Method::default_grid()),
                        ] {
                            let p = power_of(&fam, n, &method, &cfg, &opt, *reps, cell_seed)?;
                            push(&mut rows, "kurtosis", 10, n, df, label, p);
                        }
                    }
                }
                Experiment::Hdgm => {
                    let cells = parse_cells(grid.as_deref().unwrap_or("20x200"))?;
                    let arch = MlpArch::two_hidden(*width);
                    for (c, &(d, n)) in cells.iter().enumerate() {
                        let fam = Family::GaussianMeanShift { d, delta: *delta };
                        let cell_seed = derive_seed(seed, c as u64, "cell");
                        for (label, method) in [
                            ("cpmmd", Method::CpMmd(Regime::Deep(arch.clone()))),
                            ("liu", Method::Liu(arch.clone())),
                            ("plain", Method::Plain(Regime::Deep(arch.clone()))),
                        ] {
                            let p = power_of(&fam, n, &method, &cfg, &opt, *reps, cell_seed)?;
                            push(&mut rows, "hdgm", d, n, *delta, label, p);
                        }
                    }
                }
            }
            let name = match experiment {
                Experiment::Multiscale => "multiscale.csv",
                Experiment::Kurtosis => "kurtosis.csv",
                Experiment::Hdgm => "hdgm.csv",
            };
            let path = out.join(name);
            write_rows(&path, &rows)?;
            finish(command, seed, started, vec![path])
        }
        Command::Collapse {
            widths,
            seeds,
            steps,
            n,
            d,
            c1,
            lambda,
            out,
        } => {
            if widths.is_empty() || *seeds == 0 {
                return Err(config_error("need at least one width and one seed"));
            }
            let jobs: Vec<(usize, u64)> = widths
                .iter()
                .flat_map(|&w| (0..*seeds).map(move |s| (w, s)))
                .collect();
            let rows = jobs
                .par_iter()
                .map(|&(w, s)| collapse_run(w, s, seed, *d, *n, *steps, *c1, *lambda))
                .collect::<Result<Vec<_>>>()?;
            write_rows(out, &rows)?;
            let out = out.clone();
            finish(command, seed, started, vec![out])
        }
        Command::C1Ablation {
            c1_grid,
            cell,
            reps,
            width,
            n_perm,
            steps,
            out,
        } => {
            check_reps(*reps)?;
            let [d, n, delta] = cell[..] else {
                return Err(config_error("cell must be d,n,delta"));
            };
            let (d, n) = (d as usize, n as usize);
            let fam = Family::GaussianMeanShift { d, delta };
            let arch = MlpArch::two_hidden(*width);
            let opt = OptimizerConfig {
                steps: *steps,
                ..Default::default()
            };
            let mut rows = Vec::new();
            for &c1 in c1_grid {
                let cfg = TestConfig {
                    n_perm: *n_perm,
                    c1_override: Some(c1),
                    ..Default::default()
                };
                let reports = (0..*reps as u64)
                    .into_par_iter()
                    .map(|r| {
                        let s = derive_seed(seed, r, tags::REPLICATE);
                        let data = two_sample(&fam, n, n, s, 0)?;
                        run_test(
                            data.x(),
                            data.y(),
                            &Method::CpMmd(Regime::Deep(arch.clone())),
                            &TestConfig {
                                seed: s,
                                ..cfg.clone()
                            },
                            &opt,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                let est = crate::pipeline::RateEstimate::from_counts(
                    reports.iter().filter(|r| r.reject).count(),
                    *reps,
                );
                let pi_mean = reports
                    .iter()
                    .filter_map(|r| r.trajectory.map(|t| t.final_lipschitz))
                    .sum::<f64>()
                    / *reps as f64;
                rows.push(AblationRow {
                    c1,
                    d,
                    n,
                    delta,
                    power: est.rate,
                    se: est.se,
                    mean_final_spectral_product: pi_mean,
                    reps: *reps,
                });
            }
            write_rows(out, &rows)?;
            let out = out.clone();
            finish(command, seed, started, vec![out])
        }
        Command::Generate {
            family,
            m,
            n,
            out_x,
            out_y,
        } => {
            let fam = parse_family(family)?;
            let data: PooledSample = two_sample(&fam, *m, *n, seed, 0)?;
            write_csv_matrix(out_x, data.x())?;
            write_csv_matrix(out_y, data.y())?;
            let outputs = vec![out_x.clone(), out_y.clone()];
            finish(command, seed, started, outputs)
        }
        Command::Replay { manifest, out } => {
            let recorded = RunManifest::read(manifest)?;
            let mut config = recorded.config;
            if let Some(path) = out {
                redirect(&mut config, path.clone())?;
            }
            execute(config, recorded.seed)
        }
    }
}

fn redirect(command: &mut Command, path: PathBuf) -> Result<()> {
    match command {
        Command::Test { out, .. }
        | Command::Calibrate { out, .. }
        | Command::PowerSweep { out, .. }
        | Command::Collapse { out, .. }
        | Command::C1Ablation { out, .. } => {
            *out = path;
            Ok(())
        }
        Command::Generate { .. } | Command::Replay { .. } => {
            Err(config_error("this command cannot be redirected"))
        }
    }
}
