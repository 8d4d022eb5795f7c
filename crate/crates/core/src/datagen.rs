//! Seeded synthetic two-sample distributions and CSV ingestion.

use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sample::PooledSample;
use crate::seed::{derive_seed, rng_from_seed, tags};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// P = N(0, I_d), Q = N(Δ·1, I_d).
    GaussianMeanShift { d: usize, delta: f64 },
    /// P = ½N(0, v I₂) + ½N((3, 0), v I₂); Q shifts both modes by (Δ, 0).
    MultiScaleMixture2D { delta: f64, mode_var: f64 },
    /// P = N(0, I_d), Q = sqrt((df-2)/df) · t_df(0, I_d), so Cov(Q) = I_d.
    ScaledStudentT { d: usize, df: f64 },
    /// Univariate P = N(0, s_p²), Q = N(0, s_q²).
    GaussianScale { s_p: f64, s_q: f64 },
}

impl Family {
    pub fn dim(&self) -> usize {
        match self {
            Family::GaussianMeanShift { d, .. } | Family::ScaledStudentT { d, .. } => *d,
            Family::MultiScaleMixture2D { .. } => 2,
            Family::GaussianScale { .. } => 1,
        }
    }

    pub fn multiscale(delta: f64) -> Self {
        Family::MultiScaleMixture2D {
            delta,
            mode_var: 0.01,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Family::GaussianMeanShift { d, .. } if *d == 0 => {
                Err(invalid("dimension must be at least 1"))
            }
            Family::ScaledStudentT { d, .. } if *d == 0 => {
                Err(invalid("dimension must be at least 1"))
            }
            Family::ScaledStudentT { df, .. } if !(*df > 2.0) => {
                Err(invalid(format!("scaled Student-t needs df > 2, got {df}")))
            }
            Family::MultiScaleMixture2D { mode_var, .. } if !(*mode_var > 0.0) => {
                Err(invalid("mode variance must be positive"))
            }
            Family::GaussianScale { s_p, s_q } if !(*s_p > 0.0 && *s_q > 0.0) => {
                Err(invalid("scales must be positive"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    P,
    Q,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub family: Family,
    pub role: Role,
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws `n` points; bitwise reproducible for a given seed.
pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<Array2<f64>> {
    spec.family.validate()?;
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let d = spec.family.dim();
    let mut out = Array2::zeros((n, d));
    match (&spec.family, spec.role) {
        (Family::GaussianMeanShift { delta, .. }, role) => {
            let shift = if role == Role::Q { *delta } else { 0.0 };
            out.mapv_inplace(|_| normal(&mut rng) + shift);
        }
        (Family::MultiScaleMixture2D { delta, mode_var }, role) => {
            let shift = if role == Role::Q { *delta } else { 0.0 };
            let sd = mode_var.sqrt();
            for mut row in out.rows_mut() {
                let centre = if rng.gen_bool(0.5) { 3.0 } else { 0.0 };
                row[0] = centre + shift + sd * normal(&mut rng);
                row[1] = sd * normal(&mut rng);
            }
        }
        (Family::ScaledStudentT { .. }, Role::P) => out.mapv_inplace(|_| normal(&mut rng)),
        (Family::ScaledStudentT { df, .. }, Role::Q) => {
            let chi = ChiSquared::new(*df).map_err(|e| invalid(e.to_string()))?;
            let scale = ((df - 2.0) / df).sqrt();
            for mut row in out.rows_mut() {
                row.mapv_inplace(|_| normal(&mut rng));
                let w: f64 = chi.sample(&mut rng);
                let factor = scale / (w / df).sqrt();
                row.mapv_inplace(|z| z * factor);
            }
        }
        (Family::GaussianScale { s_p, s_q }, role) => {
            let s = if role == Role::P { *s_p } else { *s_q };
            out.mapv_inplace(|_| s * normal(&mut rng));
        }
    }
    Ok(out)
}

/// `m` draws from P and `n` from Q on independent streams of `(master, replicate)`.
pub fn two_sample(
    family: &Family,
    m: usize,
    n: usize,
    master: u64,
    replicate: u64,
) -> Result<PooledSample> {
    let x = sample(
        &DistributionSpec {
            family: family.clone(),
            role: Role::P,
        },
        m,
        derive_seed(master, replicate, tags::SAMPLE_P),
    )?;
    let y = sample(
        &DistributionSpec {
            family: family.clone(),
            role: Role::Q,
        },
        n,
        derive_seed(master, replicate, tags::SAMPLE_Q),
    )?;
    PooledSample::new(x, y)
}

/// Reads a comma-separated numeric matrix. A first row with no numeric cell is
/// treated as a header.
pub fn read_csv_matrix(path: &Path) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = record.position().map_or(i as u64 + 1, |p| p.line()) as usize;
        if i == 0 && record.iter().all(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::CsvRagged {
                    path: path.to_path_buf(),
                    row,
                    expected: w,
                    found: record.len(),
                })
            }
            _ => {}
        }
        for (column, cell) in record.iter().enumerate() {
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::CsvNonNumeric {
                    path: path.to_path_buf(),
                    row,
                    column: column + 1,
                    value: cell.to_string(),
                })?;
            values.push(v);
        }
        rows += 1;
    }
    let Some(width) = width else {
        return Err(Error::CsvEmpty {
            path: path.to_path_buf(),
        });
    };
    Ok(Array2::from_shape_vec((rows, width), values).expect("row widths checked"))
}

pub fn load_csv_pair(path_x: &Path, path_y: &Path) -> Result<PooledSample> {
    let x = read_csv_matrix(path_x)?;
    let y = read_csv_matrix(path_y)?;
    if x.ncols() != y.ncols() {
        return Err(Error::CsvColumnMismatch {
            x_cols: x.ncols(),
            y_cols: y.ncols(),
        });
    }
    PooledSample::new(x, y)
}

/// Writes a matrix with shortest round-trip float formatting and no header.
pub fn write_csv_matrix(path: &Path, data: ArrayView2<'_, f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in data.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
