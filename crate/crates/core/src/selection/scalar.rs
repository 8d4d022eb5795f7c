use std::sync::Arc;

use ndarray::{Array2, ArrayView2};

use super::baselines::median_of_sq_dists;
use super::{Criterion, Trajectory, TrajectoryRecord};
use crate::error::{invalid, Error, Result};
use crate::features::{FeatureMap, LinearMap, PolynomialBasis, PolynomialMap};
use crate::kernels::{CompositeKernel, KernelSpec};
use crate::sample::PooledSample;

pub const GRID_POINTS: usize = 33;
const GOLDEN_REL_TOL: f64 = 1e-3;

#[derive(Debug, Clone)]
enum Lift {
    Linear,
    Polynomial(Arc<PolynomialBasis>),
}

/// A one-parameter family `σ ↦ base(lift(x)/σ, lift(x')/σ)`.
#[derive(Debug, Clone)]
pub struct ScalarClass {
    base: KernelSpec,
    lift: Lift,
}

impl ScalarClass {
    /// Gaussian base on `x/σ`.
    pub fn linear() -> Self {
        Self {
            base: KernelSpec::gaussian(),
            lift: Lift::Linear,
        }
    }

    /// Laplacian base on `Ψ_p(x)/σ`, with `L_Ψ` bounded on the pooled training points.
    pub fn polynomial(degree: u32, train: &PooledSample) -> Result<Self> {
        let basis = PolynomialBasis::new(train.dim(), degree)?
            .with_lipschitz_bound(train.pooled().view())?;
        Ok(Self {
            base: KernelSpec::laplacian(),
            lift: Lift::Polynomial(Arc::new(basis)),
        })
    }

    pub fn with_base(mut self, base: KernelSpec) -> Self {
        self.base = base;
        self
    }

    pub fn base(&self) -> &KernelSpec {
        &self.base
    }

    fn lift_lipschitz(&self) -> f64 {
        match &self.lift {
            Lift::Linear => 1.0,
            Lift::Polynomial(b) => b.psi_lipschitz().unwrap_or(f64::NAN),
        }
    }

    fn lift(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        match &self.lift {
            Lift::Linear => x.to_owned(),
            Lift::Polynomial(b) => PolynomialMap::lift(b, x),
        }
    }

    pub fn feature_map(&self, sigma: f64, dim: usize) -> Result<FeatureMap> {
        Ok(match &self.lift {
            Lift::Linear => FeatureMap::Linear(LinearMap::new(sigma, dim)?),
            Lift::Polynomial(b) => {
                FeatureMap::Polynomial(PolynomialMap::new(Arc::clone(b), sigma)?)
            }
        })
    }

    pub fn kernel(&self, sigma: f64, dim: usize) -> Result<CompositeKernel> {
        Ok(CompositeKernel::new(
            self.base,
            self.feature_map(sigma, dim)?,
        ))
    }
}

/// Pairwise lifted distances of a pooled sample, precomputed once so that
/// every bandwidth and every relabeling costs one pass over the pairs.
#[derive(Debug, Clone)]
pub struct ScalarObjective {
    base: KernelSpec,
    /// Upper-triangular squared distances, row-major.
    sq: Vec<f64>,
    total: usize,
    m: usize,
    scale: f64,
    lift_lipschitz: f64,
}

impl ScalarObjective {
    pub fn new(class: &ScalarClass, sample: &PooledSample) -> Result<Self> {
        sample.require_min(2, "bandwidth search")?;
        let lifted = class.lift(sample.pooled().view());
        let total = sample.total();
        let mut sq = Vec::with_capacity(total * (total - 1) / 2);
        for i in 0..total {
            let a = lifted.row(i);
            for j in (i + 1)..total {
                let b = lifted.row(j);
                sq.push(a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum());
            }
        }
        Ok(Self {
            base: class.base,
            sq,
            total,
            m: sample.m(),
            scale: sample.frobenius() / total as f64,
            lift_lipschitz: class.lift_lipschitz(),
        })
    }

    /// Labels of the sample the objective was built from.
    pub fn identity_labels(&self) -> Vec<bool> {
        (0..self.total).map(|i| i < self.m).collect()
    }

    /// Median pairwise distance in the lifted space.
    pub fn median_distance(&self) -> Result<f64> {
        median_of_sq_dists(self.sq.clone())
    }

    pub fn proxy(&self, sigma: f64) -> f64 {
        self.lift_lipschitz / sigma * self.scale
    }

    /// Unbiased MMD at bandwidth `sigma` with `is_x` assigning rows to X.
    pub fn mmd(&self, sigma: f64, is_x: &[bool]) -> f64 {
        let inv = 1.0 / (sigma * sigma);
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        let mut k = 0;
        for i in 0..self.total {
            for j in (i + 1)..self.total {
                let v = self.base.from_sq_dist(self.sq[k] * inv);
                k += 1;
                match (is_x[i], is_x[j]) {
                    (true, true) => sxx += v,
                    (false, false) => syy += v,
                    _ => sxy += v,
                }
            }
        }
        let m = is_x.iter().filter(|&&b| b).count() as f64;
        let n = self.total as f64 - m;
        2.0 * sxx / (m * (m - 1.0)) + 2.0 * syy / (n * (n - 1.0)) - 2.0 * sxy / (m * n)
    }

    fn record(
        &self,
        criterion: &Criterion,
        sigma: f64,
        is_x: &[bool],
        step: usize,
    ) -> Result<TrajectoryRecord> {
        let mmd = self.mmd(sigma, is_x);
        let proxy = self.proxy(sigma);
        let value = match criterion {
            Criterion::Cp { c1 } => mmd - c1 * proxy,
            Criterion::Plain => mmd,
            Criterion::Liu { .. } => unreachable!("rejected before search"),
        };
        let rec = TrajectoryRecord {
            step,
            criterion: value,
            mmd,
            proxy,
            lipschitz: self.lift_lipschitz / sigma,
            sigma: Some(sigma),
            tau: None,
            grad_norm: None,
        };
        if !value.is_finite() {
            return Err(Error::NumericalAbort {
                stage: "bandwidth search",
                last_finite: None,
            });
        }
        Ok(rec)
    }

    /// Log-grid scan over `[lo, hi]` followed by golden-section refinement
    /// around the best grid point. Ties go to the smallest bandwidth.
    pub fn search(
        &self,
        criterion: &Criterion,
        lo: f64,
        hi: f64,
        is_x: &[bool],
    ) -> Result<(f64, Trajectory)> {
        if matches!(criterion, Criterion::Liu { .. }) {
            return Err(Error::Unsupported(
                "the ratio criterion is only implemented for deep selection".into(),
            ));
        }
        if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(invalid(format!(
                "bandwidth range must satisfy 0 < lo < hi, got [{lo}, {hi}]"
            )));
        }
        let (llo, lhi) = (lo.ln(), hi.ln());
        let step = (lhi - llo) / (GRID_POINTS - 1) as f64;
        let mut records = Vec::with_capacity(GRID_POINTS + 32);
        for k in 0..GRID_POINTS {
            let sigma = if k == GRID_POINTS - 1 {
                hi
            } else {
                (llo + step * k as f64).exp()
            };
            records.push(self.record(criterion, sigma, is_x, k)?);
        }
        let mut traj = Trajectory {
            records,
            selected: 0,
        };
        let best = traj.argmax();
        let a0 = llo + step * best.saturating_sub(1) as f64;
        let b0 = (llo + step * (best + 1) as f64).min(lhi);

        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (a0, b0);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut fc = self.record(criterion, c.exp(), is_x, traj.records.len())?;
        traj.records.push(fc);
        let mut fd = self.record(criterion, d.exp(), is_x, traj.records.len())?;
        traj.records.push(fd);
        while b - a > GOLDEN_REL_TOL {
            if fc.criterion >= fd.criterion {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = self.record(criterion, c.exp(), is_x, traj.records.len())?;
                traj.records.push(fc);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = self.record(criterion, d.exp(), is_x, traj.records.len())?;
                traj.records.push(fd);
            }
        }
        traj.selected = traj.argmax();
        let sigma = traj.records[traj.selected]
            .sigma
            .expect("scalar records carry sigma");
        Ok((sigma, traj))
    }

    /// `[0.05 · med, 20 · med]` for the lifted median distance `med`.
    pub fn default_range(&self) -> Result<(f64, f64)> {
        let med = self.median_distance()?;
        Ok((0.05 * med, 20.0 * med))
    }
}

/// Maximizes the criterion over `σ` in `range` (default: anchored at the
/// median lifted distance). Returns the bandwidth and all evaluations.
pub fn select_scalar_bandwidth(
    criterion: &Criterion,
    class: &ScalarClass,
    train: &PooledSample,
    range: Option<(f64, f64)>,
) -> Result<(f64, Trajectory)> {
    let obj = ScalarObjective::new(class, train)?;
    let (lo, hi) = match range {
        Some(r) => r,
        None => obj.default_range()?,
    };
    obj.search(criterion, lo, hi, &obj.identity_labels())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::gram_blocks;
    use crate::mmd::{mmd_unbiased, population_mmd_gaussian_oracle};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_sample(seed: u64, m: usize, scale_y: f64) -> PooledSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_simple_fn((m, 1), || StandardNormal.sample(&mut rng));
        let y = Array2::from_shape_simple_fn((m, 1), || {
            scale_y * {
                let z: f64 = StandardNormal.sample(&mut rng);
                z
            }
        });
        PooledSample::new(x, y).unwrap()
    }

    #[test]
    fn objective_matches_gram_evaluation() {
        let s = normal_sample(1, 12, 2.0);
        let class = ScalarClass::linear();
        let obj = ScalarObjective::new(&class, &s).unwrap();
        for sigma in [0.3, 1.0, 4.0] {
            let direct =
                mmd_unbiased(&gram_blocks(&class.kernel(sigma, 1).unwrap(), s.x(), s.y()).unwrap())
                    .unwrap();
            assert!((obj.mmd(sigma, &obj.identity_labels()) - direct).abs() < 1e-12);
        }
        let poly = ScalarClass::polynomial(2, &s).unwrap();
        let obj = ScalarObjective::new(&poly, &s).unwrap();
        let direct =
            mmd_unbiased(&gram_blocks(&poly.kernel(1.5, 1).unwrap(), s.x(), s.y()).unwrap())
                .unwrap();
        assert!((obj.mmd(1.5, &obj.identity_labels()) - direct).abs() < 1e-12);
    }

    #[test]
    fn constant_criterion_picks_smallest_bandwidth() {
        let s = normal_sample(2, 6, 1.0);
        let class = ScalarClass::linear().with_base(KernelSpec::constant(0.5, 1.0).unwrap());
        let (sigma, traj) =
            select_scalar_bandwidth(&Criterion::Plain, &class, &s, Some((0.1, 10.0))).unwrap();
        assert_eq!(traj.selected, 0);
        assert!((sigma - 0.1).abs() < 1e-15);
    }

    #[test]
    fn selected_is_trajectory_argmax() {
        let s = normal_sample(3, 30, 2.0);
        let (_, traj) = select_scalar_bandwidth(
            &Criterion::Cp { c1: 0.01 },
            &ScalarClass::linear(),
            &s,
            None,
        )
        .unwrap();
        let best = traj.records[traj.selected].criterion;
        assert!(traj.records.iter().all(|r| r.criterion <= best));
        assert!(traj.records.len() > GRID_POINTS);
    }

    #[test]
    fn rejects_bad_range_and_ratio() {
        let s = normal_sample(4, 5, 1.0);
        let c = ScalarClass::linear();
        assert!(select_scalar_bandwidth(&Criterion::Plain, &c, &s, Some((1.0, 1.0))).is_err());
        assert!(select_scalar_bandwidth(&Criterion::Plain, &c, &s, Some((0.0, 1.0))).is_err());
        assert!(matches!(
            select_scalar_bandwidth(&Criterion::Liu { lambda: 1e-8 }, &c, &s, None),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn coincident_points_have_no_default_range() {
        let s = PooledSample::new(array![[1.0], [1.0]], array![[1.0], [1.0]]).unwrap();
        assert!(matches!(
            select_scalar_bandwidth(&Criterion::Plain, &ScalarClass::linear(), &s, None),
            Err(Error::DegenerateBandwidth)
        ));
    }

    #[test]
    fn recovers_population_optimum_bracket() {
        // Population-optimal bandwidth for N(0,1) vs N(0,4) from the closed form.
        let grid: Vec<f64> = (0..2000)
            .map(|i| 0.05 * (400f64).powf(i as f64 / 1999.0))
            .collect();
        let best_pop = grid
            .iter()
            .copied()
            .max_by(|a, b| {
                population_mmd_gaussian_oracle(*a, 1.0, 2.0)
                    .total_cmp(&population_mmd_gaussian_oracle(*b, 1.0, 2.0))
            })
            .unwrap();
        let s = normal_sample(5, 1500, 2.0);
        let (lo, hi) = (0.05, 20.0);
        let (sigma, _) = select_scalar_bandwidth(
            &Criterion::Plain,
            &ScalarClass::linear(),
            &s,
            Some((lo, hi)),
        )
        .unwrap();
        // The empirical maximizer lands within one grid cell on either side.
        let cell = (hi / lo).powf(1.0 / (GRID_POINTS - 1) as f64);
        assert!(
            best_pop / cell <= sigma && sigma <= best_pop * cell,
            "pop {best_pop} selected {sigma}"
        );
    }
}
