use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::num::{ceil, pow, sqrt};
use crate::{Error, Result, Sample, ThresholdPolicy};

use super::{cube_count, cube_index, CubeThreshold, GridPolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroDimFit {
    pub policy: GridPolicy,
    pub theta: f64,
    /// Mean ratio of `theta` on the training seasons.
    pub empirical_cr: f64,
}

/// Number of lattice points `eps, 2 eps, ..., 1/eps`.
fn lattice_len(epsilon: f64) -> u64 {
    libm::floor(1.0 / (epsilon * epsilon) + 1e-9) as u64
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 0.5 {
        Ok(())
    } else {
        Err(Error::domain(alloc::format!("grid epsilon must lie in (0, 0.5], got {epsilon}")))
    }
}

/// Empirical risk minimization over the threshold lattice.
///
/// A season shorter than `theta` costs ratio `max(1, y)`; a longer one costs
/// `(1 + theta) / min(1, y)`. Sorting the seasons and keeping prefix sums of
/// the first and suffix sums of `1 / min(1, y)` gives each lattice point's
/// mean in `O(log n)`. Ties go to the smaller threshold.
pub fn fit_zero_dim(seasons: &[f64], epsilon: f64) -> Result<ZeroDimFit> {
    check_epsilon(epsilon)?;
    if seasons.is_empty() {
        return Err(Error::domain("cannot fit a threshold without samples"));
    }
    if let Some(bad) = seasons.iter().find(|y| !(y.is_finite() && **y >= 0.0)) {
        return Err(Error::domain(alloc::format!("season length {bad} is not finite and >= 0")));
    }
    let mut ys = seasons.to_vec();
    ys.sort_by(f64::total_cmp);
    let n = ys.len();
    let mut rented = alloc::vec![0.0; n + 1];
    for i in 0..n {
        rented[i + 1] = rented[i] + ys[i].max(1.0);
    }
    let mut bought = alloc::vec![0.0; n + 1];
    for i in (0..n).rev() {
        let y = ys[i];
        bought[i] = bought[i + 1] + if y <= 0.0 { 0.0 } else { 1.0 / y.min(1.0) };
    }
    let mean_at = |theta: f64| {
        let short = ys.partition_point(|&y| y < theta);
        (rented[short] + (1.0 + theta) * bought[short]) / n as f64
    };
    let mut best_theta = epsilon;
    let mut best = mean_at(epsilon);
    for k in 2..=lattice_len(epsilon) {
        let theta = k as f64 * epsilon;
        let v = mean_at(theta);
        if v < best * (1.0 - 1e-12) {
            best = v;
            best_theta = theta;
        }
    }
    Ok(ZeroDimFit { policy: GridPolicy::Constant { epsilon, theta: best_theta }, theta: best_theta, empirical_cr: best })
}

/// Knobs for the per-cube fit. `None` fields fall back to desk-scale
/// defaults: cube side from the Lipschitz formula, and a cube needs more
/// than `ceil(1 / eps^2)` samples to get its own threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFitConfig {
    pub epsilon: f64,
    pub lipschitz: f64,
    pub dim: usize,
    #[serde(default)]
    pub cubes_per_axis: Option<u64>,
    #[serde(default)]
    pub min_count: Option<u64>,
}

/// The sizes the analysis prescribes next to the ones actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSizing {
    /// `eps^3 / (64 L sqrt(d))`.
    pub side_formula: f64,
    pub side_used: f64,
    pub cubes_per_axis: u64,
    /// `(64 L sqrt(d) / eps^8)^d`.
    pub min_count_formula: f64,
    pub min_count_used: u64,
    /// `(1024 L sqrt(d) / eps^6)^(2d)`.
    pub samples_formula: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFit {
    pub policy: GridPolicy,
    pub sizing: GridSizing,
    /// Cubes that received their own threshold.
    pub fitted_cubes: u64,
}

impl GridFitConfig {
    pub fn sizing(&self) -> Result<GridSizing> {
        check_epsilon(self.epsilon)?;
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::domain("Lipschitz constant must be positive"));
        }
        if self.dim == 0 {
            return Err(Error::domain("the per-cube fit needs dim >= 1; use fit_zero_dim"));
        }
        let (eps, l, d) = (self.epsilon, self.lipschitz, self.dim as f64);
        let side_formula = pow(eps, 3.0) / (64.0 * l * sqrt(d));
        let k = match self.cubes_per_axis {
            Some(0) => return Err(Error::domain("cubes_per_axis must be >= 1")),
            Some(k) => k,
            // Largest side 1/k that does not exceed the formula.
            None => {
                let k = ceil(1.0 / side_formula * (1.0 - 1e-12));
                if k > u64::MAX as f64 {
                    return Err(Error::unsupported("default cube count overflows; set cubes_per_axis"));
                }
                (k as u64).max(1)
            }
        };
        if cube_count(k, self.dim).is_none() {
            return Err(Error::unsupported(alloc::format!(
                "{k}^{} cubes cannot be indexed; set a smaller cubes_per_axis",
                self.dim
            )));
        }
        Ok(GridSizing {
            side_formula,
            side_used: 1.0 / k as f64,
            cubes_per_axis: k,
            min_count_formula: pow(64.0 * l * sqrt(d) / pow(eps, 8.0), d),
            min_count_used: self.min_count.unwrap_or_else(|| ceil(1.0 / (eps * eps)) as u64),
            samples_formula: pow(1024.0 * l * sqrt(d) / pow(eps, 6.0), 2.0 * d),
        })
    }
}

/// Per-cube lattice fit: every cube with more than `min_count` samples gets
/// the zero-dimensional fit of its seasons, every other cube threshold 1.
pub fn fit_grid_lipschitz(samples: &[Sample], config: &GridFitConfig) -> Result<GridFit> {
    let sizing = config.sizing()?;
    if let Some(s) = samples.iter().find(|s| s.x.len() != config.dim) {
        return Err(Error::domain(alloc::format!(
            "sample has {} features, the fit expects {}",
            s.x.len(),
            config.dim
        )));
    }
    let k = sizing.cubes_per_axis;
    let mut by_cube: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for s in samples {
        by_cube.entry(cube_index(&s.x, k)).or_default().push(s.y);
    }
    let mut table = Vec::new();
    for (cube, ys) in by_cube {
        if ys.len() as u64 > sizing.min_count_used {
            table.push(CubeThreshold { cube, theta: fit_zero_dim(&ys, config.epsilon)?.theta });
        }
    }
    let fitted_cubes = table.len() as u64;
    let policy = GridPolicy::Cubes { epsilon: config.epsilon, cubes_per_axis: k, dim: config.dim, table, default_theta: 1.0 };
    Ok(GridFit { policy, sizing, fitted_cubes })
}

impl From<GridFit> for ThresholdPolicy {
    fn from(f: GridFit) -> Self {
        ThresholdPolicy::grid(f.policy)
    }
}

impl From<ZeroDimFit> for ThresholdPolicy {
    fn from(f: ZeroDimFit) -> Self {
        ThresholdPolicy::grid(f.policy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_core_grid_lb, sample_joint};
    use crate::rent::{evaluate_policy, ratio, robustness_bound};
    use alloc::vec;
    use proptest::prelude::*;

    fn scan_oracle(ys: &[f64], eps: f64) -> (f64, f64) {
        let mut best = (f64::NAN, f64::INFINITY);
        let mut k = 1u64;
        loop {
            let theta = k as f64 * eps;
            if theta > 1.0 / eps + 1e-9 {
                break;
            }
            let m = ys.iter().map(|&y| ratio(theta, y)).sum::<f64>() / ys.len() as f64;
            if m < best.1 {
                best = (theta, m);
            }
            k += 1;
        }
        best
    }

    #[test]
    fn zero_dim_examples() {
        let f = fit_zero_dim(&[2.0; 10], 0.1).unwrap();
        assert!((f.theta - 0.1).abs() < 1e-15);
        assert!((f.empirical_cr - 1.1).abs() < 1e-12);

        let f = fit_zero_dim(&[0.5; 4], 0.1).unwrap();
        assert!((f.theta - 0.6).abs() < 1e-12);
        assert_eq!(f.empirical_cr, 1.0);

        let f = fit_zero_dim(&[0.0; 3], 0.1).unwrap();
        assert!((f.theta - 0.1).abs() < 1e-15);
        assert_eq!(f.empirical_cr, 1.0);

        assert!(fit_zero_dim(&[], 0.1).is_err());
        assert!(fit_zero_dim(&[1.0], 0.0).is_err());
    }

    #[test]
    fn per_cube_fit_examples() {
        let mut samples: Vec<Sample> = (0..50).map(|i| Sample::new(vec![0.01 + 0.001 * i as f64, 0.02], 2.0).unwrap()).collect();
        let cfg = GridFitConfig { epsilon: 0.1, lipschitz: 1.0, dim: 2, cubes_per_axis: Some(10), min_count: Some(5) };
        let fit = fit_grid_lipschitz(&samples, &cfg).unwrap();
        assert_eq!(fit.fitted_cubes, 1);
        let p = ThresholdPolicy::from(fit);
        assert!((p.theta_min() - 0.1).abs() < 1e-15);
        assert_eq!(p.theta_max(), 1.0);
        assert_eq!(match p.threshold(&[0.9, 0.9]) { crate::Threshold::Fixed(t) => t, _ => panic!() }, 1.0);

        let cfg = GridFitConfig { min_count: Some(1000), ..cfg };
        let p = ThresholdPolicy::from(fit_grid_lipschitz(&samples, &cfg).unwrap());
        assert_eq!((p.theta_min(), p.theta_max()), (1.0, 1.0));
        assert_eq!(robustness_bound(&p), 2.0);

        samples.push(Sample::new(vec![0.5], 1.0).unwrap());
        assert!(fit_grid_lipschitz(&samples, &cfg).is_err());
    }

    #[test]
    fn default_sizing_follows_the_formula() {
        let cfg = GridFitConfig { epsilon: 0.1, lipschitz: 1.0, dim: 2, cubes_per_axis: None, min_count: None };
        let s = cfg.sizing().unwrap();
        assert!(s.side_used <= s.side_formula);
        assert!(1.0 / (s.cubes_per_axis - 1) as f64 > s.side_formula);
        assert_eq!(s.min_count_used, 100);
        assert!(s.min_count_formula > 1e18);
    }

    #[test]
    fn core_grid_fit_is_near_optimal_in_cores() {
        let eps = 1.0 / 90.0;
        let dist = make_core_grid_lb(eps, 2, 17).unwrap();
        let train = sample_joint(&dist, 30_000).unwrap();
        let cfg = GridFitConfig { epsilon: 0.1, lipschitz: 1.0, dim: 2, cubes_per_axis: Some(10), min_count: Some(100) };
        let p = ThresholdPolicy::from(fit_grid_lipschitz(&train, &cfg).unwrap());
        let test: Vec<Sample> = (0..20_000).map(|i| dist.draw_with_stream(18, i)).collect();
        let est = evaluate_policy(&p, &test).unwrap();
        assert!(est.mean <= 1.1 + 1e-12, "{est:?}");
    }

    proptest! {
        #[test]
        fn matches_the_full_scan(ys in proptest::collection::vec(0.0f64..4.0, 1..60), eps in prop::sample::select(vec![0.1, 0.2, 0.25, 0.05])) {
            let f = fit_zero_dim(&ys, eps).unwrap();
            let (theta, best) = scan_oracle(&ys, eps);
            prop_assert!((f.empirical_cr - best).abs() < 1e-9 * best);
            let direct = ys.iter().map(|&y| ratio(f.theta, y)).sum::<f64>() / ys.len() as f64;
            prop_assert!((direct - best).abs() < 1e-9 * best);
            prop_assert!(f.theta <= theta + 1e-12 || (direct - best).abs() < 1e-9);
            prop_assert!(f.theta >= eps - 1e-15 && f.theta <= 1.0 / eps + 1e-9);
            let k = f.theta / eps;
            prop_assert!((k - libm::round(k)).abs() < 1e-9);
        }
    }
}
