//! Fitting procedures that turn samples into threshold policies.

mod grid;
mod pac;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::learn::{Classifier, Hypothesis};
use crate::{Error, Result};

pub use grid::{fit_grid_lipschitz, fit_zero_dim, GridFit, GridFitConfig, GridSizing, ZeroDimFit};
pub use pac::{
    filter_margin_band, fit_margin, fit_noisy, fit_pac_asymmetric, fit_pac_blackbox, pac_from_rent,
    rent_sample_from_label, MarginFit, NoisyBranch, NoisyFit, PacFit, RentDerivedClassifier,
    NOISY_SWITCH_POINT,
};

/// Smallest threshold a fit will emit; stands in for 0 when a measured error
/// rate is exactly 0.
pub const THRESHOLD_FLOOR: f64 = 1e-6;

pub(crate) fn clamp_threshold(theta: f64) -> f64 {
    theta.clamp(THRESHOLD_FLOOR, 1.0)
}

/// Threshold of one cube of a per-cube policy; `cube` is the row-major cube
/// index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeThreshold {
    pub cube: u64,
    pub theta: f64,
}

/// Thresholds restricted to the lattice `{eps, 2 eps, ..., 1/eps}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridPolicy {
    /// One threshold for every feature vector.
    Constant { epsilon: f64, theta: f64 },
    /// `[0,1]^dim` cut into `cubes_per_axis^dim` cubes; cubes listed in
    /// `table` (sorted by index) use their own threshold, the rest use
    /// `default_theta`.
    Cubes { epsilon: f64, cubes_per_axis: u64, dim: usize, table: Vec<CubeThreshold>, default_theta: f64 },
}

/// Row-major index of the cube containing `x`. Coordinates are floored; the
/// top face `x_i = 1` belongs to the last cube.
pub fn cube_index(x: &[f64], cubes_per_axis: u64) -> u64 {
    let k = cubes_per_axis;
    x.iter().fold(0u64, |acc, &xi| {
        let cell = ((xi * k as f64) as u64).min(k - 1);
        acc.wrapping_mul(k).wrapping_add(cell)
    })
}

pub(crate) fn cube_count(cubes_per_axis: u64, dim: usize) -> Option<u64> {
    (0..dim).try_fold(1u64, |n, _| n.checked_mul(cubes_per_axis))
}

fn on_lattice(theta: f64, epsilon: f64) -> bool {
    let k = theta / epsilon;
    theta >= epsilon * (1.0 - 1e-9) && theta <= (1.0 / epsilon) * (1.0 + 1e-9) && (k - libm::round(k)).abs() < 1e-6
}

impl GridPolicy {
    pub fn epsilon(&self) -> f64 {
        match self {
            GridPolicy::Constant { epsilon, .. } | GridPolicy::Cubes { epsilon, .. } => *epsilon,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, GridPolicy::Constant { .. })
    }

    pub fn threshold(&self, x: &[f64]) -> f64 {
        match self {
            GridPolicy::Constant { theta, .. } => *theta,
            GridPolicy::Cubes { cubes_per_axis, table, default_theta, .. } => {
                let c = cube_index(x, *cubes_per_axis);
                match table.binary_search_by_key(&c, |t| t.cube) {
                    Ok(i) => table[i].theta,
                    Err(_) => *default_theta,
                }
            }
        }
    }

    /// Exact smallest and largest threshold over `[0,1]^dim`.
    pub fn threshold_range(&self) -> (f64, f64) {
        match self {
            GridPolicy::Constant { theta, .. } => (*theta, *theta),
            GridPolicy::Cubes { cubes_per_axis, dim, table, default_theta, .. } => {
                let all_listed = cube_count(*cubes_per_axis, *dim).is_some_and(|n| n == table.len() as u64);
                let init = if all_listed { (f64::INFINITY, f64::NEG_INFINITY) } else { (*default_theta, *default_theta) };
                table.iter().fold(init, |(lo, hi), t| (lo.min(t.theta), hi.max(t.theta)))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.epsilon();
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::domain(alloc::format!("grid epsilon must lie in (0, 1), got {eps}")));
        }
        match self {
            GridPolicy::Constant { theta, .. } => {
                if !on_lattice(*theta, eps) {
                    return Err(Error::domain(alloc::format!("threshold {theta} is not on the epsilon lattice")));
                }
            }
            GridPolicy::Cubes { cubes_per_axis, dim, table, default_theta, .. } => {
                if *cubes_per_axis == 0 {
                    return Err(Error::domain("cubes_per_axis must be >= 1"));
                }
                let n = cube_count(*cubes_per_axis, *dim).ok_or_else(|| Error::domain("too many cubes"))?;
                if !(default_theta.is_finite() && *default_theta > 0.0) {
                    return Err(Error::domain("default threshold must be positive"));
                }
                if table.windows(2).any(|w| w[0].cube >= w[1].cube) {
                    return Err(Error::domain("cube table must be sorted by index without repeats"));
                }
                for t in table {
                    if t.cube >= n {
                        return Err(Error::domain(alloc::format!("cube index {} out of range", t.cube)));
                    }
                    if !on_lattice(t.theta, eps) && t.theta != 1.0 {
                        return Err(Error::domain(alloc::format!("threshold {} is not on the epsilon lattice", t.theta)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Classifier-driven policy: a low threshold where the classifier predicts
/// a long season, a high one elsewhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoValuePolicy {
    hypothesis: Hypothesis,
    theta_if_long: f64,
    theta_if_short: f64,
}

impl TwoValuePolicy {
    pub fn new(hypothesis: Hypothesis, theta_if_long: f64, theta_if_short: f64) -> Result<Self> {
        let p = TwoValuePolicy { hypothesis, theta_if_long, theta_if_short };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |t: f64| t.is_finite() && t > 0.0;
        if !(ok(self.theta_if_long) && ok(self.theta_if_short)) {
            return Err(Error::domain("two-value thresholds must be finite and positive"));
        }
        if self.theta_if_long > self.theta_if_short {
            return Err(Error::domain("theta_if_long must not exceed theta_if_short"));
        }
        Ok(())
    }

    pub fn hypothesis(&self) -> &Hypothesis {
        &self.hypothesis
    }

    pub fn theta_if_long(&self) -> f64 {
        self.theta_if_long
    }

    pub fn theta_if_short(&self) -> f64 {
        self.theta_if_short
    }

    pub fn threshold(&self, x: &[f64]) -> f64 {
        if self.hypothesis.predict(x) {
            self.theta_if_long
        } else {
            self.theta_if_short
        }
    }
}
