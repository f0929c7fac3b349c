use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dist::{JointDistribution, SeasonLaw};
use crate::num::Grid1D;
use crate::policy::GridPolicy;
use crate::rent::{ratio, robustness_bound, PolicyKind};
use crate::seed::{self, TAG_TEST};
use crate::{Error, Result, Threshold, ThresholdPolicy};

/// `CR(theta)` over a threshold grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub grid: Grid1D,
    /// `(theta, cr)` for every grid point, in grid order.
    pub values: Vec<(f64, f64)>,
    pub argmin: f64,
    pub min: f64,
    pub argmax: f64,
    pub max: f64,
}

impl ScanResult {
    /// Extremes are taken at the first grid point that attains them.
    fn from_values(grid: Grid1D, values: Vec<(f64, f64)>) -> Self {
        let (mut argmin, mut min) = values[0];
        let (mut argmax, mut max) = values[0];
        for &(t, v) in &values[1..] {
            if v < min {
                (argmin, min) = (t, v);
            }
            if v > max {
                (argmax, max) = (t, v);
            }
        }
        ScanResult { grid, values, argmin, min, argmax, max }
    }
}

fn positive_grid(grid: &Grid1D) -> Result<()> {
    if grid.start > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("threshold grid must start above 0"))
    }
}

/// Exact `CR(theta)` of constant thresholds against a closed-form season law.
pub fn cr_scan(law: &SeasonLaw, grid: Grid1D) -> Result<ScanResult> {
    positive_grid(&grid)?;
    let values = grid.points().map(|t| (t, law.expected_ratio(t))).collect();
    Ok(ScanResult::from_values(grid, values))
}

/// Monte Carlo `CR(theta)`: every grid point is scored on the same `n`
/// seasons drawn from `dist`.
pub fn cr_scan_mc(dist: &JointDistribution, grid: Grid1D, n: u64, seed: u64) -> Result<ScanResult> {
    positive_grid(&grid)?;
    if n == 0 {
        return Err(Error::domain("Monte Carlo scan needs at least one draw"));
    }
    let stream = seed::derive_seed(seed, TAG_TEST);
    let ys: Vec<f64> = (0..n).map(|i| dist.draw_with_stream(stream, i).y).collect();
    let values = grid
        .points()
        .map(|t| (t, crate::num::pairwise_sum(&ys.iter().map(|&y| ratio(t, y)).collect::<Vec<_>>()) / n as f64))
        .collect();
    Ok(ScanResult::from_values(grid, values))
}

/// Offset of the probes placed around each threshold.
pub const WORST_CASE_PROBE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseScan {
    /// Largest ratio found.
    pub max_ratio: f64,
    /// Where it was found.
    pub theta: f64,
    pub y: f64,
    /// The analytic certificate for comparison.
    pub robustness: f64,
}

/// Largest `g(theta(x), y)` over the probe features and a season grid,
/// with extra seasons at `theta(x)` and `theta(x) +/- 1e-9` for every probe.
pub fn worst_case_scan(policy: &ThresholdPolicy, y_grid: Grid1D, x_probes: &[Vec<f64>]) -> Result<WorstCaseScan> {
    if policy.is_randomized() {
        return Err(Error::unsupported("worst-case scans need a deterministic policy"));
    }
    if x_probes.is_empty() {
        return Err(Error::domain("need at least one feature probe"));
    }
    let mut best = (f64::NEG_INFINITY, f64::NAN, f64::NAN);
    for x in x_probes {
        let Threshold::Fixed(theta) = policy.threshold(x) else { unreachable!() };
        let near = [theta - WORST_CASE_PROBE, theta, theta + WORST_CASE_PROBE];
        for y in y_grid.points().chain(near).filter(|y| *y >= 0.0) {
            let r = ratio(theta, y);
            if r > best.0 {
                best = (r, theta, y);
            }
        }
    }
    Ok(WorstCaseScan { max_ratio: best.0, theta: best.1, y: best.2, robustness: robustness_bound(policy) })
}

/// Feature probes that reach every threshold a finitely-parameterized policy
/// can emit: cube centers for per-cube grids, plus `extra` (used for
/// classifier-driven policies, whose regions are not enumerable).
pub fn probe_points(policy: &ThresholdPolicy, dim: usize, extra: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = extra.to_vec();
    match policy.kind() {
        PolicyKind::Grid(GridPolicy::Cubes { cubes_per_axis, dim: d, table, .. }) => {
            let k = *cubes_per_axis;
            let center = |mut c: u64| {
                let mut x = alloc::vec![0.0; *d];
                for xi in x.iter_mut().rev() {
                    *xi = ((c % k) as f64 + 0.5) / k as f64;
                    c /= k;
                }
                x
            };
            out.extend(table.iter().map(|t| center(t.cube)));
            // A cube missing from the table, if there is one.
            let listed: Vec<u64> = table.iter().map(|t| t.cube).collect();
            if let Some(free) = (0u64..).take(listed.len() + 1).find(|c| listed.binary_search(c).is_err()) {
                if crate::policy::cube_index(&center(free), k) == free {
                    out.push(center(free));
                }
            }
        }
        _ => out.push(alloc::vec![0.5; dim]),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{Empirical1D, Family};
    use crate::learn::Hypothesis;
    use crate::policy::TwoValuePolicy;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn noise_lower_bound_scan() {
        let law = SeasonLaw::noise_lower_bound(0.25, 10.0).unwrap();
        let s = cr_scan(&law, Grid1D::new(0.01, 1.0, 0.001).unwrap()).unwrap();
        assert_eq!(s.values.len(), 991);
        assert!((s.argmin - 0.5).abs() < 0.01, "{}", s.argmin);
        assert!((s.min - 1.375).abs() < 1e-4, "{}", s.min);
        // Non-increasing up to sqrt(p).
        for w in s.values.windows(2).filter(|w| w[1].0 <= 0.5) {
            assert!(w[1].1 <= w[0].1 + 2e-6, "{w:?}");
        }
    }

    #[test]
    fn point_mass_scans() {
        let two = SeasonLaw::Atoms(Empirical1D::point(2.0).unwrap());
        let s = cr_scan(&two, Grid1D::new(0.1, 1.0, 0.1).unwrap()).unwrap();
        assert!((s.argmin - 0.1).abs() < 1e-15);
        for (t, v) in &s.values {
            assert!((v - (1.0 + t)).abs() < 1e-12);
        }
        let half = SeasonLaw::Atoms(Empirical1D::point(0.5).unwrap());
        let s = cr_scan(&half, Grid1D::new(0.55, 1.0, 0.05).unwrap()).unwrap();
        assert!(s.values.iter().all(|v| v.1 == 1.0));
        assert!(cr_scan(&half, Grid1D::new(0.0, 1.0, 0.05).unwrap()).is_err());
    }

    #[test]
    fn mc_scan_tracks_exact_scan() {
        let d = JointDistribution::new(Family::PointMass { y0: 2.0, dim: 0 }, 0).unwrap();
        let s = cr_scan_mc(&d, Grid1D::new(0.1, 1.0, 0.1).unwrap(), 100, 0).unwrap();
        assert!((s.min - 1.1).abs() < 1e-12);
    }

    #[test]
    fn worst_case_examples() {
        let yg = Grid1D::new(0.0, 20.0, 0.01).unwrap();
        let probe = vec![vec![0.5]];
        let c = |t: f64| worst_case_scan(&ThresholdPolicy::constant(t).unwrap(), yg, &probe).unwrap();
        assert!((c(0.2).max_ratio - 6.0).abs() < 1e-6);
        assert!((c(1.0).max_ratio - 2.0).abs() < 1e-12);
        let h = Hypothesis::linear(vec![1.0], -0.5).unwrap();
        let p = ThresholdPolicy::two_value(TwoValuePolicy::new(h, 0.1, 1.1).unwrap());
        let w = worst_case_scan(&p, yg, &[vec![0.2], vec![0.8]]).unwrap();
        assert!((w.max_ratio - 11.0).abs() < 1e-6);
        assert!((w.robustness - 11.0).abs() < 1e-12);
        let r = ThresholdPolicy::randomized(crate::ThresholdDensity::WorstCase).unwrap();
        assert!(worst_case_scan(&r, yg, &probe).is_err());
    }

    proptest! {
        #[test]
        fn scan_brackets_the_certificate(a in 1e-3f64..5.0, b in 1e-3f64..5.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let h = Hypothesis::linear(vec![1.0], -0.5).unwrap();
            let p = ThresholdPolicy::two_value(TwoValuePolicy::new(h, lo, hi).unwrap());
            let w = worst_case_scan(&p, Grid1D::new(0.0, 10.0, 0.05).unwrap(), &[vec![0.1], vec![0.9]]).unwrap();
            prop_assert!(w.max_ratio <= w.robustness * (1.0 + 1e-12));
            prop_assert!(w.max_ratio >= w.robustness * (1.0 - 1e-6));
        }
    }
}
