//! Enumerative shattering checks for the class of two-threshold policies
//! `(b, eta_1, eta_2)`: threshold `eta_1` where the binary concept `b` says 0,
//! `eta_2` where it says 1.
//!
//! The cost used here is the one the pseudo-dimension argument is stated
//! for: 1 when the season ends before the threshold, `(1 + theta) / min(y, 1)`
//! otherwise. It differs from the competitive ratio only for
//! `1 < y < theta`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::learn::Classifier;
use crate::{Error, Result, Sample};

/// Largest instance the exhaustive search accepts.
pub const MAX_POINTS: usize = 12;

pub fn pdim_cost(theta: f64, y: f64) -> f64 {
    if y < theta {
        1.0
    } else {
        (1.0 + theta) / y.min(1.0)
    }
}

/// Points with ascending seasons, one witness per point, and a finite
/// concept class given by its label pattern on the points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShatterInstance {
    pub points: Vec<Sample>,
    pub witnesses: Vec<f64>,
    /// `hypotheses[h][i]` is concept `h` evaluated at point `i`.
    pub hypotheses: Vec<Vec<bool>>,
    /// Thresholds searched in addition to the cost-critical values.
    #[serde(default)]
    pub theta_grid: Vec<f64>,
}

/// Parameters that realize a labeling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub hypothesis: usize,
    /// Threshold where the concept says 0.
    pub eta_1: f64,
    /// Threshold where the concept says 1.
    pub eta_2: f64,
}

impl ShatterInstance {
    pub fn new(points: Vec<Sample>, witnesses: Vec<f64>, hypotheses: Vec<Vec<bool>>, theta_grid: Vec<f64>) -> Result<Self> {
        let inst = ShatterInstance { points, witnesses, hypotheses, theta_grid };
        inst.validate()?;
        Ok(inst)
    }

    /// Concept class given by classifiers evaluated on the points.
    pub fn from_classifiers(
        points: Vec<Sample>,
        witnesses: Vec<f64>,
        classifiers: &[&dyn Classifier],
        theta_grid: Vec<f64>,
    ) -> Result<Self> {
        let hypotheses = classifiers.iter().map(|c| points.iter().map(|p| c.predict(&p.x)).collect()).collect();
        ShatterInstance::new(points, witnesses, hypotheses, theta_grid)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.points.len();
        if m == 0 || self.witnesses.len() != m {
            return Err(Error::domain("need at least one point and exactly one witness per point"));
        }
        if self.points.windows(2).any(|w| w[0].y > w[1].y) {
            return Err(Error::domain("points must be sorted by ascending season"));
        }
        if self.hypotheses.is_empty() || self.hypotheses.iter().any(|h| h.len() != m) {
            return Err(Error::domain("need a nonempty concept class with one label per point"));
        }
        if self.witnesses.iter().chain(&self.theta_grid).any(|v| !v.is_finite()) {
            return Err(Error::domain("witnesses and grid values must be finite"));
        }
        Ok(())
    }

    /// Positive thresholds at which some point's outcome can change (its
    /// season `y_j`, and `r_j min(1, y_j) - 1`), the midpoints between them,
    /// one value below the first and one above the last, plus the grid.
    pub fn candidate_thresholds(&self) -> Vec<f64> {
        let mut crit: Vec<f64> = self
            .points
            .iter()
            .zip(&self.witnesses)
            .flat_map(|(p, &r)| [p.y, r * p.y.min(1.0) - 1.0])
            .chain(self.theta_grid.iter().copied())
            .filter(|t| *t > 0.0)
            .collect();
        crit.sort_by(f64::total_cmp);
        crit.dedup();
        let Some(&last) = crit.last() else { return vec![1.0] };
        let mut out = Vec::with_capacity(2 * crit.len() + 1);
        out.push(crit[0] / 2.0);
        for w in crit.windows(2) {
            out.push(w[0]);
            out.push(0.5 * (w[0] + w[1]));
        }
        out.push(last);
        out.push(last + 1.0);
        out
    }
}

fn outcome(inst: &ShatterInstance, i: usize, theta: f64) -> bool {
    pdim_cost(theta, inst.points[i].y) > inst.witnesses[i]
}

/// A threshold giving every point in `group` its required outcome.
fn group_threshold(inst: &ShatterInstance, cands: &[f64], group: &[usize], labeling: &[bool]) -> Option<f64> {
    if group.is_empty() {
        return Some(1.0);
    }
    cands.iter().copied().find(|&t| group.iter().all(|&i| outcome(inst, i, t) == labeling[i]))
}

/// Whether some `(b, eta_1, eta_2)` makes `cost > r_i` exactly at the points
/// labeled 1. The two groups a concept induces are independent, so each is
/// searched separately over the candidate thresholds.
pub fn realizability_check(inst: &ShatterInstance, labeling: &[bool]) -> Result<Option<Realization>> {
    inst.validate()?;
    let m = inst.points.len();
    if m > MAX_POINTS {
        return Err(Error::unsupported(alloc::format!("exhaustive search is limited to {MAX_POINTS} points, got {m}")));
    }
    if labeling.len() != m {
        return Err(Error::domain("labeling length must match the number of points"));
    }
    let cands = inst.candidate_thresholds();
    for (h, pattern) in inst.hypotheses.iter().enumerate() {
        let zeros: Vec<usize> = (0..m).filter(|&i| !pattern[i]).collect();
        let ones: Vec<usize> = (0..m).filter(|&i| pattern[i]).collect();
        let Some(eta_1) = group_threshold(inst, &cands, &zeros, labeling) else { continue };
        let Some(eta_2) = group_threshold(inst, &cands, &ones, labeling) else { continue };
        return Ok(Some(Realization { hypothesis: h, eta_1, eta_2 }));
    }
    Ok(None)
}

/// All `2^m` labelings realizable.
pub fn is_shattered(inst: &ShatterInstance) -> Result<bool> {
    let m = inst.points.len();
    for mask in 0u32..(1 << m.min(MAX_POINTS + 1)) {
        let labeling: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
        if realizability_check(inst, &labeling)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `d` points with season `1 + eps` and witness 1.5, under a concept class
/// that shatters them (every label pattern).
pub fn unit_basis_instance(d: usize, eps: f64) -> Result<ShatterInstance> {
    if d == 0 || d > MAX_POINTS {
        return Err(Error::domain(alloc::format!("d must lie in 1..={MAX_POINTS}")));
    }
    let points = (0..d)
        .map(|i| {
            let mut x = vec![0.0; d];
            x[i] = 1.0;
            Sample { x, y: 1.0 + eps }
        })
        .collect();
    let hypotheses = (0u32..1 << d).map(|mask| (0..d).map(|i| mask >> i & 1 == 1).collect()).collect();
    ShatterInstance::new(points, vec![1.5; d], hypotheses, Vec::new())
}

/// Featureless points under a single concept, so the whole set shares one
/// threshold.
pub fn common_threshold_instance(seasons: &[f64], witnesses: &[f64]) -> Result<ShatterInstance> {
    let points = seasons.iter().map(|&y| Sample { x: Vec::new(), y }).collect();
    ShatterInstance::new(points, witnesses.to_vec(), vec![vec![false; seasons.len()]], Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent route: try every `(eta_1, eta_2)` pair, then every concept.
    fn brute_force(inst: &ShatterInstance, labeling: &[bool]) -> bool {
        let cands = inst.candidate_thresholds();
        for &e1 in &cands {
            for &e2 in &cands {
                for pattern in &inst.hypotheses {
                    let ok = (0..inst.points.len()).all(|i| {
                        let theta = if pattern[i] { e2 } else { e1 };
                        let y = inst.points[i].y;
                        let cost = if y >= theta { (1.0 + theta) / y.min(1.0) } else { 1.0 };
                        (cost > inst.witnesses[i]) == labeling[i]
                    });
                    if ok {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn unit_basis_is_shattered() {
        for d in 1..=4 {
            let inst = unit_basis_instance(d, 1e-3).unwrap();
            assert!(is_shattered(&inst).unwrap());
            // The stated parameters realize the labeling directly: costs 1 + eps vs 2.
            assert!((pdim_cost(1e-3, 1.0 + 1e-3) - (1.0 + 1e-3)).abs() < 1e-12);
            assert_eq!(pdim_cost(1.0, 1.0 + 1e-3), 2.0);
        }
    }

    #[test]
    fn five_point_alternating_labeling_is_infeasible() {
        let inst = common_threshold_instance(&[0.3, 0.6, 1.2, 1.8, 2.5], &[1.5; 5]).unwrap();
        assert_eq!(realizability_check(&inst, &[true, false, true, false, true]).unwrap(), None);
        assert_eq!(realizability_check(&inst, &[false, true, false, true, false]).unwrap(), None);
        assert!(realizability_check(&inst, &[false; 5]).unwrap().is_some());
    }

    #[test]
    fn all_zero_labeling_with_large_witnesses() {
        let inst = common_threshold_instance(&[0.1, 0.5, 3.0], &[10.0; 3]).unwrap();
        let r = realizability_check(&inst, &[false; 3]).unwrap().unwrap();
        assert!((0..3).all(|i| pdim_cost(r.eta_1, inst.points[i].y) <= 10.0));
    }

    #[test]
    fn too_large_and_malformed_instances() {
        let inst = common_threshold_instance(&[1.0; 13], &[1.5; 13]).unwrap();
        assert!(matches!(realizability_check(&inst, &[false; 13]), Err(Error::Unsupported(_))));
        assert!(common_threshold_instance(&[2.0, 1.0], &[1.5, 1.5]).is_err());
        let inst = common_threshold_instance(&[1.0, 2.0], &[1.5, 1.5]).unwrap();
        assert!(realizability_check(&inst, &[true]).is_err());
    }

    #[test]
    fn agrees_with_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let m = rng.random_range(1..=6);
            let mut ys: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..3.0)).collect();
            ys.sort_by(f64::total_cmp);
            let points = ys.iter().map(|&y| Sample { x: Vec::new(), y }).collect();
            let witnesses = (0..m).map(|_| rng.random_range(0.5..4.0)).collect();
            let n_h = rng.random_range(1..=4);
            let hyps = (0..n_h).map(|_| (0..m).map(|_| rng.random()).collect()).collect();
            let inst = ShatterInstance::new(points, witnesses, hyps, vec![0.25, 0.5, 1.0, 2.0]).unwrap();
            for mask in 0u32..1 << m {
                let lab: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
                let fast = realizability_check(&inst, &lab).unwrap();
                assert_eq!(fast.is_some(), brute_force(&inst, &lab), "{inst:?} {lab:?}");
                if let Some(r) = fast {
                    for i in 0..m {
                        let theta = if inst.hypotheses[r.hypothesis][i] { r.eta_2 } else { r.eta_1 };
                        assert!(theta > 0.0);
                        assert_eq!(pdim_cost(theta, inst.points[i].y) > inst.witnesses[i], lab[i]);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn three_point_patterns_never_share_one_threshold(
            mut ys in proptest::collection::vec(0.01f64..3.0, 3),
            rs in proptest::collection::vec(0.5f64..4.0, 3),
        ) {
            ys.sort_by(f64::total_cmp);
            let inst = common_threshold_instance(&ys, &rs).unwrap();
            let a = realizability_check(&inst, &[true, false, true]).unwrap();
            let b = realizability_check(&inst, &[false, true, false]).unwrap();
            prop_assert!(a.is_none() || b.is_none());
        }
    }
}
