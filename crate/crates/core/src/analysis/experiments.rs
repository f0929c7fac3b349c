use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{make_core_grid_lb, Family, JointDistribution};
use crate::learn::{Classifier, Hypothesis};
use crate::num::{least_squares_slope, log, sqrt, Moments};
use crate::policy::{pac_from_rent, rent_sample_from_label};
use crate::rent::CrEstimate;
use crate::seed::{self, TAG_TEST, TAG_TRAIN};
use crate::{Error, Result, Sample, ThresholdPolicy};

use super::monte_carlo_cr;

/// One `(n, seed)` cell of a scaling experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCell {
    pub n: u64,
    pub seed: u64,
    pub estimate: Option<CrEstimate>,
    pub theta_min: Option<f64>,
    pub robustness: Option<f64>,
    pub error: Option<String>,
}

/// Seed-averaged CR at one training size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: u64,
    pub mean_cr: f64,
    /// Standard error of the seed average.
    pub stderr: f64,
    pub cells_ok: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub cells: Vec<ScalingCell>,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `log(CR - 1)` against `log(n)`.
    pub slope: Option<f64>,
}

/// Training draws for a cell: indices `0..n` of a stream derived from the
/// seed, disjoint from the test stream.
pub fn training_draws(dist: &JointDistribution, n: u64, seed: u64) -> Vec<Sample> {
    let stream = seed::derive_seed(seed, TAG_TRAIN);
    (0..n).map(|i| dist.draw_with_stream(stream, i)).collect()
}

/// Fit on `n` fresh draws and evaluate on `n_test` fresh draws. Fit
/// failures are recorded in the cell.
pub fn scaling_cell<F>(fit: &F, dist: &JointDistribution, n: u64, seed: u64, n_test: u64) -> ScalingCell
where
    F: Fn(&[Sample], u64) -> Result<ThresholdPolicy> + ?Sized,
{
    let outcome = fit(&training_draws(dist, n, seed), n)
        .and_then(|p| monte_carlo_cr(&p, dist, n_test, seed).map(|e| (p, e)));
    match outcome {
        Ok((p, e)) => ScalingCell {
            n,
            seed,
            estimate: Some(e),
            theta_min: Some(p.theta_min()),
            robustness: Some(crate::rent::robustness_bound(&p)),
            error: None,
        },
        Err(err) => ScalingCell { n, seed, estimate: None, theta_min: None, robustness: None, error: Some(err.to_string()) },
    }
}

/// Per-`n` averages (in order of first appearance) and the log-log slope.
pub fn summarize_scaling(cells: Vec<ScalingCell>) -> ScalingReport {
    let mut ns: Vec<u64> = Vec::new();
    for c in &cells {
        if !ns.contains(&c.n) {
            ns.push(c.n);
        }
    }
    let rows: Vec<ScalingRow> = ns
        .iter()
        .map(|&n| {
            let m: Moments = cells.iter().filter(|c| c.n == n).filter_map(|c| c.estimate.map(|e| e.mean)).collect();
            ScalingRow { n, mean_cr: if m.count > 0 { m.mean } else { f64::NAN }, stderr: m.stderr(), cells_ok: m.count }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.mean_cr > 1.0)
        .map(|r| (log(r.n as f64), log(r.mean_cr - 1.0)))
        .unzip();
    let slope = if xs.len() == rows.len() { least_squares_slope(&xs, &ys) } else { None };
    ScalingReport { cells, rows, slope }
}

/// Every `(n, seed)` cell in order, then the summary.
pub fn scaling_experiment<F>(fit: &F, dist: &JointDistribution, n_list: &[u64], seeds: &[u64], n_test: u64) -> Result<ScalingReport>
where
    F: Fn(&[Sample], u64) -> Result<ThresholdPolicy> + ?Sized,
{
    if n_list.is_empty() || seeds.is_empty() {
        return Err(Error::domain("scaling experiment needs at least one size and one seed"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("training sizes must be strictly ascending"));
    }
    let cells = n_list
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .map(|(n, s)| scaling_cell(fit, dist, n, s, n_test))
        .collect();
    Ok(summarize_scaling(cells))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreGridCertificate {
    pub epsilon: f64,
    pub dim: usize,
    pub cores: u64,
    pub sampled_cores: u64,
    pub unsampled_fraction: f64,
    /// Smallest expected ratio any policy can reach given the training set.
    pub bound: f64,
    /// Whether `bound > 1 + epsilon`.
    pub exceeds_one_plus_eps: bool,
}

/// Lower bound certificate for the core-grid construction.
///
/// A policy that saw a core's season can play optimally there (ratio 1).
/// On an unseen core the coin is fair and independent of everything seen,
/// so the best it can do is `min(buy now, always rent) = 1 + 2 eps`.
pub fn lb_certify_core_grid(epsilon: f64, dim: usize, n_train: u64, seed: u64) -> Result<CoreGridCertificate> {
    let dist = make_core_grid_lb(epsilon, dim, seed)?;
    let Family::CoreGrid(grid) = &dist.family else { unreachable!() };
    let cores = grid.core_count().ok_or_else(|| Error::unsupported("core count overflows"))?;
    let stream = seed::derive_seed(seed, TAG_TRAIN);
    let sampled: BTreeSet<u64> = (0..n_train)
        .filter_map(|i| grid.core_of(&dist.draw_with_stream(stream, i).x))
        .collect();
    let eps = grid.epsilon();
    let unsampled_fraction = (cores - sampled.len() as u64) as f64 / cores as f64;
    let bound = 1.0 + 2.0 * eps * unsampled_fraction;
    Ok(CoreGridCertificate {
        epsilon: eps,
        dim,
        cores,
        sampled_cores: sampled.len() as u64,
        unsampled_fraction,
        bound,
        exceeds_one_plus_eps: bound > 1.0 + eps,
    })
}

/// Binary labels from a linear concept on uniform features, each flipped
/// with probability `label_noise`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationDist {
    pub concept: Hypothesis,
    pub dim: usize,
    #[serde(default)]
    pub label_noise: f64,
}

impl ClassificationDist {
    /// Draw `index`: features, label, and the coin that picks the short
    /// season for label 0.
    pub fn draw(&self, seed: u64, index: u64) -> (Vec<f64>, bool, f64) {
        let mut rng = seed::stream(seed, index);
        let x: Vec<f64> = (0..self.dim).map(|_| rng.random()).collect();
        let mut z = self.concept.predict(&x);
        if rng.random::<f64>() < self.label_noise {
            z = !z;
        }
        (x, z, rng.random())
    }

    /// The rent instance built from draw `index`.
    pub fn rent_draw(&self, seed: u64, index: u64) -> Sample {
        let (x, z, u) = self.draw(seed, index);
        rent_sample_from_label(x, z, u)
    }

    /// Rent training set built from draws `0..n` of the training stream.
    pub fn rent_training_set(&self, n: u64, seed: u64) -> Vec<Sample> {
        let stream = seed::derive_seed(seed, TAG_TRAIN);
        (0..n).map(|i| self.rent_draw(stream, i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    /// Fraction of test draws where the derived classifier is wrong.
    pub disagreement: f64,
    /// `sqrt(q (1 - q) / n)` for the disagreement rate `q`.
    pub disagreement_stderr: f64,
    /// Measured CR minus 1 on the transformed instances.
    pub cr_excess: f64,
    pub cr_stderr: f64,
    pub n_test: u64,
    /// `disagreement <= 4 * cr_excess + 3 * disagreement_stderr`.
    pub pass: bool,
}

/// Measures how well the classifier read off `policy` predicts labels, next
/// to the policy's CR excess on the same transformed draws.
pub fn reduction_error_check(
    policy: &ThresholdPolicy,
    cdist: &ClassificationDist,
    n_test: u64,
    seed: u64,
) -> Result<ReductionReport> {
    if n_test == 0 {
        return Err(Error::domain("reduction check needs at least one test draw"));
    }
    let classifier = pac_from_rent(policy)?;
    let stream = seed::derive_seed(seed, TAG_TEST);
    let mut wrong = 0u64;
    let mut cr = Moments::default();
    for i in 0..n_test {
        let (x, z, u) = cdist.draw(stream, i);
        if classifier.predict(&x) != z {
            wrong += 1;
        }
        let s = rent_sample_from_label(x, z, u);
        cr.push(policy.ratio(&s.x, s.y));
    }
    let q = wrong as f64 / n_test as f64;
    let se = sqrt(q * (1.0 - q) / n_test as f64);
    let excess = cr.mean - 1.0;
    Ok(ReductionReport {
        disagreement: q,
        disagreement_stderr: se,
        cr_excess: excess,
        cr_stderr: cr.stderr(),
        n_test,
        pass: q <= 4.0 * excess + 3.0 * se,
    })
}
