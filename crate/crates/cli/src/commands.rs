//! Command implementations. Each returns the rows of its report in config
//! order; parallel work is collected back into that order before returning.

use rayon::prelude::*;
use rentlearn_core::analysis::pdim::{
    common_threshold_instance, unit_basis_instance, realizability_check, ShatterInstance,
};
use rentlearn_core::analysis::{
    adversarial_block, block_count, cr_scan, cr_scan_mc, lb_certify_core_grid, mc_block, merge_blocks,
    summarize_scaling, training_draws, ScalingCell, ScalingReport,
};
use rentlearn_core::dist::{JointDistribution, SeasonLaw};
use rentlearn_core::policy::{
    fit_grid_lipschitz, fit_margin, fit_noisy, fit_pac_asymmetric, fit_pac_blackbox, fit_zero_dim, GridFitConfig,
};
use rentlearn_core::rent::robustness_bound;
use rentlearn_core::{CrEstimate, Sample, ThresholdPolicy};
use serde::Serialize;

use crate::config::{parse_labeling, AlgorithmSpec, CellsSpec, LowerBoundSpec, PdimSpec, ScanSpec};

pub const EVALUATE_SCHEMA: &str = "evaluate/v1";
pub const SWEEP_SCHEMA: &str = "sweep/v1";
pub const CORE_GRID_SCHEMA: &str = "lowerbound-core-grid/v1";
pub const NOISE_SCHEMA: &str = "lowerbound-noise/v1";
pub const SCAN_SCHEMA: &str = "scan/v1";
pub const PDIM_SCHEMA: &str = "pdim/v1";

/// Fit `spec` on `samples`.
pub fn fit(spec: &AlgorithmSpec, samples: &[Sample], dim: usize) -> rentlearn_core::Result<ThresholdPolicy> {
    match spec {
        AlgorithmSpec::ZeroDim { epsilon } => {
            let ys: Vec<f64> = samples.iter().map(|s| s.y).collect();
            fit_zero_dim(&ys, *epsilon).map(Into::into)
        }
        AlgorithmSpec::Grid { epsilon, lipschitz, cubes_per_axis, min_count } => {
            let cfg = GridFitConfig {
                epsilon: *epsilon,
                lipschitz: *lipschitz,
                dim,
                cubes_per_axis: *cubes_per_axis,
                min_count: *min_count,
            };
            fit_grid_lipschitz(samples, &cfg).map(Into::into)
        }
        AlgorithmSpec::PacBlackbox { epsilon_hat, learner } => {
            fit_pac_blackbox(samples, learner, *epsilon_hat).map(|f| ThresholdPolicy::two_value(f.policy))
        }
        AlgorithmSpec::PacAsymmetric { alpha_hat, beta_hat, learner } => {
            let rates = alpha_hat.zip(*beta_hat);
            fit_pac_asymmetric(samples, learner, rates).map(|f| ThresholdPolicy::two_value(f.policy))
        }
        AlgorithmSpec::Margin { lipschitz, alpha, learner } => {
            let alpha = alpha.unwrap_or_else(|| margin_schedule(samples.len() as u64, *lipschitz));
            fit_margin(samples, *lipschitz, alpha, learner).map(|f| ThresholdPolicy::two_value(f.policy))
        }
        AlgorithmSpec::Noisy { p, epsilon_hat, learner } => fit_noisy(samples, *p, *epsilon_hat, learner).map(|f| f.policy),
        AlgorithmSpec::Constant { theta } => ThresholdPolicy::constant(*theta),
        AlgorithmSpec::Randomized { density } => ThresholdPolicy::randomized(density.clone()),
    }
}

/// Default margin width for `n` training samples: `n^(-1/4) / sqrt(L)`.
pub fn margin_schedule(n: u64, lipschitz: f64) -> f64 {
    (n as f64).powf(-0.25) / lipschitz.sqrt()
}

/// Monte Carlo CR with the draw blocks spread over the current pool. Blocks
/// are merged in block order, so the result does not depend on the pool size.
pub fn parallel_cr(
    policy: &ThresholdPolicy,
    dist: &JointDistribution,
    n: u64,
    seed: u64,
    adversarial_p: Option<f64>,
) -> CrEstimate {
    let blocks: Vec<_> = (0..block_count(n))
        .into_par_iter()
        .map(|b| match adversarial_p {
            Some(p) => adversarial_block(policy, dist, p, n, seed, b),
            None => mc_block(policy, dist, n, seed, b),
        })
        .collect();
    CrEstimate::from_moments(&merge_blocks(blocks), seed)
}

pub fn run_cell(spec: &AlgorithmSpec, dist: &JointDistribution, cells: &CellsSpec, n: u64, seed: u64) -> ScalingCell {
    match fit(spec, &training_draws(dist, n, seed), dist.dim()) {
        Ok(policy) => ScalingCell {
            n,
            seed,
            estimate: Some(parallel_cr(&policy, dist, cells.n_test, seed, cells.adversarial_p)),
            theta_min: Some(policy.theta_min()),
            robustness: Some(robustness_bound(&policy)),
            error: None,
        },
        Err(e) => ScalingCell { n, seed, estimate: None, theta_min: None, robustness: None, error: Some(e.to_string()) },
    }
}

/// Every `(n, seed)` cell, `n`-major, evaluated on the current pool.
pub fn run_cells(spec: &AlgorithmSpec, dist: &JointDistribution, cells: &CellsSpec) -> Vec<ScalingCell> {
    let grid: Vec<(u64, u64)> = cells.n.iter().flat_map(|&n| cells.seeds.iter().map(move |&s| (n, s))).collect();
    grid.par_iter().map(|&(n, s)| run_cell(spec, dist, cells, n, s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluateRow {
    pub schema_id: &'static str,
    pub algorithm: &'static str,
    pub n: u64,
    pub seed: u64,
    pub cr_mean: Option<f64>,
    pub cr_stderr: Option<f64>,
    pub theta_min: Option<f64>,
    pub robustness: Option<f64>,
    pub error: Option<String>,
}

impl EvaluateRow {
    fn new(algorithm: &'static str, c: &ScalingCell) -> Self {
        EvaluateRow {
            schema_id: EVALUATE_SCHEMA,
            algorithm,
            n: c.n,
            seed: c.seed,
            cr_mean: c.estimate.map(|e| e.mean),
            cr_stderr: c.estimate.map(|e| e.stderr),
            theta_min: c.theta_min,
            robustness: c.robustness,
            error: c.error.clone(),
        }
    }
}

pub fn evaluate(spec: &AlgorithmSpec, dist: &JointDistribution, cells: &CellsSpec) -> Vec<EvaluateRow> {
    run_cells(spec, dist, cells).iter().map(|c| EvaluateRow::new(spec.name(), c)).collect()
}

/// Cell rows plus the seed average at the cell's `n` and the overall
/// log-log slope of `CR - 1` against `n` (empty with fewer than two sizes).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub schema_id: &'static str,
    pub algorithm: &'static str,
    pub n: u64,
    pub seed: u64,
    pub cr_mean: Option<f64>,
    pub cr_stderr: Option<f64>,
    pub theta_min: Option<f64>,
    pub robustness: Option<f64>,
    pub error: Option<String>,
    pub n_mean_cr: Option<f64>,
    pub n_stderr: Option<f64>,
    pub slope: Option<f64>,
}

pub fn sweep(spec: &AlgorithmSpec, dist: &JointDistribution, cells: &CellsSpec) -> (Vec<SweepRow>, ScalingReport) {
    let report = summarize_scaling(run_cells(spec, dist, cells));
    let rows = report
        .cells
        .iter()
        .map(|c| {
            let e = EvaluateRow::new(spec.name(), c);
            let row = report.rows.iter().find(|r| r.n == c.n).filter(|r| r.cells_ok > 0);
            SweepRow {
                schema_id: SWEEP_SCHEMA,
                algorithm: e.algorithm,
                n: e.n,
                seed: e.seed,
                cr_mean: e.cr_mean,
                cr_stderr: e.cr_stderr,
                theta_min: e.theta_min,
                robustness: e.robustness,
                error: e.error,
                n_mean_cr: row.map(|r| r.mean_cr),
                n_stderr: row.map(|r| r.stderr),
                slope: report.slope,
            }
        })
        .collect();
    (rows, report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoreGridRow {
    pub schema_id: &'static str,
    pub epsilon: f64,
    pub dim: usize,
    pub n_train: u64,
    pub seed: u64,
    pub cores: u64,
    pub sampled_cores: u64,
    pub unsampled_fraction: f64,
    pub bound: f64,
    /// `1 + epsilon`.
    pub target: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRow {
    pub schema_id: &'static str,
    pub p: f64,
    pub long_y: f64,
    pub argmin_theta: f64,
    pub min_cr: f64,
    /// `1 + sqrt(p) / 2`.
    pub target: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum LowerBoundRow {
    CoreGrid(CoreGridRow),
    Noise(NoiseRow),
}

pub fn lowerbound(spec: &LowerBoundSpec) -> rentlearn_core::Result<LowerBoundRow> {
    match *spec {
        LowerBoundSpec::CoreGrid { epsilon, dim, n_train, seed } => {
            let c = lb_certify_core_grid(epsilon, dim, n_train, seed)?;
            Ok(LowerBoundRow::CoreGrid(CoreGridRow {
                schema_id: CORE_GRID_SCHEMA,
                epsilon: c.epsilon,
                dim,
                n_train,
                seed,
                cores: c.cores,
                sampled_cores: c.sampled_cores,
                unsampled_fraction: c.unsampled_fraction,
                bound: c.bound,
                target: 1.0 + c.epsilon,
                pass: c.exceeds_one_plus_eps,
            }))
        }
        LowerBoundSpec::Noise { p, long_y, grid } => {
            let s = cr_scan(&SeasonLaw::noise_lower_bound(p, long_y)?, grid.grid()?)?;
            let target = 1.0 + p.sqrt() / 2.0;
            Ok(LowerBoundRow::Noise(NoiseRow {
                schema_id: NOISE_SCHEMA,
                p,
                long_y,
                argmin_theta: s.argmin,
                min_cr: s.min,
                target,
                pass: s.min >= target,
            }))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub schema_id: &'static str,
    pub method: &'static str,
    pub theta: f64,
    pub cr: f64,
    pub is_min: bool,
}

pub fn scan(dist: &JointDistribution, spec: &ScanSpec) -> rentlearn_core::Result<Vec<ScanRow>> {
    let grid = spec.grid.grid()?;
    let (method, result) = match (spec.draws, dist.season_law()) {
        (None, Some(law)) => ("exact", cr_scan(&law, grid)?),
        (Some(n), _) => ("monte-carlo", cr_scan_mc(dist, grid, n, spec.seed)?),
        (None, None) => {
            return Err(rentlearn_core::Error::Unsupported("no closed-form season law; set draws".into()));
        }
    };
    Ok(result
        .values
        .iter()
        .map(|&(theta, cr)| ScanRow { schema_id: SCAN_SCHEMA, method, theta, cr, is_min: theta == result.argmin })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdimRow {
    pub schema_id: &'static str,
    pub instance: &'static str,
    pub labeling: String,
    pub feasible: bool,
    pub hypothesis: Option<usize>,
    pub eta_1: Option<f64>,
    pub eta_2: Option<f64>,
}

pub fn pdim_instance(spec: &PdimSpec) -> rentlearn_core::Result<ShatterInstance> {
    match spec {
        PdimSpec::UnitBasis { d, epsilon, .. } => unit_basis_instance(*d, *epsilon),
        PdimSpec::CommonThreshold { seasons, witnesses, .. } => common_threshold_instance(seasons, witnesses),
    }
}

/// One row per requested labeling, or per labeling of all `2^m` when none
/// are listed (point 0 is the leftmost digit).
pub fn pdim_check(spec: &PdimSpec) -> rentlearn_core::Result<Vec<PdimRow>> {
    let inst = pdim_instance(spec)?;
    let m = inst.points.len();
    let labelings: Vec<String> = match spec.labelings() {
        Some(ls) => ls.to_vec(),
        None => (0u32..1 << m)
            .map(|mask| (0..m).map(|i| if mask >> i & 1 == 1 { '1' } else { '0' }).collect())
            .collect(),
    };
    let instance = match spec {
        PdimSpec::UnitBasis { .. } => "unit-basis",
        PdimSpec::CommonThreshold { .. } => "common-threshold",
    };
    labelings
        .par_iter()
        .map(|l| {
            let bits = parse_labeling(l)
                .ok_or_else(|| rentlearn_core::Error::Domain(format!("labeling {l:?} is not a 0/1 string")))?;
            let r = realizability_check(&inst, &bits)?;
            Ok(PdimRow {
                schema_id: PDIM_SCHEMA,
                instance,
                labeling: l.clone(),
                feasible: r.is_some(),
                hypothesis: r.map(|r| r.hypothesis),
                eta_1: r.map(|r| r.eta_1),
                eta_2: r.map(|r| r.eta_2),
            })
        })
        .collect()
}
