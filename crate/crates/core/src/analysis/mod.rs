//! Monte Carlo estimation, exact scans, experiments and certificates.

mod experiments;
mod mc;
pub mod pdim;
mod scan;

pub use experiments::{
    lb_certify_core_grid, reduction_error_check, scaling_cell, scaling_experiment, summarize_scaling,
    training_draws, ClassificationDist, CoreGridCertificate, ReductionReport, ScalingCell, ScalingReport, ScalingRow,
};
pub use mc::{
    adversarial_block, adversarial_noise_cr, block_count, block_range, mc_block, merge_blocks, monte_carlo_cr,
    MC_BLOCK,
};
pub use scan::{cr_scan, cr_scan_mc, probe_points, worst_case_scan, ScanResult, WorstCaseScan, WORST_CASE_PROBE};
