use alloc::vec::Vec;
use core::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::learn::{labeled, measure_errors, train_margin_linear, Classifier, ErrorReport, LearnerConfig, TrainOutcome};
use crate::num::{ceil, sqrt};
use crate::rent::PolicyKind;
use crate::{Error, Result, Sample, Threshold, ThresholdDensity, ThresholdPolicy};

use super::{clamp_threshold, TwoValuePolicy};

/// Above this noise level the noisy fit ignores the classifier and falls
/// back to the classical randomized strategy: `1 / (9 (e - 1)^2)`.
pub const NOISY_SWITCH_POINT: f64 = 1.0 / (9.0 * (E - 1.0) * (E - 1.0));

/// Fraction of the samples used for training when error rates are measured
/// on a holdout.
const TRAIN_FRACTION: f64 = 0.7;

#[derive(Debug, Clone)]
pub struct PacFit {
    pub policy: TwoValuePolicy,
    /// Threshold used where the classifier predicts a long season.
    pub tau: f64,
    /// Holdout error rates, when they were measured rather than supplied.
    pub measured: Option<ErrorReport>,
    pub training: TrainOutcome,
}

fn check_rate(v: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::domain(alloc::format!("{what} must lie in [0, 1], got {v}")))
    }
}

fn split_holdout(samples: &[Sample]) -> Result<(&[Sample], &[Sample])> {
    if samples.len() < 2 {
        return Err(Error::domain("measuring a holdout error needs at least 2 samples"));
    }
    let n_train = (ceil(samples.len() as f64 * TRAIN_FRACTION) as usize).min(samples.len() - 1);
    Ok(samples.split_at(n_train))
}

fn train(samples: &[Sample], config: &LearnerConfig) -> Result<TrainOutcome> {
    if samples.is_empty() {
        return Err(Error::domain("cannot train on an empty sample list"));
    }
    train_margin_linear(&labeled(samples), config)
}

/// Train on all samples when the error rates are given, otherwise on the
/// first 70% and measure on the rest.
fn train_and_measure(samples: &[Sample], config: &LearnerConfig, measure: bool) -> Result<(TrainOutcome, Option<ErrorReport>)> {
    if measure {
        let (fit, holdout) = split_holdout(samples)?;
        let outcome = train(fit, config)?;
        let report = measure_errors(&outcome.hypothesis, &labeled(holdout))?;
        Ok((outcome, Some(report)))
    } else {
        Ok((train(samples, config)?, None))
    }
}

/// Black-box PAC fit: threshold `sqrt(eps)` where the classifier predicts a
/// long season, 1 elsewhere. `epsilon_hat` defaults to the holdout error.
pub fn fit_pac_blackbox(samples: &[Sample], config: &LearnerConfig, epsilon_hat: Option<f64>) -> Result<PacFit> {
    if let Some(e) = epsilon_hat {
        check_rate(e, "epsilon_hat")?;
    }
    let (training, measured) = train_and_measure(samples, config, epsilon_hat.is_none())?;
    let eps = epsilon_hat.or(measured.map(|r| r.overall)).unwrap_or(0.0);
    let tau = clamp_threshold(sqrt(eps));
    let policy = TwoValuePolicy::new(training.hypothesis.clone(), tau, 1.0)?;
    Ok(PacFit { policy, tau, measured, training })
}

/// Asymmetric-error fit: threshold `max(alpha, sqrt(beta))`.
/// `rates = (alpha_hat, beta_hat)` defaults to the holdout rates.
pub fn fit_pac_asymmetric(samples: &[Sample], config: &LearnerConfig, rates: Option<(f64, f64)>) -> Result<PacFit> {
    if let Some((a, b)) = rates {
        check_rate(a, "alpha_hat")?;
        check_rate(b, "beta_hat")?;
    }
    let (training, measured) = train_and_measure(samples, config, rates.is_none())?;
    let (a, b) = rates.or(measured.map(|r| (r.alpha, r.beta))).unwrap_or((0.0, 0.0));
    let tau = clamp_threshold(a.max(sqrt(b)));
    let policy = TwoValuePolicy::new(training.hypothesis.clone(), tau, 1.0)?;
    Ok(PacFit { policy, tau, measured, training })
}

#[derive(Debug, Clone)]
pub struct MarginFit {
    pub policy: TwoValuePolicy,
    pub gamma: f64,
    pub kept: usize,
    pub discarded: usize,
    /// Smallest distance from a kept sample to the learned boundary.
    pub margin: f64,
    pub training: TrainOutcome,
}

/// Samples whose season lies outside `[1 - gamma, 1 + gamma]`.
pub fn filter_margin_band(samples: &[Sample], gamma: f64) -> Vec<Sample> {
    samples.iter().filter(|s| s.y < 1.0 - gamma || s.y > 1.0 + gamma).cloned().collect()
}

/// Margin fit with band half-width `gamma = L * alpha`: drop the samples
/// near the renting/buying boundary, train on the rest, and use thresholds
/// `gamma` (predicted long) and `1 + gamma` (predicted short).
pub fn fit_margin(samples: &[Sample], lipschitz: f64, alpha: f64, config: &LearnerConfig) -> Result<MarginFit> {
    if !(lipschitz > 0.0 && alpha > 0.0) {
        return Err(Error::domain("Lipschitz constant and margin width must be positive"));
    }
    let gamma = lipschitz * alpha;
    if !(gamma < 1.0) {
        return Err(Error::domain(alloc::format!("band half-width L * alpha = {gamma} must be < 1")));
    }
    let kept = filter_margin_band(samples, gamma);
    if kept.is_empty() {
        return Err(Error::degenerate("every sample fell inside the margin band"));
    }
    let mut config = config.clone();
    config.margin_target = config.margin_target.max(alpha);
    let training = train(&kept, &config)?;
    let policy = TwoValuePolicy::new(training.hypothesis.clone(), gamma, 1.0 + gamma)?;
    Ok(MarginFit {
        policy,
        gamma,
        kept: kept.len(),
        discarded: samples.len() - kept.len(),
        margin: training.margin,
        training,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoisyBranch {
    Classifier,
    Randomized,
}

#[derive(Debug, Clone)]
pub struct NoisyFit {
    pub policy: ThresholdPolicy,
    /// `max(p, epsilon_hat)`.
    pub p0: f64,
    pub branch: NoisyBranch,
    pub measured: Option<ErrorReport>,
}

/// Noise-tolerant fit. With `p0 = max(p, epsilon_hat)` above
/// [`NOISY_SWITCH_POINT`] the result is the randomized `e^z / (e - 1)`
/// strategy; otherwise a two-value policy with thresholds `sqrt(p0)` and 1.
pub fn fit_noisy(samples: &[Sample], p: f64, epsilon_hat: Option<f64>, config: &LearnerConfig) -> Result<NoisyFit> {
    check_rate(p, "noise rate")?;
    if let Some(e) = epsilon_hat {
        check_rate(e, "epsilon_hat")?;
        if p.max(e) > NOISY_SWITCH_POINT {
            return Ok(randomized_branch(p.max(e), None));
        }
    }
    let (training, measured) = train_and_measure(samples, config, epsilon_hat.is_none())?;
    let eps = epsilon_hat.or(measured.map(|r| r.overall)).unwrap_or(0.0);
    let p0 = p.max(eps);
    if p0 > NOISY_SWITCH_POINT {
        return Ok(randomized_branch(p0, measured));
    }
    let tau = clamp_threshold(sqrt(p0));
    let policy = ThresholdPolicy::two_value(TwoValuePolicy::new(training.hypothesis, tau, 1.0)?);
    Ok(NoisyFit { policy, p0, branch: NoisyBranch::Classifier, measured })
}

fn randomized_branch(p0: f64, measured: Option<ErrorReport>) -> NoisyFit {
    let policy = ThresholdPolicy::randomized(ThresholdDensity::WorstCase).expect("worst-case density is valid");
    NoisyFit { policy, p0, branch: NoisyBranch::Randomized, measured }
}

/// Classifier read off a deterministic rent policy: predicts a long season
/// exactly where the threshold is below 1/2.
#[derive(Debug, Clone)]
pub struct RentDerivedClassifier {
    policy: ThresholdPolicy,
}

impl RentDerivedClassifier {
    pub fn policy(&self) -> &ThresholdPolicy {
        &self.policy
    }
}

impl Classifier for RentDerivedClassifier {
    fn predict(&self, x: &[f64]) -> bool {
        match self.policy.threshold(x) {
            Threshold::Fixed(theta) => theta < 0.5,
            Threshold::Random(_) => unreachable!("checked at construction"),
        }
    }
}

pub fn pac_from_rent(policy: &ThresholdPolicy) -> Result<RentDerivedClassifier> {
    if matches!(policy.kind(), PolicyKind::Randomized { .. }) {
        return Err(Error::unsupported("a randomized policy does not define a classifier"));
    }
    Ok(RentDerivedClassifier { policy: policy.clone() })
}

/// Rent instance built from a classification example: label 1 becomes a
/// season of length 10, label 0 a season of length 0 or 1/2 depending on
/// whether `u < 1/2`.
pub fn rent_sample_from_label(x: Vec<f64>, label: bool, u: f64) -> Sample {
    let y = if label {
        10.0
    } else if u < 0.5 {
        0.0
    } else {
        0.5
    };
    Sample { x, y }
}
