//! The ski-rental cost model.
//!
//! Buying costs 1 and renting costs 1 per unit time. A threshold policy rents
//! until time `theta` and then buys, so on a season of length `y` it pays `y`
//! when `y < theta` and `theta + 1` otherwise. The offline optimum pays
//! `min(1, y)`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::E;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::num::{exp, integrate, Moments, INTEGRATION_TOL};
use crate::policy::{GridPolicy, TwoValuePolicy};
use crate::{Error, Result};

/// Competitive ratio of the classical randomized strategy, `e / (e - 1)`.
pub const WORST_CASE_RANDOMIZED_RATIO: f64 = E / (E - 1.0);

/// A feature vector in `[0,1]^d` and a season length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: f64) -> Result<Self> {
        if let Some(bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain(alloc::format!("feature {bad} is outside [0, 1]")));
        }
        check_season(y)?;
        Ok(Sample { x, y })
    }

    /// A sample without features.
    pub fn season(y: f64) -> Result<Self> {
        Sample::new(Vec::new(), y)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(alloc::format!("threshold must be finite and positive, got {theta}")))
    }
}

fn check_season(y: f64) -> Result<()> {
    if y.is_finite() && y >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(alloc::format!("season length must be finite and >= 0, got {y}")))
    }
}

/// Unchecked cost ratio. `y = 0` costs nothing for either party and maps to 1.
#[inline]
pub(crate) fn ratio(theta: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    let opt = if y < 1.0 { y } else { 1.0 };
    if y >= theta {
        (1.0 + theta) / opt
    } else {
        y / opt
    }
}

/// `g(theta, y)`: cost of the threshold-`theta` policy over the offline optimum.
pub fn cost_ratio(theta: f64, y: f64) -> Result<f64> {
    check_theta(theta)?;
    check_season(y)?;
    Ok(ratio(theta, y))
}

/// Supremum of `g(theta, y)` over all `y >= 0`.
///
/// For `theta <= 1` the supremum `1 + 1/theta` is approached as `y` comes down
/// to `theta`; for `theta > 1` it is `1 + theta`, attained at `y = theta`.
pub fn worst_case_ratio(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(sup_ratio(theta))
}

#[inline]
pub(crate) fn sup_ratio(theta: f64) -> f64 {
    if theta <= 1.0 {
        1.0 + 1.0 / theta
    } else {
        1.0 + theta
    }
}

/// A distribution over buy thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ThresholdDensity {
    /// Density `e^z / (e - 1)` on `[0, 1]`.
    WorstCase,
    PointMass { theta: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl ThresholdDensity {
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ThresholdDensity::WorstCase => (0.0, 1.0),
            ThresholdDensity::PointMass { theta } => (theta, theta),
            ThresholdDensity::Uniform { lo, hi } => (lo, hi),
        }
    }

    /// Density at `z`; point masses report 0 (they have no density).
    pub fn pdf(&self, z: f64) -> f64 {
        match *self {
            ThresholdDensity::WorstCase => {
                if (0.0..=1.0).contains(&z) {
                    exp(z) / (E - 1.0)
                } else {
                    0.0
                }
            }
            ThresholdDensity::PointMass { .. } => 0.0,
            ThresholdDensity::Uniform { lo, hi } => {
                if (lo..=hi).contains(&z) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    /// Total mass, computed by quadrature for the continuous families.
    pub fn total_mass(&self) -> f64 {
        match *self {
            ThresholdDensity::PointMass { .. } => 1.0,
            _ => {
                let (lo, hi) = self.support();
                integrate(|z| self.pdf(z), lo, hi, 1e-12)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdDensity::PointMass { theta } => check_theta(theta)?,
            ThresholdDensity::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
                    return Err(Error::domain("uniform threshold density needs 0 <= lo < hi"));
                }
            }
            ThresholdDensity::WorstCase => {}
        }
        let mass = self.total_mass();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::domain(alloc::format!("threshold density integrates to {mass}, not 1")));
        }
        Ok(())
    }

    /// `E_theta[g(theta, y)]` without validation.
    pub(crate) fn expected_ratio(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        match *self {
            ThresholdDensity::PointMass { theta } => ratio(theta, y),
            _ => {
                let (lo, hi) = self.support();
                let opt = if y < 1.0 { y } else { 1.0 };
                // g(z, y) is smooth on either side of z = y.
                let split = y.clamp(lo, hi);
                let bought = integrate(|z| (1.0 + z) * self.pdf(z), lo, split, INTEGRATION_TOL * 0.5);
                let rented = y * integrate(|z| self.pdf(z), split, hi, INTEGRATION_TOL * 0.5);
                (bought + rented) / opt
            }
        }
    }

    /// Certified `sup_y E_theta[g(theta, y)]`.
    pub fn robustness(&self) -> f64 {
        match *self {
            ThresholdDensity::WorstCase => WORST_CASE_RANDOMIZED_RATIO,
            ThresholdDensity::PointMass { theta } => sup_ratio(theta),
            ThresholdDensity::Uniform { lo, hi } => {
                if lo <= 0.0 {
                    f64::INFINITY
                } else {
                    sup_ratio(lo).max(sup_ratio(hi))
                }
            }
        }
    }
}

/// `E_theta[g(theta, y)]` for a randomized threshold, by adaptive quadrature
/// (absolute error at most 1e-6).
pub fn expected_ratio_randomized(density: &ThresholdDensity, y: f64) -> Result<f64> {
    density.validate()?;
    check_season(y)?;
    Ok(density.expected_ratio(y))
}

/// Threshold rule supplied by the caller, with its declared range.
#[derive(Clone)]
pub struct CustomPolicy {
    pub name: String,
    pub rule: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl fmt::Debug for CustomPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPolicy")
            .field("name", &self.name)
            .field("theta_min", &self.theta_min)
            .field("theta_max", &self.theta_max)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyKind {
    Constant { theta: f64 },
    Grid(GridPolicy),
    TwoValue(TwoValuePolicy),
    Randomized { density: ThresholdDensity },
    #[serde(skip)]
    Custom(CustomPolicy),
}

/// What a policy does on one feature vector.
#[derive(Debug, Clone, Copy)]
pub enum Threshold<'a> {
    Fixed(f64),
    Random(&'a ThresholdDensity),
}

/// A map from features to a buy threshold or a threshold distribution.
///
/// `theta_min` / `theta_max` are the exact infimum and supremum of the
/// thresholds the policy can emit, fixed at construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PolicyKind", into = "PolicyKind")]
pub struct ThresholdPolicy {
    kind: PolicyKind,
    theta_min: f64,
    theta_max: f64,
}

impl ThresholdPolicy {
    pub fn constant(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(ThresholdPolicy { kind: PolicyKind::Constant { theta }, theta_min: theta, theta_max: theta })
    }

    pub fn randomized(density: ThresholdDensity) -> Result<Self> {
        density.validate()?;
        let (lo, hi) = density.support();
        Ok(ThresholdPolicy { kind: PolicyKind::Randomized { density }, theta_min: lo, theta_max: hi })
    }

    pub fn grid(grid: GridPolicy) -> Self {
        let (theta_min, theta_max) = grid.threshold_range();
        ThresholdPolicy { kind: PolicyKind::Grid(grid), theta_min, theta_max }
    }

    pub fn two_value(p: TwoValuePolicy) -> Self {
        let (theta_min, theta_max) = (p.theta_if_long(), p.theta_if_short());
        ThresholdPolicy { kind: PolicyKind::TwoValue(p), theta_min, theta_max }
    }

    /// A caller-supplied rule. The declared range is trusted, not verified.
    pub fn custom(
        name: impl Into<String>,
        rule: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        theta_min: f64,
        theta_max: f64,
    ) -> Result<Self> {
        check_theta(theta_min)?;
        check_theta(theta_max)?;
        if theta_max < theta_min {
            return Err(Error::domain("custom policy declares theta_max < theta_min"));
        }
        let custom = CustomPolicy { name: name.into(), rule: Arc::new(rule), theta_min, theta_max };
        Ok(ThresholdPolicy { kind: PolicyKind::Custom(custom), theta_min, theta_max })
    }

    pub fn kind(&self) -> &PolicyKind {
        &self.kind
    }

    pub fn theta_min(&self) -> f64 {
        self.theta_min
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn is_randomized(&self) -> bool {
        matches!(self.kind, PolicyKind::Randomized { .. })
    }

    /// Short label used in reports.
    pub fn label(&self) -> &str {
        match &self.kind {
            PolicyKind::Constant { .. } => "constant",
            PolicyKind::Grid(g) if g.is_constant() => "grid-constant",
            PolicyKind::Grid(_) => "grid-cubes",
            PolicyKind::TwoValue(_) => "two-value",
            PolicyKind::Randomized { .. } => "randomized",
            PolicyKind::Custom(c) => &c.name,
        }
    }

    pub fn threshold(&self, x: &[f64]) -> Threshold<'_> {
        match &self.kind {
            PolicyKind::Constant { theta } => Threshold::Fixed(*theta),
            PolicyKind::Grid(g) => Threshold::Fixed(g.threshold(x)),
            PolicyKind::TwoValue(p) => Threshold::Fixed(p.threshold(x)),
            PolicyKind::Randomized { density } => Threshold::Random(density),
            PolicyKind::Custom(c) => Threshold::Fixed((c.rule)(x)),
        }
    }

    /// Expected ratio of the policy on one instance.
    pub fn ratio(&self, x: &[f64], y: f64) -> f64 {
        match self.threshold(x) {
            Threshold::Fixed(theta) => ratio(theta, y),
            Threshold::Random(d) => d.expected_ratio(y),
        }
    }
}

impl TryFrom<PolicyKind> for ThresholdPolicy {
    type Error = Error;

    fn try_from(kind: PolicyKind) -> Result<Self> {
        match kind {
            PolicyKind::Constant { theta } => ThresholdPolicy::constant(theta),
            PolicyKind::Grid(g) => {
                g.validate()?;
                Ok(ThresholdPolicy::grid(g))
            }
            PolicyKind::TwoValue(p) => {
                p.validate()?;
                Ok(ThresholdPolicy::two_value(p))
            }
            PolicyKind::Randomized { density } => ThresholdPolicy::randomized(density),
            PolicyKind::Custom(c) => ThresholdPolicy::custom(c.name.clone(), move |x| (c.rule)(x), c.theta_min, c.theta_max),
        }
    }
}

impl From<ThresholdPolicy> for PolicyKind {
    fn from(p: ThresholdPolicy) -> Self {
        p.kind
    }
}

/// Empirical competitive ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl CrEstimate {
    pub fn from_moments(m: &Moments, seed: u64) -> Self {
        CrEstimate { mean: m.mean, stderr: m.stderr(), n_samples: m.count, seed }
    }
}

/// Mean ratio of `policy` over `samples`, with standard error
/// `sd / sqrt(n)`. The seed field is 0: nothing random happens here.
pub fn evaluate_policy(policy: &ThresholdPolicy, samples: &[Sample]) -> Result<CrEstimate> {
    if samples.is_empty() {
        return Err(Error::domain("cannot evaluate a policy on an empty sample list"));
    }
    let m: Moments = samples.iter().map(|s| policy.ratio(&s.x, s.y)).collect();
    Ok(CrEstimate::from_moments(&m, 0))
}

/// Worst ratio the policy can suffer on any `(x, y)`.
pub fn robustness_bound(policy: &ThresholdPolicy) -> f64 {
    match policy.kind() {
        PolicyKind::Randomized { density } => density.robustness(),
        _ => sup_ratio(policy.theta_min()).max(sup_ratio(policy.theta_max())),
    }
}
