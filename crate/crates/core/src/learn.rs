//! Linear classifiers used as black boxes by the PAC-based fits.
//!
//! Label convention: a season `y >= 1` is "long" (label `true`, i.e. 1).

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::num::sqrt;
use crate::{Error, Result, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub x: Vec<f64>,
    pub label: bool,
}

/// 1 iff `y >= 1`.
pub fn label_from_season(y: f64) -> bool {
    y >= 1.0
}

pub fn labeled(samples: &[Sample]) -> Vec<LabeledExample> {
    samples
        .iter()
        .map(|s| LabeledExample { x: s.x.clone(), label: label_from_season(s.y) })
        .collect()
}

/// Anything that maps features to a binary label.
pub trait Classifier {
    fn predict(&self, x: &[f64]) -> bool;
}

/// A caller-supplied feature map with its declared expansion constant `nu`
/// (`|phi(a) - phi(b)| >= |a - b| / nu`). The constant is recorded, not checked.
#[derive(Clone)]
pub struct CustomFeatureMap {
    pub name: String,
    pub nu: f64,
    pub map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl fmt::Debug for CustomFeatureMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFeatureMap").field("name", &self.name).field("nu", &self.nu).finish_non_exhaustive()
    }
}

/// Transform applied before the linear form.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMap {
    #[default]
    Identity,
    /// `(x_1..x_d, x_i * x_j for i <= j)`.
    Poly2,
    #[serde(skip)]
    Custom(CustomFeatureMap),
}

impl FeatureMap {
    pub fn name(&self) -> &str {
        match self {
            FeatureMap::Identity => "identity",
            FeatureMap::Poly2 => "poly2",
            FeatureMap::Custom(c) => &c.name,
        }
    }

    /// Declared expansion constant; 1 for the built-in maps.
    pub fn nu(&self) -> f64 {
        match self {
            FeatureMap::Custom(c) => c.nu,
            _ => 1.0,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::Identity => x.to_vec(),
            FeatureMap::Poly2 => {
                let d = x.len();
                let mut out = Vec::with_capacity(d + d * (d + 1) / 2);
                out.extend_from_slice(x);
                for i in 0..d {
                    for j in i..d {
                        out.push(x[i] * x[j]);
                    }
                }
                out
            }
            FeatureMap::Custom(c) => (c.map)(x),
        }
    }
}

/// Linear threshold classifier `w . phi(x) + b >= 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hypothesis {
    pub weights: Vec<f64>,
    pub bias: f64,
    #[serde(default)]
    pub feature_map: FeatureMap,
}

impl Hypothesis {
    pub fn new(weights: Vec<f64>, bias: f64, feature_map: FeatureMap) -> Result<Self> {
        if weights.iter().chain(core::iter::once(&bias)).any(|v| !v.is_finite()) {
            return Err(Error::domain("hypothesis parameters must be finite"));
        }
        if !weights.is_empty() && weights.iter().all(|w| *w == 0.0) {
            return Err(Error::domain("hypothesis weights must be nonzero"));
        }
        Ok(Hypothesis { weights, bias, feature_map })
    }

    pub fn linear(weights: Vec<f64>, bias: f64) -> Result<Self> {
        Hypothesis::new(weights, bias, FeatureMap::Identity)
    }

    /// Signed value of the linear form.
    pub fn score(&self, x: &[f64]) -> f64 {
        let z = self.feature_map.apply(x);
        dot(&self.weights, &z) + self.bias
    }

    /// Signed distance from `phi(x)` to the decision boundary.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        let norm = norm(&self.weights);
        if norm == 0.0 {
            return f64::INFINITY * self.bias.signum();
        }
        self.score(x) / norm
    }

    fn constant(label: bool, dim: usize, feature_map: FeatureMap, radius: f64) -> Self {
        // weights e_1 with a bias that pushes every point with |phi(x)| <= radius to one side.
        let mut weights = alloc::vec![0.0; dim];
        let bias = if label { radius + 1.0 } else { -(radius + 1.0) };
        if let Some(w) = weights.first_mut() {
            *w = 1.0;
        }
        Hypothesis { weights, bias, feature_map }
    }
}

impl Classifier for Hypothesis {
    fn predict(&self, x: &[f64]) -> bool {
        // Ties on the boundary go to the closed side, like y >= 1.
        self.score(x) >= 0.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    /// Geometric margin the data is expected to have; used to size the
    /// default epoch budget and reported back, not enforced.
    #[serde(default)]
    pub margin_target: f64,
    #[serde(default = "default_epochs")]
    pub max_epochs: usize,
    #[serde(default)]
    pub feature_map: FeatureMap,
}

fn default_epochs() -> usize {
    1000
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig { margin_target: 0.0, max_epochs: default_epochs(), feature_map: FeatureMap::Identity }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub hypothesis: Hypothesis,
    pub training_errors: usize,
    /// Perceptron updates performed.
    pub updates: usize,
    pub epochs: usize,
    /// False when the epoch budget ran out before a clean pass.
    pub converged: bool,
    /// Smallest signed distance of a training point to the learned boundary
    /// (negative when some point is misclassified).
    pub margin: f64,
}

/// Perceptron on features augmented with a constant coordinate.
///
/// On data separable with geometric margin `gamma` in the augmented space of
/// radius `R`, the number of updates is at most `(R / gamma)^2`. If the budget
/// runs out, the weights with the fewest training errors seen at an epoch
/// boundary are returned and `converged` is false. Candidates at each
/// boundary are the current iterate and the running average of all
/// iterates, which is far steadier when the labels are noisy.
pub fn train_margin_linear(data: &[LabeledExample], config: &LearnerConfig) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::domain("cannot train on an empty data set"));
    }
    if !(config.margin_target >= 0.0) {
        return Err(Error::domain("margin target must be >= 0"));
    }
    let mapped: Vec<Vec<f64>> = data.iter().map(|e| config.feature_map.apply(&e.x)).collect();
    let dim = mapped[0].len();
    if mapped.iter().any(|z| z.len() != dim) {
        return Err(Error::domain("examples have mixed feature dimensions"));
    }
    let radius = mapped.iter().map(|z| norm(z)).fold(0.0, f64::max);
    let lift = if radius > 0.0 { radius } else { 1.0 };

    let first = data[0].label;
    if data.iter().all(|e| e.label == first) {
        let h = Hypothesis::constant(first, dim, config.feature_map.clone(), radius);
        let margin = mapped.iter().map(|z| signed(&h, z, first)).fold(f64::INFINITY, f64::min);
        return Ok(TrainOutcome { hypothesis: h, training_errors: 0, updates: 0, epochs: 0, converged: true, margin });
    }

    let max_epochs = if config.max_epochs == 0 && config.margin_target > 0.0 {
        let r2 = radius * radius + lift * lift;
        (r2 / (config.margin_target * config.margin_target)) as usize + 1
    } else {
        config.max_epochs.max(1)
    };

    // w has dim + 1 coordinates; the last multiplies `lift`.
    let mut w = alloc::vec![0.0; dim + 1];
    let score = |w: &[f64], z: &[f64]| dot(&w[..dim], z) + w[dim] * lift;
    let count_errors = |w: &[f64]| {
        mapped.iter().zip(data).filter(|(z, e)| (score(w, z) >= 0.0) != e.label).count()
    };

    let mut best = (usize::MAX, w.clone());
    let mut sum = alloc::vec![0.0; dim + 1];
    let mut updates = 0;
    let mut epochs = 0;
    let mut converged = false;
    while epochs < max_epochs {
        epochs += 1;
        let mut mistakes = 0;
        for (z, e) in mapped.iter().zip(data) {
            let s = if e.label { 1.0 } else { -1.0 };
            if s * score(&w, z) <= 0.0 {
                for (wi, zi) in w[..dim].iter_mut().zip(z) {
                    *wi += s * zi;
                }
                w[dim] += s * lift;
                mistakes += 1;
                updates += 1;
            }
            for (si, wi) in sum.iter_mut().zip(&w) {
                *si += wi;
            }
        }
        if mistakes == 0 {
            converged = true;
            break;
        }
        for candidate in [&w, &sum] {
            let errs = count_errors(candidate);
            if errs < best.0 {
                best = (errs, candidate.clone());
            }
        }
    }
    let w = if converged { w } else { best.1 };
    let training_errors = count_errors(&w);

    let weights = w[..dim].to_vec();
    let bias = w[dim] * lift;
    let hypothesis = if dim > 0 && weights.iter().all(|v| *v == 0.0) {
        Hypothesis::constant(bias >= 0.0, dim, config.feature_map.clone(), radius)
    } else {
        Hypothesis { weights, bias, feature_map: config.feature_map.clone() }
    };
    let margin = mapped.iter().zip(data).map(|(z, e)| signed(&hypothesis, z, e.label)).fold(f64::INFINITY, f64::min);
    Ok(TrainOutcome { hypothesis, training_errors, updates, epochs, converged: converged && training_errors == 0, margin })
}

// Signed distance of an already-mapped point, positive when on the correct side.
fn signed(h: &Hypothesis, z: &[f64], label: bool) -> f64 {
    let n = norm(&h.weights);
    let v = (dot(&h.weights, z) + h.bias) / if n > 0.0 { n } else { 1.0 };
    let correct = (v >= 0.0) == label;
    if correct {
        v.abs()
    } else {
        -v.abs()
    }
}

/// Asymmetric error rates on a holdout set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Fraction predicted short while actually long.
    pub alpha: f64,
    /// Fraction predicted long while actually short.
    pub beta: f64,
    pub overall: f64,
}

pub fn measure_errors<C: Classifier + ?Sized>(h: &C, holdout: &[LabeledExample]) -> Result<ErrorReport> {
    if holdout.is_empty() {
        return Err(Error::domain("cannot measure errors on an empty holdout"));
    }
    let (mut missed_long, mut missed_short) = (0usize, 0usize);
    for e in holdout {
        match (h.predict(&e.x), e.label) {
            (false, true) => missed_long += 1,
            (true, false) => missed_short += 1,
            _ => {}
        }
    }
    let n = holdout.len() as f64;
    Ok(ErrorReport {
        alpha: missed_long as f64 / n,
        beta: missed_short as f64 / n,
        overall: (missed_long + missed_short) as f64 / n,
    })
}

/// VC-dimension bound for margin-`alpha` hyperplanes in a radius-`R` ball:
/// `floor(min(R^2 / alpha^2, d)) + 1`.
pub fn vc_dim_margin(radius: f64, alpha: f64, d: usize) -> Result<u64> {
    if !(radius > 0.0 && alpha > 0.0) || !radius.is_finite() {
        return Err(Error::domain("radius and margin must be positive"));
    }
    let ratio = (radius * radius) / (alpha * alpha);
    let capped = if ratio < d as f64 { ratio } else { d as f64 };
    Ok(libm::floor(capped) as u64 + 1)
}
