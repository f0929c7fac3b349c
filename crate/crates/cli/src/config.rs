//! Experiment configuration files.
//!
//! A config is one TOML document. Every command reads the sections it needs
//! and ignores the rest; unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use rentlearn_core::analysis::pdim::MAX_POINTS;
use rentlearn_core::dist::{make_core_grid_lb, make_noise_lb, JointDistribution};
use rentlearn_core::learn::LearnerConfig;
use rentlearn_core::num::Grid1D;
use rentlearn_core::policy::GridFitConfig;
use rentlearn_core::ThresholdDensity;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Where to write the report; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<JointDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<AlgorithmSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluate: Option<CellsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<CellsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lowerbound: Option<LowerBoundSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pdim: Option<PdimSpec>,
}

/// A threshold-fitting procedure and its parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    /// One threshold for every feature vector, chosen on the `eps` lattice.
    ZeroDim { epsilon: f64 },
    /// Per-cube lattice fit.
    Grid {
        epsilon: f64,
        lipschitz: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cubes_per_axis: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_count: Option<u64>,
    },
    /// Classifier plus thresholds `sqrt(eps)` / 1. The error defaults to a
    /// holdout measurement.
    PacBlackbox {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon_hat: Option<f64>,
        #[serde(default)]
        learner: LearnerConfig,
    },
    PacAsymmetric {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha_hat: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta_hat: Option<f64>,
        #[serde(default)]
        learner: LearnerConfig,
    },
    /// Band filter plus classifier. Without `alpha` the band shrinks with the
    /// training size as `alpha = n^(-1/4) / sqrt(L)`.
    Margin {
        lipschitz: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default)]
        learner: LearnerConfig,
    },
    Noisy {
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon_hat: Option<f64>,
        #[serde(default)]
        learner: LearnerConfig,
    },
    /// Baselines that ignore the training data.
    Constant { theta: f64 },
    Randomized { density: ThresholdDensity },
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::ZeroDim { .. } => "zero-dim",
            AlgorithmSpec::Grid { .. } => "grid",
            AlgorithmSpec::PacBlackbox { .. } => "pac-blackbox",
            AlgorithmSpec::PacAsymmetric { .. } => "pac-asymmetric",
            AlgorithmSpec::Margin { .. } => "margin",
            AlgorithmSpec::Noisy { .. } => "noisy",
            AlgorithmSpec::Constant { .. } => "constant",
            AlgorithmSpec::Randomized { .. } => "randomized",
        }
    }
}

/// Training sizes and seeds; one cell per `(n, seed)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellsSpec {
    pub n: Vec<u64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_n_test")]
    pub n_test: u64,
    /// Evaluate against an adversary that corrupts each season with this
    /// probability, choosing the worst season for the policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversarial_p: Option<f64>,
}

fn default_n_test() -> u64 {
    100_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LowerBoundSpec {
    CoreGrid {
        epsilon: f64,
        dim: usize,
        #[serde(default)]
        n_train: u64,
        #[serde(default)]
        seed: u64,
    },
    Noise {
        p: f64,
        #[serde(default = "default_long_y")]
        long_y: f64,
        #[serde(default)]
        grid: GridSpec,
    },
}

fn default_long_y() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { start: 0.01, stop: 1.0, step: 0.001 }
    }
}

impl GridSpec {
    pub fn grid(&self) -> rentlearn_core::Result<Grid1D> {
        Grid1D::new(self.start, self.stop, self.step)
    }
}

/// `CR(theta)` of constant thresholds against `[distribution]`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    #[serde(default)]
    pub grid: GridSpec,
    /// Monte Carlo draws; required when the distribution has no closed-form
    /// season law, and forces Monte Carlo otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "instance", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PdimSpec {
    /// `d` unit-vector points with seasons `1 + eps` and witness 1.5.
    UnitBasis {
        d: usize,
        #[serde(default = "default_pdim_eps")]
        epsilon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labelings: Option<Vec<String>>,
    },
    /// Featureless points that must share one threshold.
    CommonThreshold {
        seasons: Vec<f64>,
        witnesses: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labelings: Option<Vec<String>>,
    },
}

fn default_pdim_eps() -> f64 {
    0.1
}

impl PdimSpec {
    pub fn points(&self) -> usize {
        match self {
            PdimSpec::UnitBasis { d, .. } => *d,
            PdimSpec::CommonThreshold { seasons, .. } => seasons.len(),
        }
    }

    pub fn labelings(&self) -> Option<&[String]> {
        match self {
            PdimSpec::UnitBasis { labelings, .. } | PdimSpec::CommonThreshold { labelings, .. } => labelings.as_deref(),
        }
    }
}

/// Parse a labeling written as a string of `0`/`1`, one digit per point.
pub fn parse_labeling(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

/// A loaded config plus what is needed to point errors at a line.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub source: Source,
}

#[derive(Debug, Clone)]
pub enum Source {
    File { path: PathBuf, text: String },
    Flags,
}

impl Source {
    /// `path:line` of `key` inside `[section]`, falling back to the section
    /// header, then to the first line.
    pub fn locate(&self, section: &str, key: Option<&str>) -> String {
        match self {
            Source::Flags => "command line".to_string(),
            Source::File { path, text } => {
                let line = find_key(text, section, key).unwrap_or(1);
                format!("{}:{line}", path.display())
            }
        }
    }
}

fn find_key(text: &str, section: &str, key: Option<&str>) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = h.trim().to_string();
            if current == section && header.is_none() {
                header = Some(i + 1);
            }
            continue;
        }
        let in_section = current == section || current.starts_with(&format!("{section}."));
        if let (true, Some(k)) = (in_section, key) {
            if line.split('=').next().map(str::trim) == Some(k) {
                return Some(i + 1);
            }
        }
    }
    header
}

pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(path.display().to_string(), format!("cannot read config: {e}")))?;
    parse(path, text)
}

pub fn parse(path: &Path, text: String) -> Result<LoadedConfig, ConfigError> {
    let config: ExperimentConfig = toml::from_str(&text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(1);
        ConfigError::new(format!("{}:{line}", path.display()), e.message().to_string())
    })?;
    Ok(LoadedConfig { config, source: Source::File { path: path.to_path_buf(), text } })
}

/// Which sections a command needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Needs {
    Evaluate,
    Sweep,
    LowerBound,
    Scan,
    Pdim,
}

impl LoadedConfig {
    fn err(&self, section: &str, key: Option<&str>, msg: impl Into<String>) -> ConfigError {
        ConfigError::new(self.source.locate(section, key), msg.into())
    }

    fn missing(&self, section: &str) -> ConfigError {
        self.err(section, None, format!("missing [{section}] section"))
    }

    /// Check everything a command will use before any work starts.
    pub fn validate(&self, needs: Needs) -> Result<(), ConfigError> {
        match needs {
            Needs::Evaluate | Needs::Sweep => {
                let section = if needs == Needs::Evaluate { "evaluate" } else { "sweep" };
                let dist = self.validate_distribution()?;
                let algo = self.config.algorithm.as_ref().ok_or_else(|| self.missing("algorithm"))?;
                self.validate_algorithm(algo, dist)?;
                let cells = match needs {
                    Needs::Evaluate => self.config.evaluate.as_ref(),
                    _ => self.config.sweep.as_ref(),
                }
                .ok_or_else(|| self.missing(section))?;
                self.validate_cells(section, cells)
            }
            Needs::LowerBound => self.validate_lowerbound(),
            Needs::Scan => {
                let dist = self.validate_distribution()?;
                let scan = self.config.scan.clone().unwrap_or_default();
                let grid = scan.grid.grid().map_err(|e| self.err("scan.grid", None, e.to_string()))?;
                if grid.start <= 0.0 {
                    return Err(self.err("scan.grid", Some("start"), "threshold grid must start above 0"));
                }
                match scan.draws {
                    Some(0) => Err(self.err("scan", Some("draws"), "draws must be at least 1")),
                    None if dist.season_law().is_none() => Err(self.err(
                        "scan",
                        Some("draws"),
                        "this distribution has no closed-form season law; set draws for a Monte Carlo scan",
                    )),
                    _ => Ok(()),
                }
            }
            Needs::Pdim => self.validate_pdim(),
        }
    }

    fn validate_distribution(&self) -> Result<&JointDistribution, ConfigError> {
        let dist = self.config.distribution.as_ref().ok_or_else(|| self.missing("distribution"))?;
        dist.family.validate().map_err(|e| self.err("distribution.family", None, e.to_string()))?;
        Ok(dist)
    }

    fn validate_algorithm(&self, algo: &AlgorithmSpec, dist: &JointDistribution) -> Result<(), ConfigError> {
        let bad = |key: &str, msg: String| Err(self.err("algorithm", Some(key), msg));
        let rate = |key: &str, v: Option<f64>| match v {
            Some(v) if !(0.0..=1.0).contains(&v) => bad(key, format!("{key} must lie in [0, 1], got {v}")),
            _ => Ok(()),
        };
        match algo {
            AlgorithmSpec::ZeroDim { epsilon } => {
                if !(*epsilon > 0.0 && *epsilon <= 0.5) {
                    return bad("epsilon", format!("epsilon must lie in (0, 0.5], got {epsilon}"));
                }
            }
            AlgorithmSpec::Grid { epsilon, lipschitz, cubes_per_axis, min_count } => {
                let cfg = GridFitConfig {
                    epsilon: *epsilon,
                    lipschitz: *lipschitz,
                    dim: dist.dim(),
                    cubes_per_axis: *cubes_per_axis,
                    min_count: *min_count,
                };
                if let Err(e) = cfg.sizing() {
                    return Err(self.err("algorithm", None, e.to_string()));
                }
            }
            AlgorithmSpec::PacBlackbox { epsilon_hat, .. } => rate("epsilon_hat", *epsilon_hat)?,
            AlgorithmSpec::PacAsymmetric { alpha_hat, beta_hat, .. } => {
                rate("alpha_hat", *alpha_hat)?;
                rate("beta_hat", *beta_hat)?;
                if alpha_hat.is_some() != beta_hat.is_some() {
                    return bad("alpha_hat", "set both alpha_hat and beta_hat, or neither".into());
                }
            }
            AlgorithmSpec::Margin { lipschitz, alpha, .. } => {
                if !(*lipschitz > 0.0 && lipschitz.is_finite()) {
                    return bad("lipschitz", format!("lipschitz must be positive, got {lipschitz}"));
                }
                if let Some(a) = alpha {
                    if !(*a > 0.0 && lipschitz * a < 1.0) {
                        return bad("alpha", format!("need alpha > 0 and lipschitz * alpha < 1, got alpha = {a}"));
                    }
                }
            }
            AlgorithmSpec::Noisy { p, epsilon_hat, .. } => {
                rate("p", Some(*p))?;
                rate("epsilon_hat", *epsilon_hat)?;
            }
            AlgorithmSpec::Constant { theta } => {
                if !(*theta > 0.0 && theta.is_finite()) {
                    return bad("theta", format!("theta must be positive, got {theta}"));
                }
            }
            AlgorithmSpec::Randomized { density } => {
                density.validate().map_err(|e| self.err("algorithm.density", None, e.to_string()))?;
            }
        }
        Ok(())
    }

    fn validate_cells(&self, section: &str, cells: &CellsSpec) -> Result<(), ConfigError> {
        if cells.n.is_empty() {
            return Err(self.err(section, Some("n"), "n must list at least one training size"));
        }
        if cells.n.contains(&0) {
            return Err(self.err(section, Some("n"), "training sizes must be at least 1"));
        }
        if cells.seeds.is_empty() {
            return Err(self.err(section, Some("seeds"), "seeds must list at least one seed"));
        }
        if cells.n_test == 0 {
            return Err(self.err(section, Some("n_test"), "n_test must be at least 1"));
        }
        if let Some(p) = cells.adversarial_p {
            if !(0.0..=1.0).contains(&p) {
                return Err(self.err(section, Some("adversarial_p"), format!("adversarial_p must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    fn validate_lowerbound(&self) -> Result<(), ConfigError> {
        match self.config.lowerbound.as_ref().ok_or_else(|| self.missing("lowerbound"))? {
            LowerBoundSpec::CoreGrid { epsilon, dim, seed, .. } => {
                make_core_grid_lb(*epsilon, *dim, *seed)
                    .map_err(|e| self.err("lowerbound", Some("epsilon"), e.to_string()))?;
            }
            LowerBoundSpec::Noise { p, long_y, grid } => {
                make_noise_lb(*p).map_err(|e| self.err("lowerbound", Some("p"), e.to_string()))?;
                if !(long_y.is_finite() && *long_y >= 1.0) {
                    return Err(self.err("lowerbound", Some("long_y"), "long_y must be a finite season length >= 1"));
                }
                let g = grid.grid().map_err(|e| self.err("lowerbound.grid", None, e.to_string()))?;
                if g.start <= 0.0 {
                    return Err(self.err("lowerbound.grid", Some("start"), "threshold grid must start above 0"));
                }
            }
        }
        Ok(())
    }

    fn validate_pdim(&self) -> Result<(), ConfigError> {
        let spec = self.config.pdim.as_ref().ok_or_else(|| self.missing("pdim"))?;
        let m = spec.points();
        if m == 0 || m > MAX_POINTS {
            return Err(self.err("pdim", None, format!("the instance needs 1..={MAX_POINTS} points, got {m}")));
        }
        if let PdimSpec::CommonThreshold { seasons, witnesses, .. } = spec {
            if seasons.len() != witnesses.len() {
                return Err(self.err("pdim", Some("witnesses"), "need one witness per season"));
            }
        }
        for l in spec.labelings().unwrap_or_default() {
            if parse_labeling(l).map(|v| v.len()) != Some(m) {
                return Err(self.err(
                    "pdim",
                    Some("labelings"),
                    format!("labeling {l:?} must be {m} characters of 0 and 1"),
                ));
            }
        }
        crate::commands::pdim_instance(spec).map_err(|e| self.err("pdim", None, e.to_string()))?;
        Ok(())
    }
}

/// A config with every section filled in with its defaults, for
/// `print-config`.
pub fn example() -> ExperimentConfig {
    use rentlearn_core::dist::Family;
    ExperimentConfig {
        output: None,
        format: Format::Csv,
        distribution: Some(JointDistribution {
            family: Family::DeterministicLinear { weights: vec![1.0, 1.0], bias: 0.0 },
            seed: 0,
        }),
        algorithm: Some(AlgorithmSpec::Margin {
            lipschitz: std::f64::consts::SQRT_2,
            alpha: None,
            learner: LearnerConfig::default(),
        }),
        evaluate: Some(CellsSpec { n: vec![1024], seeds: vec![0, 1, 2, 3, 4], n_test: default_n_test(), adversarial_p: None }),
        sweep: Some(CellsSpec {
            n: vec![256, 1024, 4096, 16384, 65536],
            seeds: vec![0, 1, 2, 3, 4],
            n_test: default_n_test(),
            adversarial_p: None,
        }),
        lowerbound: Some(LowerBoundSpec::CoreGrid { epsilon: 1.0 / 90.0, dim: 2, n_train: 9, seed: 0 }),
        scan: Some(ScanSpec { draws: Some(100_000), ..ScanSpec::default() }),
        pdim: Some(PdimSpec::UnitBasis { d: 3, epsilon: default_pdim_eps(), labelings: None }),
    }
}

pub const EXAMPLE_HEADER: &str = "\
# rentlearn experiment config. Every command reads only the sections it uses.
#
# [distribution.family] name: deterministic-linear | lipschitz-shift | core-grid |
#   noise-lower-bound | point-mass | finite-mixture | noisy-channel
# [algorithm] name: zero-dim | grid | pac-blackbox | pac-asymmetric | margin |
#   noisy | constant | randomized
# [lowerbound] kind: core-grid | noise
# [pdim] instance: unit-basis | common-threshold
";
