//! Experiment harness for `rentlearn-core`: TOML configs, a worker pool,
//! and CSV or JSON reports.
//!
//! Every report starts with a `schema_id` column. Columns within a schema id
//! never change order; see the README for the full list.

pub mod commands;
pub mod config;
mod error;
pub mod output;

use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

pub use config::{ExperimentConfig, Format, LoadedConfig};
pub use error::{CliError, ConfigError};

use config::{LowerBoundSpec, Needs, Source};

#[derive(Debug, Parser)]
#[command(name = "rentlearn", version, about = "Learning-to-rent experiments for ski rental")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; overrides `output` in the config. Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Replace the seed list (or the single seed) of the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overrides `format` in the config.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LowerBoundKind {
    CoreGrid,
    Noise,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit and evaluate one policy per (n, seed) cell.
    Evaluate,
    /// Like evaluate, plus per-n averages and the log-log slope of CR - 1.
    Sweep,
    /// Certify a lower-bound construction. Without --config the parameters
    /// come from the flags below.
    Lowerbound {
        kind: Option<LowerBoundKind>,
        /// Accepts fractions such as 1/90.
        #[arg(long, value_parser = parse_fraction)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        n_train: u64,
        #[arg(long, value_parser = parse_fraction)]
        p: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        long_y: f64,
    },
    /// CR of every constant threshold on a grid.
    Scan,
    /// Realizability of labelings on a small pseudo-dimension instance.
    PdimCheck,
    /// Print a config with every section and its defaults.
    PrintConfig,
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    match s.split_once('/') {
        Some((a, b)) => Ok(parse(a)? / parse(b)?),
        None => parse(s),
    }
}

fn load(cli: &Cli) -> Result<LoadedConfig, CliError> {
    match &cli.config {
        Some(path) => Ok(config::load(path)?),
        None => Ok(LoadedConfig { config: ExperimentConfig::default(), source: Source::Flags }),
    }
}

fn lowerbound_from_flags(cli: &Cli, loaded: &mut LoadedConfig) -> Result<(), CliError> {
    let Command::Lowerbound { kind, epsilon, dim, n_train, p, long_y } = &cli.command else { return Ok(()) };
    let Some(kind) = kind else { return Ok(()) };
    let missing = |flag: &str| ConfigError::new("command line", format!("{flag} is required for this kind"));
    let spec = match kind {
        LowerBoundKind::CoreGrid => LowerBoundSpec::CoreGrid {
            epsilon: epsilon.ok_or_else(|| missing("--epsilon"))?,
            dim: *dim,
            n_train: *n_train,
            seed: 0,
        },
        LowerBoundKind::Noise => {
            LowerBoundSpec::Noise { p: p.ok_or_else(|| missing("--p"))?, long_y: *long_y, grid: Default::default() }
        }
    };
    loaded.config.lowerbound = Some(spec);
    loaded.source = Source::Flags;
    Ok(())
}

fn apply_seed(cfg: &mut ExperimentConfig, seed: u64) {
    for cells in [cfg.evaluate.as_mut(), cfg.sweep.as_mut()].into_iter().flatten() {
        cells.seeds = vec![seed];
    }
    if let Some(LowerBoundSpec::CoreGrid { seed: s, .. }) = cfg.lowerbound.as_mut() {
        *s = seed;
    }
    if let Some(scan) = cfg.scan.as_mut() {
        scan.seed = seed;
    }
}

/// Run one invocation to completion.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Command::PrintConfig = cli.command {
        let body = toml::to_string(&config::example()).context("serializing the example config")?;
        let text = format!("{}\n{body}", config::EXAMPLE_HEADER);
        return output::write_text(cli.out.as_deref(), &text).map_err(Into::into);
    }

    let mut loaded = load(cli)?;
    lowerbound_from_flags(cli, &mut loaded)?;
    if let Some(seed) = cli.seed {
        apply_seed(&mut loaded.config, seed);
    }
    let needs = match cli.command {
        Command::Evaluate => Needs::Evaluate,
        Command::Sweep => Needs::Sweep,
        Command::Lowerbound { .. } => Needs::LowerBound,
        Command::Scan => Needs::Scan,
        Command::PdimCheck => Needs::Pdim,
        Command::PrintConfig => unreachable!(),
    };
    if cli.config.is_none() && needs != Needs::LowerBound {
        return Err(ConfigError::new("command line", "--config is required for this command").into());
    }
    loaded.validate(needs)?;

    let cfg = &loaded.config;
    let format = cli.format.unwrap_or(cfg.format);
    let out = cli.out.as_deref().or(cfg.output.as_deref());
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(ConfigError::new("command line", "--workers must be at least 1").into());
        }
        pool = pool.num_threads(w);
    }
    let pool = pool.build().context("starting the worker pool")?;

    pool.install(|| -> Result<(), CliError> {
        match cli.command {
            Command::Evaluate => {
                let (dist, algo) = (cfg.distribution.as_ref().unwrap(), cfg.algorithm.as_ref().unwrap());
                let rows = commands::evaluate(algo, dist, cfg.evaluate.as_ref().unwrap());
                output::write_rows(out, format, &rows)?;
            }
            Command::Sweep => {
                let (dist, algo) = (cfg.distribution.as_ref().unwrap(), cfg.algorithm.as_ref().unwrap());
                let (rows, report) = commands::sweep(algo, dist, cfg.sweep.as_ref().unwrap());
                output::write_rows(out, format, &rows)?;
                for r in &report.rows {
                    eprintln!("n = {}: mean CR {} +/- {} over {} cells", r.n, r.mean_cr, r.stderr, r.cells_ok);
                }
                match report.slope {
                    Some(s) => eprintln!("slope of log(CR - 1) vs log(n): {s}"),
                    None => eprintln!("slope of log(CR - 1) vs log(n): unavailable"),
                }
            }
            Command::Lowerbound { .. } => {
                let row = commands::lowerbound(cfg.lowerbound.as_ref().unwrap()).context("lower bound")?;
                match row {
                    commands::LowerBoundRow::CoreGrid(r) => output::write_rows(out, format, &[r])?,
                    commands::LowerBoundRow::Noise(r) => output::write_rows(out, format, &[r])?,
                }
            }
            Command::Scan => {
                let scan = cfg.scan.clone().unwrap_or_default();
                let rows = commands::scan(cfg.distribution.as_ref().unwrap(), &scan).context("scan")?;
                output::write_rows(out, format, &rows)?;
            }
            Command::PdimCheck => {
                let rows = commands::pdim_check(cfg.pdim.as_ref().unwrap()).context("pseudo-dimension check")?;
                output::write_rows(out, format, &rows)?;
            }
            Command::PrintConfig => unreachable!(),
        }
        Ok(())
    })
}
