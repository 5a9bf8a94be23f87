//! Flag and config-file handling. Precedence: flags, then file, then defaults.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use atsbias::density::OutcomeGrid;
use atsbias::{KdeSettings, Kernel, TdConfig, TiConfig, TiSelection};
use clap::Args;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Game file (comma-delimited, with header)
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    /// Directory for output files
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,

    /// Flat key = value config file (TOML)
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Minimum samples for a spread to count as valid
    #[arg(long)]
    pub min_samples: Option<usize>,

    /// Test samples held out per spread and simulation
    #[arg(long)]
    pub holdout: Option<usize>,

    /// Number of hold-out simulations
    #[arg(long)]
    pub simulations: Option<usize>,

    /// Spreads with entropy strictly below this are wagered
    #[arg(long)]
    pub entropy_threshold: Option<f64>,

    /// Kernel width in points (standard deviation for the gaussian kernel)
    #[arg(long)]
    pub bandwidth: Option<f64>,

    #[arg(long, allow_hyphen_values = true)]
    pub grid_lo: Option<i32>,

    #[arg(long, allow_hyphen_values = true)]
    pub grid_hi: Option<i32>,

    /// First calendar year on the test side of the date split
    #[arg(long)]
    pub cutoff_year: Option<i32>,

    /// gaussian, triangular or boxcar
    #[arg(long)]
    pub kernel: Option<Kernel>,

    /// per_simulation or pooled_mean
    #[arg(long, value_parser = parse_selection)]
    pub selection: Option<TiSelection>,
}

fn parse_selection(s: &str) -> Result<TiSelection, String> {
    match s {
        "per_simulation" | "per-simulation" => Ok(TiSelection::PerSimulation),
        "pooled_mean" | "pooled-mean" => Ok(TiSelection::PooledMean),
        _ => Err(format!("unknown selection `{s}`")),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    seed: Option<u64>,
    min_samples: Option<usize>,
    holdout: Option<usize>,
    simulations: Option<usize>,
    entropy_threshold: Option<f64>,
    bandwidth: Option<f64>,
    grid_lo: Option<i32>,
    grid_hi: Option<i32>,
    cutoff_year: Option<i32>,
    kernel: Option<Kernel>,
    selection: Option<TiSelection>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flags layered over the config file.
pub struct Resolved {
    flags: Common,
    file: FileConfig,
}

macro_rules! pick {
    ($self:ident, $field:ident, $default:expr) => {
        $self.flags.$field.or($self.file.$field).unwrap_or($default)
    };
}

impl Resolved {
    pub fn new(flags: &Common) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Ok(Resolved {
            flags: flags.clone(),
            file,
        })
    }

    pub fn kde(&self) -> Result<KdeSettings> {
        let d = KdeSettings::default();
        let grid = OutcomeGrid::new(
            pick!(self, grid_lo, d.grid.lo()),
            pick!(self, grid_hi, d.grid.hi()),
        )?;
        Ok(KdeSettings {
            bandwidth: pick!(self, bandwidth, d.bandwidth),
            grid,
            kernel: pick!(self, kernel, d.kernel),
        })
    }

    pub fn ti(&self) -> Result<TiConfig> {
        let d = TiConfig::default();
        Ok(TiConfig {
            n_simulations: pick!(self, simulations, d.n_simulations),
            holdout_per_spread: pick!(self, holdout, d.holdout_per_spread),
            min_samples: pick!(self, min_samples, d.min_samples),
            entropy_threshold: pick!(self, entropy_threshold, d.entropy_threshold),
            kde: self.kde()?,
            seed: pick!(self, seed, d.seed),
            selection: pick!(self, selection, d.selection),
        })
    }

    pub fn td(&self) -> Result<TdConfig> {
        let d = TdConfig::default();
        Ok(TdConfig {
            cutoff_year: pick!(self, cutoff_year, d.cutoff_year),
            min_samples: pick!(self, min_samples, d.min_samples),
            entropy_threshold: pick!(self, entropy_threshold, d.entropy_threshold),
            kde: self.kde()?,
            seed: pick!(self, seed, d.seed),
        })
    }

    pub fn min_samples(&self, default: usize) -> usize {
        pick!(self, min_samples, default)
    }

    pub fn entropy_threshold(&self) -> f64 {
        pick!(self, entropy_threshold, atsbias::bias::DEFAULT_THRESHOLD)
    }
}
