//! Run configuration: command-line flags layered over an optional
//! `key = value` file, layered over defaults.
//!
//! The file format is one `key = value` pair per line. Keys are long flag
//! names without the leading dashes (`sigma-p` or `sigma_p`); `#` starts a
//! comment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dsrs_core::confidence::{DEFAULT_ALPHA, DEFAULT_NUM_SAMPLES};
use dsrs_core::dsrs::DEFAULT_RADIUS_TOL;
use dsrs_core::pipeline::{radius_grid, Mode, NoiseConfig};
use dsrs_core::synthetic::DEFAULT_N_SELECTION;
use dsrs_core::NoiseKind;

use crate::error::{CliError, CliResult};

/// Keys accepted in a configuration file.
pub const CONFIG_KEYS: &[&str] = &[
    "mode",
    "kind",
    "sigma-p",
    "sigma-q",
    "k",
    "d",
    "alpha",
    "num-samples",
    "n-selection",
    "grid",
    "tol",
    "workers",
    "seed",
    "out",
    "input",
    "examples",
    "format",
    "counts",
    "dims",
    "k-values",
    "n-values",
    "sigma-q-values",
    "pa",
    "qa-low",
    "qa-high",
    "setting",
];

/// `σ_Q / σ_P` when `σ_Q` is not given.
pub const DEFAULT_Q_RATIO: f64 = 0.8;
pub const DEFAULT_GRID: &str = "0.25:3.00:0.25";
pub const DEFAULT_EXAMPLES: usize = 20;

/// Parsed configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::validation(format!("config line {}: expected key = value", i + 1)))?;
            let key = key.trim().replace('_', "-");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(CliError::validation(format!("config line {}: unknown key {key:?}", i + 1)));
            }
            values.insert(key, value.trim().to_owned());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if given, else the file value parsed as `T`.
    pub fn pick<T: FromStr>(&self, cli: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::validation(format!("config key {key}: {e}"))))
            .transpose()
    }
}

/// `start:stop:step`.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::validation(format!("grid must be start:stop:step, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(radius_grid(nums[0], nums[1], nums[2])?)
}

/// Comma-separated list.
pub fn parse_list<T: FromStr>(s: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| CliError::validation(format!("cannot parse list item {p:?} in {s:?}")))
        })
        .collect()
}

/// Options shared by every subcommand, before layering.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommonOptions {
    pub mode: Option<String>,
    pub kind: Option<String>,
    pub sigma_p: Option<f64>,
    pub sigma_q: Option<f64>,
    pub k: Option<u32>,
    pub d: Option<u32>,
    pub alpha: Option<f64>,
    pub num_samples: Option<u64>,
    pub n_selection: Option<u64>,
    pub grid: Option<String>,
    pub tol: Option<f64>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub examples: Option<usize>,
}

/// Fully resolved and validated settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub noise: NoiseConfig,
    pub alpha: f64,
    pub num_samples: u64,
    pub n_selection: u64,
    pub grid: Vec<f64>,
    pub tol: f64,
    pub workers: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub examples: usize,
}

impl RunConfig {
    /// Layers `cli` over `file` over defaults and checks every invariant,
    /// including the noise pair, before any work starts.
    pub fn resolve(cli: &CommonOptions, file: &ConfigFile) -> CliResult<Self> {
        let mode_s = file.pick(cli.mode.clone(), "mode")?.unwrap_or_else(|| "both".into());
        let mode = Mode::parse(&mode_s)
            .ok_or_else(|| CliError::validation(format!("mode must be np, dsrs or both, got {mode_s:?}")))?;
        let kind_s = file.pick(cli.kind.clone(), "kind")?.unwrap_or_else(|| "general-gaussian".into());
        let kind = NoiseKind::parse(&kind_s).ok_or_else(|| CliError::validation(format!("unknown noise kind {kind_s:?}")))?;
        let sigma_p = file.pick(cli.sigma_p, "sigma-p")?.unwrap_or(0.5);
        let sigma_q = file.pick(cli.sigma_q, "sigma-q")?.unwrap_or(DEFAULT_Q_RATIO * sigma_p);
        let d = file.pick(cli.d, "d")?.unwrap_or(784);
        let k = file.pick(cli.k, "k")?.unwrap_or(0);
        let noise = NoiseConfig { kind, sigma_p, sigma_q, k, d };
        noise.specs()?;

        let alpha = file.pick(cli.alpha, "alpha")?.unwrap_or(DEFAULT_ALPHA);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::validation(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let num_samples = file.pick(cli.num_samples, "num-samples")?.unwrap_or(DEFAULT_NUM_SAMPLES);
        let n_selection = file.pick(cli.n_selection, "n-selection")?.unwrap_or(DEFAULT_N_SELECTION);
        if num_samples == 0 || n_selection == 0 {
            return Err(CliError::validation("num-samples and n-selection must be positive"));
        }
        let grid = parse_grid(&file.pick(cli.grid.clone(), "grid")?.unwrap_or_else(|| DEFAULT_GRID.into()))?;
        let tol = file.pick(cli.tol, "tol")?.unwrap_or(DEFAULT_RADIUS_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::validation(format!("tol must be positive, got {tol}")));
        }
        let workers = match file.pick(cli.workers, "workers")? {
            Some(0) => return Err(CliError::validation("workers must be at least 1")),
            Some(w) => w,
            None => std::thread::available_parallelism().map_or(1, usize::from),
        };
        let seed = file.pick(cli.seed, "seed")?.unwrap_or(0);
        let out = file.pick(cli.out.clone(), "out")?;
        let examples = file.pick(cli.examples, "examples")?.unwrap_or(DEFAULT_EXAMPLES);
        Ok(Self { mode, noise, alpha, num_samples, n_selection, grid, tol, workers, seed, out, examples })
    }
}
