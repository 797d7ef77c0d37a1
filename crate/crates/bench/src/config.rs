//! Experiment configuration, from a TOML file and/or command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algo::AlgoSpec;
use crate::dataset::DatasetSpec;
use crate::error::BenchError;

pub const DEFAULT_TRIALS: usize = 5;
pub const DEFAULT_K: usize = 10;
/// Largest n·d the harness will hold densely for evaluation.
pub const DEFAULT_BUDGET: usize = 100_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub cov: bool,
    pub proj: bool,
    pub time: bool,
}

impl Metrics {
    pub const ALL: Metrics = Metrics {
        cov: true,
        proj: true,
        time: true,
    };

    pub fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.cov {
            out.push("cov");
        }
        if self.proj {
            out.push("proj");
        }
        if self.time {
            out.push("time");
        }
        out
    }
}

impl FromStr for Metrics {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        let mut m = Metrics::default();
        for name in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match name {
                "cov" => m.cov = true,
                "proj" => m.proj = true,
                "time" => m.time = true,
                _ => return Err(BenchError::Config(format!("unknown metric {name:?} (cov, proj, time)"))),
            }
        }
        if m == Metrics::default() {
            return Err(BenchError::Config("no metrics requested".into()));
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(BenchError::Config(format!("format must be csv or json, got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub algorithms: Vec<AlgoSpec>,
    pub ells: Vec<usize>,
    pub trials: usize,
    pub k_proj: usize,
    pub master_seed: u64,
    pub metrics: Metrics,
    /// Worker threads for trials; 0 picks one per core.
    pub jobs: usize,
    pub budget: usize,
    pub out: Option<PathBuf>,
    pub summary_out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec, algorithms: Vec<AlgoSpec>, ells: Vec<usize>) -> Self {
        ExperimentConfig {
            dataset,
            algorithms,
            ells,
            trials: DEFAULT_TRIALS,
            k_proj: DEFAULT_K,
            master_seed: 0,
            metrics: Metrics {
                cov: true,
                proj: true,
                time: false,
            },
            jobs: 0,
            budget: DEFAULT_BUDGET,
            out: None,
            summary_out: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.trials == 0 {
            return Err(BenchError::Config("trials must be >= 1".into()));
        }
        if self.ells.is_empty() {
            return Err(BenchError::Config("no sketch sizes given".into()));
        }
        if let Some(&ell) = self.ells.iter().find(|&&l| l < 2) {
            return Err(BenchError::Config(format!("sketch sizes must be >= 2, got {ell}")));
        }
        if self.algorithms.is_empty() {
            return Err(BenchError::Config("no algorithms given".into()));
        }
        let mut names: Vec<&str> = self.algorithms.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(BenchError::Config(format!("algorithm {:?} listed twice", w[0])));
        }
        if self.metrics.proj && self.k_proj == 0 {
            return Err(BenchError::Config("projection rank k must be >= 1".into()));
        }
        Ok(())
    }
}

/// TOML mirror of the command-line flags. Every field is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dataset: Option<String>,
    #[serde(alias = "algo")]
    pub algorithms: Option<Vec<String>>,
    #[serde(alias = "ell")]
    pub ells: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub metrics: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub format: Option<String>,
    pub jobs: Option<usize>,
    pub budget: Option<usize>,
    pub center: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| BenchError::Toml {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Fills every field that `flags` leaves unset from `self`.
    pub fn merged_under(self, flags: ConfigFile) -> ConfigFile {
        ConfigFile {
            dataset: flags.dataset.or(self.dataset),
            algorithms: flags.algorithms.or(self.algorithms),
            ells: flags.ells.or(self.ells),
            trials: flags.trials.or(self.trials),
            k: flags.k.or(self.k),
            seed: flags.seed.or(self.seed),
            metrics: flags.metrics.or(self.metrics),
            out: flags.out.or(self.out),
            summary: flags.summary.or(self.summary),
            format: flags.format.or(self.format),
            jobs: flags.jobs.or(self.jobs),
            budget: flags.budget.or(self.budget),
            center: flags.center.or(self.center),
        }
    }

    pub fn into_experiment(self) -> Result<ExperimentConfig, BenchError> {
        let mut dataset: DatasetSpec = self
            .dataset
            .ok_or_else(|| BenchError::Config("no dataset given".into()))?
            .parse()?;
        if let Some(c) = self.center {
            dataset.center |= c;
        }
        let algorithms = self
            .algorithms
            .ok_or_else(|| BenchError::Config("no algorithms given".into()))?
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<AlgoSpec>, _>>()?;
        let ells = self.ells.ok_or_else(|| BenchError::Config("no sketch sizes given".into()))?;
        let mut cfg = ExperimentConfig::new(dataset, algorithms, ells);
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(k) = self.k {
            cfg.k_proj = k;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(m) = self.metrics {
            cfg.metrics = m.join(",").parse()?;
        }
        if let Some(f) = self.format {
            cfg.format = f.parse()?;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if let Some(b) = self.budget {
            cfg.budget = b;
        }
        cfg.out = self.out;
        cfg.summary_out = self.summary;
        cfg.validate()?;
        Ok(cfg)
    }
}
