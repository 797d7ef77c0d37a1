//! Dataset spec strings: `random-noisy:n=,d=,m=,zeta=`,
//! `adversarial:n=,d=,m1=,m2=,split=`, `csv:PATH`, `mtx:PATH`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use matsketch::datasets::{self, Adversarial, Decay, Entries, MatrixFormat, RandomNoisy};
use matsketch::RowMatrix;

use crate::algo::{parse_value, split_params};
use crate::error::BenchError;

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetKind {
    RandomNoisy(RandomNoisy),
    Adversarial(Adversarial),
    File { path: PathBuf, format: MatrixFormat },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    /// Generator seed; `None` derives one from the experiment's master seed.
    pub seed: Option<u64>,
    /// Subtract column means after loading.
    pub center: bool,
    /// The string the spec was parsed from.
    pub source: String,
}

impl fmt::Display for DatasetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl DatasetSpec {
    /// `(n, d)` when known without materialising the matrix.
    pub fn shape(&self) -> Option<(usize, usize)> {
        match &self.kind {
            DatasetKind::RandomNoisy(r) => Some((r.n, r.d)),
            DatasetKind::Adversarial(a) => Some((a.n, a.d)),
            DatasetKind::File { .. } => None,
        }
    }

    pub fn materialize(&self, default_seed: u64) -> Result<RowMatrix, BenchError> {
        let seed = self.seed.unwrap_or(default_seed);
        let a = match &self.kind {
            DatasetKind::RandomNoisy(r) => r.generate(seed)?,
            DatasetKind::Adversarial(a) => a.generate(seed)?,
            DatasetKind::File { path, format } => datasets::load_matrix(path, *format)?,
        };
        Ok(if self.center { datasets::center_columns(&a) } else { a })
    }
}

fn parse_bool(key: &str, value: &str, ctx: &str) -> Result<bool, BenchError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(BenchError::Config(format!("bad value {value:?} for {key} in {ctx:?}"))),
    }
}

impl FromStr for DatasetSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        let source = s.trim().to_string();
        // File kinds take the rest of the string verbatim as the path.
        for (prefix, format) in [("csv:", MatrixFormat::DenseCsv), ("mtx:", MatrixFormat::MatrixMarket)] {
            if let Some(path) = source.strip_prefix(prefix) {
                if path.is_empty() {
                    return Err(BenchError::Config(format!("missing path in dataset {s:?}")));
                }
                return Ok(DatasetSpec {
                    kind: DatasetKind::File {
                        path: PathBuf::from(path),
                        format,
                    },
                    seed: None,
                    center: false,
                    source,
                });
            }
        }

        let (name, params) = split_params(&source)?;
        let mut seed = None;
        let mut center = false;
        let kind = match name {
            "random-noisy" => {
                let mut r = RandomNoisy::default();
                for &(k, v) in &params {
                    match k {
                        "n" => r.n = parse_value(k, v, s)?,
                        "d" => r.d = parse_value(k, v, s)?,
                        "m" => r.m = parse_value(k, v, s)?,
                        "zeta" => r.zeta = parse_value(k, v, s)?,
                        "decay" => {
                            r.decay = match v {
                                "signal" => Decay::Signal,
                                "ambient" => Decay::Ambient,
                                _ => return Err(BenchError::Config(format!("decay must be signal or ambient, got {v:?}"))),
                            }
                        }
                        "seed" => seed = Some(parse_value(k, v, s)?),
                        "center" => center = parse_bool(k, v, s)?,
                        _ => return Err(BenchError::Config(format!("unknown parameter {k:?} for random-noisy"))),
                    }
                }
                r.validate()?;
                DatasetKind::RandomNoisy(r)
            }
            "adversarial" => {
                let mut a = Adversarial::default();
                for &(k, v) in &params {
                    match k {
                        "n" => a.n = parse_value(k, v, s)?,
                        "d" => a.d = parse_value(k, v, s)?,
                        "m1" => a.m1 = parse_value(k, v, s)?,
                        "m2" => a.m2 = parse_value(k, v, s)?,
                        "split" => a.split = parse_value(k, v, s)?,
                        "dist" => {
                            a.entries = match v {
                                "uniform" => Entries::Uniform,
                                "gaussian" => Entries::Gaussian,
                                _ => return Err(BenchError::Config(format!("dist must be uniform or gaussian, got {v:?}"))),
                            }
                        }
                        "rotate" => a.rotate = parse_bool(k, v, s)?,
                        "seed" => seed = Some(parse_value(k, v, s)?),
                        "center" => center = parse_bool(k, v, s)?,
                        _ => return Err(BenchError::Config(format!("unknown parameter {k:?} for adversarial"))),
                    }
                }
                a.validate()?;
                DatasetKind::Adversarial(a)
            }
            _ => return Err(BenchError::Config(format!("unknown dataset kind {name:?}"))),
        };
        Ok(DatasetSpec {
            kind,
            seed,
            center,
            source,
        })
    }
}
