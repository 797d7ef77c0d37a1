//! Algorithm names (`name[:param=value,...]`) and running one sketch.

use std::fmt;
use std::str::FromStr;

use matsketch::iterative::{IterativeSketch, ReduceRule};
use matsketch::projection::{self, ProjectionKind, ProjectionState, DEFAULT_OSNAP_S};
use matsketch::rng::rng_from_seed;
use matsketch::sampling::{self, NormSampler, PrioritySampler, VarOptSampler, DEFAULT_LEVERAGE_K};
use matsketch::RowMatrix;
use serde::Serialize;

use crate::error::BenchError;

/// α used by `pfd` and `fast-pfd` when none is given.
pub const DEFAULT_ALPHA: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Algorithm {
    Iterative(ReduceRule),
    Norm,
    Leverage { k: usize },
    DetLeverage { k: usize },
    Priority,
    VarOpt,
    Projection(ProjectionKind),
    Fjlt { q: Option<f64> },
}

/// How the algorithm consumes its input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassModel {
    /// One pass, rows in order, state independent of n.
    Streaming,
    /// A scoring pass (an SVD of A) followed by a sampling pass.
    TwoPass,
    /// Needs the whole matrix at once.
    Bulk,
}

impl Algorithm {
    pub fn is_randomized(&self) -> bool {
        !matches!(self, Algorithm::Iterative(_) | Algorithm::DetLeverage { .. })
    }

    pub fn pass_model(&self) -> PassModel {
        match self {
            Algorithm::Leverage { .. } | Algorithm::DetLeverage { .. } => PassModel::TwoPass,
            Algorithm::Fjlt { .. } => PassModel::Bulk,
            _ => PassModel::Streaming,
        }
    }

    /// Minimum sketch size the algorithm accepts.
    pub fn min_ell(&self) -> usize {
        match self {
            Algorithm::Iterative(_) => 2,
            _ => 1,
        }
    }

    /// Produces the sketch of `a` with `ell` rows using randomness from `seed`.
    pub fn run(&self, a: &RowMatrix, ell: usize, seed: u64) -> matsketch::Result<RowMatrix> {
        let d = a.n_cols();
        match *self {
            Algorithm::Iterative(rule) => {
                let mut st = IterativeSketch::new(ell, d, rule)?;
                for r in a.rows() {
                    st.update(r)?;
                }
                st.finalize()
            }
            Algorithm::Norm => {
                let mut st = NormSampler::new(ell, d, rng_from_seed(seed))?;
                for r in a.rows() {
                    st.update(r)?;
                }
                st.finalize()
            }
            Algorithm::Priority => {
                let mut st = PrioritySampler::new(ell, d, rng_from_seed(seed))?;
                for r in a.rows() {
                    st.update(r)?;
                }
                Ok(st.finalize())
            }
            Algorithm::VarOpt => {
                let mut st = VarOptSampler::new(ell, d, rng_from_seed(seed))?;
                for r in a.rows() {
                    st.update(r)?;
                }
                Ok(st.finalize())
            }
            Algorithm::Leverage { k } => sampling::leverage_sample(a, ell, k, &mut rng_from_seed(seed)),
            Algorithm::DetLeverage { k } => sampling::deterministic_leverage(a, ell, k),
            Algorithm::Projection(kind) => {
                let mut st = ProjectionState::new(kind, ell, d, seed)?;
                for r in a.rows() {
                    st.update(r)?;
                }
                Ok(st.finalize())
            }
            Algorithm::Fjlt { q } => projection::fjlt_sketch(a, ell, q, &mut rng_from_seed(seed)),
        }
    }
}

/// A parsed algorithm plus its canonical name, which labels reports and seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgoSpec {
    pub name: String,
    pub algorithm: Algorithm,
}

impl fmt::Display for AlgoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

type Params<'a> = Vec<(&'a str, &'a str)>;

/// Splits `name:key=value,key=value` into the name and its parameters.
pub(crate) fn split_params(s: &str) -> Result<(&str, Params<'_>), BenchError> {
    let (name, rest) = match s.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (s.trim(), None),
    };
    let mut params = Vec::new();
    if let Some(rest) = rest {
        for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("expected key=value in {s:?}, got {kv:?}")))?;
            params.push((k.trim(), v.trim()));
        }
    }
    Ok((name, params))
}

pub(crate) fn parse_value<T: FromStr>(key: &str, value: &str, context: &str) -> Result<T, BenchError> {
    value
        .parse()
        .map_err(|_| BenchError::Config(format!("bad value {value:?} for {key} in {context:?}")))
}

impl FromStr for AlgoSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        let (name, params) = split_params(s)?;
        let name = name.to_ascii_lowercase();
        let mut alpha = None;
        let mut k = None;
        let mut osnap_s = None;
        let mut q = None;
        for &(key, value) in &params {
            match (name.as_str(), key) {
                ("pfd" | "fast-pfd", "alpha") => alpha = Some(parse_value::<f64>(key, value, s)?),
                ("leverage" | "det-leverage", "k") => k = Some(parse_value::<usize>(key, value, s)?),
                ("osnap", "s") => osnap_s = Some(parse_value::<usize>(key, value, s)?),
                ("fjlt", "q") => q = Some(parse_value::<f64>(key, value, s)?),
                _ => {
                    return Err(BenchError::Config(format!(
                        "unknown parameter {key:?} for algorithm {name:?}"
                    )))
                }
            }
        }
        let check_alpha = |a: f64| {
            if a > 0.0 && a <= 1.0 {
                Ok(a)
            } else {
                Err(BenchError::Config(format!("alpha must lie in (0, 1], got {a}")))
            }
        };
        let (algorithm, canonical) = match name.as_str() {
            "isvd" => (Algorithm::Iterative(ReduceRule::Isvd), name.clone()),
            "fd" => (Algorithm::Iterative(ReduceRule::FD), name.clone()),
            "fastfd" => (Algorithm::Iterative(ReduceRule::FAST_FD), name.clone()),
            "ssd" => (Algorithm::Iterative(ReduceRule::SpaceSaving), name.clone()),
            "cfd" => (Algorithm::Iterative(ReduceRule::Compensative), name.clone()),
            "pfd" => {
                let alpha = check_alpha(alpha.unwrap_or(DEFAULT_ALPHA))?;
                (Algorithm::Iterative(ReduceRule::Pfd { alpha }), format!("pfd:alpha={alpha}"))
            }
            "fast-pfd" => {
                let alpha = check_alpha(alpha.unwrap_or(DEFAULT_ALPHA))?;
                (
                    Algorithm::Iterative(ReduceRule::FastPfd { alpha }),
                    format!("fast-pfd:alpha={alpha}"),
                )
            }
            "norm" => (Algorithm::Norm, name.clone()),
            "leverage" => {
                let k = k.unwrap_or(DEFAULT_LEVERAGE_K);
                (Algorithm::Leverage { k }, format!("leverage:k={k}"))
            }
            "det-leverage" => {
                let k = k.unwrap_or(DEFAULT_LEVERAGE_K);
                (Algorithm::DetLeverage { k }, format!("det-leverage:k={k}"))
            }
            "priority" => (Algorithm::Priority, name.clone()),
            "varopt" => (Algorithm::VarOpt, name.clone()),
            "sign" => (Algorithm::Projection(ProjectionKind::Sign), name.clone()),
            "hash" => (Algorithm::Projection(ProjectionKind::Hash), name.clone()),
            "osnap" => {
                let s = osnap_s.unwrap_or(DEFAULT_OSNAP_S);
                if s == 0 {
                    return Err(BenchError::Config("osnap needs s >= 1".into()));
                }
                (Algorithm::Projection(ProjectionKind::Osnap { s }), format!("osnap:s={s}"))
            }
            "fjlt" => match q {
                Some(q) if !(q > 0.0 && q <= 1.0) => {
                    return Err(BenchError::Config(format!("fjlt q must lie in (0, 1], got {q}")))
                }
                Some(q) => (Algorithm::Fjlt { q: Some(q) }, format!("fjlt:q={q}")),
                None => (Algorithm::Fjlt { q: None }, name.clone()),
            },
            _ => return Err(BenchError::UnknownAlgorithm(name)),
        };
        Ok(AlgoSpec {
            name: canonical,
            algorithm,
        })
    }
}
