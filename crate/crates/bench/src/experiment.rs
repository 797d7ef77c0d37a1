//! Running every (algorithm, ℓ, trial) cell and summarising the results.

use std::time::Instant;

use matsketch::metrics::{ErrorEvaluator, ErrorReport};
use matsketch::rng::{sub_seed, trial_seed};
use matsketch::{RowMatrix, SketchError};
use rayon::prelude::*;
use serde::Serialize;

use crate::algo::{AlgoSpec, Algorithm};
use crate::config::ExperimentConfig;
use crate::error::BenchError;

#[derive(Debug)]
pub struct RunOutput {
    /// Sorted by (algorithm name, ℓ, trial).
    pub reports: Vec<ErrorReport>,
    pub warnings: Vec<String>,
    pub n: usize,
    pub d: usize,
}

/// Seed for the dataset generator when the spec does not pin one.
pub fn dataset_seed(master_seed: u64) -> u64 {
    sub_seed(master_seed, "dataset")
}

fn check_budget(n: usize, d: usize, budget: usize) -> Result<(), BenchError> {
    match n.checked_mul(d) {
        Some(cells) if cells <= budget => Ok(()),
        _ => Err(BenchError::Config(format!(
            "dataset is {n} x {d}, above the budget of {budget} entries"
        ))),
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, BenchError> {
    cfg.validate()?;
    if let Some((n, d)) = cfg.dataset.shape() {
        check_budget(n, d, cfg.budget)?;
    }
    let a = cfg.dataset.materialize(dataset_seed(cfg.master_seed))?;
    let (n, d) = (a.n_rows(), a.n_cols());
    check_budget(n, d, cfg.budget)?;
    a.check_finite()?;

    let mut warnings = Vec::new();
    for &ell in &cfg.ells {
        if ell > n {
            warnings.push(format!("l = {ell} exceeds n = {n}; sketches are lossless"));
        }
        for spec in &cfg.algorithms {
            if let Algorithm::Fjlt { .. } = spec.algorithm {
                if ell > n {
                    return Err(BenchError::Config(format!("{spec} needs l <= n (l = {ell}, n = {n})")));
                }
            }
        }
    }
    if cfg.metrics.proj && cfg.k_proj > n.min(d) {
        return Err(BenchError::Config(format!(
            "projection rank k = {} exceeds min(n, d) = {}",
            cfg.k_proj,
            n.min(d)
        )));
    }

    let evaluator = if cfg.metrics.cov || cfg.metrics.proj {
        Some(ErrorEvaluator::new(&a)?)
    } else {
        None
    };
    if cfg.metrics.proj {
        if let Some(ev) = &evaluator {
            if ev.tail_sq(cfg.k_proj) <= 0.0 {
                warnings.push(format!(
                    "input has rank <= k = {}; proj_err is left empty",
                    cfg.k_proj
                ));
            }
        }
    }

    let mut cells = Vec::new();
    for spec in &cfg.algorithms {
        for &ell in &cfg.ells {
            for trial in 0..cfg.trials {
                cells.push((spec, ell, trial));
            }
        }
    }
    let run = |&(spec, ell, trial): &(&AlgoSpec, usize, usize)| {
        run_cell(cfg, &a, evaluator.as_ref(), spec, ell, trial)
    };
    let mut reports: Vec<ErrorReport> = if cfg.jobs == 1 {
        cells.iter().map(run).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(run).collect::<Result<_, _>>())?
    };
    reports.sort_by(|x, y| {
        x.algo
            .cmp(&y.algo)
            .then(x.ell.cmp(&y.ell))
            .then(x.trial.cmp(&y.trial))
    });
    Ok(RunOutput {
        reports,
        warnings,
        n,
        d,
    })
}

fn run_cell(
    cfg: &ExperimentConfig,
    a: &RowMatrix,
    evaluator: Option<&ErrorEvaluator<'_>>,
    spec: &AlgoSpec,
    ell: usize,
    trial: usize,
) -> Result<ErrorReport, BenchError> {
    let seed = trial_seed(cfg.master_seed, &spec.name, ell, trial);
    let start = Instant::now();
    let b = spec.algorithm.run(a, ell, seed)?;
    let elapsed = start.elapsed();

    let mut report = ErrorReport {
        algo: spec.name.clone(),
        ell,
        trial,
        seed,
        cov_err: None,
        proj_err: None,
        wall_ns: cfg.metrics.time.then_some(elapsed.as_nanos() as u64),
        rank_deficient: false,
    };
    if let Some(ev) = evaluator {
        if cfg.metrics.cov {
            report.cov_err = Some(ev.cov_err(&b)?);
        }
        if cfg.metrics.proj {
            match ev.proj_err(&b, cfg.k_proj) {
                Ok(p) => {
                    report.proj_err = Some(p.value);
                    report.rank_deficient = p.rank_deficient;
                }
                Err(SketchError::ExactLowRank { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(report)
}

/// Per-(algorithm, ℓ) medians.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub algo: String,
    pub ell: usize,
    pub cov_err_med: Option<f64>,
    pub proj_err_med: Option<f64>,
    pub wall_ns_med: Option<u64>,
}

/// Lower median: the ⌈len/2⌉-th smallest value.
pub fn lower_median<T: Copy + PartialOrd>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("comparable values"));
    Some(v[(v.len() - 1) / 2])
}

/// Groups reports by (algorithm, ℓ) and takes lower medians of each metric,
/// ignoring trials where a metric is absent.
pub fn summarize(reports: &[ErrorReport]) -> Vec<Summary> {
    let mut sorted: Vec<&ErrorReport> = reports.iter().collect();
    sorted.sort_by(|x, y| x.algo.cmp(&y.algo).then(x.ell.cmp(&y.ell)));
    sorted
        .chunk_by(|x, y| x.algo == y.algo && x.ell == y.ell)
        .map(|group| {
            let cov: Vec<f64> = group.iter().filter_map(|r| r.cov_err).collect();
            let proj: Vec<f64> = group.iter().filter_map(|r| r.proj_err).collect();
            let wall: Vec<u64> = group.iter().filter_map(|r| r.wall_ns).collect();
            Summary {
                algo: group[0].algo.clone(),
                ell: group[0].ell,
                cov_err_med: lower_median(&cov),
                proj_err_med: lower_median(&proj),
                wall_ns_med: lower_median(&wall),
            }
        })
        .collect()
}
