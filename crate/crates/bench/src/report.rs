//! CSV and JSON output.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use matsketch::metrics::ErrorReport;
use matsketch::rng::GENERATOR_NAME;
use serde::{Deserialize, Serialize};

use crate::algo::PassModel;
use crate::config::{ExperimentConfig, OutputFormat};
use crate::error::BenchError;
use crate::experiment::{summarize, RunOutput, Summary};

pub const REPORT_HEADER: [&str; 7] = ["algo", "ell", "trial", "seed", "cov_err", "proj_err", "wall_ns"];
pub const SUMMARY_HEADER: [&str; 5] = ["algo", "ell", "cov_err_med", "proj_err_med", "wall_ns_med"];

#[derive(Serialize, Deserialize)]
struct CsvRecord {
    algo: String,
    ell: usize,
    trial: usize,
    seed: u64,
    cov_err: Option<f64>,
    proj_err: Option<f64>,
    wall_ns: Option<u64>,
}

fn csv_err(path: &Path, source: csv::Error) -> BenchError {
    BenchError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path, source: io::Error) -> BenchError {
    BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Per-trial records; the header is written even when `reports` is empty.
pub fn write_reports_csv<W: Write>(reports: &[ErrorReport], w: W) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(REPORT_HEADER)?;
    for r in reports {
        out.serialize(CsvRecord {
            algo: r.algo.clone(),
            ell: r.ell,
            trial: r.trial,
            seed: r.seed,
            cov_err: r.cov_err,
            proj_err: r.proj_err,
            wall_ns: r.wall_ns,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(summaries: &[Summary], w: W) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for s in summaries {
        out.serialize(s)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a per-trial CSV as written by [`write_reports_csv`].
pub fn read_reports_csv<R: Read>(r: R) -> csv::Result<Vec<ErrorReport>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(REPORT_HEADER) {
        return Err(csv::Error::from(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        )));
    }
    rdr.deserialize::<CsvRecord>()
        .map(|rec| {
            rec.map(|c| ErrorReport {
                algo: c.algo,
                ell: c.ell,
                trial: c.trial,
                seed: c.seed,
                cov_err: c.cov_err,
                proj_err: c.proj_err,
                wall_ns: c.wall_ns,
                rank_deficient: false,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct AlgoMeta<'a> {
    name: &'a str,
    randomized: bool,
    pass_model: PassModel,
}

#[derive(Serialize)]
struct Metadata<'a> {
    generator: &'static str,
    master_seed: u64,
    dataset: String,
    n: usize,
    d: usize,
    trials: usize,
    k: usize,
    ells: &'a [usize],
    metrics: Vec<&'static str>,
    algorithms: Vec<AlgoMeta<'a>>,
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    metadata: Metadata<'a>,
    records: &'a [ErrorReport],
    summary: &'a [Summary],
}

pub fn write_json<W: Write>(cfg: &ExperimentConfig, run: &RunOutput, w: W) -> serde_json::Result<()> {
    let summary = summarize(&run.reports);
    let doc = JsonDocument {
        metadata: Metadata {
            generator: GENERATOR_NAME,
            master_seed: cfg.master_seed,
            dataset: cfg.dataset.to_string(),
            n: run.n,
            d: run.d,
            trials: cfg.trials,
            k: cfg.k_proj,
            ells: &cfg.ells,
            metrics: cfg.metrics.names(),
            algorithms: cfg
                .algorithms
                .iter()
                .map(|a| AlgoMeta {
                    name: &a.name,
                    randomized: a.algorithm.is_randomized(),
                    pass_model: a.algorithm.pass_model(),
                })
                .collect(),
        },
        records: &run.reports,
        summary: &summary,
    };
    let mut w = w;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w).map_err(serde_json::Error::io)
}

fn create(path: &Path) -> Result<BufWriter<File>, BenchError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

/// Writes per-trial results to `cfg.out` (stdout when unset) in `cfg.format`,
/// and the summary CSV to `cfg.summary_out` when set.
pub fn emit_report(cfg: &ExperimentConfig, run: &RunOutput) -> Result<(), BenchError> {
    let stdout = PathBuf::from("<stdout>");
    let path = cfg.out.as_deref().unwrap_or(&stdout);
    let writer: Box<dyn Write> = match &cfg.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    match cfg.format {
        OutputFormat::Csv => write_reports_csv(&run.reports, writer).map_err(|e| csv_err(path, e))?,
        OutputFormat::Json => write_json(cfg, run, writer).map_err(|source| BenchError::Json {
            path: path.to_path_buf(),
            source,
        })?,
    }
    if let Some(p) = &cfg.summary_out {
        write_summary_csv(&summarize(&run.reports), create(p)?).map_err(|e| csv_err(p, e))?;
    }
    Ok(())
}
