use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use matsketch::datasets::{self, MatrixFormat};
use sketchbench::experiment::dataset_seed;
use sketchbench::{emit_report, run_experiment, BenchError, ConfigFile, DatasetSpec};

#[derive(Parser)]
#[command(name = "sketchbench", version, about = "Benchmark streaming matrix sketches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep algorithms and sketch sizes over one dataset.
    Run(Box<RunArgs>),
    /// Print rank, numeric rank, density and kurtosis of a dataset.
    Stats(DataArgs),
    /// Write a dataset to disk (`.mtx` for MatrixMarket, CSV otherwise).
    Generate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Algorithm as `name[:param=value,...]`; repeatable.
    #[arg(long = "algo")]
    algos: Vec<String>,
    #[arg(long)]
    dataset: Option<String>,
    /// Comma-separated sketch sizes.
    #[arg(long, value_delimiter = ',')]
    ell: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Rank for the projection error.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Any of cov, proj, time.
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    /// Per-trial results; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-(algorithm, l) medians as CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    /// Largest n*d held in memory.
    #[arg(long)]
    budget: Option<usize>,
    /// Subtract column means before sketching.
    #[arg(long)]
    center: bool,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    dataset: String,
    /// Master seed; the generator seed derives from it unless the spec sets `seed=`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    center: bool,
}

impl DataArgs {
    fn load(&self) -> Result<matsketch::RowMatrix, BenchError> {
        let mut spec: DatasetSpec = self.dataset.parse()?;
        spec.center |= self.center;
        spec.materialize(dataset_seed(self.seed))
    }
}

fn run(args: RunArgs) -> Result<(), BenchError> {
    let flags = ConfigFile {
        dataset: args.dataset,
        algorithms: (!args.algos.is_empty()).then_some(args.algos),
        ells: args.ell,
        trials: args.trials,
        k: args.k,
        seed: args.seed,
        metrics: args.metrics,
        out: args.out,
        summary: args.summary,
        format: args.format,
        jobs: args.jobs,
        budget: args.budget,
        center: args.center.then_some(true),
    };
    let file = match &args.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let cfg = file.merged_under(flags).into_experiment()?;
    let out = run_experiment(&cfg)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    emit_report(&cfg, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(*args),
        Command::Stats(data) => data.load().and_then(|a| {
            let stats = datasets::dataset_stats(&a)?;
            println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
            Ok(())
        }),
        Command::Generate { data, out } => data.load().and_then(|a| {
            match MatrixFormat::from_path(&out) {
                MatrixFormat::MatrixMarket => datasets::save_matrix_market(&a, &out)?,
                MatrixFormat::DenseCsv => datasets::save_csv(&a, &out)?,
            }
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
