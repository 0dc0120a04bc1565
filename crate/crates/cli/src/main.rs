//! `selstab` command-line front end: synthetic dataset generation,
//! experiment execution from a flat config file, and report emission.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
//! `SELSTAB_WORKERS` overrides the worker-thread count; results are
//! byte-identical regardless of its value.

mod config;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use selstab_core::data::{load_csv, synthesize, write_csv, ExpressionMatrix, SynthSpec};
use selstab_core::harness::{
    best_classifier_per_condition, compare_methods, run_experiment_timed, CellTiming,
};

use config::RunConfig;
use report::{BestClassifierRow, ReportKind, RunReport};

/// Errors split by exit code: usage/config problems exit 2, everything
/// that goes wrong while doing the work exits 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Parser)]
#[command(name = "selstab", version, about = "Feature-selection stability benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-class dataset with planted markers.
    Synth(SynthArgs),
    /// Run the full selection/classification experiment from a config file.
    Run(RunArgs),
    /// Emit a plot-ready table from a run's JSON summary.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Samples per class.
    #[arg(long)]
    m_per_class: usize,
    /// Total number of features.
    #[arg(long)]
    n: usize,
    /// Number of planted (truly differential) features.
    #[arg(long)]
    planted: usize,
    /// Class-mean shift of planted features, in within-class SDs.
    #[arg(long)]
    effect: f64,
    /// Size of correlated feature blocks (1 = independent features).
    #[arg(long, default_value_t = 1)]
    block: usize,
    /// Master RNG seed.
    #[arg(long)]
    seed: u64,
    /// Output CSV path; planted features are listed in `<path>.planted`.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the flat key/value config file.
    config: PathBuf,
    /// Directory receiving stability.csv, accuracy.csv, comparisons.csv,
    /// summary.json and timings.csv.
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
    /// Log2-transform every dataset after loading (overrides the config).
    #[arg(long)]
    log2: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Path to a summary.json produced by `selstab run`.
    results: PathBuf,
    /// Which table to emit.
    #[arg(long, value_enum)]
    kind: ReportKind,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(&args),
        Command::Run(args) => cmd_run(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = SynthSpec {
        m_per_class: args.m_per_class,
        n: args.n,
        n_planted: args.planted,
        effect_size: args.effect,
        correlation_block: args.block,
        seed: args.seed,
    };
    // Invariant violations are flag problems, not runtime failures.
    let matrix = synthesize(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    write_csv(&matrix, &args.out).map_err(runtime)?;

    let sidecar = sidecar_path(&args.out);
    let mut listing = String::from("index,feature\n");
    for (j, name) in matrix.feature_names().iter().take(spec.n_planted).enumerate() {
        listing.push_str(&format!("{j},{name}\n"));
    }
    std::fs::write(&sidecar, listing).map_err(runtime)?;
    println!(
        "wrote {} ({} samples x {} features) and {}",
        args.out.display(),
        matrix.n_samples(),
        matrix.n_features(),
        sidecar.display()
    );
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".planted");
    PathBuf::from(s)
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::Usage(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut cfg = RunConfig::parse(&text)?;
    if args.log2 {
        cfg.log2 = true;
    }

    let mut datasets: BTreeMap<String, ExpressionMatrix> = BTreeMap::new();
    for (name, path) in &cfg.datasets {
        let mut matrix =
            load_csv(path).map_err(|e| CliError::Runtime(format!("dataset {name:?}: {e}")))?;
        if cfg.log2 {
            matrix = matrix
                .log2_transform()
                .map_err(|e| CliError::Runtime(format!("dataset {name:?}: {e}")))?;
        }
        datasets.insert(name.clone(), matrix);
    }

    let (table, timings) = with_worker_pool(|| run_experiment_timed(&cfg.experiment, &datasets))?
        .map_err(runtime)?;
    let comparisons = compare_methods(&table, cfg.experiment.alpha).map_err(runtime)?;
    let best_classifier = best_classifier_per_condition(&table)
        .into_iter()
        .map(|(condition, classifier, mean_auc)| BestClassifierRow {
            condition,
            classifier,
            mean_auc,
        })
        .collect();

    let run_report = RunReport {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        seed: cfg.experiment.seed,
        config: cfg.emit(),
        results: table,
        comparisons,
        best_classifier,
    };
    write_outputs(&args.out_dir, &run_report, &timings)?;
    for failure in &run_report.results.failures {
        eprintln!(
            "warning: cell ({}, {}, k={}) failed: {}",
            failure.condition, failure.method, failure.k, failure.message
        );
    }
    println!(
        "wrote {} stability rows, {} accuracy rows, {} comparisons to {}",
        run_report.results.stability.len(),
        run_report.results.accuracy.len(),
        run_report.comparisons.len(),
        args.out_dir.display()
    );
    Ok(())
}

/// Run `f` under the worker count requested via SELSTAB_WORKERS, or on
/// the default global pool when the variable is unset.
fn with_worker_pool<T>(f: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    match std::env::var("SELSTAB_WORKERS") {
        Err(std::env::VarError::NotPresent) => Ok(f()),
        Err(e) => Err(CliError::Usage(format!("SELSTAB_WORKERS: {e}"))),
        Ok(raw) => {
            let workers: usize = raw
                .trim()
                .parse()
                .ok()
                .filter(|&w| w >= 1)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "SELSTAB_WORKERS must be a positive integer, got {raw:?}"
                    ))
                })?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(runtime)?;
            Ok(pool.install(f))
        }
    }
}

fn write_outputs(
    out_dir: &Path,
    run_report: &RunReport,
    timings: &[CellTiming],
) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir).map_err(runtime)?;
    let write = |name: &str, contents: String| -> Result<(), CliError> {
        std::fs::write(out_dir.join(name), contents).map_err(runtime)
    };
    write("stability.csv", report::stability_csv(&run_report.results)?)?;
    write("accuracy.csv", report::accuracy_csv(&run_report.results)?)?;
    write(
        "comparisons.csv",
        report::comparisons_csv(&run_report.comparisons)?,
    )?;
    let mut json = serde_json::to_string_pretty(run_report).map_err(runtime)?;
    json.push('\n');
    write("summary.json", json)?;
    // Timings are inherently non-deterministic; keeping them out of the
    // summary preserves byte-identical reruns.
    write("timings.csv", report::timings_csv(timings)?)?;
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.results).map_err(runtime)?;
    if text.trim().is_empty() {
        return Err(CliError::Runtime(format!(
            "results file {} is empty",
            args.results.display()
        )));
    }
    let run_report: RunReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Runtime(format!("cannot parse {}: {e}", args.results.display())))?;
    let table = report::render(&run_report, args.kind)?;
    match &args.out {
        Some(path) => std::fs::write(path, table).map_err(runtime)?,
        None => print!("{table}"),
    }
    Ok(())
}
