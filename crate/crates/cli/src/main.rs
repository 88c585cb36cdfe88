//! Command-line front door for the dose-response pipeline.
//!
//! Three subcommands cover the workflow: `diagnose` writes the non-overlap
//! ratio of a table at several support levels, `estimate` runs the full
//! plug-in pipeline and writes every curve (plus a JSON run report), and
//! `simulate` scores the estimators against a known data-generating law.
//! All output is plot-ready CSV; nothing here draws.
//!
//! Exit codes are a stable contract: 0 success, 1 usage, 2 input validation
//! (bad file, table, or configuration), 3 pipeline failure on valid input.
//! Every run is deterministic given its arguments; randomness flows from
//! `--seed` alone and worker count never changes results.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use cdrc::{
    estimate_curves, hdr_thresholds, load_csv, monte_carlo_bias, ColumnSchema, CondDensityModel,
    Dataset, DensityMatrix, RunConfig, SimLaw,
};

/// Support levels every `diagnose` run reports.
const DIAGNOSE_LEVELS: [f64; 3] = [0.90, 0.95, 0.99];

/// Confounder draws behind each oracle truth in `simulate`.
const ORACLE_DRAWS: usize = 100_000;

#[derive(Parser)]
#[command(
    name = "cdrc",
    version,
    about = "Dose-response curves for continuous treatments under limited support"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the non-overlap ratio of a table at the 90/95/99% support levels.
    Diagnose {
        /// Input table: headered CSV with confounders, treatment, outcome.
        #[arg(long)]
        data: PathBuf,
        /// Run configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Estimate every dose-response curve, with bootstrap bands when B > 0.
    Estimate {
        /// Input table: headered CSV with confounders, treatment, outcome.
        #[arg(long)]
        data: PathBuf,
        /// Run configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path; the run report lands next to it as
        /// <stem>.report.json.
        #[arg(long)]
        out: PathBuf,
        /// Bootstrap seed, overriding the configured one.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Score the estimators against a known law over Monte Carlo replications.
    Simulate {
        /// Law id: 1A, 1B, 1C, 2A, 2B, or 3.
        #[arg(long)]
        law: String,
        /// Number of replications.
        #[arg(long, default_value_t = 100)]
        reps: usize,
        /// Sample size per replication.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Master seed for data generation and oracle draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run configuration (JSON) overriding the law's default.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV path for the bias table; oracle truths land next to it
        /// as <stem>_oracle.csv.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the version.
    Version,
}

/// What a run did: the effective configuration, the table it saw, anything
/// that deserves attention, and every file it wrote.
#[derive(Serialize)]
struct RunReport {
    command: &'static str,
    config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset: Option<DatasetSummary>,
    warnings: Vec<String>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct DatasetSummary {
    n: usize,
    q: usize,
    treatment_min: f64,
    treatment_max: f64,
}

impl DatasetSummary {
    fn of(data: &Dataset) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &a in data.treatment() {
            lo = lo.min(a);
            hi = hi.max(a);
        }
        DatasetSummary {
            n: data.n(),
            q: data.q(),
            treatment_min: lo,
            treatment_max: hi,
        }
    }
}

/// Input problems exit 2, pipeline problems exit 3.
enum CliError {
    Input(String),
    Pipeline(String),
}

impl From<cdrc::Error> for CliError {
    fn from(e: cdrc::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Pipeline(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Some(report)) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report is plain data")
            );
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Pipeline(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<Option<RunReport>, CliError> {
    match cli.command {
        Cmd::Diagnose {
            data,
            config,
            out,
            threads,
        } => {
            init_threads(threads)?;
            cmd_diagnose(&data, &config, &out).map(Some)
        }
        Cmd::Estimate {
            data,
            config,
            out,
            seed,
            threads,
        } => {
            init_threads(threads)?;
            cmd_estimate(&data, &config, &out, seed).map(Some)
        }
        Cmd::Simulate {
            law,
            reps,
            n,
            seed,
            config,
            out,
            threads,
        } => {
            init_threads(threads)?;
            cmd_simulate(&law, reps, n, seed, config.as_deref(), &out).map(Some)
        }
        Cmd::Version => {
            println!("cdrc {}", env!("CARGO_PKG_VERSION"));
            Ok(None)
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Input(format!("--threads {t}: {e}")))?;
    }
    Ok(())
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let file = open(path)?;
    RunConfig::from_json(file).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Resolves the column schema (configured, or by the A/Y convention) and
/// loads the table, rejecting non-binary outcomes under a binomial family.
fn read_table(path: &Path, config: &RunConfig) -> Result<Dataset, CliError> {
    let file = open(path)?;
    let schema = match &config.columns {
        Some(s) => s.clone(),
        None => {
            let header = cdrc::csv_header(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            ColumnSchema::from_header(&header)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
    };
    let binary = config.outcome.family == cdrc::Family::Binomial;
    load_csv(file, &schema, binary).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Support levels for one diagnose run: the three reporting levels plus the
/// configured one when it differs, ascending.
fn diagnose_levels(configured: f64) -> Vec<f64> {
    let mut levels = DIAGNOSE_LEVELS.to_vec();
    if !levels.contains(&configured) {
        levels.push(configured);
    }
    levels.sort_by(f64::total_cmp);
    levels
}

/// Column label for a support level: tau_90, tau_95, tau_97.5, ...
fn level_label(level: f64) -> String {
    let pct = level * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("tau_{}", pct.round() as u32)
    } else {
        format!("tau_{pct}")
    }
}

fn cmd_diagnose(data: &Path, config: &Path, out: &Path) -> Result<RunReport, CliError> {
    let config = read_config(config)?;
    let table = read_table(data, &config)?;
    let grid = config.build_grid()?;
    let density = CondDensityModel::fit(&table, &config.density)?;
    let dm = DensityMatrix::evaluate(&density, &grid, &table);

    let levels = diagnose_levels(config.support_level);
    let mut columns = Vec::with_capacity(levels.len());
    for &level in &levels {
        let profile = hdr_thresholds(&dm, &grid, level)?;
        columns.push(profile.non_overlap_ratio());
    }

    let mut wtr = csv::Writer::from_writer(create(out)?);
    let mut header = vec!["a".to_string()];
    header.extend(levels.iter().map(|&l| level_label(l)));
    wtr.write_record(&header).map_err(cdrc::Error::from)?;
    for (i, &a) in grid.values().iter().enumerate() {
        let mut record = vec![a.to_string()];
        record.extend(columns.iter().map(|c| c[i].to_string()));
        wtr.write_record(&record).map_err(cdrc::Error::from)?;
    }
    wtr.flush().map_err(cdrc::Error::from)?;

    Ok(RunReport {
        command: "diagnose",
        config: config_echo(&config)?,
        dataset: Some(DatasetSummary::of(&table)),
        warnings: Vec::new(),
        outputs: vec![out.display().to_string()],
    })
}

fn cmd_estimate(
    data: &Path,
    config: &Path,
    out: &Path,
    seed: Option<u64>,
) -> Result<RunReport, CliError> {
    let mut config = read_config(config)?;
    if let Some(s) = seed {
        config.bootstrap.seed = s;
    }
    let table = read_table(data, &config)?;
    let result = estimate_curves(&table, &config)?;
    result.curves.write_csv(create(out)?)?;

    let mut warnings = Vec::new();
    for (lo, hi) in result.curves.undefined_trimming_regions() {
        warnings.push(format!(
            "trimming estimand undefined for a in [{}, {}] (grid points {lo}..={hi}): non-overlap ratio is 1 there",
            result.curves.a[lo], result.curves.a[hi]
        ));
    }
    for &r in &result.failed_replicates {
        warnings.push(format!("bootstrap replicate {r} failed and was dropped"));
    }

    let report_path = out.with_extension("report.json");
    let report = RunReport {
        command: "estimate",
        config: config_echo(&config)?,
        dataset: Some(DatasetSummary::of(&table)),
        warnings,
        outputs: vec![out.display().to_string(), report_path.display().to_string()],
    };
    let mut file = create(&report_path)?;
    serde_json::to_writer_pretty(&mut file, &report)
        .map_err(|e| CliError::Input(format!("{}: {e}", report_path.display())))?;
    writeln!(file).map_err(cdrc::Error::from)?;
    Ok(report)
}

fn cmd_simulate(
    law: &str,
    reps: usize,
    n: usize,
    seed: u64,
    config: Option<&Path>,
    out: &Path,
) -> Result<RunReport, CliError> {
    let law: SimLaw = law.parse().map_err(CliError::from)?;
    let config = match config {
        Some(path) => read_config(path)?,
        None => law.default_config(),
    };
    let (table, oracle) = monte_carlo_bias(law, reps, n, &config, ORACLE_DRAWS, seed)?;

    table.write_csv(create(out)?)?;
    let oracle_path = oracle_path(out);
    oracle.write_csv(create(&oracle_path)?)?;

    let warnings = table
        .failed_replications
        .iter()
        .map(|r| format!("replication {r} failed and was dropped"))
        .collect();

    Ok(RunReport {
        command: "simulate",
        config: serde_json::json!({
            "law": law.to_string(),
            "params": law.params_json(),
            "reps": reps,
            "n": n,
            "seed": seed,
            "oracle_draws": ORACLE_DRAWS,
            "run": config_echo(&config)?,
        }),
        dataset: None,
        warnings,
        outputs: vec![out.display().to_string(), oracle_path.display().to_string()],
    })
}

/// Sibling path holding the oracle truths: <stem>_oracle.csv.
fn oracle_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    out.with_file_name(format!("{stem}_oracle.csv"))
}

fn config_echo(config: &RunConfig) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(config).map_err(|e| CliError::Pipeline(format!("config echo failed: {e}")))
}
