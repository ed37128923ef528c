use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use redcap_core::analysis::evaluate_scenario;
use redcap_core::fading::branch_reduction_penalty_db;
use redcap_core::io::{
    calibration_file, default_bundle_dir, emit_report, load_bundle, load_targets, to_toml, ReportDocument, ReportFormat,
};
use redcap_core::linkbudget::calibrate;
use redcap_core::model::{validate_dataset, Dataset, ProfileLabel, ScenarioName};
use redcap_core::transport::{McsTable, RateMode};

/// Timestamp written by `--fixed-timestamp`.
const FIXED_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

#[derive(Parser)]
#[command(
    name = "redcap",
    version,
    about = "Link-budget coverage evaluation for NR RedCap devices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one scenario and emit a coverage report.
    Evaluate(EvaluateArgs),
    /// Fading oracles.
    Oracle {
        #[command(subcommand)]
        oracle: Oracle,
    },
    /// Fit antenna gains and noise figures to threshold and recovery targets.
    Calibrate(CalibrateArgs),
    /// Check a bundle and list every problem found.
    Validate(BundleArg),
}

#[derive(Args)]
struct BundleArg {
    /// Bundle directory; defaults to the shipped dataset.
    #[arg(long)]
    bundle: Option<PathBuf>,
}

impl BundleArg {
    fn path(&self) -> PathBuf {
        self.bundle.clone().unwrap_or_else(default_bundle_dir)
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    bundle: BundleArg,
    #[arg(long)]
    scenario: ScenarioName,
    /// RedCap profile to compare against the reference; repeatable. All
    /// profiles with SINR data when omitted.
    #[arg(long)]
    profile: Vec<ProfileLabel>,
    /// human, json or plot.
    #[arg(long, default_value = "human")]
    format: ReportFormat,
    #[arg(long, default_value = "per-slot")]
    rate_mode: RateMode,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a constant timestamp so reports are reproducible.
    #[arg(long)]
    fixed_timestamp: bool,
    /// Replace or add an MCS table, as NAME=PATH; repeatable.
    #[arg(long, value_name = "NAME=PATH")]
    mcs_table: Vec<String>,
}

#[derive(Subcommand)]
enum Oracle {
    /// Flat Rayleigh MRC penalty of reducing receive branches.
    Mrc(MrcArgs),
}

#[derive(Args)]
struct MrcArgs {
    #[arg(long)]
    from: u32,
    #[arg(long)]
    to: u32,
    /// Outage probability, e.g. 0.01.
    #[arg(long)]
    outage: f64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    bundle: BundleArg,
    /// Targets file; defaults to targets.toml inside the bundle.
    #[arg(long)]
    targets: Option<PathBuf>,
    /// Write the fitted calibration file here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Validation(anyhow::Error),
    Evaluation(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 1,
            Self::Evaluation(_) => 2,
        }
    }
}

type Outcome = Result<(), Failure>;

fn validation(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Validation(e.into())
}

fn evaluation(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Evaluation(e.into())
}

/// Loads a bundle and rejects it unless it validates cleanly.
fn load_valid(path: &Path) -> Result<Dataset, Failure> {
    let dataset = load_bundle(path).map_err(validation)?;
    let violations = validate_dataset(&dataset);
    if violations.is_empty() {
        return Ok(dataset);
    }
    let listing: Vec<_> = violations.iter().map(|v| format!("  {v}")).collect();
    Err(validation(anyhow!(
        "{}: {} validation problem(s):\n{}",
        path.display(),
        violations.len(),
        listing.join("\n")
    )))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn evaluate(args: &EvaluateArgs) -> Outcome {
    let mut dataset = load_valid(&args.bundle.path())?;
    for spec in &args.mcs_table {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| validation(anyhow!("--mcs-table expects NAME=PATH, got {spec:?}")))?;
        let table = McsTable::load(name, Path::new(path)).map_err(validation)?;
        dataset.mcs_tables.insert(table);
    }
    let report = evaluate_scenario(&dataset, args.scenario, &args.profile, args.rate_mode).map_err(evaluation)?;
    let generated_at = if args.fixed_timestamp {
        FIXED_TIMESTAMP.to_owned()
    } else {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    };
    let doc = ReportDocument::new(report, args.rate_mode, generated_at);
    write_output(args.out.as_deref(), &emit_report(&doc, args.format)).map_err(evaluation)
}

fn oracle_mrc(args: &MrcArgs) -> Outcome {
    let p =
        branch_reduction_penalty_db(args.from, args.to, args.outage, args.samples, args.seed).map_err(evaluation)?;
    let text = if args.json {
        serde_json::to_string_pretty(&p).map_err(evaluation)? + "\n"
    } else {
        format!(
            "MRC {} -> {} branches at {}% outage ({} samples, seed {})\n\
             diversity penalty, Monte Carlo:  {:.2} dB\n\
             diversity penalty, closed form:  {:.2} dB\n\
             array gain lost:                 {:.2} dB\n",
            p.from_branches,
            p.to_branches,
            p.outage_prob * 100.0,
            args.samples,
            args.seed,
            p.monte_carlo_db,
            p.closed_form_db,
            p.array_gain_db
        )
    };
    write_output(None, text.as_bytes()).map_err(evaluation)
}

fn run_calibrate(args: &CalibrateArgs) -> Outcome {
    let bundle = args.bundle.path();
    let dataset = load_valid(&bundle)?;
    let targets_path = args.targets.clone().unwrap_or_else(|| bundle.join("targets.toml"));
    let targets = load_targets(&targets_path).map_err(validation)?;
    let fit = calibrate(&dataset, &targets).map_err(evaluation)?;

    let mut fitted = dataset.clone();
    for (name, radio) in &fit.radio {
        fitted.scenario_mut(*name).map_err(evaluation)?.radio = *radio;
    }
    for (t, got) in &fit.threshold_residuals {
        eprintln!(
            "{} threshold: target {:.2} dB, fitted {:.2} dB",
            t.scenario, t.mil_db, got
        );
    }
    for (t, got) in &fit.recovery_residuals {
        eprintln!(
            "{}/{} {} recovery: target {:.2} dB, fitted {:.2} dB",
            t.scenario, t.profile, t.channel, t.recovery_db, got
        );
    }
    let text = to_toml(&calibration_file(&fitted)).map_err(evaluation)?;
    write_output(args.out.as_deref(), text.as_bytes()).map_err(evaluation)
}

fn run_validate(args: &BundleArg) -> Outcome {
    let path = args.path();
    let dataset = load_valid(&path)?;
    println!(
        "{}: {} scenarios, {} profiles, {} SINR requirements, no problems found",
        path.display(),
        dataset.scenarios.len(),
        dataset.profiles.len(),
        dataset.sinr.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Evaluate(args) => evaluate(args),
        Command::Oracle {
            oracle: Oracle::Mrc(args),
        } => oracle_mrc(args),
        Command::Calibrate(args) => run_calibrate(args),
        Command::Validate(args) => run_validate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (Failure::Validation(e) | Failure::Evaluation(e)) = &failure;
            eprintln!("error: {e:#}");
            ExitCode::from(failure.exit_code())
        }
    }
}
