use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use urn_core::analysis::{convergence_report, ConvergenceReport, ReportError, Status, VerifyConfig};
use urn_core::ensemble::run_ensemble;
use urn_core::matrix::{parse_model_json, Validated};
use urn_core::oracle::{oracle_report, OracleMode};
use urn_core::rational::format_rational;
use urn_core::rearrange::RearrangeError;
use urn_core::simulator::{zeta_specs, RunConfig, Schedule, SimModel, SimulationParams, Tracking};
use urn_core::{canonicalize, per_color_rates, theorem_rates, ReplacementMatrix, ValidateOptions};

/// Exit status for failed verdicts.
const EXIT_VERDICT: u8 = 1;
/// Exit status for unreadable or invalid input.
const EXIT_INVALID: u8 = 2;
/// Exit status when limit identification needs a condition the model lacks.
const EXIT_ASSUMPTION: u8 = 3;

#[derive(Parser)]
#[command(name = "urn", version, about = "Analyze, simulate and verify balanced triangular urn models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model and print its block structure and predicted rates.
    Analyze {
        model: PathBuf,
        /// Rearrange colors into increasing order and print the full limit profile.
        #[arg(long)]
        rearrange: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Rescale the initial composition to total one instead of rejecting it.
        #[arg(long)]
        normalize: bool,
    },
    /// Simulate an ensemble and write every checkpoint as CSV.
    Simulate {
        model: PathBuf,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.2)]
        gamma: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        normalize: bool,
    },
    /// Exact small-depth results: mean, full distribution or martingale checks.
    Oracle {
        model: PathBuf,
        #[arg(long)]
        steps: u64,
        #[arg(long, value_enum, default_value_t = Mode::Mean)]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        normalize: bool,
    },
    /// Simulate and check every predicted rate and limit against tolerances.
    Verify {
        model: PathBuf,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// JSON file with tolerances; missing fields keep their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Check growth rates only, which needs no extra condition on the model.
        #[arg(long)]
        rates_only: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        normalize: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Mean,
    Enumerate,
    Martingale,
}

/// An error with the exit status it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn invalid(error: anyhow::Error) -> Failure {
        Failure { code: EXIT_INVALID, error }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure::invalid(error)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Analyze { model, rearrange, format, normalize } => {
            let validated = load_model(&model, normalize)?;
            let value = analyze(&validated, rearrange);
            match format {
                Format::Json => write_stdout(&format!("{}\n", serde_json::to_string_pretty(&value).context("serializing output")?))?,
                Format::Text => write_stdout(&analyze_text(&validated.matrix, &value))?,
            }
            Ok(0)
        }
        Command::Simulate { model, steps, reps, seed, gamma, out, normalize } => {
            let validated = load_model(&model, normalize)?;
            simulate(&validated.matrix, SimulationParams { steps, reps, seed, gamma }, &out)?;
            Ok(0)
        }
        Command::Oracle { model, steps, mode, out, normalize } => {
            let validated = load_model(&model, normalize)?;
            let mode = match mode {
                Mode::Mean => OracleMode::Mean,
                Mode::Enumerate => OracleMode::Enumerate,
                Mode::Martingale => OracleMode::Martingale,
            };
            let report = oracle_report(&validated.matrix, steps, mode).map_err(|e| Failure::invalid(e.into()))?;
            let text = serde_json::to_string_pretty(&report).context("serializing report")?;
            emit(out.as_deref(), &text)?;
            Ok(if report.all_exact() { 0 } else { EXIT_VERDICT })
        }
        Command::Verify { model, steps, reps, seed, gamma, config, rates_only, out, normalize } => {
            let validated = load_model(&model, normalize)?;
            let mut cfg = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str::<VerifyConfig>(&text)
                        .with_context(|| format!("parsing config {}", path.display()))?
                }
                None => VerifyConfig::default(),
            };
            cfg.steps = steps.unwrap_or(cfg.steps);
            cfg.reps = reps.unwrap_or(cfg.reps);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.gamma = gamma.unwrap_or(cfg.gamma);
            cfg.rates_only |= rates_only;
            let report = match convergence_report(&validated.matrix, &cfg) {
                Ok(report) => report,
                Err(ReportError::Assumption(e)) => {
                    return Err(Failure {
                        code: EXIT_ASSUMPTION,
                        error: anyhow::Error::new(*e).context("limits cannot be identified (use --rates-only)"),
                    })
                }
                Err(e) => return Err(Failure::invalid(e.into())),
            };
            let text = serde_json::to_string_pretty(&report).context("serializing report")?;
            emit(out.as_deref(), &text)?;
            print_verdicts(&report);
            Ok(if report.passed { 0 } else { EXIT_VERDICT })
        }
    }
}

fn load_model(path: &Path, normalize: bool) -> Result<Validated, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let validated = parse_model_json(&text, ValidateOptions { normalize })
        .with_context(|| format!("invalid model {}", path.display()))?;
    for warning in &validated.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(validated)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display())),
        None => write_stdout(&format!("{text}\n")),
    }
}

/// Writes to stdout, treating a closed pipe (e.g. `| head`) as success.
fn write_stdout(text: &str) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e).context("writing to stdout"),
        _ => Ok(()),
    }
}

fn analyze(validated: &Validated, rearrange: bool) -> Value {
    let matrix = &validated.matrix;
    let structure = matrix.block_structure();
    let rates = per_color_rates(matrix);
    let mut value = json!({
        "dim": matrix.dim(),
        "fingerprint": matrix.fingerprint(),
        "warnings": validated.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "leading_indices": structure.leading_indices.iter().map(|i| i + 1).collect::<Vec<_>>(),
        "blocks": structure.blocks,
        "increasing_order_violations": matrix.check_increasing_order().iter().map(|i| i + 1).collect::<Vec<_>>(),
        "unique_arrangement": matrix.check_unique_arrangement(),
        "rates": rates,
    });
    if rearrange {
        let (rearrangement, failure) = match canonicalize(matrix) {
            Ok(r) => (r, None),
            Err(e) => {
                let message = e.to_string();
                let RearrangeError::AssumptionFailure { rearrangement, .. } = e;
                (*rearrangement, Some(message))
            }
        };
        value["permutation"] = json!(rearrangement.perm);
        value["rearranged"] = rearrangement.rearranged.to_json();
        value["certificate"] = json!(rearrangement.certificate);
        value["rearranged_rates"] = json!(per_color_rates(&rearrangement.rearranged));
        match failure {
            None => {
                let profile = theorem_rates(&rearrangement.rearranged).expect("canonical form satisfies the conditions");
                value["profile"] = json!(profile);
                value["colors"] = json!(profile.color_limits());
            }
            Some(message) => value["assumption_failure"] = json!(message),
        }
    }
    value
}

fn analyze_text(matrix: &ReplacementMatrix, value: &Value) -> String {
    let mut out = String::new();
    out.push_str(&format!("colors: {}\n", matrix.dim()));
    for w in value["warnings"].as_array().into_iter().flatten() {
        out.push_str(&format!("warning: {}\n", w.as_str().unwrap_or_default()));
    }
    out.push_str(&format!("leading colors: {}\n", value["leading_indices"]));
    let violations = &value["increasing_order_violations"];
    out.push_str(&format!("increasing order violations: {violations}\n"));
    out.push_str(&format!("unique arrangement: {}\n", value["unique_arrangement"]));
    out.push_str("rates in the given order:\n");
    for (k, rate) in per_color_rates(matrix).iter().enumerate() {
        let log = match rate.log_power {
            0 => String::new(),
            1 => " log N".to_string(),
            d => format!(" (log N)^{d}"),
        };
        out.push_str(&format!("  {:<12} N^{}{}\n", matrix.label(k), format_rational(&rate.exponent), log));
    }
    if let Some(perm) = value.get("permutation") {
        out.push_str(&format!("permutation (old -> new, 0-based): {perm}\n"));
    }
    if let Some(msg) = value.get("assumption_failure") {
        out.push_str(&format!("assumption failure: {}\n", msg.as_str().unwrap_or_default()));
    }
    if let Some(blocks) = value.get("profile").and_then(|p| p["blocks"].as_array()) {
        out.push_str("limit profile (rearranged order):\n");
        for (j, b) in blocks.iter().enumerate() {
            out.push_str(&format!(
                "  block {}: colors {}..{}, lambda {}, nu {}, pi {}, limit {}\n",
                j + 1,
                b["start"].as_u64().unwrap_or(0) + 1,
                b["end"],
                b["lambda"].as_str().unwrap_or_default(),
                b["nu"],
                b["pi"],
                b["limit"],
            ));
        }
    }
    out
}

fn simulate(matrix: &ReplacementMatrix, params: SimulationParams, out: &Path) -> Result<()> {
    let schedule = Schedule::geometric(params.steps, params.gamma)?;
    let tracking = Tracking::full(matrix);
    let u_blocks: Vec<usize> = zeta_specs(matrix).iter().map(|z| z.block).collect();
    let m_colors = tracking.m_colors.clone();
    let config = RunConfig { schedule, tracking };
    let ensemble = run_ensemble(&SimModel::new(matrix), &config, params.seed, params.reps)?;
    let rates = per_color_rates(matrix);
    let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut writer = BufWriter::new(file);
    ensemble.write_csv(&mut writer, &rates, &u_blocks, &m_colors)?;
    writer.flush()?;
    let meta = json!({
        "seed": params.seed,
        "reps": params.reps,
        "steps": params.steps,
        "gamma": params.gamma,
        "config_hash": params.hash(),
        "matrix_hash": matrix.fingerprint(),
        "rates": rates,
        "u_blocks": u_blocks.iter().map(|b| b + 1).collect::<Vec<_>>(),
        "m_colors": m_colors.iter().map(|c| c + 1).collect::<Vec<_>>(),
    });
    let meta_path = PathBuf::from(format!("{}.meta.json", out.display()));
    fs::write(&meta_path, format!("{}\n", serde_json::to_string_pretty(&meta)?))
        .with_context(|| format!("writing {}", meta_path.display()))?;
    Ok(())
}

fn print_verdicts(report: &ConvergenceReport) {
    for v in &report.verdicts {
        let status = match v.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        let value = v.value.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        eprintln!("{status} {:<20} {:<28} value {value} threshold {}", v.check, v.subject, v.threshold);
    }
}
