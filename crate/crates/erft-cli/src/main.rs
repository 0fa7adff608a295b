//! `erft` - run, compare, audit and converge interferometer circuits.
//!
//! Exit codes are a stable contract: 0 success, 1 I/O error, 2 validation
//! or domain error (including a failed comparison verdict).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use erft_core::audit::{admissible_probes, no_signalling_check, taint_trace};
use erft_core::dsl::{parse, validate, Circuit};
use erft_core::ensemble::{convergence_experiment, run_ensemble, run_exact, ConvergenceReport};
use erft_core::outcome::OutcomeDistribution;
use erft_core::prob::Prob;
use erft_core::quantum::run_quantum;
use erft_core::report::{
    compare_report, run_report, AuditReport, ComparisonReport, ReportMeta, RunReport,
};

#[derive(Parser)]
#[command(
    name = "erft",
    version,
    about = "Toy field theory interferometer simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a circuit under the toy engine (exact or sampled) or the
    /// quantum reference.
    Run(RunArgs),
    /// Compare the toy engine's exact distribution against the quantum
    /// reference, outcome by outcome.
    Compare(CompareArgs),
    /// Trace variable accesses and run the no-signalling probe battery.
    Audit(AuditArgs),
    /// Measure total-variation convergence of sampled frequencies toward
    /// the exact distribution.
    Converge(ConvergeArgs),
    /// Parse and validate a circuit file, reporting findings.
    Check(CheckArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Circuit description file (.ifc).
    file: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Master seed for sampled runs (falls back to ERFT_SEED).
    #[arg(long, env = "ERFT_SEED", default_value_t = 0)]
    seed: u64,
    /// Omit environmental metadata (timestamp) for byte-stable reports.
    #[arg(long)]
    deterministic: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Exact branch evaluation or seeded sampling.
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    /// Trial count for sample mode (ignored in exact mode).
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Which engine evaluates the circuit.
    #[arg(long, value_enum, default_value_t = Engine::Toy)]
    engine: Engine,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Per-outcome tolerance for the toy-vs-quantum comparison.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trials for the variable-access trace.
    #[arg(long, default_value_t = 1_000)]
    trials: u64,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Strictly increasing trial counts, e.g. 100,1000,10000.
    #[arg(long = "trials-list", value_delimiter = ',')]
    trials_list: Vec<u64>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Sample,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Toy,
    Quantum,
}

enum CliError {
    /// Unreadable or unwritable files: exit 1.
    Io(String),
    /// Parse, validation, and domain problems: exit 2.
    Domain(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Domain(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Domain(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("erft: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Converge(args) => cmd_converge(args),
        Command::Check(args) => cmd_check(args),
    }
}

fn load_circuit(path: &Path) -> Result<Circuit, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let circuit = parse(&text).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
    let findings = validate(&circuit);
    if !findings.is_empty() {
        let lines: Vec<String> = findings.iter().map(ToString::to_string).collect();
        return Err(CliError::Domain(format!(
            "{} failed validation:\n  {}",
            path.display(),
            lines.join("\n  ")
        )));
    }
    Ok(circuit)
}

fn meta(common: &CommonArgs, trials: Option<u64>, seeded: bool) -> ReportMeta {
    let mut meta = ReportMeta::new();
    meta.trials = trials;
    meta.seed = seeded.then_some(common.seed);
    if !common.deterministic {
        meta.timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    meta
}

fn emit(common: &CommonArgs, rendered: String) -> Result<(), CliError> {
    match &common.out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn engine_error(e: erft_core::ensemble::EngineError) -> CliError {
    CliError::Domain(e.to_string())
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let circuit = load_circuit(&args.common.file)?;
    let (dist, engine, trials, seeded) = match (args.engine, args.mode) {
        (Engine::Toy, Mode::Exact) => (
            run_exact(&circuit).map_err(engine_error)?,
            "toy",
            None,
            false,
        ),
        (Engine::Toy, Mode::Sample) => {
            if args.trials == 0 {
                return Err(CliError::Domain(
                    "sample mode requires --trials >= 1".into(),
                ));
            }
            let d = run_ensemble(&circuit, args.trials, args.common.seed).map_err(engine_error)?;
            (d, "toy", Some(args.trials), true)
        }
        (Engine::Quantum, Mode::Exact) => (
            run_quantum(&circuit).map_err(engine_error)?,
            "quantum",
            None,
            false,
        ),
        (Engine::Quantum, Mode::Sample) => {
            return Err(CliError::Domain(
                "sample mode is defined for the toy engine only".into(),
            ));
        }
    };
    let report = run_report(&circuit, engine, &dist, meta(&args.common, trials, seeded));
    let rendered = render_run(&report, &dist, &circuit, args.common.format)?;
    emit(&args.common, rendered)
}

fn render_run(
    report: &RunReport,
    dist: &OutcomeDistribution,
    circuit: &Circuit,
    format: Format,
) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => {
            let mut out = String::from("outcome,probability\n");
            for (label, mass) in dist.rendered(&circuit.mode_names()) {
                let _ = writeln!(out, "{label},{mass}");
            }
            Ok(out)
        }
        Format::Table => {
            let rows = dist.rendered(&circuit.mode_names());
            let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(7).max(7);
            let mut out = format!(
                "circuit {} ({}, {})\n",
                report.circuit, report.engine, report.kind
            );
            let _ = writeln!(out, "{:<width$}  probability", "outcome");
            for (label, mass) in rows {
                let _ = writeln!(out, "{label:<width$}  {mass}");
            }
            Ok(out)
        }
    }
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let circuit = load_circuit(&args.common.file)?;
    let toy = run_exact(&circuit).map_err(engine_error)?;
    let quantum = run_quantum(&circuit).map_err(engine_error)?;
    let report = compare_report(
        &circuit,
        &toy,
        &quantum,
        args.tolerance,
        meta(&args.common, None, false),
    );
    let rendered = render_compare(&report, args.common.format)?;
    emit(&args.common, rendered)?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Domain(format!(
            "toy and quantum distributions differ beyond {:e}",
            args.tolerance
        )))
    }
}

fn render_compare(report: &ComparisonReport, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => {
            let mut out = String::from("outcome,toy,quantum,abs_diff\n");
            for row in &report.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{:e}",
                    row.outcome, row.toy, row.quantum, row.abs_diff
                );
            }
            Ok(out)
        }
        Format::Table => {
            let width = report
                .rows
                .iter()
                .map(|r| r.outcome.len())
                .max()
                .unwrap_or(7)
                .max(7);
            let mut out = format!(
                "circuit {} (tolerance {:e})\n",
                report.circuit, report.tolerance
            );
            let _ = writeln!(
                out,
                "{:<width$}  {:>10}  {:>12}  {:>9}",
                "outcome", "toy", "quantum", "abs_diff"
            );
            for row in &report.rows {
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>10}  {:>12.9}  {:>9.2e}",
                    row.outcome, row.toy, row.quantum, row.abs_diff
                );
            }
            let _ = writeln!(out, "verdict: {}", report.verdict);
            Ok(out)
        }
    }
}

fn cmd_audit(args: AuditArgs) -> Result<(), CliError> {
    let circuit = load_circuit(&args.common.file)?;
    let taint = taint_trace(&circuit, args.trials, args.common.seed).map_err(engine_error)?;
    let probes = admissible_probes(&circuit).map_err(|e| CliError::Domain(e.to_string()))?;
    let mut max_deviation = Prob::zero();
    let probes_checked = probes.len();
    for probe in &probes {
        let outcome = no_signalling_check(probe).map_err(|e| CliError::Domain(e.to_string()))?;
        if outcome.deviation > max_deviation {
            max_deviation = outcome.deviation;
        }
    }
    let clean = taint.findings.is_empty() && max_deviation.is_zero();
    let report = AuditReport {
        circuit: circuit.name.clone(),
        trials: args.trials,
        seed: args.common.seed,
        taint_findings: taint.findings.iter().map(|f| f.render(&circuit)).collect(),
        probes_checked,
        max_probe_deviation: max_deviation.num_den_string(),
        verdict: if clean { "pass".into() } else { "fail".into() },
        meta: meta(&args.common, Some(args.trials), true),
    };
    let rendered = match args.common.format {
        Format::Json => to_json(&report)?,
        Format::Csv | Format::Table => {
            let mut out = format!(
                "circuit {}: {} trials, {} off-mode accesses, {} probes, max deviation {}\n",
                report.circuit,
                report.trials,
                report.taint_findings.len(),
                report.probes_checked,
                report.max_probe_deviation
            );
            for finding in &report.taint_findings {
                let _ = writeln!(out, "finding: {finding}");
            }
            let _ = writeln!(out, "verdict: {}", report.verdict);
            out
        }
    };
    emit(&args.common, rendered)?;
    if clean {
        Ok(())
    } else {
        Err(CliError::Domain("locality audit failed".into()))
    }
}

fn cmd_converge(args: ConvergeArgs) -> Result<(), CliError> {
    let circuit = load_circuit(&args.common.file)?;
    if args.trials_list.is_empty() {
        return Err(CliError::Domain(
            "--trials-list needs at least one trial count".into(),
        ));
    }
    let report = convergence_experiment(&circuit, &args.trials_list, args.common.seed)
        .map_err(engine_error)?;
    let rendered = render_converge(&report, args.common.format)?;
    emit(&args.common, rendered)
}

fn render_converge(report: &ConvergenceReport, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => {
            let mut out = String::from("trials,tv_distance\n");
            for (n, tv) in report.trial_counts.iter().zip(&report.tv_distances) {
                let _ = writeln!(out, "{n},{tv}");
            }
            Ok(out)
        }
        Format::Table => {
            let mut out = format!("circuit {} (seed {})\n", report.circuit, report.seed);
            let _ = writeln!(out, "{:>10}  tv_distance", "trials");
            for (n, tv) in report.trial_counts.iter().zip(&report.tv_distances) {
                let _ = writeln!(out, "{n:>10}  {tv:.6}");
            }
            Ok(out)
        }
    }
}

fn cmd_check(args: CheckArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.common.file)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.common.file.display())))?;
    let circuit = parse(&text)
        .map_err(|e| CliError::Domain(format!("{}: {e}", args.common.file.display())))?;
    let findings = validate(&circuit);
    if findings.is_empty() {
        emit(&args.common, format!("{}: ok\n", circuit.name))
    } else {
        let mut out = String::new();
        for finding in &findings {
            let _ = writeln!(out, "{}: {finding}", circuit.name);
        }
        emit(&args.common, out)?;
        Err(CliError::Domain(format!(
            "{} findings in {}",
            findings.len(),
            circuit.name
        )))
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Domain(format!("cannot serialize report: {e}")))
}
