//! `minabs`: run minimal-absorption experiments and write CSV/JSON reports.
//!
//! Exit status: 0 on success, 1 for usage or configuration errors, 2 when a
//! simulated absorption falls below its bound, 3 when a size limit is hit.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use minabs_core::experiment::{
    emit_report, merge_settings, parse_settings, render_report, run_experiment, ExperimentConfig, ProtocolReport,
};
use minabs_core::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_AUDIT: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(name = "minabs", version, about = "Minimal-absorption measurement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transmission counting on a two-object task.
    Count(RunArgs),
    /// k-pass interferometer on a phase-only task.
    Interf(RunArgs),
    /// Random protocol scripts checked against the overlap inequalities.
    BoundAudit(RunArgs),
    /// Collective and individual Hadamard-row identification.
    Hadamard(RunArgs),
    /// Grover search with absorption.
    Grover(RunArgs),
    /// Repeating an absorption-free protocol until it absorbs nothing.
    Afm(RunArgs),
    /// Any experiment over a list of parameter values.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment kind, unless the config file sets it.
    #[arg(long)]
    kind: Option<String>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Default)]
struct RunArgs {
    /// `key = value` config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// Monte Carlo trials per setting (0: analytic only).
    #[arg(long)]
    trials: Option<String>,
    /// Target error probability.
    #[arg(long)]
    pe: Option<String>,
    /// Output file; the report goes to stdout when omitted.
    #[arg(long)]
    out: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    alpha1: Option<String>,
    #[arg(long)]
    alpha2: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    /// Pixel-count exponent, M = 2^m.
    #[arg(long)]
    m: Option<String>,
    /// Interferometer passes, or `auto`.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    beta2: Option<String>,
    /// Grover oracle phase: `pi` or a small angle.
    #[arg(long)]
    phase: Option<String>,
    /// Grover iterations, or `auto`.
    #[arg(long)]
    iterations: Option<String>,
    /// Marked Grover mode (0-based).
    #[arg(long)]
    marked: Option<String>,
    /// fock or poisson.
    #[arg(long)]
    source: Option<String>,
    /// Random scripts per bound-audit setting.
    #[arg(long)]
    scripts: Option<String>,
    /// Swept parameter and values, e.g. `eps=0.02,0.01`.
    #[arg(long)]
    sweep: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> BTreeMap<String, String> {
        let fields = [
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("pe", &self.pe),
            ("out", &self.out),
            ("format", &self.format),
            ("alpha1", &self.alpha1),
            ("alpha2", &self.alpha2),
            ("alpha", &self.alpha),
            ("eps", &self.eps),
            ("m", &self.m),
            ("k", &self.k),
            ("beta2", &self.beta2),
            ("phase", &self.phase),
            ("iterations", &self.iterations),
            ("marked", &self.marked),
            ("source", &self.source),
            ("scripts", &self.scripts),
            ("sweep", &self.sweep),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v)))
            .collect()
    }
}

fn build_config(kind: Option<&str>, args: &RunArgs, need_sweep: bool) -> Result<ExperimentConfig, Error> {
    let base = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            parse_settings(&text)?
        }
        None => BTreeMap::new(),
    };
    let mut overrides = args.overrides();
    if let Some(kind) = kind {
        overrides.insert("kind".into(), kind.into());
    }
    let config = ExperimentConfig::from_settings(&merge_settings(base, &overrides))?;
    if need_sweep && config.sweep.is_none() {
        return Err(Error::Config {
            field: "sweep".into(),
            msg: "the sweep command needs `sweep = param=v1,v2,...`".into(),
        });
    }
    Ok(config)
}

fn execute(config: &ExperimentConfig) -> Result<ProtocolReport, Error> {
    let report = run_experiment(config)?;
    match &config.out {
        Some(path) => emit_report(&report, config.format, path.as_ref())?,
        None => print!("{}", render_report(&report, config.format)?),
    }
    Ok(report)
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Resource(_) => EXIT_RESOURCE,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let config = match &cli.command {
        Command::Count(a) => build_config(Some("count"), a, false),
        Command::Interf(a) => build_config(Some("interf"), a, false),
        Command::BoundAudit(a) => build_config(Some("bound-audit"), a, false),
        Command::Hadamard(a) => build_config(Some("hadamard"), a, false),
        Command::Grover(a) => build_config(Some("grover"), a, false),
        Command::Afm(a) => build_config(Some("afm"), a, false),
        Command::Sweep(s) => build_config(s.kind.as_deref(), &s.run, true),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("minabs: {e}");
            return ExitCode::from(exit_for(&e));
        }
    };
    match execute(&config) {
        Ok(report) if report.passed() => ExitCode::SUCCESS,
        Ok(report) => {
            for a in report.failed_audits() {
                eprintln!(
                    "minabs: row {} fails {}: {} < {} (margin {})",
                    a.row, a.check, a.lhs, a.rhs, a.margin
                );
            }
            ExitCode::from(EXIT_AUDIT)
        }
        Err(e) => {
            eprintln!("minabs: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
