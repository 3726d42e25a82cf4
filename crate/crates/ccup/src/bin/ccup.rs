//! Thin CLI over the experiment harness: one subcommand per family plus
//! `report`. Exit codes: 0 = run passed, 1 = run failed its checks (or a
//! runtime failure), 2 = usage or config error, 3 = I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ccup::harness::{render_report, run_experiment, ExperimentConfig, ExperimentKind};
use ccup::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ccup",
    version,
    about = "Seeded experiment sweeps over finite discrete probability models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the config's trace output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Margin sweep over the exact information laws.
    Laws(RunArgs),
    /// Paired structured-prior vs uniform-prior inference arms.
    Sbs(RunArgs),
    /// Perception-cycle convergence and contraction audit.
    Cycle(RunArgs),
    /// Streaming schedule against a context stream.
    Temporal(RunArgs),
    /// Stacked schedules at separated timescales.
    Multiscale(RunArgs),
    /// Exhaustive two-view composition family.
    Hierarchy(RunArgs),
    /// Resource-allocation signals over random tables.
    Control(RunArgs),
    /// Aggregate trace files into one report.
    Report {
        /// Trace files to aggregate.
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Where to write the report; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Io { .. } => 3,
                Error::Config(_) | Error::SchemaMismatch { .. } => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (kind, args) = match cli.command {
        Command::Report { traces, out } => {
            let report = render_report(&traces)?;
            match out {
                Some(path) => std::fs::write(&path, report).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?,
                None => print!("{report}"),
            }
            return Ok(ExitCode::SUCCESS);
        }
        Command::Laws(a) => (ExperimentKind::Laws, a),
        Command::Sbs(a) => (ExperimentKind::Sbs, a),
        Command::Cycle(a) => (ExperimentKind::Cycle, a),
        Command::Temporal(a) => (ExperimentKind::Temporal, a),
        Command::Multiscale(a) => (ExperimentKind::Multiscale, a),
        Command::Hierarchy(a) => (ExperimentKind::Hierarchy, a),
        Command::Control(a) => (ExperimentKind::Control, a),
    };
    run_family(kind, args)
}

fn run_family(kind: ExperimentKind, args: RunArgs) -> Result<ExitCode> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if config.kind != kind {
        return Err(Error::Config(format!(
            "config at {} describes kind `{}`, but the `{kind}` subcommand was invoked",
            args.config.display(),
            config.kind
        )));
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(out) = args.out {
        config.output_path = Some(out.display().to_string());
    }
    // Overrides can invalidate a previously valid config (e.g. --trials 0).
    config.validate()?;
    let out_path = config.output_path.clone().ok_or_else(|| {
        Error::Config("no output path: set `output_path` in the config or pass --out".into())
    })?;
    let trace = run_experiment(&config)?;
    trace.write_to(Path::new(&out_path))?;
    for c in &trace.checks {
        let verdict = if c.pass { "pass" } else { "fail" };
        println!("check {}: {verdict} ({})", c.name, c.detail);
    }
    println!(
        "{kind}: {} — {} rows, {} violations, trace written to {out_path}",
        if trace.pass() { "pass" } else { "fail" },
        trace.rows.len(),
        trace.violations.len()
    );
    Ok(if trace.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
