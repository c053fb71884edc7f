use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use irs_sop_cli::{execute, load_config, CliResult, ExperimentKind, ExperimentSpec, OutputFormat};

#[derive(Parser)]
#[command(name = "irs-sop", version, about = "Secrecy outage of IRS-assisted links with element selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Outage probability at one subset size (`point.K`).
    SopPoint(RunArgs),
    /// Outage probability against the number of selected elements.
    SweepK(RunArgs),
    /// Outage probability against surface size, without selection and at the best K.
    SweepN(RunArgs),
    /// Best subset size per scenario.
    OptimalK(RunArgs),
    /// Simulated SNR statistics against the analytic laws.
    ValidateDist(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    /// Config file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Result file; a `<out>.meta.json` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (0 = one per CPU).
    #[arg(long)]
    workers: Option<usize>,
}

fn resolve(kind: ExperimentKind, args: RunArgs) -> CliResult<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => load_config(path)?,
        None => ExperimentSpec::default(),
    };
    spec.kind = kind;
    if let Some(out) = args.out {
        spec.out = Some(out);
    }
    if let Some(seed) = args.seed {
        spec.mc.seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.mc.trials = trials;
    }
    if let Some(workers) = args.workers {
        spec.mc.workers = workers;
    }
    if let Some(format) = args.format {
        spec.format = match format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    spec.validate()?;
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::SopPoint(a) => (ExperimentKind::SopPoint, a),
        Command::SweepK(a) => (ExperimentKind::SweepK, a),
        Command::SweepN(a) => (ExperimentKind::SweepN, a),
        Command::OptimalK(a) => (ExperimentKind::OptimalK, a),
        Command::ValidateDist(a) => (ExperimentKind::ValidateDist, a),
    };
    match resolve(kind, args).and_then(|spec| execute(&spec)) {
        Ok(run) => {
            eprintln!(
                "wrote {} ({} rows) and {}",
                run.result_path.display(),
                run.table.rows.len(),
                run.sidecar_path.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
