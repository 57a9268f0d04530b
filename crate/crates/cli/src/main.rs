use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uplink_cli::{emit, parse_spec, presets, run_experiment, write_csv, ExperimentSpec};

#[derive(Parser)]
#[command(name = "uplink", version, about = "Uplink MIMO training-energy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a spec file.
    Run { spec: PathBuf },
    /// Run a built-in experiment.
    Preset {
        /// One of fig1, fig-image1, fig-image2, fig-image3, fig-image4.
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a spec file without running it.
    Validate { spec: PathBuf },
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("MIMO_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("MIMO_THREADS must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn load(path: &Path) -> Result<ExperimentSpec, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_spec(&text).map_err(|e| format!("{}:\n{e}", path.display()))
}

fn execute(spec: &ExperimentSpec, out: Option<&Path>) -> Result<ExitCode, String> {
    let result = run_experiment(spec);
    match out {
        Some(path) => emit(&result.rows, path),
        None => write_csv(&result.rows, io::stdout().lock()),
    }
    .map_err(|e| e.to_string())?;
    for f in &result.failures {
        eprintln!("error: {f}");
    }
    Ok(if result.succeeded() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| match cli.command {
        Command::Run { spec } => {
            let spec = load(&spec)?;
            execute(&spec, spec.out.as_deref())
        }
        Command::Preset { name, out, seed } => {
            let text = presets::preset(&name)
                .ok_or_else(|| format!("unknown preset '{name}' (expected one of {})", presets::NAMES.join(", ")))?;
            let mut spec = parse_spec(text).map_err(|e| e.to_string())?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            execute(&spec, out.as_deref())
        }
        Command::Validate { spec } => {
            let spec = load(&spec)?;
            let rows = spec.sweep.written.len() * spec.receivers.len() * spec.schemes.len();
            println!("ok: {rows} rows");
            Ok(ExitCode::SUCCESS)
        }
    });
    outcome.unwrap_or_else(|msg| {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    })
}
