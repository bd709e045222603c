//! `dome`: JSON-configured synthesis, evolution, sweeps and cascade planning.
//!
//! Exit codes: 0 on success, 2 for rejected configuration or input, 3 for
//! numerical failure (including infeasible cascades), 1 for I/O errors. Errors
//! are reported as a single JSON object on stderr.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::Format;
use output::{emit, resolve, sidecar_path, Destination};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] dome_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }

    fn report(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Config(_) => "config",
            CliError::Core(e) if e.is_numerical() => "numerical",
            CliError::Core(_) => "invalid_input",
            CliError::Io(_) | CliError::Csv(_) => "io",
        };
        let mut err = json!({ "kind": kind, "message": self.to_string(), "exit_code": self.exit_code() });
        if let CliError::Core(dome_core::Error::Infeasible { segment, j_sub, j_min }) = self {
            err["segment"] = json!(segment);
            err["j_sub_mhz"] = json!(config::rad_to_mhz(*j_sub));
            err["j_min_mhz"] = json!(config::rad_to_mhz(*j_min));
        }
        json!({ "error": err })
    }
}

#[derive(Parser)]
#[command(name = "dome", version, about = "Inverse-designed spin-chain toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output file (`-` for stdout). Overrides the config's `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config's `format`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct a chain from a spectrum or the dome closed form.
    Synth {
        #[arg(long)]
        config: PathBuf,
    },
    /// Populations and fidelities over time.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Disorder or decoherence sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Cascade plan under a coupling budget.
    Cascade {
        #[arg(long)]
        config: PathBuf,
    },
}

fn pick_format(flag: Option<Format>, config: Option<Format>, default: Format) -> Format {
    flag.or(config).unwrap_or(default)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let (name, out, format, artifact) = match &cli.command {
        Command::Synth { config } => {
            let cfg: config::SynthConfig = config::load(config)?;
            let format = pick_format(cli.format, cfg.format, Format::Json);
            ("synth", cfg.out.clone(), format, commands::synth(&cfg, format)?)
        }
        Command::Evolve { config } => {
            let cfg: config::EvolveConfig = config::load(config)?;
            let format = pick_format(cli.format, cfg.format, Format::Csv);
            ("evolve", cfg.out.clone(), format, commands::evolve(&cfg, format)?)
        }
        Command::Sweep { config } => {
            let cfg: config::SweepConfig = config::load(config)?;
            let format = pick_format(cli.format, cfg.format, Format::Csv);
            let seed = cli.seed.or(cfg.seed).unwrap_or(commands::DEFAULT_SEED);
            ("sweep", cfg.out.clone(), format, commands::sweep(&cfg, seed, format)?)
        }
        Command::Cascade { config } => {
            let cfg: config::CascadeConfig = config::load(config)?;
            let format = pick_format(cli.format, cfg.format, Format::Json);
            ("cascade", cfg.out.clone(), format, commands::cascade(&cfg, format)?)
        }
    };
    let dest = resolve(cli.out.as_deref(), out.as_deref(), name, format);
    emit(&dest, &artifact.primary)?;
    if let (Destination::File(path), Some(side)) = (&dest, &artifact.sidecar) {
        output::write_atomic(&sidecar_path(Path::new(path)), side)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code())
        }
    }
}
