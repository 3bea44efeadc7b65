use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use stadrag::config::{ConfigFormat, ExperimentConfig, ExperimentKind, SshMode, OUTPUT_DIR_ENV};
use stadrag::output::write_tables;
use stadrag::{runner, AppError};

/// Driven three-level qubit simulator: STA transfer, DRAG, tomography and SSH topology.
///
/// Every config key is also accepted as a flag of the same name, e.g.
/// `--omega_mhz 25` or `--alphas [0,0.5]`. Precedence: flag, then the
/// STADRAG_OUTPUT_DIR variable (output_dir only), then the config file, then
/// the built-in defaults.
#[derive(Debug, Parser)]
#[command(name = "stadrag", version)]
struct Cli {
    /// Config file, TOML or JSON (chosen by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Realtime,
    Virtual,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Toml,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Population transfer for every schedule, truncation and dynamics case.
    Transfer,
    /// Tomographic Bloch trajectories with and without DRAG.
    Qst,
    /// θq curves and topological invariants for the configured ratios.
    Ssh {
        #[arg(long, value_enum, default_value = "realtime")]
        mode: Mode,
    },
    /// Invariants across the topological transition.
    Sweep,
    /// Finite-chain spectra and edge states.
    Lattice,
    /// Runs the experiment named in the config's `experiment` key.
    Run,
    /// Prints the effective configuration.
    DumpConfig {
        #[arg(long, value_enum, default_value = "toml")]
        format: Format,
    },
}

fn config_keys() -> Vec<String> {
    let value = serde_json::to_value(ExperimentConfig::default()).expect("config serialises");
    value.as_object().expect("config is an object").keys().cloned().collect()
}

fn build_config(cli: &Cli, matches: &ArgMatches, keys: &[String]) -> Result<ExperimentConfig, AppError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        cfg.output_dir = PathBuf::from(dir);
    }
    let overrides: Vec<(&str, &str)> = keys
        .iter()
        .filter_map(|k| matches.get_one::<String>(k).map(|v| (k.as_str(), v.as_str())))
        .collect();
    cfg.with_overrides(overrides)
}

fn execute(cli: Cli, matches: &ArgMatches, keys: &[String]) -> Result<(), AppError> {
    let mut cfg = build_config(&cli, matches, keys)?;
    let tables = match cli.command {
        Command::DumpConfig { format } => {
            let text = match format {
                Format::Toml => cfg.to_toml(),
                Format::Json => cfg.to_json(),
            };
            // the dump must parse back to the same config
            let fmt = if matches!(format, Format::Json) { ConfigFormat::Json } else { ConfigFormat::Toml };
            debug_assert_eq!(ExperimentConfig::parse(&text, fmt)?, cfg);
            // a closed pipe (e.g. `| head`) is not an error
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            return Ok(());
        }
        Command::Transfer => {
            cfg.experiment = ExperimentKind::Transfer;
            runner::run_transfer(&cfg)?
        }
        Command::Qst => {
            cfg.experiment = ExperimentKind::QstTrajectory;
            runner::run_qst_trajectory(&cfg)?
        }
        Command::Ssh { mode } => {
            let (kind, mode) = match mode {
                Mode::Realtime => (ExperimentKind::SshRealtime, SshMode::Realtime),
                Mode::Virtual => (ExperimentKind::SshVirtual, SshMode::Virtual),
            };
            cfg.experiment = kind;
            runner::run_ssh(&cfg, mode)?
        }
        Command::Sweep => {
            cfg.experiment = ExperimentKind::SshSweep;
            runner::run_sweep(&cfg)?
        }
        Command::Lattice => {
            cfg.experiment = ExperimentKind::Lattice;
            runner::run_lattice(&cfg)?
        }
        Command::Run => runner::run(&cfg)?,
    };
    let mut out = std::io::stdout().lock();
    for path in write_tables(&cfg.output_dir, &tables, &cfg)? {
        let _ = writeln!(out, "{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let keys = config_keys();
    let command = Cli::command().args(
        keys.iter()
            .map(|k| Arg::new(k.clone()).long(k.clone()).value_name("VALUE").global(true).help_heading("Config overrides")),
    );
    let matches = command.get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match execute(cli, &matches, &keys) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
