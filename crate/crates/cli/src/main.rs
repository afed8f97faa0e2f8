//! `drumtherm`: simulate, calibrate, analyze, thermal budget and report.

mod cmd;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drumtherm_core::io::RunConfig;
use drumtherm_core::Error;

#[derive(Parser, Debug)]
#[command(name = "drumtherm", version, about = "Sideband thermometry of a cryogenic optomechanical drum")]
struct Cli {
    /// Log informational messages as well as warnings.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Configuration file (`key = value` with `[section]` headers).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random seed; required to simulate.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Named parameter preset for sections the config leaves out.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a spectrum-analyzer acquisition into a frame container.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write a lossless text export of every frame.
        #[arg(long)]
        export_text: bool,
    },
    /// Simulate and fit a drive-power sweep, then calibrate g0, Γm and technical heating.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
    /// Sliding average, fits, back-action correction and fluctuation statistics.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Frame container; defaults to frames.sbth in the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Calibration file; defaults to the configured device constants.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Phonon thermal budget over a temperature grid.
    Thermal {
        #[command(flatten)]
        common: Common,
    },
    /// Summary document and plot data for a run directory.
    Report {
        #[command(flatten)]
        common: Common,
        /// Run directory to summarize; defaults to the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

/// Reads `--config` (or `fallback` when it exists) and applies the flags.
pub fn load_config(common: &Common, fallback: Option<&Path>) -> drumtherm_core::Result<RunConfig> {
    let cfg = match (&common.config, fallback) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(p)) if p.exists() => RunConfig::load(p)?,
        _ => RunConfig::default(),
    };
    cfg.with_overrides(common.seed, common.preset.as_deref(), common.out.as_deref())
}

/// The output directory, created if needed.
pub fn out_dir(cfg: &RunConfig) -> drumtherm_core::Result<PathBuf> {
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Error::Config("no output directory: pass --out or set `out` in [run]".into()))?;
    std::fs::create_dir_all(&out)?;
    Ok(out)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::SelfOscillation { .. } => 2,
        Error::Data { .. } | Error::Io(_) => 3,
        Error::Numerical(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .init();
    let result = match &cli.command {
        Command::Simulate { common, export_text } => cmd::simulate::run(common, *export_text),
        Command::Calibrate { common } => cmd::calibrate::run(common),
        Command::Analyze { common, input, calibration } => cmd::analyze::run(common, input.as_deref(), calibration.as_deref()),
        Command::Thermal { common } => cmd::thermal::run(common),
        Command::Report { common, input } => cmd::report::run(common, input.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
