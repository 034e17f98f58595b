//! Command-line front end.
//!
//! Exit codes: `0` success, `1` failed validation or calibration, `2` bad
//! input (unreadable files, malformed quotes or configuration, unknown
//! instruments, missing quotes).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rollover_core::calibration::calibrate;
use rollover_core::curve::ModelSpec;

use crate::config::{Config, ConfigError};
use crate::exec::Parallel;
use crate::io::{load_quotes, IoError};
use crate::mc::McError;
use crate::price::{price_table, PriceError};
use crate::report::{write_outputs, ReportError, SavedCalibration, CALIBRATION_FILE};
use crate::{fixtures, validate};

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for a failed validation or calibration.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for bad input.
pub const EXIT_INPUT: i32 = 2;

/// Multi-curve term structure calibration, pricing and validation.
#[derive(Debug, Parser)]
#[command(name = "rollover", version)]
pub struct Cli {
    /// Command to run.
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate a model to one day of quotes.
    Calibrate {
        /// TOML configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Quote file (`.csv` or `.json`) whose name ends in the valuation date.
        #[arg(long)]
        quotes: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Master seed, overriding the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of stages to run (1 to 3).
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
        stages: u8,
        /// Worker threads, overriding the configuration (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Price instruments off a saved calibration.
    Price {
        /// Saved calibration file, or the directory holding `calibration.toml`.
        #[arg(long)]
        model: PathBuf,
        /// Instrument specs such as `ois@5`, `basis:2m/5m@5` or `caplet:3m@1:0.01`.
        #[arg(required = true)]
        instruments: Vec<String>,
    },
    /// Run the oracle suite against a model.
    Validate {
        /// Saved calibration file or directory.
        #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
        model: Option<PathBuf>,
        /// Built-in reference model, e.g. `basis3_2013-01-01`.
        #[arg(long)]
        fixture: Option<String>,
        /// TOML configuration for the Monte Carlo settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Monte Carlo paths, overriding the configuration.
        #[arg(long)]
        mc_paths: Option<usize>,
        /// Monte Carlo seed, overriding the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Errors surfaced to the user, tagged with an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Quote file problem.
    #[error(transparent)]
    Io(#[from] IoError),
    /// Configuration problem.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Artifact problem.
    #[error(transparent)]
    Report(#[from] ReportError),
    /// Instrument problem.
    #[error(transparent)]
    Price(#[from] PriceError),
    /// Monte Carlo problem.
    #[error(transparent)]
    Mc(#[from] McError),
    /// Model or calibration failure.
    #[error(transparent)]
    Model(#[from] rollover_core::Error),
    /// Unknown built-in model.
    #[error("unknown fixture {0:?}")]
    Fixture(String),
}

impl CliError {
    /// Short machine-readable kind.
    pub fn kind(&self) -> &'static str {
        use rollover_core::Error as E;
        match self {
            CliError::Io(_) => "QuoteFile",
            CliError::Config(_) => "Config",
            CliError::Report(_) => "ModelFile",
            CliError::Price(PriceError::UnknownInstrument(_)) => "UnknownInstrument",
            CliError::Price(PriceError::Model { .. }) => "Pricing",
            CliError::Mc(McError::Config(_)) => "McConfig",
            CliError::Mc(_) => "MonteCarlo",
            CliError::Fixture(_) => "UnknownFixture",
            CliError::Model(e) => match e {
                E::MissingQuote(_) => "MissingQuote",
                E::InvalidParameter(_) => "InvalidParameter",
                E::Bootstrap { .. } => "Bootstrap",
                E::NegativeIntensity { .. } => "NegativeIntensity",
                _ => "Model",
            },
        }
    }

    /// Exit code for this error.
    pub fn exit_code(&self) -> i32 {
        use rollover_core::Error as E;
        match self {
            CliError::Model(E::MissingQuote(_) | E::InvalidParameter(_)) => EXIT_INPUT,
            CliError::Model(_) | CliError::Mc(McError::Model(_) | McError::Spec(_)) => EXIT_FAIL,
            CliError::Price(PriceError::Model { .. }) => EXIT_FAIL,
            _ => EXIT_INPUT,
        }
    }
}

fn model_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(CALIBRATION_FILE)
    } else {
        p.to_path_buf()
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    Ok(match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    })
}

/// Runs a calibration and writes its artifacts; returns the saved calibration.
pub fn cmd_calibrate(
    config: &Config,
    quotes: &Path,
    out: &Path,
    stages: u8,
    workers: usize,
) -> Result<SavedCalibration, CliError> {
    let qs = load_quotes(quotes)?;
    let exec = Parallel::new(workers);
    let result = calibrate(&qs, &config.calibration, stages, &exec)?;
    let saved = SavedCalibration::new(qs.date, &config.calibration, result);
    write_outputs(out, &saved)?;
    Ok(saved)
}

fn validate_model(model: &ModelSpec, config: &Config) -> Result<bool, CliError> {
    let report = validate::run(model, &config.mc)?;
    print!("{}", report.to_text());
    Ok(report.passed())
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Calibrate {
            config,
            quotes,
            out,
            seed,
            stages,
            workers,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg = cfg.with_seed(s);
            }
            let workers = workers.unwrap_or(cfg.workers);
            let saved = cmd_calibrate(&cfg, &quotes, &out, stages, workers)?;
            let r = &saved.result;
            let inside = r.residuals.iter().filter(|x| x.in_band()).count();
            println!(
                "calibrated {} with {} stage(s): objective {:e}, {inside} of {} instruments in band, written to {}",
                saved.date,
                saved.stages,
                r.objective,
                r.residuals.len(),
                out.display()
            );
            Ok(EXIT_OK)
        }
        Command::Price { model, instruments } => {
            let saved = SavedCalibration::load(&model_path(&model))?;
            print!("{}", price_table(&saved.result.model, &instruments)?);
            Ok(EXIT_OK)
        }
        Command::Validate {
            model,
            fixture,
            config,
            mc_paths,
            seed,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.mc.seed = s;
            }
            if let Some(n) = mc_paths {
                cfg.mc.n_paths = n;
            }
            let m = match (model, fixture) {
                (Some(p), _) => SavedCalibration::load(&model_path(&p))?.result.model,
                (None, Some(name)) => fixtures::all()?
                    .into_iter()
                    .find(|f| f.name == name)
                    .ok_or(CliError::Fixture(name))?
                    .model,
                (None, None) => unreachable!("clap requires --model or --fixture"),
            };
            Ok(if validate_model(&m, &cfg)? { EXIT_OK } else { EXIT_FAIL })
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            e.exit_code()
        }
    }
}
