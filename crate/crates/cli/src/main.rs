//! `cca`: command-line driver for coupled-cavity-array simulations.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
//! 4 dimension cap exceeded, 1 anything else. Failures print a JSON object
//! on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cca_core::Error;
use clap::{Parser, Subcommand};
use serde_json::json;

use cca_cli::commands;
use cca_cli::config::{self, Format, RunConfig};
use cca_cli::output::{render, Report};

#[derive(Parser, Debug)]
#[command(name = "cca", version, about = "Coupled cavity arrays with V-system atoms")]
struct Cli {
    /// Run configuration (JSON). Defaults to the bundled `chain4` preset.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Bundled preset: chain4 or kitaev.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Worker threads for sweeps and matrix assembly.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Overrides the solver seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Single-cavity spectra for each configured excitation number.
    SiteSpectrum,
    /// Effective pair coefficients for every edge.
    PairCoeffs,
    /// Exact ground state of the full lattice model.
    Ground,
    /// Full model vs effective spin model over a parameter sweep.
    Sweep,
    /// Lowest levels of the effective spin model.
    SpinGround,
    /// Kitaev honeycomb spectrum.
    Kitaev,
    /// First-order hopping at non-integer filling, with element audit.
    Mixed,
    /// Validity margins of the effective description.
    Regime,
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::NotConverged { .. } => (3, "not_converged"),
            Error::DimensionCap { .. } => (4, "dimension_cap"),
            Error::Io(_) => (2, "io"),
            Error::Json(_) => (2, "config"),
            Error::InvalidParameter(_)
            | Error::Detuned { .. }
            | Error::IndexOutOfRange { .. }
            | Error::InvalidLattice(_)
            | Error::DimensionMismatch { .. }
            | Error::Regime(_) => (2, "config"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

fn failure(code: u8, kind: &'static str, message: impl Into<String>) -> Failure {
    Failure {
        code,
        kind,
        message: message.into(),
    }
}

fn load(cli: &Cli) -> Result<(RunConfig, Option<PathBuf>), Failure> {
    let (text, base) = match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| failure(2, "io", format!("{}: {e}", path.display())))?;
            (text, path.parent().map(Path::to_path_buf))
        }
        (None, name) => {
            let name = name.as_deref().unwrap_or("chain4");
            let text = config::preset(name).ok_or_else(|| failure(2, "config", format!("unknown preset {name:?}")))?;
            (text.to_string(), None)
        }
    };
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = cli.seed {
        cfg.solver.seed = seed;
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    if let Some(path) = &cli.output {
        cfg.output.path = Some(path.clone());
    }
    Ok((cfg, base))
}

fn emit<R: Report>(report: cca_core::Result<R>, format: Format) -> Result<String, Failure> {
    render(&report?, format).map_err(|e| failure(1, "serialization", e.to_string()))
}

fn dispatch(cmd: Command, cfg: &RunConfig, base: Option<&Path>) -> Result<String, Failure> {
    let f = cfg.output.format;
    match cmd {
        Command::SiteSpectrum => emit(commands::site_spectrum_cmd(cfg), f),
        Command::PairCoeffs => emit(commands::pair_coeffs_cmd(cfg, base), f),
        Command::Ground => emit(commands::ground_cmd(cfg, base), f),
        Command::Sweep => emit(commands::sweep_cmd(cfg, base), f),
        Command::SpinGround => emit(commands::spin_ground_cmd(cfg, base), f),
        Command::Kitaev => emit(commands::kitaev_cmd(cfg), f),
        Command::Mixed => emit(commands::mixed_cmd(cfg, base), f),
        Command::Regime => emit(commands::regime_cmd(cfg, base), f),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let (cfg, base) = load(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(failure(2, "config", "--jobs must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| failure(1, "threads", e.to_string()))?;
    let text = pool.install(|| dispatch(cli.command, &cfg, base.as_deref()))?;
    match &cfg.output.path {
        Some(path) => std::fs::write(path, text).map_err(|e| failure(2, "io", format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message, "exit_code": f.code }));
            ExitCode::from(f.code)
        }
    }
}
