//! `gfl`: command-line front end of the gauge-field verification workbench.
//!
//! Records go to standard output (JSON Lines or CSV), a summary table to
//! standard error. Exit status: 0 when every record passes, 1 when a check
//! fails or a run breaks, 2 on invalid flags, configuration or input files.
//! Angles are radians throughout.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gfl_core::report::{all_pass, summary_table, write_records, Format};

use commands::Failure;
use config::Config;

#[derive(Parser, Debug)]
#[command(name = "gfl", version, about = "Numerical checks for Haydys-Witten, Kapustin-Witten, extended Bogomolny and twisted Nahm equations")]
struct Cli {
    /// Configuration file: `key = value` lines under `[section]` headers
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Record format: json (JSON Lines) or csv
    #[arg(long, global = true)]
    format: Option<String>,
    /// Write records to this file instead of standard output
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Indicial roots at a regular twisted Nahm pole
    Indicial(IndicialArgs),
    /// Twisted Nahm-pole and knot-singularity model solutions
    VerifyModels(ModelsArgs),
    /// Dimensional-reduction dictionaries of the Haydys-Witten equations
    VerifyReductions(ReductionsArgs),
    /// Integrate the twisted octonionic Nahm flow away from the pole
    SolveNahm(NahmArgs),
    /// Residuals of field snapshots
    Residual(ResidualArgs),
}

#[derive(Args, Debug, Default)]
pub struct IndicialArgs {
    /// Ranks, comma separated (N >= 2)
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Incidence angles in [0, pi/2), comma separated
    #[arg(long)]
    pub beta: Option<String>,
    /// Also compare against the spin-spin / Casimir closed form
    #[arg(long)]
    pub compare_casimir: bool,
}

#[derive(Args, Debug, Default)]
pub struct ModelsArgs {
    /// Rank of the principal embedding used for the pole model
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Incidence angles in [0, pi/2] for the twisted Nahm pole
    #[arg(long)]
    pub beta: Option<String>,
    /// Knot charges lambda >= 1
    #[arg(long)]
    pub lambda: Option<String>,
    /// Halving step sizes for the finite-difference sweep
    #[arg(long)]
    pub sweep: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct ReductionsArgs {
    /// Numbers of invariant directions: 1, 2 and/or 4
    #[arg(long)]
    pub k: Option<String>,
    /// Angles (theta for k = 1, 2; beta for k = 4)
    #[arg(long)]
    pub theta: Option<String>,
    /// First seed of the random configurations
    #[arg(long)]
    pub seed: Option<String>,
    /// Number of consecutive seeds
    #[arg(long)]
    pub seeds: Option<String>,
    /// Matrix size of the gauge algebra su(N)
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Grid points per axis
    #[arg(long)]
    pub points: Option<String>,
    /// Derivative backend: spectral, central4 or central2
    #[arg(long)]
    pub backend: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct NahmArgs {
    #[arg(long = "N")]
    pub n: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    /// Start of the interval (> 0; the pole sits at y = 0)
    #[arg(long)]
    pub y0: Option<String>,
    #[arg(long)]
    pub y1: Option<String>,
    /// Fixed rk4 steps, or the output samples of the adaptive method
    #[arg(long)]
    pub steps: Option<String>,
    /// rk4 or adaptive
    #[arg(long)]
    pub method: Option<String>,
    /// Local tolerance of the adaptive method
    #[arg(long)]
    pub tol: Option<String>,
    /// Norm at which integration is abandoned
    #[arg(long)]
    pub blow_up: Option<String>,
    /// Start on the exact pole and report the deviation from it
    #[arg(long)]
    pub exact_pole: bool,
    /// Amplitude of the first y^1 indicial mode added at y0
    #[arg(long, allow_hyphen_values = true)]
    pub perturb: Option<String>,
    /// Trajectory CSV (y, component, re, im)
    #[arg(long)]
    pub trajectory: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct ResidualArgs {
    /// hw, kw, vw, ebe, tebe, hym, nahm-h or nahm-o
    #[arg(long)]
    pub system: Option<String>,
    /// Kapustin-Witten / twisted Bogomolny angle
    #[arg(long)]
    pub theta: Option<String>,
    /// Twist angle of the octonionic Nahm equations
    #[arg(long)]
    pub beta: Option<String>,
    /// Derivative backend (default: spectral on periodic grids, else central4)
    #[arg(long)]
    pub backend: Option<String>,
    /// Tolerance on the maximal pointwise residual norm
    #[arg(long)]
    pub tol: Option<String>,
    /// Also check the linear dictionary between equivalent forms (kw, vw)
    #[arg(long)]
    pub check_form_equivalence: bool,
    /// Snapshot files
    pub snapshots: Vec<PathBuf>,
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("GFL_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("GFL_THREADS must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err("GFL_THREADS must be a positive integer, got 0".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    configure_threads()?;
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let general = cfg.scope("general");
    let format: Format = general
        .value::<String>(&cli.format, "format", "json".into())?
        .parse()
        .map_err(|e: gfl_core::Error| Failure::Config(e.to_string()))?;
    let output: Option<PathBuf> = general.optional(&cli.output.as_ref().map(|p| p.display().to_string()), "output")?;
    let records = match &cli.command {
        Command::Indicial(a) => commands::indicial(a, &cfg.scope("indicial")),
        Command::VerifyModels(a) => commands::verify_models(a, &cfg.scope("verify-models")),
        Command::VerifyReductions(a) => commands::verify_reductions(a, &cfg.scope("verify-reductions")),
        Command::SolveNahm(a) => commands::solve_nahm(a, &cfg.scope("solve-nahm")),
        Command::Residual(a) => commands::residual(a, &cfg.scope("residual")),
    }?;
    let io = |e: gfl_core::Error| Failure::Run(e.to_string());
    match output {
        Some(path) => {
            let mut f = std::fs::File::create(&path).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
            write_records(&mut f, &records, format).map_err(io)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            write_records(&mut out, &records, format).map_err(io)?;
            out.flush().map_err(|e| Failure::Run(e.to_string()))?;
        }
    }
    eprint!("{}", summary_table(&records));
    Ok(all_pass(&records))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("gfl: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("gfl: {msg}");
            ExitCode::from(1)
        }
    }
}
