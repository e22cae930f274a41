//! `skyrme-lab`: configuration, command dispatch and persistence for
//! reproducible blowup experiments.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

use clap::{Parser, ValueEnum};
use std::path::{Path, PathBuf};
use std::time::Instant;

use config::RunConfig;
use error::CliError;
use output::{OutputDir, RunRecord, RECORD_FILE};

/// Environment variable that overrides the default output directory.
pub const OUT_ENV: &str = "SKYRME_LAB_OUT";
pub const DEFAULT_OUT: &str = "skyrme-lab-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Profile,
    VerifyRhs,
    VerifyCoeffs,
    Evolve,
    EvolveSim,
    Shoot,
    Spectrum,
    CheckResidual,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::VerifyRhs => "verify-rhs",
            Command::VerifyCoeffs => "verify-coeffs",
            Command::Evolve => "evolve",
            Command::EvolveSim => "evolve-sim",
            Command::Shoot => "shoot",
            Command::Spectrum => "spectrum",
            Command::CheckResidual => "check-residual",
            Command::Sweep => "sweep",
        }
    }
}

/// Reproducible numerical experiments on self-similar Skyrme blowup.
#[derive(Debug, Parser)]
#[command(name = "skyrme-lab", version)]
pub struct Cli {
    pub command: Command,
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides $SKYRME_LAB_OUT and the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses all available cores.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Omit wall-clock data so identical runs produce identical files.
    #[arg(long)]
    pub deterministic: bool,
}

/// Output directory: `--out`, then the environment, then the config, then the default.
pub fn resolve_out(cli_out: Option<&Path>, env_out: Option<&str>, cfg: &RunConfig) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| env_out.filter(|s| !s.is_empty()).map(PathBuf::from))
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Checks every field the command reads, before anything is written.
pub fn validate(command: Command, cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate_model()?;
    match command {
        Command::Profile => cfg.validate_profile(),
        Command::VerifyRhs => cfg.validate_rhs(),
        Command::VerifyCoeffs => cfg.validate_coeffs(),
        Command::Evolve => cfg.validate_evolve(),
        Command::EvolveSim => cfg.validate_similarity(),
        Command::Shoot => cfg.validate_shoot(),
        Command::Spectrum => cfg.validate_spectrum(),
        Command::CheckResidual => cfg.validate_residual(),
        Command::Sweep => cfg.validate_sweep(),
    }
}

fn available_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Validates, executes the pipeline, and writes the artifacts and the run record.
pub fn run(command: Command, cfg: &RunConfig, out_dir: &Path, workers: usize, deterministic: bool) -> Result<RunRecord, CliError> {
    validate(command, cfg)?;
    let start = Instant::now();
    let mut out = OutputDir::create(out_dir)?;
    let outcome = skyrme_core::par::with_workers(workers, || -> Result<commands::Checked, CliError> {
        match command {
            Command::Profile => commands::profile(cfg, &mut out),
            Command::VerifyRhs => commands::verify_rhs_cmd(cfg, &mut out),
            Command::VerifyCoeffs => commands::verify_coeffs(cfg, &mut out),
            Command::Evolve => commands::evolve(cfg, &mut out),
            Command::EvolveSim => commands::evolve_sim(cfg, &mut out),
            Command::Shoot => commands::shoot(cfg, &mut out),
            Command::Spectrum => commands::spectrum(cfg, &mut out),
            Command::CheckResidual => commands::check_residual(cfg, &mut out),
            Command::Sweep => {
                let cells = match (cfg.sweep.workers, workers) {
                    (0, 0) => available_workers(),
                    (0, w) | (w, _) => w,
                };
                sweep::sweep(cfg, cells, deterministic, &mut out)
            }
        }
    });
    let error = match &outcome {
        Ok(Ok(())) => None,
        Ok(Err(msg)) => Some(msg.clone()),
        Err(e) => Some(e.to_string()),
    };
    let record = RunRecord {
        command: command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        deterministic,
        config: cfg.clone(),
        wall_time_s: (!deterministic).then(|| start.elapsed().as_secs_f64()),
        outputs: out.manifest().to_vec(),
        error,
    };
    out.write_json(RECORD_FILE, &record)?;
    match outcome? {
        Ok(()) => Ok(record),
        Err(msg) => Err(CliError::Numerical(msg)),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = std::fs::read_to_string(&cli.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", cli.config.display())))
        .and_then(|text| RunConfig::from_toml(&text))
        .and_then(|cfg| {
            let env = std::env::var(OUT_ENV).ok();
            let dir = resolve_out(cli.out.as_deref(), env.as_deref(), &cfg);
            run(cli.command, &cfg, &dir, cli.workers, cli.deterministic).map(|r| (dir, r))
        });
    match result {
        Ok((dir, record)) => {
            println!("{}: wrote {} files to {}", record.command, record.outputs.len() + 1, dir.display());
            0
        }
        Err(e) => {
            eprintln!("skyrme-lab: {e}");
            e.exit_code()
        }
    }
}
