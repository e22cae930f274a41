//! Parameter sweep over `λ`: independent shooting (and blowup) cells run concurrently.

use serde::Serialize;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::commands::{run_evolve, run_shoot};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{col, OutputDir, RunRecord, RECORD_FILE};

/// Result of one sweep cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub lambda: f64,
    pub dir: String,
    pub t_star: f64,
    pub omega_fit: f64,
    pub exponent_fit: f64,
    pub error: Option<String>,
    /// Hash of the cell's run record.
    pub record_sha256: String,
}

fn cell_dir(index: usize, lambda: f64) -> String {
    format!("cell_{index:03}_lambda_{lambda}")
}

fn run_cell(cfg: &RunConfig, lambda: f64, out: &mut OutputDir) -> (f64, f64, f64, Result<(), CliError>) {
    let mut cell = cfg.clone();
    cell.model.lambda = lambda;
    let (mut t_star, mut omega, mut exponent) = (f64::NAN, f64::NAN, f64::NAN);
    let result = (|| {
        let s = run_shoot(&cell, out)?;
        t_star = s.result.t_star;
        omega = s.decay.omega();
        if !s.result.converged {
            return Err(CliError::Numerical("bisection did not converge".into()));
        }
        if cell.sweep.blowup_exponent {
            let e = run_evolve(&cell, None)?;
            out.write_json("blowup.json", &e)?;
            exponent = e.blowup.exponent_fit;
        }
        Ok(())
    })();
    (t_star, omega, exponent, result)
}

/// Runs every cell, each in its own subdirectory, and writes the summary table.
pub fn sweep(cfg: &RunConfig, workers: usize, deterministic: bool, out: &mut OutputDir) -> Result<Result<(), String>, CliError> {
    let lambdas = &cfg.sweep.lambdas;
    if lambdas.is_empty() {
        return Err(CliError::config("sweep.lambdas", "parameter grid is empty"));
    }
    let workers = workers.clamp(1, lambdas.len());
    let next = AtomicUsize::new(0);
    let cells: Mutex<Vec<Option<CellSummary>>> = Mutex::new(vec![None; lambdas.len()]);
    let root = out.root().to_path_buf();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&lambda) = lambdas.get(i) else { break };
                let summary = execute_cell(cfg, i, lambda, deterministic, &root);
                cells.lock().expect("cell table poisoned")[i] = Some(summary);
            });
        }
    });
    let mut cells: Vec<CellSummary> = cells.into_inner().expect("cell table poisoned").into_iter().flatten().collect();
    cells.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let rows: Vec<Vec<f64>> = cells.iter().map(|c| vec![c.lambda, c.t_star, c.omega_fit, c.exponent_fit]).collect();
    out.write_csv(
        "summary.csv",
        "sweep summary; NaN marks a failed or disabled measurement",
        &[col("lambda", "1"), col("T_star", "time"), col("omega_fit", "1"), col("exponent_fit", "1")],
        &rows,
    )?;
    out.write_json("sweep.json", &cells)?;
    let failed: Vec<String> = cells.iter().filter_map(|c| c.error.as_ref().map(|e| format!("lambda = {}: {e}", c.lambda))).collect();
    Ok(if failed.is_empty() { Ok(()) } else { Err(format!("{} of {} cells failed: {}", failed.len(), cells.len(), failed.join("; "))) })
}

fn execute_cell(cfg: &RunConfig, index: usize, lambda: f64, deterministic: bool, root: &Path) -> CellSummary {
    let dir = cell_dir(index, lambda);
    let start = Instant::now();
    let (t_star, omega_fit, exponent_fit, error) = match OutputDir::create(&root.join(&dir)) {
        Ok(mut out) => {
            let (t, w, p, res) = run_cell(cfg, lambda, &mut out);
            let mut config = cfg.clone();
            config.model.lambda = lambda;
            config.sweep.lambdas = vec![lambda];
            let record = RunRecord {
                command: "shoot".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                deterministic,
                config,
                wall_time_s: (!deterministic).then(|| start.elapsed().as_secs_f64()),
                outputs: out.manifest().to_vec(),
                error: res.as_ref().err().map(|e| e.to_string()),
            };
            let written = out.write_json(RECORD_FILE, &record);
            (t, w, p, res.and(written).err().map(|e| e.to_string()))
        }
        Err(e) => (f64::NAN, f64::NAN, f64::NAN, Some(e.to_string())),
    };
    let record_sha256 = std::fs::read(root.join(&dir).join(RECORD_FILE)).map(|b| crate::output::sha256_hex(&b)).unwrap_or_default();
    CellSummary { lambda, dir, t_star, omega_fit, exponent_fit, error, record_sha256 }
}
