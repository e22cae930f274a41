//! One pipeline per subcommand; each writes its artifacts into an [`OutputDir`].

use serde::Serialize;
use skyrme_core::diagnostics::{fit_exponential_decay, residual_check, Equation, RateFit, ResidualField};
use skyrme_core::grid::{FieldForm, FieldState, RadialGrid};
use skyrme_core::model::{verify_rhs, ModelKind};
use skyrme_core::physical::{evolve_physical, evolve_semilinear, fit_blowup_rate, BlowupReport, EvolveControls, StopReason};
use skyrme_core::profile::{profile_constants, ProfileParams};
use skyrme_core::similarity::{
    evolve_similarity, initial_data, shoot_t, Perturbation, Projection, ShootControls, ShootingResult, SimControls, SimilarityGrid,
    SimilarityState,
};
use skyrme_core::spectral::{compute_spectrum_with, EigenEntry, SpectrumOptions};
use skyrme_core::{coeffs, Execution};

use crate::config::{ResidualTarget, RunConfig};
use crate::error::{CliError, Context};
use crate::output::{col, OutputDir};

/// Outcome of a pipeline whose artifacts were written: `Err` carries a failed check.
pub type Checked = Result<(), String>;

fn check(pass: bool, what: &str) -> Checked {
    if pass {
        Ok(())
    } else {
        Err(format!("{what} failed; see the report"))
    }
}

pub fn profile(cfg: &RunConfig, out: &mut OutputDir) -> Result<Checked, CliError> {
    let p = profile_constants(cfg.profile.d).context("profile constants")?;
    let n = cfg.profile.samples;
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let rho = if k + 1 == n { p.rho_star } else { p.rho_star * k as f64 / (n - 1) as f64 };
        let u = p.eval_u(rho).context("profile evaluation")?;
        let u_tilde = p.eval_u_tilde(rho).context("profile evaluation")?;
        let u2 = if rho < p.rho_star { p.eval_u_prime(rho).context("profile evaluation")? } else { f64::INFINITY };
        rows.push(vec![rho, u, u_tilde, u_tilde, u2]);
    }
    out.write_csv(
        "profile.csv",
        &format!("self-similar profile, d = {}; U2 = dU/drho is unbounded at rho*", p.d),
        &[col("rho", "1"), col("U", "rad"), col("U_tilde", "rad/rho"), col("U1", "rad/rho"), col("U2", "rad/rho")],
        &rows,
    )?;
    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        params: ProfileParams,
        slope_at_origin: f64,
        samples: usize,
        u_at_rho_star: f64,
    }
    let u_end = p.eval_u(p.rho_star).context("profile endpoint")?;
    out.write_json("profile.json", &Summary { params: p, slope_at_origin: p.slope_at_origin(), samples: n, u_at_rho_star: u_end })?;
    Ok(Ok(()))
}

pub fn verify_rhs_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<Checked, CliError> {
    let report = verify_rhs(cfg.rhs.samples, cfg.rhs.tol).context("kernel verification")?;
    out.write_json("verify_rhs.json", &report)?;
    Ok(check(report.pass, "kernel verification"))
}

pub fn verify_coeffs(cfg: &RunConfig, out: &mut OutputDir) -> Result<Checked, CliError> {
    let report = coeffs::verify_coeffs_fd(cfg.coeffs.samples, cfg.coeffs.tol).context("coefficient verification")?;
    out.write_json("verify_coeffs.json", &report)?;
    Ok(check(report.pass, "coefficient verification"))
}

/// Profile data with blowup time 1 plus the configured perturbation, in the form the model evolves.
fn physical_initial_data(cfg: &RunConfig, grid: &RadialGrid) -> Result<FieldState, CliError> {
    let p = ProfileParams::d5();
    let v = cfg.evolve.perturbation.synthesize();
    let reduced = cfg.model.kind == ModelKind::Semilinear;
    let mut rows = Vec::with_capacity(grid.len());
    for &r in &grid.nodes {
        let (v1, v2) = v.eval(r).context("perturbation")?;
        let (u, du) = (p.eval_u(r).context("profile")?, p.eval_u_prime(r).context("profile")?);
        rows.push(if reduced { (p.eval_u_tilde(r).context("profile")? + v1, du + v2) } else { (u + r * v1, r * (du + v2)) });
    }
    let form = if reduced { FieldForm::Reduced } else { FieldForm::Angle };
    let mut state = FieldState::zeros(form, grid.len());
    for (i, (a, b)) in rows.into_iter().enumerate() {
        state.values[i] = a;
        state.rates[i] = b;
    }
    Ok(state)
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveSummary {
    pub model: ModelKind,
    pub lambda: f64,
    pub perturbation: Perturbation,
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
    pub stop: StopReason,
    pub blowup: BlowupReport,
}

/// Runs the physical evolution and fits the blowup rate; with `out` the series are written too.
pub fn run_evolve(cfg: &RunConfig, out: Option<&mut OutputDir>) -> Result<EvolveSummary, CliError> {
    let e = &cfg.evolve;
    let params = cfg.model.params();
    let grid = RadialGrid::new(e.r_max, e.n).context("grid")?;
    let init = physical_initial_data(cfg, &grid)?;
    let controls = EvolveControls {
        snapshot_stride: e.snapshot_stride,
        cone_vertex: (e.cone_vertex > 0.0).then_some(e.cone_vertex),
        blowup_ceiling: e.blowup_ceiling,
        resolution_limit: e.resolution_limit,
        ..EvolveControls::default()
    };
    let traj = if init.form == FieldForm::Reduced {
        evolve_semilinear(&params, &grid, &init, e.t_end, e.cfl, &controls)
    } else {
        evolve_physical(&params, &grid, &init, e.t_end, e.cfl, &controls)
    }
    .context("physical evolution")?;
    let blowup = fit_blowup_rate(&traj, e.fit_fraction).context("blowup-rate fit")?;
    let summary = EvolveSummary {
        model: params.model,
        lambda: params.lambda,
        perturbation: e.perturbation.synthesize(),
        n: grid.n,
        dt: traj.dt,
        steps: traj.steps,
        stop: traj.stop,
        blowup,
    };
    if let Some(out) = out {
        let mut rows = Vec::new();
        for snap in &traj.snapshots {
            let angle = if snap.form == FieldForm::Reduced { snap.to_angle(&grid) } else { snap.clone() };
            for (i, &r) in grid.nodes.iter().enumerate() {
                rows.push(vec![angle.t, r, angle.values[i], angle.rates[i]]);
            }
        }
        out.write_csv(
            "snapshots.csv",
            &format!("angle field every {} steps and at the final time", e.snapshot_stride),
            &[col("t", "time"), col("r", "length"), col("psi", "rad"), col("psi_t", "rad/time")],
            &rows,
        )?;
        let series: Vec<Vec<f64>> = traj.origin_gradient.iter().map(|&(t, g)| vec![t, g]).collect();
        out.write_csv("origin_gradient.csv", "radial derivative of psi at the origin", &[col("t", "time"), col("psi_r0", "rad/length")], &series)?;
        out.write_json("blowup.json", &summary)?;
    }
    Ok(summary)
}

pub fn evolve(cfg: &RunConfig, out: &mut OutputDir) -> Result<Checked, CliError> {
    run_evolve(cfg, Some(out))?;
    Ok(Ok(()))
}

fn sim_controls(cfg: &RunConfig) -> SimControls {
    let s = &cfg.similarity;
    SimControls { cfl: s.cfl, output_stride: s.output_stride, record_norm: true, ..SimControls::default() }
}

fn similarity_setup(cfg: &RunConfig) -> Result<(SimilarityGrid, Projection, Perturbation), CliError> {
    let g = SimilarityGrid::new(cfg.similarity.n).context("similarity grid")?;
    let proj = Projection::from_grid(&g).context("unstable eigenpair")?;
    Ok((g, proj, cfg.similarity.perturbation.synthesize()))
}

fn norm_rows(series: impl Iterator<Item = (f64, f64, f64)>) -> Vec<Vec<f64>> {
    series.map(|(t, n, c)| vec![t, n, c]).collect()
}

const NORM_COLUMNS: [crate::output::Column; 3] = [col("tau", "1"), col("norm", "1"), col("unstable_coeff", "1")];

/// Decay fit of the norm, or the reason it is unavailable.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayFit {
    Fit(RateFit),
    Unavailable(String),
}

impl DecayFit {
    fn of(series: &[(f64, f64)], window: (f64, f64)) -> Self {
        match fit_exponential_decay(series, window) {
            Ok(f) => DecayFit::Fit(f),
            Err(e) => DecayFit::Unavailable(e.to_string()),
        }
    }

    pub fn omega(&self) -> f64 {
        match self {
            DecayFit::Fit(f) => -f.exponent,
            DecayFit::Unavailable(_) => f64::NAN,
        }
    }
}

pub fn evolve_sim(cfg: &RunConfig, out: &mut OutputDir) -> Result<Checked, CliError> {
    let s = &cfg.similarity;
    let (g, proj, v) = similarity_setup(cfg)?;
    let init = initial_data(&g, |r| v.eval(r), s.t_blowup).context("similarity initial data")?;
    let traj = evolve_similarity(&g, &init, cfg.model.lambda, s.t_blowup, s.tau_end, &sim_controls(cfg), Some(&proj))
        .context("similarity evolution")?;
    out.write_csv(
        "norms.csv",
        "perturbation norm and unstable coefficient in similarity time",
        &NORM_COLUMNS,
        &norm_rows(traj.series.iter().map(|p| (p.tau, p.norm, p.coeff))),
    )?;
    #[derive(Serialize)]
    struct Summary {
        lambda: f64,
        t_blowup: f64,
        perturbation: Perturbation,
        n: usize,
        dtau: f64,
        final_tau: f64,
        final_coeff: f64,
        divergent: Option<String>,
        decay: DecayFit,
    }
    let norms: Vec<(f64, f64)> = traj.series.iter().map(|p| (p.tau, p.norm)).collect();
    out.write_json(
        "evolve_sim.json",
        &Summary {
            lambda: cfg.model.lambda,
            t_blowup: s.t_blowup,
            perturbation: v,
            n: g.n,
            dtau: traj.dtau,
            final_tau: traj.last.tau,
            final_coeff: traj.final_coeff(),
            divergent: traj.divergent.clone(),
            decay: DecayFit::of(&norms, s.fit_window),
        },
    )?;
    Ok(Ok(()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ShootSummary {
    pub lambda: f64,
    pub perturbation: Perturbation,
    pub n: usize,
    #[serde(flatten)]
    pub result: ShootingResult,
    pub decay: DecayFit,
}

pub fn run_shoot(cfg: &RunConfig, out: &mut OutputDir) -> Result<ShootSummary, CliError> {
    let sh = &cfg.shoot;
    let (g, proj, v) = similarity_setup(cfg)?;
    let controls = ShootControls { tau_horizon: sh.tau_horizon, max_iterations: sh.max_iterations, sim: sim_controls(cfg) };
    let result = shoot_t(&g, &v, cfg.model.lambda, sh.bracket, sh.tol, &controls, &proj).context("shooting")?;
    let rows = norm_rows(result.norm_history.iter().zip(&result.projection_history).map(|(&(t, n), &(_, c))| (t, n, c)));
    out.write_csv("norms.csv", "tuned run: perturbation norm and unstable coefficient in similarity time", &NORM_COLUMNS, &rows)?;
    let decay = DecayFit::of(&result.norm_history, cfg.similarity.fit_window);
    let summary = ShootSummary { lambda: cfg.model.lambda, perturbation: v, n: g.n, result, decay };
    out.write_json("shooting.json", &summary)?;
    Ok(summary)
}

pub fn shoot(cfg: &RunConfig, out: &mut OutputDir) -> Result<Checked, CliError> {
    let s = run_shoot(cfg, out)?;
    Ok(check(s.result.converged, "bisection convergence"))
}

pub fn spectrum(cfg: &RunConfig, out: &mut OutputDir) -> Result<Checked, CliError> {
    let s = &cfg.spectrum;
    let opts = SpectrumOptions {
        n_coarse: s.n_coarse,
        n_fine: s.n_fine,
        match_tol: s.match_tol,
        include_potential: s.include_potential,
        exec: Execution::Auto,
    };
    let r = compute_spectrum_with(&opts).context("spectrum")?;
    #[derive(Serialize)]
    struct Summary<'a> {
        n_coarse: usize,
        n_fine: usize,
        match_tol: f64,
        include_potential: bool,
        resolved_count: usize,
        unstable: &'a [(f64, f64)],
        unit_eigenvalue: Option<f64>,
        gap: f64,
        omega_hat: f64,
        symmetry_residual: (f64, f64),
        symmetry_angle: f64,
        eigenvalues: &'a [EigenEntry],
    }
    out.write_json(
        "spectrum.json",
        &Summary {
            n_coarse: r.n_coarse,
            n_fine: r.n_fine,
            match_tol: r.match_tol,
            include_potential: r.include_potential,
            resolved_count: r.eigenvalues.iter().filter(|e| e.resolved).count(),
            unstable: &r.unstable_list,
            unit_eigenvalue: r.unit_eigenvalue,
            gap: r.gap,
            omega_hat: r.omega_hat,
            symmetry_residual: r.symmetry_residual,
            symmetry_angle: r.symmetry_angle,
            eigenvalues: &r.eigenvalues,
        },
    )?;
    let m = r.nodes.len();
    if r.g_h.len() == 2 * m && r.g_adj.len() == 2 * m {
        let rows: Vec<Vec<f64>> = (0..m).map(|j| vec![r.nodes[j], r.g_h[j], r.g_h[m + j], r.g_adj[j], r.g_adj[m + j]]).collect();
        out.write_csv(
            "eigenvectors.csv",
            "right and left eigenvectors of the unit eigenvalue on the fine nodes",
            &[col("rho", "1"), col("g1", "1"), col("g2", "1"), col("adj1", "1"), col("adj2", "1")],
            &rows,
        )?;
    }
    Ok(Ok(()))
}

/// Exact self-similar angle field with blowup time 1, sampled at time `t`.
fn self_similar_frame(grid: &RadialGrid, t: f64) -> Result<FieldState, CliError> {
    let p = ProfileParams::d5();
    let s = 1.0 - t;
    let mut f = FieldState::zeros(FieldForm::Angle, grid.len());
    for (i, &r) in grid.nodes.iter().enumerate() {
        let rho = r / s;
        f.values[i] = p.eval_u(rho).context("profile")?;
        f.rates[i] = rho * p.eval_u_prime(rho).context("profile")? / s;
    }
    f.t = t;
    Ok(f)
}

fn residual_at(target: ResidualTarget, n: usize) -> Result<(f64, f64), CliError> {
    match target {
        ResidualTarget::SelfSimilar => {
            let grid = RadialGrid::new(1.0, n).context("grid")?;
            let k = grid.spacing;
            let f = [self_similar_frame(&grid, -k)?, self_similar_frame(&grid, 0.0)?, self_similar_frame(&grid, k)?];
            let field = ResidualField::Physical { grid: &grid, frames: [&f[0], &f[1], &f[2]] };
            Ok((k, residual_check(field, &Equation::StrongField).context("residual")?))
        }
        ResidualTarget::Profile => {
            let g = SimilarityGrid::new(n).context("similarity grid")?;
            let s = SimilarityState::zeros(&g);
            let field = ResidualField::Similarity { grid: &g, state: &s, dtau: None };
            Ok((g.h, residual_check(field, &Equation::Similarity { lambda: 0.0, t_blowup: 1.0 }).context("residual")?))
        }
    }
}

pub fn check_residual(cfg: &RunConfig, out: &mut OutputDir) -> Result<Checked, CliError> {
    let target = cfg.residual.target;
    let mut rows = Vec::new();
    for &n in &cfg.residual.sizes {
        let (h, res) = residual_at(target, n)?;
        rows.push(vec![n as f64, h, res]);
    }
    let orders: Vec<f64> = rows.windows(2).map(|w| (w[0][2] / w[1][2]).ln() / (w[0][1] / w[1][1]).ln()).collect();
    out.write_csv(
        "residual.csv",
        "max residual of an exact solution inserted into the discrete equation",
        &[col("n", "cells"), col("h", "1"), col("residual", "1")],
        &rows,
    )?;
    #[derive(Serialize)]
    struct Summary<'a> {
        target: ResidualTarget,
        sizes: &'a [usize],
        residuals: Vec<f64>,
        observed_orders: Vec<f64>,
    }
    out.write_json(
        "residual.json",
        &Summary { target, sizes: &cfg.residual.sizes, residuals: rows.iter().map(|r| r[2]).collect(), observed_orders: orders },
    )?;
    Ok(Ok(()))
}
