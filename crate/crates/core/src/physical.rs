//! Method-of-lines evolution in physical coordinates with blowup detection.

use crate::diagnostics::{golden_section_min, linear_fit};
use crate::error::{Error, Result};
pub use crate::grid::laplacian7;
use crate::grid::{FieldForm, FieldState, RadialGrid};
use crate::model::{cotc, q1, q3, sinc, wm, ModelKind, ModelParams};
use crate::par::{self, Execution};
use serde::{Deserialize, Serialize};

/// `|sin ψ|` below this value at `r > 0` makes the strong-field principal part degenerate.
const DEGENERACY_TOL: f64 = 1e-10;
/// Reference gradient floor for the blowup ceiling, so data with a flat origin is not flagged.
pub const GRADIENT_FLOOR: f64 = 1.0;

/// Run controls shared by the physical solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveControls {
    /// Store a snapshot every this many steps (the final state is always stored).
    pub snapshot_stride: usize,
    /// Vertex `T_c` of a shrinking active region `r ≤ T_c − t + margin·h`.
    pub cone_vertex: Option<f64>,
    /// Cells kept outside the light cone of `T_c`.
    pub cone_margin_cells: usize,
    /// Stop once `|∂ᵣψ(t,0)|` exceeds this multiple of its initial value.
    pub blowup_ceiling: f64,
    /// Stop once `|∂ᵣψ(t,0)|·h` exceeds this value (the grid no longer resolves the core).
    pub resolution_limit: f64,
    /// Stop once the active region has fewer cells than this.
    pub min_active_cells: usize,
    pub exec: Execution,
}

impl Default for EvolveControls {
    fn default() -> Self {
        Self {
            snapshot_stride: 64,
            cone_vertex: None,
            cone_margin_cells: 8,
            blowup_ceiling: 1e4,
            resolution_limit: 0.1,
            min_active_cells: 16,
            exec: Execution::Auto,
        }
    }
}

/// Why an evolution ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    BlowupCeiling,
    UnderResolved,
    ConeExhausted,
}

/// Snapshots and origin-gradient history of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: RadialGrid,
    pub dt: f64,
    pub steps: usize,
    pub snapshots: Vec<FieldState>,
    /// `(t, ∂ᵣψ(t, 0))` after every step.
    pub origin_gradient: Vec<(f64, f64)>,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn last(&self) -> &FieldState {
        self.snapshots.last().expect("trajectory holds the initial state")
    }
}

/// Least-squares blowup-rate fit `|∂ᵣψ(t,0)| ≈ c (T − t)^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub detected: bool,
    pub t_fit: f64,
    pub c_fit: f64,
    pub exponent_fit: f64,
    pub residual: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

/// `∂ᵣψ(0)` of an odd profile from the first two nodes, fourth-order accurate.
#[inline]
pub fn origin_gradient_odd(psi: &[f64], h: f64) -> f64 {
    (8.0 * psi[1] - psi[2]) / (6.0 * h)
}

fn validate_run(grid: &RadialGrid, init: &FieldState, t_end: f64, cfl: f64, controls: &EvolveControls) -> Result<()> {
    init.check(grid)?;
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::Stability(format!("cfl must lie in (0, 1], got {cfl}")));
    }
    if !(t_end.is_finite() && t_end >= init.t) {
        return Err(Error::Domain(format!("t_end = {t_end} precedes the initial time {}", init.t)));
    }
    if controls.snapshot_stride == 0 {
        return Err(Error::Domain("snapshot_stride must be positive".into()));
    }
    if let Some(tc) = controls.cone_vertex {
        if !(tc > init.t) {
            return Err(Error::Domain(format!("cone vertex {tc} must exceed the initial time")));
        }
    }
    Ok(())
}

/// Second-order system `q' = p`, `p' = acc(q, p)` advanced by classical RK4 on
/// the active nodes `0..active`.
struct Integrator<'a> {
    grid: &'a RadialGrid,
    controls: EvolveControls,
    form: FieldForm,
}

type AccFn<'a> = dyn Fn(&[f64], &[f64], usize, &mut [f64]) -> Result<()> + Sync + 'a;

impl Integrator<'_> {
    fn active_len(&self, t: f64) -> usize {
        let n = self.grid.len();
        match self.controls.cone_vertex {
            None => n,
            Some(tc) => {
                let cells = ((tc - t) / self.grid.spacing).ceil().max(0.0) as usize + self.controls.cone_margin_cells;
                (cells + 1).min(n)
            }
        }
    }

    fn gradient(&self, q: &[f64]) -> f64 {
        match self.form {
            FieldForm::Angle => origin_gradient_odd(q, self.grid.spacing),
            FieldForm::Reduced => q[0],
        }
    }

    fn run(&self, init: &FieldState, t_end: f64, cfl: f64, acc: &AccFn<'_>) -> Result<Trajectory> {
        let h = self.grid.spacing;
        let dt_nominal = cfl * h;
        let n = self.grid.len();
        let mut q = init.values.clone();
        let mut p = init.rates.clone();
        let mut t = init.t;
        let g_ref = self.gradient(&q).abs().max(GRADIENT_FLOOR);
        let mut snapshots = vec![FieldState { t, form: self.form, values: q.clone(), rates: p.clone() }];
        let mut origin_gradient = vec![(t, self.gradient(&q))];
        let mut stop = StopReason::Completed;
        let mut steps = 0usize;
        let (mut kq, mut kp) = (vec![[0.0; 4]; n], vec![[0.0; 4]; n]);
        let (mut qs, mut ps) = (vec![0.0; n], vec![0.0; n]);
        let mut a = vec![0.0; n];
        while t < t_end - 1e-14 * t_end.abs().max(1.0) {
            let active = self.active_len(t);
            if active < self.controls.min_active_cells + 1 {
                stop = StopReason::ConeExhausted;
                break;
            }
            let dt = dt_nominal.min(t_end - t);
            for stage in 0..4 {
                let c = [0.0, 0.5, 0.5, 1.0][stage];
                if stage == 0 {
                    qs[..active].copy_from_slice(&q[..active]);
                    ps[..active].copy_from_slice(&p[..active]);
                } else {
                    for i in 0..active {
                        qs[i] = q[i] + c * dt * kq[i][stage - 1];
                        ps[i] = p[i] + c * dt * kp[i][stage - 1];
                    }
                }
                acc(&qs[..active], &ps[..active], active, &mut a[..active])?;
                for i in 0..active {
                    kq[i][stage] = ps[i];
                    kp[i][stage] = a[i];
                }
            }
            for i in 0..active {
                q[i] += dt / 6.0 * (kq[i][0] + 2.0 * kq[i][1] + 2.0 * kq[i][2] + kq[i][3]);
                p[i] += dt / 6.0 * (kp[i][0] + 2.0 * kp[i][1] + 2.0 * kp[i][2] + kp[i][3]);
            }
            if self.form == FieldForm::Angle {
                q[0] = 0.0;
                p[0] = 0.0;
            }
            t += dt;
            steps += 1;
            if q[..active].iter().chain(&p[..active]).any(|v| !v.is_finite()) {
                return Err(Error::Stability(format!("non-finite state at t = {t}")));
            }
            let g = self.gradient(&q);
            origin_gradient.push((t, g));
            let ceiling = g.abs() > self.controls.blowup_ceiling * g_ref;
            let under = g.abs() * h > self.controls.resolution_limit;
            if steps.is_multiple_of(self.controls.snapshot_stride) || ceiling || under || t >= t_end - 1e-14 {
                snapshots.push(FieldState { t, form: self.form, values: q.clone(), rates: p.clone() });
            }
            if ceiling {
                stop = StopReason::BlowupCeiling;
                break;
            }
            if under {
                stop = StopReason::UnderResolved;
                break;
            }
        }
        if snapshots.last().map(|s| s.t) != Some(t) {
            snapshots.push(FieldState { t, form: self.form, values: q.clone(), rates: p.clone() });
        }
        Ok(Trajectory { grid: self.grid.clone(), dt: dt_nominal, steps, snapshots, origin_gradient, stop })
    }
}

/// Outflow acceleration `−∂ᵣ(∂ₜq)` at the last active node.
#[inline]
fn outflow(p: &[f64], h: f64) -> f64 {
    let m = p.len();
    -(3.0 * p[m - 1] - 4.0 * p[m - 2] + p[m - 3]) / (2.0 * h)
}

/// `∂ₜ²ψ` of the angle form at interior node `i`; `None` flags a degenerate principal part.
#[inline]
pub fn angle_acceleration(alpha_eff: f64, beta: f64, r: f64, psi: f64, psi_r: f64, psi_rr: f64, psi_t: f64) -> Option<f64> {
    let s = psi.sin();
    let c = psi.cos();
    let kin = psi_t * psi_t - psi_r * psi_r;
    if alpha_eff == 0.0 {
        let cot_term = if kin == 0.0 {
            0.0
        } else if s.abs() < DEGENERACY_TOL {
            return None;
        } else {
            c / s * kin
        };
        return Some(psi_rr + 2.0 / r * psi_r - cot_term - 3.0 * s * c / (r * r));
    }
    let s2r = s * s / (r * r);
    let a = alpha_eff + 4.0 * beta * s2r;
    Some(
        psi_rr + 4.0 / r * (alpha_eff + 2.0 * beta * s2r) / a * psi_r
            - 4.0 * s * c / (r * r) * (alpha_eff + beta * (kin + 3.0 * s2r)) / a,
    )
}

/// `∂ₜ²u` of the reduced form at one node, given the discrete 7D Laplacian.
#[inline]
pub fn reduced_acceleration(alpha_eff: f64, beta: f64, r: f64, lap: f64, u: f64, u_r: f64, u_t: f64) -> Option<f64> {
    let x = r * u;
    let sc = sinc(x);
    let s = u * sc;
    let a = alpha_eff + 4.0 * beta * s * s;
    let diff = u_t * u_t - u_r * u_r;
    if a <= 0.0 {
        // α_eff = 0 and sin(ru) = 0: only the trivial state is admissible.
        return if diff == 0.0 && u == 0.0 { Some(lap) } else { None };
    }
    let weight_sf = 4.0 * beta * s * s / a;
    let weight_wm = alpha_eff / a;
    let term1 = if diff == 0.0 { 0.0 } else { -cotc(x) * diff * 4.0 * beta * s * sc / a };
    let rest_sf = -2.0 * r * u * u * q1(x) * u_r - u * u * u * q3(x);
    Some(lap + term1 + weight_sf * rest_sf + weight_wm * u * u * u * wm(x))
}

/// Evolves the angle form of the full or strong-field equation.
pub fn evolve_physical(
    params: &ModelParams,
    grid: &RadialGrid,
    init: &FieldState,
    t_end: f64,
    cfl: f64,
    controls: &EvolveControls,
) -> Result<Trajectory> {
    params.validate()?;
    validate_run(grid, init, t_end, cfl, controls)?;
    if params.model == ModelKind::Semilinear {
        let u_init = angle_to_reduced(init, grid);
        let traj = evolve_semilinear(params, grid, &u_init, t_end, cfl, controls)?;
        let snapshots = traj.snapshots.iter().map(|s| s.to_angle(grid)).collect();
        return Ok(Trajectory { snapshots, ..traj });
    }
    if init.form != FieldForm::Angle {
        return Err(Error::Shape("evolve_physical expects an angle-form state".into()));
    }
    if init.values[0].abs() > 1e-12 {
        return Err(Error::Domain("psi(t, 0) must vanish".into()));
    }
    let alpha_eff = params.effective_alpha();
    let beta = params.beta;
    let h = grid.spacing;
    let nodes = &grid.nodes;
    let exec = controls.exec;
    let acc = move |q: &[f64], p: &[f64], active: usize, out: &mut [f64]| -> Result<()> {
        let last = active - 1;
        par::fill_indexed(exec, &mut out[..last], |i| {
            if i == 0 {
                return 0.0;
            }
            let psi_r = (q[i + 1] - q[i - 1]) / (2.0 * h);
            let psi_rr = (q[i + 1] - 2.0 * q[i] + q[i - 1]) / (h * h);
            angle_acceleration(alpha_eff, beta, nodes[i], q[i], psi_r, psi_rr, p[i]).unwrap_or(f64::NAN)
        });
        out[last] = outflow(p, h);
        if let Some(i) = out.iter().position(|v| v.is_nan()) {
            return Err(Error::Degenerate(format!("sin(psi) vanishes at r = {}", nodes[i])));
        }
        Ok(())
    };
    let integrator = Integrator { grid, controls: *controls, form: FieldForm::Angle };
    integrator.run(init, t_end, cfl, &acc)
}

/// Evolves the reduced variable `u = ψ/r` of the semilinear 7D form.
pub fn evolve_semilinear(
    params: &ModelParams,
    grid: &RadialGrid,
    init: &FieldState,
    t_end: f64,
    cfl: f64,
    controls: &EvolveControls,
) -> Result<Trajectory> {
    params.validate()?;
    validate_run(grid, init, t_end, cfl, controls)?;
    if init.form != FieldForm::Reduced {
        return Err(Error::Shape("evolve_semilinear expects a reduced-form state".into()));
    }
    let alpha_eff = params.effective_alpha();
    let beta = params.beta;
    let h = grid.spacing;
    let nodes = &grid.nodes;
    let exec = controls.exec;
    let acc = move |q: &[f64], p: &[f64], active: usize, out: &mut [f64]| -> Result<()> {
        let last = active - 1;
        par::fill_indexed(exec, &mut out[..last], |i| {
            let u_r = if i == 0 { 0.0 } else { (q[i + 1] - q[i - 1]) / (2.0 * h) };
            let lap = laplacian7(q, i, h);
            reduced_acceleration(alpha_eff, beta, nodes[i], lap, q[i], u_r, p[i]).unwrap_or(f64::NAN)
        });
        out[last] = outflow(p, h);
        if let Some(i) = out.iter().position(|v| v.is_nan()) {
            return Err(Error::Degenerate(format!("sin(ru) vanishes at r = {}", nodes[i])));
        }
        Ok(())
    };
    let integrator = Integrator { grid, controls: *controls, form: FieldForm::Reduced };
    integrator.run(init, t_end, cfl, &acc)
}

/// `u = ψ/r`, using the fourth-order origin slope at `r = 0`.
pub fn angle_to_reduced(state: &FieldState, grid: &RadialGrid) -> FieldState {
    if state.form == FieldForm::Reduced {
        return state.clone();
    }
    let h = grid.spacing;
    let conv = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .zip(&grid.nodes)
            .enumerate()
            .map(|(i, (x, r))| if i == 0 { origin_gradient_odd(v, h) } else { x / r })
            .collect()
    };
    FieldState { t: state.t, form: FieldForm::Reduced, values: conv(&state.values), rates: conv(&state.rates) }
}

/// Fits `|∂ᵣψ(t,0)| = c (T − t)^p` over the last `fit_window_fraction` of the
/// recorded time span, choosing `T` by golden-section search on the residual.
pub fn fit_blowup_rate(trajectory: &Trajectory, fit_window_fraction: f64) -> Result<BlowupReport> {
    fit_blowup_series(&trajectory.origin_gradient, fit_window_fraction)
}

/// [`fit_blowup_rate`] on a raw `(t, gradient)` series.
pub fn fit_blowup_series(series: &[(f64, f64)], fit_window_fraction: f64) -> Result<BlowupReport> {
    if !(fit_window_fraction > 0.0 && fit_window_fraction <= 1.0) {
        return Err(Error::Domain(format!("fit window fraction must lie in (0, 1], got {fit_window_fraction}")));
    }
    let no_blowup = |window: (f64, f64), n_points: usize| BlowupReport {
        detected: false,
        t_fit: f64::NAN,
        c_fit: f64::NAN,
        exponent_fit: f64::NAN,
        residual: f64::NAN,
        window,
        n_points,
    };
    if series.len() < 2 {
        return Ok(no_blowup((0.0, 0.0), series.len()));
    }
    let t_first = series[0].0;
    let t_last = series[series.len() - 1].0;
    let t_start = t_last - fit_window_fraction * (t_last - t_first);
    let pts: Vec<(f64, f64)> = series.iter().filter(|(t, _)| *t >= t_start).map(|&(t, g)| (t, g.abs())).collect();
    let window = (pts[0].0, t_last);
    let monotone = pts.windows(2).all(|w| w[1].1 > w[0].1);
    let grows = pts.last().unwrap().1 >= 2.0 * pts[0].1;
    if pts.len() < 8 || !monotone || !grows || pts[0].1 <= 0.0 {
        return Ok(no_blowup(window, pts.len()));
    }
    let span = (t_last - pts[0].0).max(f64::EPSILON);
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let fit_at = |log_gap: f64| {
        let tt = t_last + log_gap.exp();
        let xs: Vec<f64> = pts.iter().map(|p| (tt - p.0).ln()).collect();
        linear_fit(&xs, &ys)
    };
    let (log_gap, _) = golden_section_min(|s| fit_at(s).map(|f| f.2).unwrap_or(f64::INFINITY), (span * 1e-12).ln(), (span * 10.0).ln(), 1e-12)?;
    let (slope, intercept, residual) = fit_at(log_gap)?;
    Ok(BlowupReport {
        detected: slope < 0.0,
        t_fit: t_last + log_gap.exp(),
        c_fit: intercept.exp(),
        exponent_fit: slope,
        residual,
        window,
        n_points: pts.len(),
    })
}
