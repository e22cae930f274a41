//! Perturbations of the profile in similarity coordinates: initial data,
//! the first-order system, unstable-mode projection and blowup-time shooting.

use crate::coeffs::{v1, v2};
use crate::diagnostics::{radial_norm, NormSpec, UniformRadial};
use crate::error::{Error, Result};
use crate::grid::{derivative, derivative_into, laplacian7, Parity};
use crate::model::{f_sf_radial, g_difference_radial, sinc};
use crate::par::{self, Execution};
use crate::profile::ProfileParams;
use crate::spectral::{real_eigenpair_near, weighted_norm_uniform};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Uniform grid on `[0, 1]` with the profile and potentials sampled at the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityGrid {
    pub n: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
    pub u1: Vec<f64>,
    pub u1_prime: Vec<f64>,
    pub u2: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    /// `f_SF` at the profile.
    pub f_profile: Vec<f64>,
    /// Guard half-width for `|ρφ₁|`.
    pub guard: f64,
}

impl SimilarityGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 {
            return Err(Error::Resolution(format!("similarity grid needs at least 16 cells, got {n}")));
        }
        let p = ProfileParams::d5();
        let h = 1.0 / n as f64;
        let nodes: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
        let mut u1 = Vec::with_capacity(n + 1);
        let mut u2 = Vec::with_capacity(n + 1);
        let mut u1_prime = Vec::with_capacity(n + 1);
        for &r in &nodes {
            let (a, b) = p.eval_profile_pair(r)?;
            u1.push(a);
            u2.push(b);
            u1_prime.push(p.eval_u_tilde_prime(r)?);
        }
        let f_profile = (0..=n).map(|j| f_sf_radial(u1[j], u1_prime[j], u2[j], nodes[j])).collect();
        Ok(Self {
            n,
            h,
            v1: nodes.iter().map(|&r| v1(r)).collect(),
            v2: nodes.iter().map(|&r| v2(r)).collect(),
            nodes,
            u1,
            u1_prime,
            u2,
            f_profile,
            guard: p.guard_width(),
        })
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Perturbation `Φ = (φ₁, φ₂)` of `(U₁, U₂)` at similarity time `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityState {
    pub tau: f64,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
}

impl SimilarityState {
    pub fn zeros(grid: &SimilarityGrid) -> Self {
        Self { tau: 0.0, phi1: vec![0.0; grid.len()], phi2: vec![0.0; grid.len()] }
    }

    pub fn check(&self, grid: &SimilarityGrid) -> Result<()> {
        if self.phi1.len() != grid.len() || self.phi2.len() != grid.len() {
            return Err(Error::Shape(format!("state has {}/{} entries, grid {}", self.phi1.len(), self.phi2.len(), grid.len())));
        }
        if self.phi1.iter().chain(&self.phi2).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite similarity state".into()));
        }
        Ok(())
    }

    /// Stacked vector `(φ₁, φ₂)`.
    pub fn stacked(&self) -> Vec<f64> {
        self.phi1.iter().chain(&self.phi2).copied().collect()
    }

    pub fn from_stacked(tau: f64, v: &[f64]) -> Self {
        let m = v.len() / 2;
        Self { tau, phi1: v[..m].to_vec(), phi2: v[m..].to_vec() }
    }
}

/// Physical perturbation data `v = (v₁, v₂)` on radius 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    #[default]
    Zero,
    /// `(a₁ e^{-r²/w²}, a₂ e^{-r²/w²})`.
    Gaussian { a1: f64, a2: f64, width: f64 },
    /// `ε · ((1+Λ)U₁, (2+Λ)U₂)`, the direction of the unstable mode.
    SymmetryMode { eps: f64 },
}

/// Radius on which perturbation data is defined.
pub const DATA_RADIUS: f64 = 2.0;

impl Perturbation {
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if !(0.0..=DATA_RADIUS * (1.0 + 1e-12)).contains(&r) {
            return Err(Error::Domain(format!("perturbation evaluated at r = {r} outside [0, 2]")));
        }
        Ok(match *self {
            Perturbation::Zero => (0.0, 0.0),
            Perturbation::Gaussian { a1, a2, width } => {
                let g = (-(r / width).powi(2)).exp();
                (a1 * g, a2 * g)
            }
            Perturbation::SymmetryMode { eps } => {
                let (a, b) = ProfileParams::d5().symmetry_mode(r)?;
                (eps * a, eps * b)
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Perturbation::Gaussian { a1, a2, width } if !(a1.is_finite() && a2.is_finite() && width > 0.0) => {
                Err(Error::Domain("gaussian perturbation needs finite amplitudes and positive width".into()))
            }
            Perturbation::SymmetryMode { eps } if !eps.is_finite() => Err(Error::Domain("eps must be finite".into())),
            _ => Ok(()),
        }
    }
}

/// `φᵢ(0, ρ) = Tⁱ vᵢ(Tρ) + Tⁱ Uᵢ(Tρ) − Uᵢ(ρ)`.
pub fn initial_data<F>(grid: &SimilarityGrid, v: F, t_blowup: f64) -> Result<SimilarityState>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    if !(0.5..=1.5).contains(&t_blowup) {
        return Err(Error::Domain(format!("T = {t_blowup} outside [1/2, 3/2]")));
    }
    let p = ProfileParams::d5();
    let mut state = SimilarityState::zeros(grid);
    for (j, &rho) in grid.nodes.iter().enumerate() {
        let x = t_blowup * rho;
        let (a, b) = v(x)?;
        let (ua, ub) = p.eval_profile_pair_extended(x)?;
        state.phi1[j] = t_blowup * (a + ua) - grid.u1[j];
        state.phi2[j] = t_blowup * t_blowup * (b + ub) - grid.u2[j];
    }
    Ok(state)
}

/// The symmetry mode `((1+Λ)U₁, (2+Λ)U₂)` sampled on the grid.
pub fn symmetry_mode(grid: &SimilarityGrid) -> Result<SimilarityState> {
    let p = ProfileParams::d5();
    let mut s = SimilarityState::zeros(grid);
    for (j, &r) in grid.nodes.iter().enumerate() {
        let (a, b) = p.symmetry_mode(r)?;
        s.phi1[j] = a;
        s.phi2[j] = b;
    }
    Ok(s)
}

/// Discrete 7D radial Laplacian of an even function: conservative form up to
/// the last interior node and `D(Du) + 6/ρ·Du` at `ρ = 1`.
pub fn laplacian(u: &[f64], h: f64, du: &[f64], out: &mut [f64]) {
    let n = u.len() - 1;
    for (i, o) in out[..n].iter_mut().enumerate() {
        *o = laplacian7(u, i, h);
    }
    let ddu = (3.0 * du[n] - 4.0 * du[n - 1] + du[n - 2]) / (2.0 * h);
    out[n] = ddu + 6.0 * du[n];
}

/// Decomposed right-hand side of the perturbation system.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsParts {
    /// `(−ρ∂ρφ₁ − φ₁ + φ₂, Δφ₁ − ρ∂ρφ₂ − 4φ₂)`.
    pub free: (Vec<f64>, Vec<f64>),
    /// `V₁φ₁ + V₂ρ(ρφ₂ − ∂ρφ₁)` in the second component.
    pub potential: Vec<f64>,
    /// `N(Φ)`.
    pub nonlinear: Vec<f64>,
    /// `λ²T²e^{−2τ}𝒢`.
    pub correction: Vec<f64>,
}

/// `σ = λTe^{−τ}`.
pub fn sigma_of(lambda: f64, t_blowup: f64, tau: f64) -> f64 {
    lambda * t_blowup * (-tau).exp()
}

/// Every block of the perturbation right-hand side, with the guard enforced.
pub fn rhs_parts(grid: &SimilarityGrid, state: &SimilarityState, lambda: f64, t_blowup: f64) -> Result<RhsParts> {
    state.check(grid)?;
    check_guard(grid, state)?;
    let m = grid.len();
    let h = grid.h;
    let d1 = derivative(&state.phi1, h, Parity::Even);
    let d2 = derivative(&state.phi2, h, Parity::Even);
    let mut lap = vec![0.0; m];
    laplacian(&state.phi1, h, &d1, &mut lap);
    let sigma = sigma_of(lambda, t_blowup, state.tau);
    let mut parts = RhsParts {
        free: (vec![0.0; m], vec![0.0; m]),
        potential: vec![0.0; m],
        nonlinear: vec![0.0; m],
        correction: vec![0.0; m],
    };
    for j in 0..m {
        let r = grid.nodes[j];
        let (p1, p2) = (state.phi1[j], state.phi2[j]);
        parts.free.0[j] = -r * d1[j] - p1 + p2;
        parts.free.1[j] = lap[j] - r * d2[j] - 4.0 * p2;
        parts.potential[j] = grid.v1[j] * p1 + grid.v2[j] * r * (r * p2 - d1[j]);
        parts.nonlinear[j] = nonlinear_at(grid, j, p1, d1[j], p2);
        parts.correction[j] = correction_at(grid, j, sigma, p1, d1[j], p2);
    }
    Ok(parts)
}

#[inline]
fn nonlinear_at(grid: &SimilarityGrid, j: usize, p1: f64, dp1: f64, p2: f64) -> f64 {
    let r = grid.nodes[j];
    let f = f_sf_radial(grid.u1[j] + p1, grid.u1_prime[j] + dp1, grid.u2[j] + p2, r);
    let v2 = grid.v2[j];
    f - grid.f_profile[j] - (grid.v1[j] * p1 - r * v2 * dp1 + (r * r * v2 - 2.0) * p2)
}

#[inline]
fn correction_at(grid: &SimilarityGrid, j: usize, sigma: f64, p1: f64, dp1: f64, p2: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let r = grid.nodes[j];
    let u = grid.u1[j] + p1;
    let s = u * sinc(r * u);
    let weight = sigma * sigma / (sigma * sigma + 4.0 * s * s);
    weight * g_difference_radial(u, grid.u1_prime[j] + dp1, grid.u2[j] + p2, r)
}

fn check_guard(grid: &SimilarityGrid, state: &SimilarityState) -> Result<()> {
    for (j, &r) in grid.nodes.iter().enumerate() {
        let z = (r * state.phi1[j]).abs();
        if z > grid.guard {
            return Err(Error::Guard(format!("|rho*phi1| = {z:.4} > {:.4} at rho = {r} (tau = {})", grid.guard, state.tau)));
        }
    }
    Ok(())
}

/// Scratch buffers for repeated right-hand-side evaluations.
struct Workspace {
    d1: Vec<f64>,
    d2: Vec<f64>,
    lap: Vec<f64>,
}

impl Workspace {
    fn new(m: usize) -> Self {
        Self { d1: vec![0.0; m], d2: vec![0.0; m], lap: vec![0.0; m] }
    }
}

fn rhs_into(
    grid: &SimilarityGrid,
    ws: &mut Workspace,
    exec: Execution,
    phi1: &[f64],
    phi2: &[f64],
    sigma: f64,
    out: (&mut [f64], &mut [f64]),
) -> Result<()> {
    let h = grid.h;
    for (j, &r) in grid.nodes.iter().enumerate() {
        if (r * phi1[j]).abs() > grid.guard || !phi1[j].is_finite() || !phi2[j].is_finite() {
            return Err(Error::Guard(format!("|rho*phi1| = {:.4} > {:.4} at rho = {r}", (r * phi1[j]).abs(), grid.guard)));
        }
    }
    derivative_into(phi1, h, Parity::Even, &mut ws.d1);
    derivative_into(phi2, h, Parity::Even, &mut ws.d2);
    laplacian(phi1, h, &ws.d1, &mut ws.lap);
    let (d1, d2, lap) = (&ws.d1, &ws.d2, &ws.lap);
    let (o1, o2) = out;
    par::fill_indexed(exec, o1, |j| -grid.nodes[j] * d1[j] - phi1[j] + phi2[j]);
    par::fill_indexed(exec, o2, |j| {
        let r = grid.nodes[j];
        let (p1, p2) = (phi1[j], phi2[j]);
        lap[j] - r * d2[j] - 4.0 * p2
            + grid.v1[j] * p1
            + grid.v2[j] * r * (r * p2 - d1[j])
            + nonlinear_at(grid, j, p1, d1[j], p2)
            + correction_at(grid, j, sigma, p1, d1[j], p2)
    });
    Ok(())
}

/// Time derivative `∂τΦ` of the perturbation system.
pub fn rhs_similarity(grid: &SimilarityGrid, state: &SimilarityState, lambda: f64, t_blowup: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    state.check(grid)?;
    let m = grid.len();
    let mut ws = Workspace::new(m);
    let (mut a, mut b) = (vec![0.0; m], vec![0.0; m]);
    let sigma = sigma_of(lambda, t_blowup, state.tau);
    rhs_into(grid, &mut ws, Execution::Sequential, &state.phi1, &state.phi2, sigma, (&mut a, &mut b))?;
    Ok((a, b))
}

/// Right-hand side of the undecomposed system for `Ψ = (U₁, U₂) + Φ`, with
/// every derivative taken by finite differences (used for residual checks).
pub fn similarity_rhs_full(grid: &SimilarityGrid, state: &SimilarityState, lambda: f64, t_blowup: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    state.check(grid)?;
    let m = grid.len();
    let h = grid.h;
    let psi1: Vec<f64> = (0..m).map(|j| grid.u1[j] + state.phi1[j]).collect();
    let psi2: Vec<f64> = (0..m).map(|j| grid.u2[j] + state.phi2[j]).collect();
    let d1 = derivative(&psi1, h, Parity::Even);
    let d2 = derivative(&psi2, h, Parity::Even);
    let mut lap = vec![0.0; m];
    laplacian(&psi1, h, &d1, &mut lap);
    let sigma = sigma_of(lambda, t_blowup, state.tau);
    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    for j in 0..m {
        let r = grid.nodes[j];
        a[j] = -r * d1[j] - psi1[j] + psi2[j];
        let u = psi1[j];
        let corr = if sigma == 0.0 {
            0.0
        } else {
            let s = u * sinc(r * u);
            sigma * sigma / (sigma * sigma + 4.0 * s * s) * g_difference_radial(u, d1[j], psi2[j], r)
        };
        b[j] = lap[j] - r * d2[j] - 2.0 * psi2[j] + f_sf_radial(u, d1[j], psi2[j], r) + corr;
    }
    Ok((a, b))
}

/// Dense matrix of the linear part (free + potential) acting on stacked `(φ₁, φ₂)`.
pub fn linear_operator_matrix(grid: &SimilarityGrid) -> DMatrix<f64> {
    let m = grid.len();
    let h = grid.h;
    let mut a = DMatrix::zeros(2 * m, 2 * m);
    let mut e = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut lap = vec![0.0; m];
    for k in 0..m {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[k] = 1.0;
        derivative_into(&e, h, Parity::Even, &mut d);
        laplacian(&e, h, &d, &mut lap);
        for j in 0..m {
            let r = grid.nodes[j];
            // Column k: φ₁ = e_k.
            a[(j, k)] = -r * d[j] - e[j];
            a[(m + j, k)] = lap[j] + grid.v1[j] * e[j] - grid.v2[j] * r * d[j];
            // Column m + k: φ₂ = e_k.
            a[(j, m + k)] = e[j];
            a[(m + j, m + k)] = -r * d[j] - 4.0 * e[j] + grid.v2[j] * r * r * e[j];
        }
    }
    a
}

/// Right and left eigenvectors of the discrete linear operator for the
/// eigenvalue near 1, used to extract the unstable coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub n: usize,
    pub eigenvalue: f64,
    /// `g_h`, scaled to the symmetry mode's weighted norm and positive at the origin.
    pub right: Vec<f64>,
    /// Left eigenvector scaled so that `⟨left, right⟩ = 1`.
    pub left: Vec<f64>,
}

impl Projection {
    /// Builds the unstable eigenpair of the finite-difference operator on `grid`.
    pub fn from_grid(grid: &SimilarityGrid) -> Result<Self> {
        let a = linear_operator_matrix(grid);
        let pair = real_eigenpair_near(&a, 1.0)?;
        let m = grid.len();
        let sym = symmetry_mode(grid)?;
        let target = weighted_norm_uniform(&grid.nodes, &sym.phi1, &sym.phi2, grid.h);
        let mut right = pair.right;
        let norm = weighted_norm_uniform(&grid.nodes, &right[..m], &right[m..], grid.h);
        let sign = if right[0] < 0.0 { -1.0 } else { 1.0 };
        right.iter_mut().for_each(|v| *v *= sign * target / norm);
        let pairing: f64 = pair.left.iter().zip(&right).map(|(a, b)| a * b).sum();
        if pairing.abs() < 1e-300 {
            return Err(Error::LinearAlgebra("left and right eigenvectors are orthogonal".into()));
        }
        let left = pair.left.iter().map(|v| v / pairing).collect();
        Ok(Self { n: grid.n, eigenvalue: pair.value, right, left })
    }

    pub fn project(&self, state: &SimilarityState) -> Result<f64> {
        let m = self.n + 1;
        if state.phi1.len() != m || state.phi2.len() != m {
            return Err(Error::Shape("state and projection sizes differ".into()));
        }
        Ok(self.left[..m].iter().zip(&state.phi1).map(|(a, b)| a * b).sum::<f64>()
            + self.left[m..].iter().zip(&state.phi2).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn right_state(&self) -> SimilarityState {
        SimilarityState::from_stacked(0.0, &self.right)
    }
}

/// Unstable coefficient of `state`; fails without spectral data.
pub fn project_unstable(state: &SimilarityState, projection: Option<&Projection>) -> Result<f64> {
    projection.ok_or_else(|| Error::Dependency("no unstable eigenpair available".into()))?.project(state)
}

/// Controls of [`evolve_similarity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimControls {
    /// `Δτ = cfl·h`.
    pub cfl: f64,
    /// Record the series every this many steps.
    pub output_stride: usize,
    /// Keep a full snapshot at every record.
    pub keep_snapshots: bool,
    pub record_norm: bool,
    pub norm: NormSpec,
    pub exec: Execution,
}

impl Default for SimControls {
    fn default() -> Self {
        Self { cfl: 0.5, output_stride: 10, keep_snapshots: false, record_norm: true, norm: NormSpec::default(), exec: Execution::Auto }
    }
}

/// One recorded point of an evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub tau: f64,
    pub norm: f64,
    pub coeff: f64,
}

/// Output of [`evolve_similarity`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrajectory {
    pub dtau: f64,
    pub series: Vec<SeriesPoint>,
    pub snapshots: Vec<SimilarityState>,
    pub last: SimilarityState,
    /// Set when the run left the guarded domain; holds the reason.
    pub divergent: Option<String>,
}

impl SimTrajectory {
    pub fn final_coeff(&self) -> f64 {
        self.series.last().map(|p| p.coeff).unwrap_or(0.0)
    }
}

/// Evolves the perturbation system with RK4 up to `tau_end`.
pub fn evolve_similarity(
    grid: &SimilarityGrid,
    init: &SimilarityState,
    lambda: f64,
    t_blowup: f64,
    tau_end: f64,
    controls: &SimControls,
    projection: Option<&Projection>,
) -> Result<SimTrajectory> {
    init.check(grid)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be nonnegative, got {lambda}")));
    }
    if !(controls.cfl > 0.0 && controls.cfl <= 1.0) {
        return Err(Error::Stability(format!("cfl must lie in (0, 1], got {}", controls.cfl)));
    }
    if controls.output_stride == 0 {
        return Err(Error::Domain("output_stride must be positive".into()));
    }
    check_guard(grid, init)?;
    let m = grid.len();
    let disc = UniformRadial::new(grid.n);
    let record = |s: &SimilarityState| -> Result<SeriesPoint> {
        let norm = if controls.record_norm {
            let a = radial_norm(&disc, &s.phi1, controls.norm)?;
            let b = radial_norm(&disc, &s.phi2, NormSpec { k: controls.norm.k.saturating_sub(1), ..controls.norm })?;
            (a * a + b * b).sqrt()
        } else {
            f64::NAN
        };
        let coeff = match projection {
            Some(p) => p.project(s)?,
            None => f64::NAN,
        };
        Ok(SeriesPoint { tau: s.tau, norm, coeff })
    };
    let dtau_nominal = controls.cfl * grid.h;
    let mut state = init.clone();
    let mut series = vec![record(&state)?];
    let mut snapshots = if controls.keep_snapshots { vec![state.clone()] } else { Vec::new() };
    let mut ws = Workspace::new(m);
    let mut k1 = [vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    let mut k2 = [vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    let (mut s1, mut s2) = (vec![0.0; m], vec![0.0; m]);
    let mut steps = 0usize;
    let mut divergent = None;
    while state.tau < tau_end - 1e-12 {
        let dtau = dtau_nominal.min(tau_end - state.tau);
        let mut failed = None;
        for stage in 0..4 {
            let c = [0.0, 0.5, 0.5, 1.0][stage];
            for j in 0..m {
                s1[j] = state.phi1[j] + if stage > 0 { c * dtau * k1[stage - 1][j] } else { 0.0 };
                s2[j] = state.phi2[j] + if stage > 0 { c * dtau * k2[stage - 1][j] } else { 0.0 };
            }
            let sigma = sigma_of(lambda, t_blowup, state.tau + c * dtau);
            let (a, b) = (&mut k1[stage], &mut k2[stage]);
            if let Err(e) = rhs_into(grid, &mut ws, controls.exec, &s1, &s2, sigma, (a, b)) {
                failed = Some(e);
                break;
            }
        }
        if let Some(e) = failed {
            divergent = Some(e.to_string());
            break;
        }
        for j in 0..m {
            state.phi1[j] += dtau / 6.0 * (k1[0][j] + 2.0 * k1[1][j] + 2.0 * k1[2][j] + k1[3][j]);
            state.phi2[j] += dtau / 6.0 * (k2[0][j] + 2.0 * k2[1][j] + 2.0 * k2[2][j] + k2[3][j]);
        }
        state.tau += dtau;
        steps += 1;
        let guard_hit = check_guard(grid, &state).err();
        let at_end = state.tau >= tau_end - 1e-12;
        if steps.is_multiple_of(controls.output_stride) || at_end || guard_hit.is_some() {
            series.push(record(&state)?);
            if controls.keep_snapshots {
                snapshots.push(state.clone());
            }
        }
        if let Some(e) = guard_hit {
            divergent = Some(e.to_string());
            break;
        }
    }
    Ok(SimTrajectory { dtau: dtau_nominal, series, snapshots, last: state, divergent })
}

/// Output of [`shoot_t`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub t_star: f64,
    pub bracket: (f64, f64),
    pub converged: bool,
    pub iterations: usize,
    /// `(τ, unstable coefficient)` of the run at `T_star`.
    pub projection_history: Vec<(f64, f64)>,
    /// Norm series `(τ, ‖Φ‖)` of the run at `T_star`.
    pub norm_history: Vec<(f64, f64)>,
    /// Whether the run at `T_star` stayed inside the guard.
    pub final_run_divergent: bool,
}

/// Shooting controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootControls {
    pub tau_horizon: f64,
    pub max_iterations: usize,
    pub sim: SimControls,
}

impl Default for ShootControls {
    fn default() -> Self {
        Self { tau_horizon: 6.0, max_iterations: 200, sim: SimControls { record_norm: false, ..SimControls::default() } }
    }
}

/// Sign of the late-time unstable coefficient for blowup time `t`.
pub fn shooting_sign(
    grid: &SimilarityGrid,
    v: &Perturbation,
    lambda: f64,
    t: f64,
    controls: &ShootControls,
    projection: &Projection,
) -> Result<(f64, bool)> {
    let init = initial_data(grid, |r| v.eval(r), t)?;
    if let Err(Error::Guard(msg)) = check_guard(grid, &init) {
        return Err(Error::Amplitude(format!("initial data at T = {t} violates the guard: {msg}")));
    }
    let sim = SimControls { record_norm: false, keep_snapshots: false, ..controls.sim };
    let traj = evolve_similarity(grid, &init, lambda, t, controls.tau_horizon, &sim, Some(projection))?;
    Ok((traj.final_coeff(), traj.divergent.is_some()))
}

/// Bisection on `T` of the sign of the unstable coefficient at `τ_horizon`.
pub fn shoot_t(
    grid: &SimilarityGrid,
    v: &Perturbation,
    lambda: f64,
    bracket: (f64, f64),
    tol: f64,
    controls: &ShootControls,
    projection: &Projection,
) -> Result<ShootingResult> {
    v.validate()?;
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || lo < 0.8 - 1e-12 || hi > 1.2 + 1e-12 {
        return Err(Error::Bracket(format!("bracket [{lo}, {hi}] must be increasing and inside [0.8, 1.2]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tol must be positive".into()));
    }
    let exec = controls.sim.exec;
    let (a, b) = par::join(
        exec,
        || shooting_sign(grid, v, lambda, lo, controls, projection),
        || shooting_sign(grid, v, lambda, hi, controls, projection),
    );
    let (f_lo, f_hi) = match (a, b) {
        (Err(Error::Amplitude(x)), Err(Error::Amplitude(_))) => return Err(Error::Amplitude(x)),
        (a, b) => (a?.0, b?.0),
    };
    if f_lo.signum() == f_hi.signum() || f_lo == 0.0 || f_hi == 0.0 {
        return Err(Error::Bracket(format!("no sign change: coefficient {f_lo:e} at {lo}, {f_hi:e} at {hi}")));
    }
    let mut iterations = 0;
    while hi - lo > tol && iterations < controls.max_iterations {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (f_mid, _) = shooting_sign(grid, v, lambda, mid, controls, projection)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let t_star = 0.5 * (lo + hi);
    let init = initial_data(grid, |r| v.eval(r), t_star)?;
    let sim = SimControls { record_norm: true, ..controls.sim };
    let traj = evolve_similarity(grid, &init, lambda, t_star, controls.tau_horizon, &sim, Some(projection))?;
    Ok(ShootingResult {
        t_star,
        bracket: (lo, hi),
        converged: hi - lo <= tol,
        iterations,
        projection_history: traj.series.iter().map(|p| (p.tau, p.coeff)).collect(),
        norm_history: traj.series.iter().map(|p| (p.tau, p.norm)).collect(),
        final_run_divergent: traj.divergent.is_some(),
    })
}
