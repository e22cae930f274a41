//! Norms, rate fits and equation residuals shared by the solvers.

use crate::error::{Error, Result};
use crate::grid::{derivative, simpson, FieldForm, FieldState, Parity, RadialGrid};
use crate::model::ModelParams;
use crate::physical::{angle_to_reduced, laplacian7, reduced_acceleration};
use crate::similarity::{similarity_rhs_full, SimilarityGrid, SimilarityState};
use serde::{Deserialize, Serialize};

/// Order and radial weight of the derivative-based norm surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormSpec {
    pub k: usize,
    pub weight_exponent: i32,
}

impl Default for NormSpec {
    fn default() -> Self {
        Self { k: 2, weight_exponent: 6 }
    }
}

/// Highest derivative order of the norm surrogate.
pub const MAX_NORM_ORDER: usize = 5;

/// A radial discretization of `[0, 1]` that can differentiate and integrate.
pub trait RadialDiscretization {
    fn nodes(&self) -> &[f64];
    /// `∫₀¹ f dρ` from nodal values.
    fn integrate(&self, f: &[f64]) -> f64;
    /// `∂ρu` for a function of the given parity about the origin.
    fn differentiate(&self, u: &[f64], parity: Parity) -> Vec<f64>;
    /// Highest derivative order the discretization resolves.
    fn max_order(&self) -> usize;
}

/// Uniform nodes with finite differences and composite Simpson quadrature.
#[derive(Debug, Clone)]
pub struct UniformRadial {
    pub grid: RadialGrid,
}

impl UniformRadial {
    pub fn new(n: usize) -> Self {
        Self { grid: RadialGrid::unchecked(1.0, n) }
    }
}

impl RadialDiscretization for UniformRadial {
    fn nodes(&self) -> &[f64] {
        &self.grid.nodes
    }
    fn integrate(&self, f: &[f64]) -> f64 {
        simpson(f, self.grid.spacing)
    }
    fn differentiate(&self, u: &[f64], parity: Parity) -> Vec<f64> {
        derivative(u, self.grid.spacing, parity)
    }
    fn max_order(&self) -> usize {
        MAX_NORM_ORDER.min(self.grid.n.saturating_sub(3) / 2)
    }
}

/// `(Σ_{j≤k} ∫₀¹ |∂ρʲu|² ρ^w dρ)^{1/2}` for an even radial function.
pub fn radial_norm<D: RadialDiscretization + ?Sized>(disc: &D, u: &[f64], spec: NormSpec) -> Result<f64> {
    let nodes = disc.nodes();
    if u.len() != nodes.len() {
        return Err(Error::Shape(format!("vector has {} entries, discretization {}", u.len(), nodes.len())));
    }
    if spec.k > MAX_NORM_ORDER || spec.k > disc.max_order() {
        return Err(Error::Order(format!("k = {} exceeds the supported order {}", spec.k, disc.max_order().min(MAX_NORM_ORDER))));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite entry".into()));
    }
    let weight: Vec<f64> = nodes.iter().map(|r| r.powi(spec.weight_exponent)).collect();
    let mut d = u.to_vec();
    let mut parity = Parity::Even;
    let mut total = 0.0;
    for j in 0..=spec.k {
        if j > 0 {
            d = disc.differentiate(&d, parity);
            parity = parity.flip();
        }
        let f: Vec<f64> = d.iter().zip(&weight).map(|(v, w)| v * v * w).collect();
        total += disc.integrate(&f);
    }
    Ok(total.max(0.0).sqrt())
}

/// Least-squares line `y ≈ slope·x + intercept`; returns `(slope, intercept, rms residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::Fit(format!("need at least two matched points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) || !sxx.is_finite() {
        return Err(Error::Fit("abscissae are degenerate".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Ok((slope, intercept, (ss / nf).sqrt()))
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Fit(format!("invalid search interval [{a}, {b}]")));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..400 {
        if (b - a).abs() <= tol * (1.0 + c.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Result of an exponential or power-law fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub residual: f64,
    pub window: (f64, f64),
}

/// Fits `value ≈ amplitude · e^{exponent·τ}` on the points with `τ` inside `window`.
pub fn fit_exponential_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> =
        series.iter().copied().filter(|(t, _)| *t >= window.0 - 1e-12 && *t <= window.1 + 1e-12).collect();
    if pts.len() < 2 {
        return Err(Error::Fit(format!("window [{}, {}] holds {} points", window.0, window.1, pts.len())));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Fit(format!("nonpositive value {v} at tau = {t}")));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, residual) = linear_fit(&xs, &ys)?;
    Ok(RateFit { exponent: slope, amplitude: intercept.exp(), residual, window: (xs[0], xs[xs.len() - 1]) })
}

/// Equation used by [`residual_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    /// Angle form of the full (or λ-rescaled) equation.
    Skyrme(ModelParams),
    /// Angle form of the strong-field equation.
    StrongField,
    /// Reduced 7D form.
    Semilinear(ModelParams),
    /// First-order system in similarity variables.
    Similarity { lambda: f64, t_blowup: f64 },
}

/// Field handed to [`residual_check`].
#[derive(Debug, Clone, Copy)]
pub enum ResidualField<'a> {
    /// Three snapshots at equally spaced times; the middle one is tested.
    Physical { grid: &'a RadialGrid, frames: [&'a FieldState; 3] },
    /// A similarity state, with its τ-derivative when known (zero otherwise).
    Similarity { grid: &'a SimilarityGrid, state: &'a SimilarityState, dtau: Option<(&'a [f64], &'a [f64])> },
}

/// Cells trimmed from each end before taking the maximum.
const TRIM: usize = 2;

/// Max-abs residual of `field` in `equation` over the trimmed interior.
pub fn residual_check(field: ResidualField<'_>, equation: &Equation) -> Result<f64> {
    match (field, equation) {
        (ResidualField::Physical { grid, frames }, Equation::Skyrme(_) | Equation::StrongField | Equation::Semilinear(_)) => {
            physical_residual(grid, frames, equation)
        }
        (ResidualField::Similarity { grid, state, dtau }, Equation::Similarity { lambda, t_blowup }) => {
            let (r1, r2) = similarity_rhs_full(grid, state, *lambda, *t_blowup)?;
            let n = r1.len();
            if n <= 2 * TRIM + 1 {
                return Err(Error::Shape("grid too small for residual trimming".into()));
            }
            let zero = vec![0.0; n];
            let (d1, d2) = dtau.unwrap_or((&zero, &zero));
            if d1.len() != n || d2.len() != n {
                return Err(Error::Shape("tau derivative length mismatch".into()));
            }
            Ok((TRIM..n - TRIM).map(|i| (d1[i] - r1[i]).abs().max((d2[i] - r2[i]).abs())).fold(0.0, f64::max))
        }
        _ => Err(Error::Shape("field kind does not match the equation".into())),
    }
}

fn physical_residual(grid: &RadialGrid, frames: [&FieldState; 3], equation: &Equation) -> Result<f64> {
    for f in frames {
        f.check(grid)?;
    }
    let form = frames[1].form;
    if frames.iter().any(|f| f.form != form) {
        return Err(Error::Shape("frames mix angle and reduced forms".into()));
    }
    let expected = match equation {
        Equation::Semilinear(_) => FieldForm::Reduced,
        _ => FieldForm::Angle,
    };
    if form != expected {
        return Err(Error::Shape(format!("equation expects {expected:?} form, got {form:?}")));
    }
    let k1 = frames[1].t - frames[0].t;
    let k2 = frames[2].t - frames[1].t;
    if !(k1 > 0.0) || (k1 - k2).abs() > 1e-9 * k1 {
        return Err(Error::Shape("frames must be equally spaced in time".into()));
    }
    let (alpha_eff, beta) = match equation {
        Equation::Skyrme(params) | Equation::Semilinear(params) => (params.effective_alpha(), params.beta),
        _ => (0.0, 1.0),
    };
    // Angle fields are tested through `ψ = r u`: the angle residual equals `r`
    // times the reduced one, whose 7D stencil stays second order at the origin.
    let reduced = frames.map(|f| angle_to_reduced(f, grid));
    let h = grid.spacing;
    let q = &reduced[1].values;
    let p = &reduced[1].rates;
    let n = q.len();
    if n <= 2 * TRIM + 1 {
        return Err(Error::Shape("grid too small for residual trimming".into()));
    }
    let d = derivative(q, h, Parity::Even);
    let mut worst: f64 = 0.0;
    for i in TRIM..n - TRIM {
        let r = grid.nodes[i];
        let tt = (reduced[2].values[i] - 2.0 * q[i] + reduced[0].values[i]) / (k1 * k1);
        let acc = reduced_acceleration(alpha_eff, beta, r, laplacian7(q, i, h), q[i], d[i], p[i])
            .ok_or_else(|| Error::Degenerate(format!("at r = {r}")))?;
        let scale = if form == FieldForm::Angle { r } else { 1.0 };
        worst = worst.max(scale * (tt - acc).abs());
    }
    Ok(worst)
}
