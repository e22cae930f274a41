//! Right-hand-side ingredients of the physical and semilinear equations and
//! the energy functionals.
//!
//! The ζ-form kernels take `(ζ₁, ζ₂, ζ₃, r) = (ru, r∂ᵣu, r∂ₜu, r)`. The
//! radial forms take `(u, ∂ᵣu, ∂ₜu, r)` directly and stay regular at `r = 0`.

use crate::error::{Error, Result};
use crate::grid::{derivative, simpson, FieldForm, FieldState, Parity, RadialGrid};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Below this `|x|` the trigonometric quotients are evaluated from their Maclaurin series.
pub const KERNEL_SERIES_THRESHOLD: f64 = 1e-2;

/// Inputs within this distance of a nonzero multiple of π are singular.
const SINGULAR_TOL: f64 = 1e-12;

/// Which equation is evolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Full,
    StrongField,
    Semilinear,
}

/// Couplings and scale of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub model: ModelKind,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, lambda: f64, model: ModelKind) -> Result<Self> {
        let p = Self { alpha, beta, lambda, model };
        p.validate()?;
        Ok(p)
    }

    pub fn strong_field() -> Self {
        Self { alpha: 0.0, beta: 1.0, lambda: 1.0, model: ModelKind::StrongField }
    }

    pub fn full(alpha: f64, beta: f64, lambda: f64) -> Self {
        Self { alpha, beta, lambda, model: ModelKind::Full }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("lambda", self.lambda)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if self.lambda <= 0.0 {
            return Err(Error::Domain("lambda must be positive".into()));
        }
        if self.effective_alpha() == 0.0 && self.beta == 0.0 {
            return Err(Error::Domain("alpha and beta cannot both vanish".into()));
        }
        Ok(())
    }

    /// The wave-maps coupling seen by the λ-rescaled equation, `αλ²`; zero for the strong-field model.
    pub fn effective_alpha(&self) -> f64 {
        match self.model {
            ModelKind::StrongField => 0.0,
            _ => self.alpha * self.lambda * self.lambda,
        }
    }
}

/// Arguments `(ζ₁, ζ₂, ζ₃, r)` of the nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinArgs {
    pub zeta1: f64,
    pub zeta2: f64,
    pub zeta3: f64,
    pub r: f64,
}

impl NonlinArgs {
    pub fn new(zeta1: f64, zeta2: f64, zeta3: f64, r: f64) -> Self {
        Self { zeta1, zeta2, zeta3, r }
    }
}

fn poly_x2(c: &[f64], x: f64) -> f64 {
    let x2 = x * x;
    c.iter().rev().fold(0.0, |acc, &k| acc * x2 + k)
}

/// `x cot x`.
#[inline]
pub fn cotc(x: f64) -> f64 {
    const C: [f64; 6] = [1.0, -1.0 / 3.0, -1.0 / 45.0, -2.0 / 945.0, -1.0 / 4725.0, -2.0 / 93555.0];
    if x.abs() < KERNEL_SERIES_THRESHOLD {
        poly_x2(&C, x)
    } else {
        x * x.cos() / x.sin()
    }
}

/// `(1 − x cot x)/x²`.
#[inline]
pub fn q1(x: f64) -> f64 {
    const C: [f64; 6] =
        [1.0 / 3.0, 1.0 / 45.0, 2.0 / 945.0, 1.0 / 4725.0, 2.0 / 93555.0, 1382.0 / 638512875.0];
    if x.abs() < KERNEL_SERIES_THRESHOLD {
        poly_x2(&C, x)
    } else {
        (1.0 - cotc(x)) / (x * x)
    }
}

/// `((3/2) sin 2x − 2x − x² cot x)/x³`.
#[inline]
pub fn q3(x: f64) -> f64 {
    const C: [f64; 6] = [
        -5.0 / 3.0,
        19.0 / 45.0,
        -34.0 / 945.0,
        11.0 / 4725.0,
        -26.0 / 467775.0,
        2642.0 / 638512875.0,
    ];
    if x.abs() < KERNEL_SERIES_THRESHOLD {
        poly_x2(&C, x)
    } else {
        (1.5 * (2.0 * x).sin() - 2.0 * x - x * cotc(x)) / (x * x * x)
    }
}

/// `(4x − 2 sin 2x)/x³`.
#[inline]
pub fn wm(x: f64) -> f64 {
    const C: [f64; 6] = [
        8.0 / 3.0,
        -8.0 / 15.0,
        16.0 / 315.0,
        -8.0 / 2835.0,
        16.0 / 155925.0,
        -16.0 / 6081075.0,
    ];
    if x.abs() < KERNEL_SERIES_THRESHOLD {
        poly_x2(&C, x)
    } else {
        (4.0 * x - 2.0 * (2.0 * x).sin()) / (x * x * x)
    }
}

/// `sin x / x`.
#[inline]
pub fn sinc(x: f64) -> f64 {
    const C: [f64; 6] =
        [1.0, -1.0 / 6.0, 1.0 / 120.0, -1.0 / 5040.0, 1.0 / 362880.0, -1.0 / 39916800.0];
    if x.abs() < KERNEL_SERIES_THRESHOLD {
        poly_x2(&C, x)
    } else {
        x.sin() / x
    }
}

fn near_nonzero_pi_multiple(x: f64) -> bool {
    let k = (x / PI).round();
    k != 0.0 && (x - k * PI).abs() < SINGULAR_TOL * k.abs().max(1.0)
}

/// `f_WM(x, r) = (4x − 2 sin 2x)/r³`.
pub fn f_wm(x: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("f_wm requires r > 0, got {r}")));
    }
    Ok(x * x * x * wm(x) / (r * r * r))
}

/// The strong-field nonlinearity `f_SF(ζ₁, ζ₂, ζ₃, r)`.
pub fn f_sf(args: NonlinArgs) -> Result<f64> {
    let NonlinArgs { zeta1: x, zeta2, zeta3, r } = args;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("f_sf requires r > 0, got {r}")));
    }
    if near_nonzero_pi_multiple(x) {
        return Err(Error::SingularInput(format!("zeta1 = {x} is a nonzero multiple of pi")));
    }
    let diff = zeta3 * zeta3 - zeta2 * zeta2;
    let term1 = if diff == 0.0 {
        0.0
    } else if x == 0.0 {
        return Err(Error::SingularInput("zeta1 = 0 with zeta3^2 != zeta2^2".into()));
    } else {
        -cotc(x) / x * diff / r
    };
    let term2 = -2.0 / (r * r) * x * x * q1(x) * zeta2;
    let term3 = -x * x * x * q3(x) / (r * r * r);
    Ok(term1 + term2 + term3)
}

/// `G = f_WM − f_SF`.
pub fn g_difference(args: NonlinArgs) -> Result<f64> {
    Ok(f_wm(args.zeta1, args.r)? - f_sf(args)?)
}

/// `g_λ(ζ₁, r) = (λ² + 4 sin²ζ₁ / r²)⁻¹`.
pub fn g_lambda_weight(zeta1: f64, r: f64, lambda: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("g_lambda_weight requires r > 0, got {r}")));
    }
    let s = zeta1.sin() / r;
    let denom = lambda * lambda + 4.0 * s * s;
    if !(denom > 0.0) {
        return Err(Error::SingularInput("weight denominator vanishes".into()));
    }
    Ok(1.0 / denom)
}

/// Radial form of `f_SF` at `(ru, r∂ᵣu, r∂ₜu, r)`; regular at `r = 0`.
#[inline]
pub fn f_sf_radial(u: f64, ur: f64, ut: f64, r: f64) -> f64 {
    let x = r * u;
    let diff = ut * ut - ur * ur;
    let term1 = if diff == 0.0 { 0.0 } else { -cotc(x) / u * diff };
    term1 - 2.0 * r * u * u * q1(x) * ur - u * u * u * q3(x)
}

/// Radial form of `f_WM(ru, r)`.
#[inline]
pub fn f_wm_radial(u: f64, r: f64) -> f64 {
    u * u * u * wm(r * u)
}

/// Radial form of `G`.
#[inline]
pub fn g_difference_radial(u: f64, ur: f64, ut: f64, r: f64) -> f64 {
    f_wm_radial(u, r) - f_sf_radial(u, ur, ut, r)
}

/// Radial form of `g_λ(ru, r) = (λ² + 4u² sinc²(ru))⁻¹`.
#[inline]
pub fn g_lambda_weight_radial(u: f64, r: f64, lambda: f64) -> f64 {
    let s = u * sinc(r * u);
    1.0 / (lambda * lambda + 4.0 * s * s)
}

/// Radial form of `sin(ru)/r`.
#[inline]
pub fn sin_over_r(u: f64, r: f64) -> f64 {
    u * sinc(r * u)
}

/// Energy pieces of a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub e2: f64,
    pub e4: f64,
    pub e: f64,
}

/// `E₂`, `E₄` and `E = α_eff E₂ + β E₄` of a snapshot in dimension `d`.
///
/// `α_eff = αλ²` is the coupling of the λ-rescaled equation and reduces to `α`
/// for `λ = 1`; it vanishes for the strong-field model.
pub fn energies(state: &FieldState, grid: &RadialGrid, params: &ModelParams, d: u32) -> Result<Energies> {
    state.check(grid)?;
    if d < 3 {
        return Err(Error::Domain(format!("energies need d >= 3, got {d}")));
    }
    let psi_state = state.to_angle(grid);
    let psi = &psi_state.values;
    let psi_t = &psi_state.rates;
    let h = grid.spacing;
    let psi_r = derivative(psi, h, Parity::Odd);
    let df = f64::from(d);
    let mut i2 = vec![0.0; psi.len()];
    let mut i4 = vec![0.0; psi.len()];
    for (i, &r) in grid.nodes.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        let s2 = psi[i].sin().powi(2);
        let kin = psi_t[i] * psi_t[i] + psi_r[i] * psi_r[i];
        i2[i] = 0.5 * (kin + (df - 1.0) * s2 / (r * r)) * r.powi(d as i32 - 1);
        i4[i] = 0.5 * (df - 1.0) * s2 * (kin + 0.5 * (df - 2.0) * s2 / (r * r)) * r.powi(d as i32 - 3);
    }
    let e2 = simpson(&i2, h);
    let e4 = simpson(&i4, h);
    if !(e2.is_finite() && e4.is_finite()) {
        return Err(Error::Data("non-finite energy".into()));
    }
    Ok(Energies { e2, e4, e: params.effective_alpha() * e2 + params.beta * e4 })
}

/// Angle form of a snapshot regardless of input form.
pub fn as_angle(state: &FieldState, grid: &RadialGrid) -> FieldState {
    match state.form {
        FieldForm::Angle => state.clone(),
        FieldForm::Reduced => state.to_angle(grid),
    }
}

/// One named check of [`verify_rhs`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhsCheck {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub error: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Spot values and series/direct branch agreement of the kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhsReport {
    pub checks: Vec<RhsCheck>,
    /// Largest relative gap between the series and the closed-form expressions.
    pub branch_max_rel_err: f64,
    pub branch_samples: usize,
    pub pass: bool,
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Evaluates the kernel spot values and compares the series branches with the
/// closed forms on `samples` points spanning two decades around the switch.
pub fn verify_rhs(samples: usize, branch_tol: f64) -> Result<RhsReport> {
    if samples < 2 || !(branch_tol > 0.0) {
        return Err(Error::Domain("verify_rhs needs at least 2 samples and a positive tolerance".into()));
    }
    let x = 1e-3;
    let spot = [
        ("f_wm(pi/2, 1)", f_wm(PI / 2.0, 1.0)?, 2.0 * PI, 1e-13, false),
        ("f_wm(u r, r) at u = 1, r = 1e-4", f_wm(1e-4, 1e-4)?, 8.0 / 3.0, 1e-6, true),
        ("f_sf(pi/2, 0, 0, 1)", f_sf(NonlinArgs::new(PI / 2.0, 0.0, 0.0, 1.0))?, PI, 1e-13, false),
        ("f_sf(1e-3, 0, 0, 1) / x^3", f_sf(NonlinArgs::new(x, 0.0, 0.0, 1.0))? / x.powi(3), 5.0 / 3.0, 1e-6, true),
        ("G(pi/2, 0, 0, 1)", g_difference(NonlinArgs::new(PI / 2.0, 0.0, 0.0, 1.0))?, PI, 1e-13, false),
        ("G(0, 0, 0, 1)", g_difference(NonlinArgs::new(0.0, 0.0, 0.0, 1.0))?, 0.0, 0.0, false),
        ("G radial limit at u = 1", g_difference_radial(1.0, 0.0, 0.0, 1e-4), 1.0, 1e-6, true),
        ("g_lambda(pi/2, 1, 0)", g_lambda_weight(PI / 2.0, 1.0, 0.0)?, 0.25, 1e-15, false),
        ("g_lambda(0, 1, 2)", g_lambda_weight(0.0, 1.0, 2.0)?, 0.25, 1e-15, false),
        ("g_lambda(u r, r) at u = 1, r = 1e-6, lambda = 1", g_lambda_weight(1e-6, 1e-6, 1.0)?, 0.2, 1e-10, true),
    ];
    let checks: Vec<RhsCheck> = spot
        .iter()
        .map(|&(name, value, expected, tol, relative)| {
            let error = if relative { rel_gap(value, expected) } else { (value - expected).abs() };
            RhsCheck { name: name.into(), value, expected, error, tol, pass: error <= tol }
        })
        .collect();
    let mut branch: f64 = 0.0;
    for k in 0..samples {
        let x = KERNEL_SERIES_THRESHOLD * 10f64.powf(-1.0 + 2.0 * k as f64 / (samples - 1) as f64);
        let (s, c) = (x.sin(), x.cos());
        branch = branch
            .max(rel_gap(wm(x), (4.0 * x - 2.0 * (2.0 * x).sin()) / x.powi(3)))
            .max(rel_gap(sinc(x), s / x))
            .max(rel_gap(cotc(x), x * c / s))
            .max(rel_gap(q1(x), (1.0 - x * c / s) / (x * x)))
            .max(rel_gap(q3(x), (1.5 * (2.0 * x).sin() - 2.0 * x - x * x * c / s) / x.powi(3)));
    }
    let pass = checks.iter().all(|c| c.pass) && branch <= branch_tol;
    Ok(RhsReport { checks, branch_max_rel_err: branch, branch_samples: samples, pass })
}
