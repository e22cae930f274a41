//! Linearization potentials and Taylor coefficients of the λ-correction,
//! with a finite-difference verification sweep.

use crate::error::{Error, Result};
use crate::model::{f_sf_radial, g_difference_radial, g_lambda_weight_radial};
use crate::par::{self, Execution};
use crate::profile::ProfileParams;
use serde::{Deserialize, Serialize};

/// `V₁(ρ)`.
pub fn v1(rho: f64) -> f64 {
    let r2 = rho * rho;
    let num = 21.0 * r2.powi(3) - 375.0 * r2 * r2 + 1455.0 * r2 - 2125.0;
    let w = 5.0 + 3.0 * r2;
    let q = 5.0 - r2;
    -5.0 * num / (w * w * q * q)
}

/// `V₂(ρ)`.
pub fn v2(rho: f64) -> f64 {
    let r2 = rho * rho;
    -2.0 * (3.0 * r2 - 35.0) / ((5.0 + 3.0 * r2) * (5.0 - r2))
}

/// Zeroth and first-order Taylor coefficients of the λ-correction at one `(σ, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorCoeffs {
    pub g0: f64,
    pub dg0_dsigma: f64,
    /// `ρ·G₁`.
    pub g1w: f64,
    pub g2: f64,
    /// `ρ·G₃`.
    pub g3w: f64,
}

/// Closed-form Taylor coefficients at `σ ≥ 0`, `ρ ∈ [0, 1]`.
pub fn taylor_coeffs(sigma: f64, rho: f64) -> TaylorCoeffs {
    let r2 = rho * rho;
    let q = 5.0 - r2;
    let w = 5.0 + 3.0 * r2;
    let s2 = sigma * sigma;
    let den = 64.0 * q + s2 * w * w;
    let poly = 105.0 - 42.0 * r2 + r2 * r2;
    let q32 = q * q.sqrt();
    let p1 = 64.0 * (27.0 * r2.powi(4) - 2240.0 * r2.powi(3) + 15550.0 * r2 * r2 - 25000.0 * r2 - 625.0);
    let p2 = w * w * (23.0 * r2.powi(3) - 45.0 * r2 * r2 + 2325.0 * r2 - 5375.0);
    TaylorCoeffs {
        g0: 20.0 * poly / (q32 * den),
        dg0_dsigma: -40.0 * w * w * poly * sigma / (q32 * den * den),
        g1w: -(p1 + s2 * p2) / (q * q * den * den),
        g2: 2.0 * (35.0 - 3.0 * r2) * w / (q * den),
        g3w: 50.0 * (1.0 - r2) * w / (q * den),
    }
}

/// The λ-correction `𝒢` around the profile in radial slots:
/// `u = U₁ + η₁`, `∂ᵣu = U₁' + η₂`, `∂ₜu = U₂ + η₃`, so that `ζᵢ = ρηᵢ`.
pub fn correction_radial(p: &ProfileParams, eta: [f64; 3], sigma: f64, rho: f64) -> Result<f64> {
    let (u1, u2) = p.eval_profile_pair(rho)?;
    let u1p = p.eval_u_tilde_prime(rho)?;
    let u = u1 + eta[0];
    if (rho * eta[0]).abs() > p.guard_width() {
        return Err(Error::Guard(format!("|rho*eta1| = {} exceeds {}", (rho * eta[0]).abs(), p.guard_width())));
    }
    let ur = u1p + eta[1];
    let ut = u2 + eta[2];
    Ok(g_lambda_weight_radial(u, rho, sigma) * g_difference_radial(u, ur, ut, rho))
}

/// Coefficient tables over a `(σ, ρ)` product grid, indexed `[σ][ρ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffTable {
    pub rho_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub g0: Vec<Vec<f64>>,
    pub dg0_dsigma: Vec<Vec<f64>>,
    pub g1w: Vec<Vec<f64>>,
    pub g2: Vec<Vec<f64>>,
    pub g3w: Vec<Vec<f64>>,
}

pub fn coeff_table(rho_grid: &[f64], sigma_grid: &[f64]) -> Result<CoeffTable> {
    if let Some(r) = rho_grid.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::Domain(format!("rho = {r} outside [0, 1]")));
    }
    if let Some(s) = sigma_grid.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::Domain(format!("sigma = {s} must be finite and nonnegative")));
    }
    let rows: Vec<Vec<TaylorCoeffs>> =
        sigma_grid.iter().map(|&s| rho_grid.iter().map(|&r| taylor_coeffs(s, r)).collect()).collect();
    let pick = |f: fn(&TaylorCoeffs) -> f64| rows.iter().map(|row| row.iter().map(f).collect()).collect();
    Ok(CoeffTable {
        rho_grid: rho_grid.to_vec(),
        sigma_grid: sigma_grid.to_vec(),
        v1: rho_grid.iter().map(|&r| v1(r)).collect(),
        v2: rho_grid.iter().map(|&r| v2(r)).collect(),
        g0: pick(|c| c.g0),
        dg0_dsigma: pick(|c| c.dg0_dsigma),
        g1w: pick(|c| c.g1w),
        g2: pick(|c| c.g2),
        g3w: pick(|c| c.g3w),
    })
}

/// Step for the ζ-slots of the finite-difference oracle.
pub const ZETA_STEP: f64 = 1e-5;
/// Step for σ in the finite-difference oracle.
pub const SIGMA_STEP: f64 = 1e-6;
/// Relative errors are taken against `max(|exact|, REL_FLOOR)`.
pub const REL_FLOOR: f64 = 1e-3;

/// Richardson-extrapolated central difference of `f` at 0.
pub fn richardson_central<F: Fn(f64) -> Result<f64>>(f: F, h: f64) -> Result<f64> {
    let d = |s: f64| -> Result<f64> { Ok((f(s)? - f(-s)?) / (2.0 * s)) };
    let dh = d(h)?;
    let dh2 = d(0.5 * h)?;
    Ok((4.0 * dh2 - dh) / 3.0)
}

fn rel_err(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(REL_FLOOR)
}

/// Per-coefficient maximum relative errors of the closed forms against finite differences.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoeffErrors {
    pub v1: f64,
    pub v2: f64,
    pub g0: f64,
    pub dg0_dsigma: f64,
    pub g1w: f64,
    pub g2: f64,
    pub g3w: f64,
}

impl CoeffErrors {
    fn max_with(&mut self, o: &CoeffErrors) {
        self.v1 = self.v1.max(o.v1);
        self.v2 = self.v2.max(o.v2);
        self.g0 = self.g0.max(o.g0);
        self.dg0_dsigma = self.dg0_dsigma.max(o.dg0_dsigma);
        self.g1w = self.g1w.max(o.g1w);
        self.g2 = self.g2.max(o.g2);
        self.g3w = self.g3w.max(o.g3w);
    }

    pub fn max(&self) -> f64 {
        [self.v1, self.v2, self.g0, self.dg0_dsigma, self.g1w, self.g2, self.g3w]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Result of [`verify_coeffs_fd`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffReport {
    pub max_rel_err: f64,
    pub n_samples: usize,
    pub n_skipped: usize,
    pub tol: f64,
    pub pass: bool,
    pub errors: CoeffErrors,
    pub skipped: Vec<(f64, f64)>,
}

/// Deterministic sample points: `ρ` uniform on `[0, 1]`, `σ` log-spaced on
/// `[1e-3, 1e2]` together with `σ = 0`.
pub fn sample_points(n_samples: usize) -> Vec<(f64, f64)> {
    let n_rho = ((n_samples as f64).sqrt().ceil() as usize).max(2);
    let n_sigma = n_samples.div_ceil(n_rho).max(1);
    let mut pts = Vec::with_capacity(n_rho * n_sigma);
    for j in 0..n_sigma {
        let sigma = if j == 0 {
            0.0
        } else if n_sigma == 2 {
            1.0
        } else {
            10f64.powf(-3.0 + 5.0 * (j - 1) as f64 / (n_sigma - 2) as f64)
        };
        for i in 0..n_rho {
            pts.push((sigma, i as f64 / (n_rho - 1) as f64));
        }
    }
    pts.truncate(n_samples.max(1));
    pts
}

/// Checks every closed form at one sample point against the finite-difference oracle.
pub fn check_point(p: &ProfileParams, sigma: f64, rho: f64) -> Result<CoeffErrors> {
    let exact = taylor_coeffs(sigma, rho);
    let g = |eta: [f64; 3], s: f64| correction_radial(p, eta, s, rho);
    let mut e = CoeffErrors { g0: rel_err(g([0.0; 3], sigma)?, exact.g0), ..Default::default() };
    e.g1w = rel_err(richardson_central(|t| g([t, 0.0, 0.0], sigma), ZETA_STEP)?, exact.g1w);
    e.g3w = rel_err(richardson_central(|t| g([0.0, 0.0, t], sigma), ZETA_STEP)?, exact.g3w);
    if rho > 0.0 {
        let d = richardson_central(|t| g([0.0, t, 0.0], sigma), ZETA_STEP)?;
        e.g2 = rel_err(d / rho, exact.g2);
    }
    e.dg0_dsigma = if sigma > SIGMA_STEP {
        rel_err(richardson_central(|t| g([0.0; 3], sigma + t), SIGMA_STEP)?, exact.dg0_dsigma)
    } else {
        // One-sided at σ = 0 where the closed form vanishes.
        let f = |s: f64| g([0.0; 3], s);
        let d = (4.0 * f(0.5 * SIGMA_STEP)? - f(SIGMA_STEP)? - 3.0 * f(0.0)?) / SIGMA_STEP;
        rel_err(d, exact.dg0_dsigma)
    };
    let (u1, u2) = p.eval_profile_pair(rho)?;
    let u1p = p.eval_u_tilde_prime(rho)?;
    let f = |eta: [f64; 3]| -> Result<f64> { Ok(f_sf_radial(u1 + eta[0], u1p + eta[1], u2 + eta[2], rho)) };
    e.v1 = rel_err(richardson_central(|t| f([t, 0.0, 0.0]), ZETA_STEP)?, v1(rho));
    if rho > 0.0 {
        let d = richardson_central(|t| f([0.0, t, 0.0]), ZETA_STEP)?;
        let d3 = richardson_central(|t| f([0.0, 0.0, t]), ZETA_STEP)?;
        // Both the ∂ζ₂ and the ∂ζ₃ slot determine V₂.
        e.v2 = rel_err(-d / rho, v2(rho)).max(rel_err((d3 + 2.0) / (rho * rho), v2(rho)));
    }
    Ok(e)
}

/// Compares the closed forms with finite differences of the full nonlinearity
/// over `n_samples` deterministic points.
pub fn verify_coeffs_fd(n_samples: usize, tol: f64) -> Result<CoeffReport> {
    verify_coeffs_fd_with(Execution::Auto, n_samples, tol)
}

pub fn verify_coeffs_fd_with(exec: Execution, n_samples: usize, tol: f64) -> Result<CoeffReport> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be positive".into()));
    }
    let p = ProfileParams::d5();
    let pts = sample_points(n_samples);
    let results = par::map_jobs(exec, &pts, |&(s, r)| check_point(&p, s, r));
    let mut errors = CoeffErrors::default();
    let mut skipped = Vec::new();
    for (pt, res) in pts.iter().zip(results) {
        match res {
            Ok(e) => errors.max_with(&e),
            Err(Error::Guard(_)) => skipped.push(*pt),
            Err(e) => return Err(e),
        }
    }
    let max_rel_err = errors.max();
    let n_checked = pts.len() - skipped.len();
    Ok(CoeffReport {
        max_rel_err,
        n_samples: n_checked,
        n_skipped: skipped.len(),
        tol,
        pass: n_checked > 0 && max_rel_err <= tol,
        errors,
        skipped,
    })
}


#[cfg(test)]
mod sweep_tests {
    use super::*;

    #[test]
    fn fd_sweep_passes() {
        let r = verify_coeffs_fd(225, 1e-6).unwrap();
        println!("{:?}", r.errors);
        assert!(r.pass, "{r:?}");
        assert!(r.n_samples >= 200);
    }
}
