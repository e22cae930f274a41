//! Closed-form self-similar profile and derived quantities.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Below this radius `U/ρ` and its derivative are evaluated from the Maclaurin series.
pub const SERIES_THRESHOLD: f64 = 1e-2;

/// Inclusive tolerance at the endpoints of the profile domain.
const ENDPOINT_TOL: f64 = 1e-12;

/// Profile constants for dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub d: u32,
    pub a: f64,
    pub b: f64,
    pub rho_star: f64,
}

/// Profile quantities at a single radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileValue {
    pub rho: f64,
    pub u: f64,
    pub u_tilde: f64,
    pub u1: f64,
    pub u2: f64,
}

/// Computes `a`, `b` and `ρ*` for dimension `d ≥ 5`.
pub fn profile_constants(d: u32) -> Result<ProfileParams> {
    if d < 5 {
        return Err(Error::Domain(format!("profile requires d >= 5, got {d}")));
    }
    if d == 5 {
        return Ok(ProfileParams { d, a: 5.0 / 3.0, b: 5.0 / 3.0, rho_star: 5f64.sqrt() });
    }
    let df = f64::from(d);
    let a = (2.0 * (df - 4.0) + (3.0 * (df - 4.0) * (df - 2.0)).sqrt()) / 3.0;
    let b = 2.0 * ((df - 4.0) / (3.0 * (df - 2.0))).sqrt() + 1.0;
    let rho_star = (2.0 * a / (b - 1.0)).sqrt();
    Ok(ProfileParams { d, a, b, rho_star })
}

impl ProfileParams {
    /// The d = 5 profile used by every solver.
    pub fn d5() -> Self {
        profile_constants(5).expect("d = 5 is valid")
    }

    fn check(&self, rho: f64, upper: f64) -> Result<f64> {
        if !rho.is_finite() || rho < -ENDPOINT_TOL || rho > upper + ENDPOINT_TOL * upper.max(1.0) {
            return Err(Error::Domain(format!("rho = {rho} outside [0, {upper}]")));
        }
        Ok(rho.clamp(0.0, upper))
    }

    /// `2a - (b-1)ρ² = (b-1)(ρ*-ρ)(ρ*+ρ)`, factored so it vanishes exactly at `ρ*`.
    fn edge(&self, rho: f64) -> f64 {
        ((self.b - 1.0) * (self.rho_star - rho) * (self.rho_star + rho)).max(0.0)
    }

    /// `U'(0)`, the amplitude of the linear growth at the origin.
    pub fn slope_at_origin(&self) -> f64 {
        (2.0 * (1.0 + self.b) / self.a).sqrt()
    }

    /// Series coefficients `c1, c2, c3` with `U = U'(0)(ρ + c1ρ³/3 + c2ρ⁵/5 + c3ρ⁷/7 + …)`.
    fn series(&self) -> [f64; 3] {
        let a = self.a;
        let e = (self.b - 1.0) / (2.0 * a);
        [
            e / 2.0 - 1.0 / a,
            3.0 * e * e / 8.0 - e / (2.0 * a) + 1.0 / (a * a),
            5.0 * e.powi(3) / 16.0 - 3.0 * e * e / (8.0 * a) + e / (2.0 * a * a) - 1.0 / a.powi(3),
        ]
    }

    /// `U(ρ)` on `[0, ρ*]`.
    pub fn eval_u(&self, rho: f64) -> Result<f64> {
        let rho = self.check(rho, self.rho_star)?;
        Ok(self.u_unchecked(rho))
    }

    fn u_unchecked(&self, rho: f64) -> f64 {
        let y = rho * (self.edge(rho) * (1.0 + self.b)).sqrt();
        let x = self.a - self.b * rho * rho;
        y.atan2(x)
    }

    /// `Ũ(ρ) = U(ρ)/ρ`, with the limit `U'(0)` at the origin.
    pub fn eval_u_tilde(&self, rho: f64) -> Result<f64> {
        let rho = self.check(rho, self.rho_star)?;
        Ok(self.u_tilde_unchecked(rho))
    }

    fn u_tilde_unchecked(&self, rho: f64) -> f64 {
        if rho < SERIES_THRESHOLD {
            let [c1, c2, c3] = self.series();
            let r2 = rho * rho;
            self.slope_at_origin() * (1.0 + r2 * (c1 / 3.0 + r2 * (c2 / 5.0 + r2 * c3 / 7.0)))
        } else {
            self.u_unchecked(rho) / rho
        }
    }

    /// `Ũ'(ρ)`.
    pub fn eval_u_tilde_prime(&self, rho: f64) -> Result<f64> {
        let rho = self.check(rho, self.rho_star)?;
        if rho < SERIES_THRESHOLD {
            let [c1, c2, c3] = self.series();
            let r2 = rho * rho;
            Ok(self.slope_at_origin() * rho * (2.0 * c1 / 3.0 + r2 * (4.0 * c2 / 5.0 + r2 * 6.0 * c3 / 7.0)))
        } else {
            Ok((self.u_prime_unchecked(rho) - self.u_unchecked(rho) / rho) / rho)
        }
    }

    /// `U'(ρ)` on `[0, ρ*)`.
    pub fn eval_u_prime(&self, rho: f64) -> Result<f64> {
        let rho = self.check(rho, self.rho_star)?;
        let v = self.u_prime_unchecked(rho);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("U' is unbounded at rho = {rho}")))
        }
    }

    fn u_prime_unchecked(&self, rho: f64) -> f64 {
        2.0 * self.a * (1.0 + self.b).sqrt() / ((self.a + rho * rho) * self.edge(rho).sqrt())
    }

    /// `U''(ρ)` on `[0, ρ*)`.
    pub fn eval_u_second(&self, rho: f64) -> Result<f64> {
        let up = self.eval_u_prime(rho)?;
        let bm = self.b - 1.0;
        Ok(up * (-2.0 * rho / (self.a + rho * rho) + bm * rho / self.edge(rho)))
    }

    /// `(U₁, U₂) = (Ũ, (1+Λ)Ũ) = (Ũ, U')` on the similarity cone `[0, 1]`.
    pub fn eval_profile_pair(&self, rho: f64) -> Result<(f64, f64)> {
        let rho = self.check(rho, 1.0)?;
        Ok((self.u_tilde_unchecked(rho), self.u_prime_unchecked(rho)))
    }

    /// `(U₁, U₂)` extended to any radius below `ρ*`, used by the initial-data transform.
    pub fn eval_profile_pair_extended(&self, rho: f64) -> Result<(f64, f64)> {
        let rho = self.check(rho, self.rho_star)?;
        if rho >= self.rho_star {
            return Err(Error::Domain("profile pair is unbounded at rho*".into()));
        }
        Ok((self.u_tilde_unchecked(rho), self.u_prime_unchecked(rho)))
    }

    /// The symmetry mode `((1+Λ)U₁, (2+Λ)U₂) = (U', 2U' + ρU'')`.
    pub fn symmetry_mode(&self, rho: f64) -> Result<(f64, f64)> {
        let up = self.eval_u_prime(rho)?;
        let upp = self.eval_u_second(rho)?;
        Ok((up, 2.0 * up + rho * upp))
    }

    /// All profile quantities at one radius of the similarity cone.
    pub fn eval(&self, rho: f64) -> Result<ProfileValue> {
        let u = self.eval_u(rho)?;
        let u_tilde = self.eval_u_tilde(rho)?;
        let u2 = self.eval_u_prime(rho)?;
        Ok(ProfileValue { rho, u, u_tilde, u1: u_tilde, u2 })
    }

    /// `sup ρU₁(ρ)` over `[0, 2]`, i.e. `U(2)`; `U` is increasing.
    pub fn sup_rho_u1(&self) -> f64 {
        self.u_unchecked(2.0f64.min(self.rho_star))
    }

    /// Guard half-width `A = (π − sup ρU₁)/2` for evaluating the λ-correction.
    pub fn guard_width(&self) -> f64 {
        0.5 * (std::f64::consts::PI - self.sup_rho_u1())
    }
}
