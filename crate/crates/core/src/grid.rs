//! Uniform radial grids, field snapshots and the finite-difference and
//! quadrature primitives shared by the solvers.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Minimum number of cells of a physical grid.
pub const MIN_CELLS: usize = 64;

/// Uniform grid on `[0, r_max]` with `n` cells and `n + 1` nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_max: f64,
    pub n: usize,
    pub spacing: f64,
    pub nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::Domain(format!("r_max must be positive, got {r_max}")));
        }
        if n < MIN_CELLS {
            return Err(Error::Resolution(format!("grid needs at least {MIN_CELLS} cells, got {n}")));
        }
        Ok(Self::build(r_max, n))
    }

    /// Grid without the minimum-size check, for similarity-coordinate and test grids.
    pub fn unchecked(r_max: f64, n: usize) -> Self {
        Self::build(r_max, n.max(4))
    }

    fn build(r_max: f64, n: usize) -> Self {
        let spacing = r_max / n as f64;
        let nodes = (0..=n).map(|i| i as f64 * spacing).collect();
        Self { r_max, n, spacing, nodes }
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Which dependent variable a [`FieldState`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldForm {
    /// The angle `ψ`, odd about the origin.
    Angle,
    /// The reduced variable `u = ψ/r`, even about the origin.
    Reduced,
}

/// Physical-coordinate radial snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub t: f64,
    pub form: FieldForm,
    pub values: Vec<f64>,
    pub rates: Vec<f64>,
}

impl FieldState {
    pub fn zeros(form: FieldForm, len: usize) -> Self {
        Self { t: 0.0, form, values: vec![0.0; len], rates: vec![0.0; len] }
    }

    /// Samples `(f, g)` at the grid nodes.
    pub fn from_fn(form: FieldForm, grid: &RadialGrid, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let (values, rates) = grid.nodes.iter().map(|&r| f(r)).unzip();
        Self { t: 0.0, form, values, rates }
    }

    pub fn check(&self, grid: &RadialGrid) -> Result<()> {
        if self.values.len() != grid.len() || self.rates.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {}/{} entries, grid has {} nodes",
                self.values.len(),
                self.rates.len(),
                grid.len()
            )));
        }
        if self.values.iter().chain(&self.rates).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite field value".into()));
        }
        Ok(())
    }

    /// Converts to the angle form using `ψ = r u`.
    pub fn to_angle(&self, grid: &RadialGrid) -> FieldState {
        match self.form {
            FieldForm::Angle => self.clone(),
            FieldForm::Reduced => FieldState {
                t: self.t,
                form: FieldForm::Angle,
                values: self.values.iter().zip(&grid.nodes).map(|(u, r)| u * r).collect(),
                rates: self.rates.iter().zip(&grid.nodes).map(|(u, r)| u * r).collect(),
            },
        }
    }
}

/// Parity of a radial function about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    /// Value of the ghost node at `-h` given the node at `+h`.
    #[inline]
    pub fn ghost(self, v1: f64) -> f64 {
        match self {
            Parity::Even => v1,
            Parity::Odd => -v1,
        }
    }
}

/// First derivative on a uniform grid: central in the interior, parity ghost
/// at the origin, second-order one-sided at the last node.
pub fn derivative(u: &[f64], h: f64, parity: Parity) -> Vec<f64> {
    let n = u.len();
    let mut d = vec![0.0; n];
    derivative_into(u, h, parity, &mut d);
    d
}

pub fn derivative_into(u: &[f64], h: f64, parity: Parity, d: &mut [f64]) {
    let n = u.len();
    debug_assert!(n >= 3);
    d[0] = (u[1] - parity.ghost(u[1])) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
}

/// Second derivative with a parity ghost at the origin and a second-order
/// one-sided stencil at the last node.
pub fn second_derivative(u: &[f64], h: f64, parity: Parity) -> Vec<f64> {
    let n = u.len();
    let mut d = vec![0.0; n];
    let h2 = h * h;
    d[0] = (u[1] - 2.0 * u[0] + parity.ghost(u[1])) / h2;
    for i in 1..n - 1 {
        d[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2;
    }
    d[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / h2;
    d
}

/// Composite Simpson rule on uniformly spaced samples; an odd number of
/// cells closes with the 3/8 rule on the last three cells.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let cells = f.len().saturating_sub(1);
    match cells {
        0 => 0.0,
        1 => 0.5 * h * (f[0] + f[1]),
        2 => h / 3.0 * (f[0] + 4.0 * f[1] + f[2]),
        3 => 3.0 * h / 8.0 * (f[0] + 3.0 * f[1] + 3.0 * f[2] + f[3]),
        _ => {
            let even = if cells.is_multiple_of(2) { cells } else { cells - 3 };
            let mut s = f[0] + f[even];
            for (i, v) in f.iter().enumerate().take(even).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = s * h / 3.0;
            if even < cells {
                let g = &f[even..];
                total += 3.0 * h / 8.0 * (g[0] + 3.0 * g[1] + 3.0 * g[2] + g[3]);
            }
            total
        }
    }
}

/// Conservative 7D radial Laplacian of an even function at node `i`: face
/// fluxes divided by the cell volume, and `14(u₁−u₀)/h²` at the origin.
#[inline]
pub fn laplacian7(u: &[f64], i: usize, h: f64) -> f64 {
    if i == 0 {
        return 14.0 * (u[1] - u[0]) / (h * h);
    }
    let r = i as f64;
    let rp = (r + 0.5).powi(6);
    let rm = (r - 0.5).powi(6);
    let volume = ((r + 0.5).powi(7) - (r - 0.5).powi(7)) / 7.0;
    (rp * (u[i + 1] - u[i]) - rm * (u[i] - u[i - 1])) / (h * h * volume)
}

/// Four-point Lagrange interpolation at radius `r`, using the parity
/// extension near the origin.
pub fn interpolate(u: &[f64], h: f64, parity: Parity, r: f64) -> Result<f64> {
    let n = u.len();
    let last = (n - 1) as f64 * h;
    if !(r >= 0.0 && r <= last * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("interpolation radius {r} outside [0, {last}]")));
    }
    let x = (r / h).min((n - 1) as f64);
    let i0 = (x.floor() as isize - 1).clamp(-1, n as isize - 4);
    let sample = |j: isize| -> f64 {
        if j < 0 {
            parity.ghost(u[(-j) as usize])
        } else {
            u[j as usize]
        }
    };
    let mut acc = 0.0;
    for a in 0..4 {
        let ja = i0 + a;
        let mut w = 1.0;
        for b in 0..4 {
            if a != b {
                let jb = i0 + b;
                w *= (x - jb as f64) / (ja - jb) as f64;
            }
        }
        acc += w * sample(ja);
    }
    Ok(acc)
}
