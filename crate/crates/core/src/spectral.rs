//! Collocation discretization of the linearized generator, two-grid spectrum
//! filtering, and eigenvector utilities.

use crate::coeffs::{v1, v2};
use crate::diagnostics::RadialDiscretization;
use crate::error::{Error, Result};
use crate::grid::{simpson, Parity};
use crate::par::{self, Execution};
use crate::profile::ProfileParams;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Smallest supported collocation size.
pub const MIN_COLLOCATION: usize = 32;

/// Coefficient interpolation error that makes a collocation size acceptable.
pub const INTERPOLATION_TOL: f64 = 1e-8;

/// Chebyshev extrema `cos(jπ/N)` and the differentiation matrix on `[-1, 1]`.
pub fn chebyshev_matrix(big_n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=big_n).map(|j| (j as f64 * PI / big_n as f64).cos()).collect();
    let c = |j: usize| -> f64 {
        let s = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        if j == 0 || j == big_n {
            2.0 * s
        } else {
            s
        }
    };
    let mut d = DMatrix::zeros(big_n + 1, big_n + 1);
    for i in 0..=big_n {
        for j in 0..=big_n {
            if i != j {
                // Differences via the sine identity avoid cancellation.
                let diff = -2.0 * ((i + j) as f64 * PI / (2 * big_n) as f64).sin() * ((i as f64 - j as f64) * PI / (2 * big_n) as f64).sin();
                d[(i, j)] = c(i) / c(j) / diff;
            }
        }
    }
    for i in 0..=big_n {
        let s: f64 = (0..=big_n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

/// Clenshaw-Curtis weights on the Chebyshev extrema.
pub fn clenshaw_curtis(big_n: usize) -> Vec<f64> {
    let mut w = vec![0.0; big_n + 1];
    let theta: Vec<f64> = (0..=big_n).map(|j| j as f64 * PI / big_n as f64).collect();
    let nn = big_n as f64;
    if big_n.is_multiple_of(2) {
        w[0] = 1.0 / (nn * nn - 1.0);
        w[big_n] = w[0];
        for j in 1..big_n {
            let mut v = 1.0;
            for k in 1..big_n / 2 {
                v -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
            v -= (nn * theta[j]).cos() / (nn * nn - 1.0);
            w[j] = 2.0 * v / nn;
        }
    } else {
        w[0] = 1.0 / (nn * nn);
        w[big_n] = w[0];
        for j in 1..big_n {
            let mut v = 1.0;
            for k in 1..=(big_n - 1) / 2 {
                v -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
            w[j] = 2.0 * v / nn;
        }
    }
    w
}

/// Even-radial Chebyshev collocation on `ρ ∈ [0, 1]` with `n` nodes, ordered
/// from `ρ = 1` down to `ρ = 0`.
#[derive(Debug, Clone)]
pub struct EvenChebyshev {
    pub n: usize,
    pub nodes: Vec<f64>,
    /// `∂ρ` acting on even functions.
    pub d_even: DMatrix<f64>,
    /// `∂ρ` acting on odd functions.
    pub d_odd: DMatrix<f64>,
    /// `∂ρ²` acting on even functions.
    pub d2_even: DMatrix<f64>,
    /// Quadrature weights for `∫₀¹ f dρ`.
    pub weights: Vec<f64>,
}

impl EvenChebyshev {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::Resolution(format!("collocation needs at least 4 nodes, got {n}")));
        }
        let big_n = 2 * (n - 1);
        let (x, d) = chebyshev_matrix(big_n);
        let d2 = &d * &d;
        let fold = |m: &DMatrix<f64>, sign: f64| {
            DMatrix::from_fn(n, n, |j, k| if k == n - 1 { if sign > 0.0 { m[(j, k)] } else { 0.0 } } else { m[(j, k)] + sign * m[(j, big_n - k)] })
        };
        let cc = clenshaw_curtis(big_n);
        let mut weights: Vec<f64> = cc[..n].to_vec();
        weights[n - 1] *= 0.5;
        let mut nodes = x[..n].to_vec();
        nodes[n - 1] = 0.0;
        Ok(Self { n, nodes, d_even: fold(&d, 1.0), d_odd: fold(&d, -1.0), d2_even: fold(&d2, 1.0), weights })
    }

    /// Barycentric interpolation of an even function given at the nodes.
    pub fn interpolate(&self, values: &[f64], rho: f64) -> f64 {
        let big_n = 2 * (self.n - 1);
        let full = |j: usize| if j < self.n { values[j] } else { values[big_n - j] };
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..=big_n {
            let xj = (j as f64 * PI / big_n as f64).cos();
            if (rho - xj).abs() < 1e-15 {
                return full(j);
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == big_n {
                w *= 0.5;
            }
            num += w / (rho - xj) * full(j);
            den += w / (rho - xj);
        }
        num / den
    }

    /// Largest interpolation error of `V₁`, `V₂` between nodes.
    pub fn potential_interpolation_error(&self) -> f64 {
        let v1s: Vec<f64> = self.nodes.iter().map(|&r| v1(r)).collect();
        let v2s: Vec<f64> = self.nodes.iter().map(|&r| v2(r)).collect();
        let mut worst: f64 = 0.0;
        for k in 0..400 {
            let r = (k as f64 + 0.5) / 400.0;
            worst = worst.max((self.interpolate(&v1s, r) - v1(r)).abs()).max((self.interpolate(&v2s, r) - v2(r)).abs());
        }
        worst
    }

    fn apply(&self, m: &DMatrix<f64>, u: &[f64]) -> Vec<f64> {
        (m * DVector::from_column_slice(u)).as_slice().to_vec()
    }

    /// `(Σ w ρ⁶ (a² + b²))^{1/2}`.
    pub fn weighted_norm(&self, a: &[f64], b: &[f64]) -> f64 {
        (0..self.n).map(|j| self.weights[j] * self.nodes[j].powi(6) * (a[j] * a[j] + b[j] * b[j])).sum::<f64>().sqrt()
    }
}

impl RadialDiscretization for EvenChebyshev {
    fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, b)| a * b).sum()
    }
    fn differentiate(&self, u: &[f64], parity: Parity) -> Vec<f64> {
        match parity {
            Parity::Even => self.apply(&self.d_even, u),
            Parity::Odd => self.apply(&self.d_odd, u),
        }
    }
    fn max_order(&self) -> usize {
        5
    }
}

/// Weighted norm `(∫ ρ⁶(a² + b²))^{1/2}` on a uniform grid over `[0, 1]`.
pub fn weighted_norm_uniform(nodes: &[f64], a: &[f64], b: &[f64], h: f64) -> f64 {
    let f: Vec<f64> = (0..nodes.len()).map(|j| nodes[j].powi(6) * (a[j] * a[j] + b[j] * b[j])).collect();
    simpson(&f, h).max(0.0).sqrt()
}

/// Collocation matrix of the linearized generator acting on stacked `(u₁, u₂)`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub n: usize,
    pub include_potential: bool,
    pub basis: EvenChebyshev,
    pub entries: DMatrix<f64>,
}

/// Assembles `L₀` or `L = L₀ + L′` on `n` even Chebyshev nodes.
pub fn assemble_l(n: usize, include_potential: bool) -> Result<OperatorMatrix> {
    assemble_l_with(Execution::Auto, n, include_potential)
}

pub fn assemble_l_with(exec: Execution, n: usize, include_potential: bool) -> Result<OperatorMatrix> {
    if n < MIN_COLLOCATION {
        return Err(Error::Resolution(format!("collocation size must be at least {MIN_COLLOCATION}, got {n}")));
    }
    let basis = EvenChebyshev::new(n)?;
    if include_potential {
        let err = basis.potential_interpolation_error();
        if err > INTERPOLATION_TOL {
            return Err(Error::Resolution(format!("potential interpolation error {err:e} exceeds {INTERPOLATION_TOL:e}")));
        }
    }
    let rho = &basis.nodes;
    let d = &basis.d_even;
    let d2 = &basis.d2_even;
    let rows: Vec<usize> = (0..n).collect();
    let row_blocks = par::map_collect(exec, &rows, |&j| {
        let r = rho[j];
        let mut top = vec![0.0; 2 * n];
        let mut bottom = vec![0.0; 2 * n];
        let (pv1, pv2) = if include_potential { (v1(r), v2(r)) } else { (0.0, 0.0) };
        for k in 0..n {
            let lap = if r == 0.0 { 7.0 * d2[(j, k)] } else { d2[(j, k)] + 6.0 / r * d[(j, k)] };
            let id = if j == k { 1.0 } else { 0.0 };
            top[k] = -r * d[(j, k)] - id;
            top[n + k] = id;
            bottom[k] = lap + pv1 * id - pv2 * r * d[(j, k)];
            bottom[n + k] = -r * d[(j, k)] - 4.0 * id + pv2 * r * r * id;
        }
        (top, bottom)
    });
    let mut entries = DMatrix::zeros(2 * n, 2 * n);
    for (j, (top, bottom)) in row_blocks.into_iter().enumerate() {
        for k in 0..2 * n {
            entries[(j, k)] = top[k];
            entries[(n + j, k)] = bottom[k];
        }
    }
    Ok(OperatorMatrix { n, include_potential, basis, entries })
}

impl OperatorMatrix {
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (&self.entries * DVector::from_column_slice(u)).as_slice().to_vec()
    }

    /// The symmetry mode `((1+Λ)U₁, (2+Λ)U₂)` on the collocation nodes.
    pub fn symmetry_mode(&self) -> Result<Vec<f64>> {
        let p = ProfileParams::d5();
        let mut g = vec![0.0; 2 * self.n];
        for (j, &r) in self.basis.nodes.iter().enumerate() {
            let (a, b) = p.symmetry_mode(r)?;
            g[j] = a;
            g[self.n + j] = b;
        }
        Ok(g)
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.basis.weighted_norm(&u[..self.n], &u[self.n..])
    }

    /// `‖Lg − μg‖/‖g‖` in the weighted norm.
    pub fn eigen_residual(&self, g: &[f64], mu: f64) -> f64 {
        let lg = self.apply(g);
        let r: Vec<f64> = lg.iter().zip(g).map(|(a, b)| a - mu * b).collect();
        self.norm(&r) / self.norm(g)
    }
}

/// Diagonal similarity scaling (powers of two) that equalizes row and column norms.
pub fn balance(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut scale = vec![1.0; n];
    let radix = 2.0f64;
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / radix {
                cc *= radix;
                rr /= radix;
                f *= radix;
            }
            while cc >= rr * radix {
                cc /= radix;
                rr *= radix;
                f /= radix;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                scale[i] *= f;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
    (m, scale)
}

/// Eigenvalues of a dense real matrix after balancing.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let (b, _) = balance(a);
    let ev = b
        .clone()
        .try_schur(1e-15, 100_000)
        .ok_or_else(|| Error::LinearAlgebra("Schur iteration did not converge".into()))?
        .complex_eigenvalues();
    let out: Vec<Complex64> = ev.iter().map(|z| Complex64::new(z.re, z.im)).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::LinearAlgebra("non-finite eigenvalue".into()));
    }
    Ok(out)
}

/// A real eigenvalue with right and left eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RealEigenpair {
    pub value: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

fn unit(v: &DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    v / n
}

/// Inverse iteration for the real eigenvalue nearest `shift`.
pub fn real_eigenpair_near(a: &DMatrix<f64>, shift: f64) -> Result<RealEigenpair> {
    let n = a.nrows();
    let s = shift + 1e-9 * (1.0 + shift.abs());
    let shifted = a - DMatrix::identity(n, n) * s;
    let lu = shifted.clone().lu();
    let lu_t = shifted.transpose().lu();
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut y = x.clone();
    for _ in 0..40 {
        x = unit(&lu.solve(&x).ok_or_else(|| Error::LinearAlgebra("singular shifted matrix".into()))?);
        y = unit(&lu_t.solve(&y).ok_or_else(|| Error::LinearAlgebra("singular shifted matrix".into()))?);
    }
    let ax = a * &x;
    let yx = y.dot(&x);
    if yx.abs() < 1e-14 {
        return Err(Error::LinearAlgebra("eigenvalue is defective or not simple".into()));
    }
    let value = y.dot(&ax) / yx;
    let res = (&ax - &x * value).norm();
    if !(res < 1e-6 * a.norm()) {
        return Err(Error::LinearAlgebra(format!("inverse iteration did not converge (residual {res:e})")));
    }
    Ok(RealEigenpair { value, right: x.as_slice().to_vec(), left: y.as_slice().to_vec() })
}

/// Right eigenvector for a (possibly complex) eigenvalue by inverse iteration.
pub fn complex_eigenvector(a: &DMatrix<f64>, mu: Complex64) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    let s = mu + Complex64::new(1e-9, 1e-9) * (1.0 + mu.norm());
    let m = DMatrix::from_fn(n, n, |i, j| Complex64::new(a[(i, j)], 0.0) - if i == j { s } else { Complex64::new(0.0, 0.0) });
    let lu = m.lu();
    let mut x = DVector::from_element(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0));
    for _ in 0..20 {
        let y = lu.solve(&x).ok_or_else(|| Error::LinearAlgebra("singular shifted matrix".into()))?;
        let nrm = y.norm();
        x = y / Complex64::new(nrm, 0.0);
    }
    Ok(x.as_slice().to_vec())
}

/// One eigenvalue of the fine discretization with its two-grid status.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenEntry {
    pub re: f64,
    pub im: f64,
    pub resolved: bool,
    /// Distance to the nearest eigenvalue of the other resolution.
    pub partner_distance: f64,
}

/// Two-grid spectrum of the linearized generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub match_tol: f64,
    pub include_potential: bool,
    /// Eigenvalues of the fine discretization.
    pub eigenvalues: Vec<EigenEntry>,
    /// Resolved eigenvalues with `Re ≥ 0`.
    pub unstable_list: Vec<(f64, f64)>,
    /// Largest real part among resolved eigenvalues other than the one near 1.
    pub gap: f64,
    /// Measured gap `ω̂₀ = −gap`.
    pub omega_hat: f64,
    /// Resolved eigenvalue nearest 1, if any.
    pub unit_eigenvalue: Option<f64>,
    /// `‖Lg − g‖/‖g‖` of the symmetry mode at (coarse, fine).
    pub symmetry_residual: (f64, f64),
    /// Fine-grid nodes, for the eigenvector columns.
    pub nodes: Vec<f64>,
    /// Right eigenvector for the eigenvalue near 1 (unit weighted norm, positive at the origin).
    pub g_h: Vec<f64>,
    /// Left eigenvector with `⟨g_adj, g_h⟩ = 1`.
    pub g_adj: Vec<f64>,
    /// Angle between `g_h` and the symmetry mode in the weighted norm.
    pub symmetry_angle: f64,
}

/// Options for [`compute_spectrum_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub match_tol: f64,
    pub include_potential: bool,
    pub exec: Execution,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { n_coarse: 128, n_fine: 192, match_tol: 1e-3, include_potential: true, exec: Execution::Auto }
    }
}

/// Dense eigensolve at two resolutions with two-grid filtering.
pub fn compute_spectrum(n_coarse: usize, n_fine: usize, match_tol: f64) -> Result<SpectrumReport> {
    compute_spectrum_with(&SpectrumOptions { n_coarse, n_fine, match_tol, ..SpectrumOptions::default() })
}

fn nearest(z: Complex64, set: &[Complex64]) -> f64 {
    set.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min)
}

/// Tolerance within which a resolved eigenvalue is identified with 1.
pub const UNIT_TOL: f64 = 1e-2;

pub fn compute_spectrum_with(opts: &SpectrumOptions) -> Result<SpectrumReport> {
    if (opts.n_fine as f64) < 1.5 * opts.n_coarse as f64 {
        return Err(Error::Domain(format!("n_fine = {} must be at least 1.5 n_coarse = {}", opts.n_fine, opts.n_coarse)));
    }
    if !(opts.match_tol > 0.0) {
        return Err(Error::Domain("match_tol must be positive".into()));
    }
    let (coarse, fine) = par::join(
        opts.exec,
        || -> Result<(OperatorMatrix, Vec<Complex64>)> {
            let op = assemble_l_with(opts.exec, opts.n_coarse, opts.include_potential)?;
            let ev = eigenvalues(&op.entries)?;
            Ok((op, ev))
        },
        || -> Result<(OperatorMatrix, Vec<Complex64>)> {
            let op = assemble_l_with(opts.exec, opts.n_fine, opts.include_potential)?;
            let ev = eigenvalues(&op.entries)?;
            Ok((op, ev))
        },
    );
    let (op_c, ev_c) = coarse?;
    let (op_f, ev_f) = fine?;
    let mut eigenvalues: Vec<EigenEntry> = ev_f
        .iter()
        .map(|&z| {
            let d = nearest(z, &ev_c);
            EigenEntry { re: z.re, im: z.im, resolved: d <= opts.match_tol, partner_distance: d }
        })
        .collect();
    eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    let resolved: Vec<&EigenEntry> = eigenvalues.iter().filter(|e| e.resolved).collect();
    let unstable_list: Vec<(f64, f64)> = resolved.iter().filter(|e| e.re >= 0.0).map(|e| (e.re, e.im)).collect();
    let unit_eigenvalue = resolved
        .iter()
        .filter(|e| (Complex64::new(e.re, e.im) - 1.0).norm() < UNIT_TOL)
        .map(|e| e.re)
        .min_by(|a, b| (a - 1.0).abs().total_cmp(&(b - 1.0).abs()));
    let gap = resolved
        .iter()
        .filter(|e| unit_eigenvalue.is_none_or(|u| !(e.re == u && e.im == 0.0)))
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let sym_c = op_c.symmetry_mode()?;
    let sym_f = op_f.symmetry_mode()?;
    let symmetry_residual = (op_c.eigen_residual(&sym_c, 1.0), op_f.eigen_residual(&sym_f, 1.0));
    let (g_h, g_adj, symmetry_angle) = match unit_eigenvalue {
        Some(u) if opts.include_potential => unit_pair(&op_f, u, &sym_f)?,
        _ => (Vec::new(), Vec::new(), f64::NAN),
    };
    Ok(SpectrumReport {
        n_coarse: opts.n_coarse,
        n_fine: opts.n_fine,
        match_tol: opts.match_tol,
        include_potential: opts.include_potential,
        eigenvalues,
        unstable_list,
        gap,
        omega_hat: -gap,
        unit_eigenvalue,
        symmetry_residual,
        nodes: op_f.basis.nodes.clone(),
        g_h,
        g_adj,
        symmetry_angle,
    })
}

fn unit_pair(op: &OperatorMatrix, mu: f64, sym: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let pair = real_eigenpair_near(&op.entries, mu)?;
    let mut g = pair.right;
    let nrm = op.norm(&g);
    let first = g.iter().copied().find(|v| v.abs() > 1e-14).unwrap_or(1.0);
    let sign = first.signum();
    g.iter_mut().for_each(|v| *v *= sign / nrm);
    let pairing: f64 = pair.left.iter().zip(&g).map(|(a, b)| a * b).sum();
    let adj: Vec<f64> = pair.left.iter().map(|v| v / pairing).collect();
    let n = op.n;
    let w = |a: &[f64], b: &[f64]| -> f64 {
        (0..n).map(|j| op.basis.weights[j] * op.basis.nodes[j].powi(6) * (a[j] * b[j] + a[n + j] * b[n + j])).sum::<f64>()
    };
    let cos = (w(&g, sym) / (w(&g, &g) * w(sym, sym)).sqrt()).clamp(-1.0, 1.0);
    Ok((g, adj, cos.abs().acos()))
}

/// The projection pair `(g_h, g_adj, ⟨g_adj, g_h⟩)`.
pub fn export_projection(report: &SpectrumReport) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let resolved_unit = report.unstable_list.len() == 1 && report.unit_eigenvalue.is_some();
    if !resolved_unit || report.g_h.is_empty() {
        return Err(Error::Dependency("eigenvalue 1 is not resolved as the only unstable eigenvalue".into()));
    }
    let pairing = report.g_adj.iter().zip(&report.g_h).map(|(a, b)| a * b).sum();
    Ok((report.g_h.clone(), report.g_adj.clone(), pairing))
}
