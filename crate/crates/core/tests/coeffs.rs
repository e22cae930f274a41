use approx::assert_relative_eq;
use proptest::prelude::*;
use skyrme_core::coeffs::*;
use skyrme_core::model::{f_sf, g_difference, g_lambda_weight, NonlinArgs};
use skyrme_core::profile::ProfileParams;

/// Five-point central difference at 0.
fn fd5(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}

/// Profile point `(u, ∂ᵣu, ∂ₜu)` in the reduced variable at radius `rho`.
fn base(rho: f64) -> (f64, f64, f64) {
    let p = ProfileParams::d5();
    let (u1, u2) = p.eval_profile_pair(rho).unwrap();
    (u1, p.eval_u_tilde_prime(rho).unwrap(), u2)
}

/// The λ-correction through the checked, non-radial entry points.
fn correction(rho: f64, sigma: f64, eta: [f64; 3]) -> f64 {
    let (u, ur, ut) = base(rho);
    let args = NonlinArgs::new(rho * (u + eta[0]), rho * (ur + eta[1]), rho * (ut + eta[2]), rho);
    g_lambda_weight(args.zeta1, rho, sigma).unwrap() * g_difference(args).unwrap()
}

fn sf(rho: f64, eta: [f64; 3]) -> f64 {
    let (u, ur, ut) = base(rho);
    f_sf(NonlinArgs::new(rho * (u + eta[0]), rho * (ur + eta[1]), rho * (ut + eta[2]), rho)).unwrap()
}

#[test]
fn spot_values() {
    assert_relative_eq!(v1(0.0), 17.0, epsilon = 1e-10);
    assert_relative_eq!(v1(1.0), 5.0, epsilon = 1e-10);
    assert_relative_eq!(v2(0.0), 2.8, epsilon = 1e-10);
    assert_relative_eq!(v2(1.0), 2.0, epsilon = 1e-10);
    let c = taylor_coeffs(0.0, 0.0);
    assert_relative_eq!(c.g0, 21.0 / (16.0 * 5f64.sqrt()), epsilon = 1e-10);
    assert_eq!(c.dg0_dsigma, 0.0);
    assert_relative_eq!(c.g1w, 1.0 / 64.0, epsilon = 1e-10);
    assert_relative_eq!(c.g2, 7.0 / 32.0, epsilon = 1e-10);
    assert_relative_eq!(c.g3w, 5.0 / 32.0, epsilon = 1e-10);
    assert_relative_eq!(taylor_coeffs(0.0, 1.0).g0, 0.625, epsilon = 1e-12);
}

#[test]
fn potentials_match_independent_differences() {
    for &rho in &[0.3, 0.5, 0.8, 1.0] {
        let d1 = fd5(|t| sf(rho, [t, 0.0, 0.0]), 1e-4);
        assert_relative_eq!(d1, v1(rho), max_relative = 1e-6);
        let d2 = fd5(|t| sf(rho, [0.0, t, 0.0]), 1e-4);
        assert_relative_eq!(-d2 / rho, v2(rho), max_relative = 1e-6);
    }
}

#[test]
fn taylor_coeffs_match_independent_differences() {
    for &rho in &[0.1, 0.45, 0.9] {
        for &sigma in &[0.0, 0.05, 0.7, 3.0] {
            let c = taylor_coeffs(sigma, rho);
            assert_relative_eq!(correction(rho, sigma, [0.0; 3]), c.g0, max_relative = 1e-12);
            assert_relative_eq!(fd5(|t| correction(rho, sigma, [t, 0.0, 0.0]), 1e-4), c.g1w, epsilon = 1e-9, max_relative = 1e-6);
            assert_relative_eq!(fd5(|t| correction(rho, sigma, [0.0, t, 0.0]), 1e-4) / rho, c.g2, max_relative = 1e-6);
            assert_relative_eq!(fd5(|t| correction(rho, sigma, [0.0, 0.0, t]), 1e-4), c.g3w, epsilon = 1e-9, max_relative = 1e-6);
        }
    }
}

#[test]
fn sigma_derivative_matches_difference_away_from_zero() {
    for &rho in &[0.0, 0.4, 1.0] {
        for &sigma in &[0.01f64, 0.3, 2.0, 50.0] {
            let f = |s: f64| taylor_coeffs(s, rho).g0;
            let h = (1e-3 * sigma).max(1e-4);
            let fd = (f(sigma - 2.0 * h) - 8.0 * f(sigma - h) + 8.0 * f(sigma + h) - f(sigma + 2.0 * h)) / (12.0 * h);
            assert_relative_eq!(taylor_coeffs(sigma, rho).dg0_dsigma, fd, max_relative = 1e-8);
        }
    }
}

#[test]
fn potentials_are_even() {
    for h in [1e-2, 1e-3] {
        assert!(((v1(h) - v1(-h)) / (2.0 * h)).abs() < 1e-12);
        assert!(((v2(h) - v2(-h)) / (2.0 * h)).abs() < 1e-12);
        let third = |f: fn(f64) -> f64| (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h.powi(3));
        assert!(third(v1).abs() < 1e-4 / h);
        assert!(third(v2).abs() < 1e-4 / h);
    }
}

#[test]
fn coefficient_supremum_stabilizes() {
    let sup = |n: usize| {
        let mut m = [0.0f64; 5];
        for i in 0..=n {
            let sigma = if i == 0 { 0.0 } else { 1e-3 * 1e6f64.powf(i as f64 / n as f64) };
            for j in 0..=n {
                let c = taylor_coeffs(sigma, j as f64 / n as f64);
                for (k, v) in [c.g0, c.dg0_dsigma, c.g1w, c.g2, c.g3w].into_iter().enumerate() {
                    m[k] = m[k].max(v.abs());
                }
            }
        }
        m
    };
    let (coarse, fine) = (sup(200), sup(400));
    for k in 0..5 {
        assert!(coarse[k].is_finite());
        assert!((coarse[k] - fine[k]).abs() <= 5e-4 * fine[k], "coefficient {k}: {} vs {}", coarse[k], fine[k]);
    }
}

#[test]
fn fd_sweep_passes_at_acceptance_size() {
    let report = verify_coeffs_fd(225, 1e-6).unwrap();
    assert!(report.n_samples >= 200);
    assert!(report.pass, "max relative error {:e}", report.max_rel_err);
    assert!(report.max_rel_err <= 1e-6);
}

#[test]
fn fd_sweep_rejects_bad_arguments() {
    assert!(verify_coeffs_fd(10, 0.0).is_err());
    assert!(verify_coeffs_fd(0, 1e-6).is_err());
}

#[test]
fn guard_violations_are_reported() {
    let p = ProfileParams::d5();
    let err = correction_radial(&p, [10.0, 0.0, 0.0], 0.1, 0.5).unwrap_err();
    assert!(matches!(err, skyrme_core::Error::Guard(_)));
}

#[test]
fn table_is_consistent_with_pointwise_values() {
    let rho = [0.0, 0.25, 0.5, 1.0];
    let sigma = [0.0, 0.1, 10.0];
    let t = coeff_table(&rho, &sigma).unwrap();
    assert_eq!(t.g0.len(), 3);
    assert_eq!(t.g0[0].len(), 4);
    assert_eq!(t.g3w[2][1], taylor_coeffs(10.0, 0.25).g3w);
    assert_eq!(t.v1[3], v1(1.0));
    assert!(coeff_table(&[1.5], &sigma).is_err());
    assert!(coeff_table(&rho, &[-1.0]).is_err());
}

proptest! {
    #[test]
    fn g0_decreases_in_sigma(rho in 0.0..=1.0f64, a in 0.0..100.0f64, b in 0.0..100.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(taylor_coeffs(hi, rho).g0 <= taylor_coeffs(lo, rho).g0);
        prop_assert!(taylor_coeffs(hi, rho).g0 > 0.0);
    }

    #[test]
    fn coefficients_finite_on_domain(rho in 0.0..=1.0f64, sigma in 0.0..1e6f64) {
        let c = taylor_coeffs(sigma, rho);
        for v in [c.g0, c.dg0_dsigma, c.g1w, c.g2, c.g3w, v1(rho), v2(rho)] {
            prop_assert!(v.is_finite());
        }
    }
}
