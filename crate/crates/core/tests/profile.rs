use approx::assert_relative_eq;
use proptest::prelude::*;
use skyrme_core::profile::{profile_constants, ProfileParams, SERIES_THRESHOLD};
use std::f64::consts::PI;

fn arctan_form(rho: f64) -> f64 {
    2.0 * (2.0 * rho / (5.0 - rho * rho).sqrt()).atan()
}

fn analytic_u_prime(rho: f64) -> f64 {
    20.0 / ((5.0 + 3.0 * rho * rho) * (5.0 - rho * rho).sqrt())
}

#[test]
fn cosine_identity_on_dense_sample() {
    let p = ProfileParams::d5();
    let n = 10_000;
    for k in 0..=n {
        let rho = p.rho_star * k as f64 / n as f64;
        let u = p.eval_u(rho).unwrap();
        let target = (p.a - p.b * rho * rho) / (p.a + rho * rho);
        assert!((u.cos() - target).abs() <= 1e-12, "rho = {rho}");
    }
}

#[test]
fn arctan_form_agrees() {
    let p = ProfileParams::d5();
    let top = p.rho_star - 1e-6;
    for k in 0..=10_000 {
        let rho = top * k as f64 / 10_000.0;
        assert!((p.eval_u(rho).unwrap() - arctan_form(rho)).abs() <= 1e-12, "rho = {rho}");
    }
}

#[test]
fn general_dimension_endpoint() {
    for d in [5, 6, 7, 9] {
        let p = profile_constants(d).unwrap();
        assert!(p.rho_star > 1.0);
        assert_relative_eq!(p.eval_u(p.rho_star).unwrap(), PI, epsilon = 1e-10);
        assert_eq!(p.eval_u(0.0).unwrap(), 0.0);
    }
}

#[test]
fn pair_second_component_is_u_prime() {
    let p = ProfileParams::d5();
    for k in 0..=200 {
        let rho = k as f64 / 200.0;
        let (_, u2) = p.eval_profile_pair(rho).unwrap();
        assert_relative_eq!(u2, analytic_u_prime(rho), max_relative = 1e-10);
    }
}

#[test]
fn pair_matches_finite_difference_of_rho_u_tilde() {
    let p = ProfileParams::d5();
    let f = |r: f64| r * p.eval_u_tilde(r).unwrap();
    let h = 1e-4;
    let fd = (f(0.5 + h) - f(0.5 - h)) / (2.0 * h);
    let (u1, u2) = p.eval_profile_pair(0.5).unwrap();
    assert_relative_eq!(u2, fd, epsilon = 1e-8);
    assert_relative_eq!(u1, p.eval_u(0.5).unwrap() / 0.5, epsilon = 1e-15);
}

#[test]
fn origin_pair_and_slope() {
    let p = ProfileParams::d5();
    let (u1, u2) = p.eval_profile_pair(0.0).unwrap();
    assert_relative_eq!(u1, 4.0 / 5f64.sqrt(), epsilon = 1e-15);
    assert_relative_eq!(u2, 4.0 / 5f64.sqrt(), epsilon = 1e-15);
    assert_relative_eq!(p.slope_at_origin(), 4.0 / 5f64.sqrt(), epsilon = 1e-15);
}

#[test]
fn u_tilde_branches_agree_across_threshold() {
    let p = ProfileParams::d5();
    for k in 0..=100 {
        let rho = SERIES_THRESHOLD * 10f64.powf(-1.0 + 2.0 * k as f64 / 100.0);
        let direct = arctan_form(rho) / rho;
        assert_relative_eq!(p.eval_u_tilde(rho).unwrap(), direct, max_relative = 1e-10);
        if rho >= SERIES_THRESHOLD {
            assert_relative_eq!(p.eval_u_tilde(rho).unwrap(), p.eval_u(rho).unwrap() / rho, max_relative = 1e-12);
        }
    }
}

#[test]
fn symmetry_mode_matches_blowup_time_derivative() {
    let p = ProfileParams::d5();
    for &rho in &[0.0, 0.2, 0.6, 1.0] {
        let rescaled = |t: f64| {
            let (a, b) = p.eval_profile_pair_extended(t * rho).unwrap();
            (t * a, t * t * b)
        };
        let h = 1e-5;
        let (ap, bp) = rescaled(1.0 + h);
        let (am, bm) = rescaled(1.0 - h);
        let (g1, g2) = p.symmetry_mode(rho).unwrap();
        assert_relative_eq!(g1, (ap - am) / (2.0 * h), epsilon = 1e-8);
        assert_relative_eq!(g2, (bp - bm) / (2.0 * h), epsilon = 1e-8);
    }
}

#[test]
fn guard_width_from_sup() {
    let p = ProfileParams::d5();
    let sup = (0..=2000).map(|k| 2.0 * k as f64 / 2000.0).map(|r| p.eval_u(r).unwrap()).fold(0.0, f64::max);
    assert_relative_eq!(p.sup_rho_u1(), sup, epsilon = 1e-12);
    assert_relative_eq!(p.guard_width(), 0.5 * (PI - 2.0 * 4f64.atan()), epsilon = 1e-14);
}

#[test]
fn domain_errors() {
    let p = ProfileParams::d5();
    assert!(p.eval_u(p.rho_star + 1e-6).is_err());
    assert!(p.eval_u_tilde(-1e-3).is_err());
    assert!(p.eval_u(f64::NAN).is_err());
    assert!(p.eval_profile_pair(1.5).is_err());
    assert!(profile_constants(3).is_err());
}

proptest! {
    #[test]
    fn u_is_nondecreasing(a in 0.0..2.236f64, b in 0.0..2.236f64) {
        let p = ProfileParams::d5();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(p.eval_u(lo).unwrap() <= p.eval_u(hi).unwrap());
    }

    #[test]
    fn u_stays_in_range(rho in 0.0..2.236f64) {
        let u = ProfileParams::d5().eval_u(rho).unwrap();
        prop_assert!((0.0..=PI).contains(&u));
    }

    #[test]
    fn u_tilde_times_rho_is_u(rho in 1e-3..2.2f64) {
        let p = ProfileParams::d5();
        let lhs = rho * p.eval_u_tilde(rho).unwrap();
        prop_assert!((lhs - p.eval_u(rho).unwrap()).abs() <= 1e-13);
    }
}
