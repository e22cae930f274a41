use approx::assert_relative_eq;
use skyrme_core::grid::{interpolate, FieldForm, FieldState, Parity, RadialGrid};
use skyrme_core::model::ModelParams;
use skyrme_core::physical::*;
use skyrme_core::profile::ProfileParams;
use skyrme_core::Error;

fn exact_angle(p: &ProfileParams, t: f64, r: f64) -> (f64, f64) {
    let s = 1.0 - t;
    let rho = r / s;
    (p.eval_u(rho).unwrap(), rho * p.eval_u_prime(rho).unwrap() / s)
}

fn exact_reduced(p: &ProfileParams, t: f64, r: f64) -> (f64, f64) {
    let s = 1.0 - t;
    let rho = r / s;
    (p.eval_u_tilde(rho).unwrap() / s, p.eval_u_prime(rho).unwrap() / (s * s))
}

fn cone_controls(stride: usize) -> EvolveControls {
    EvolveControls { snapshot_stride: stride, cone_vertex: Some(1.0), ..Default::default() }
}

/// Max error against the self-similar solution on the backward cone, over all snapshots.
fn self_similar_error(n: usize, reduced: bool) -> f64 {
    let p = ProfileParams::d5();
    let grid = RadialGrid::new(1.0625, n).unwrap();
    let controls = EvolveControls { snapshot_stride: n / 32, ..Default::default() };
    let traj = if reduced {
        let init = FieldState::from_fn(FieldForm::Reduced, &grid, |r| exact_reduced(&p, 0.0, r));
        evolve_semilinear(&ModelParams::strong_field(), &grid, &init, 0.5, 0.5, &controls).unwrap()
    } else {
        let init = FieldState::from_fn(FieldForm::Angle, &grid, |r| exact_angle(&p, 0.0, r));
        evolve_physical(&ModelParams::strong_field(), &grid, &init, 0.5, 0.5, &controls).unwrap()
    };
    assert_eq!(traj.stop, StopReason::Completed);
    assert_relative_eq!(traj.last().t, 0.5, epsilon = 1e-12);
    let mut err: f64 = 0.0;
    for s in &traj.snapshots {
        for (i, &r) in grid.nodes.iter().enumerate() {
            if r <= 1.0 - s.t {
                let exact = if reduced { exact_reduced(&p, s.t, r).0 } else { exact_angle(&p, s.t, r).0 };
                err = err.max((s.values[i] - exact).abs());
            }
        }
    }
    err
}

#[test]
fn angle_form_converges_at_second_order() {
    let e: Vec<f64> = [256, 512, 1024].iter().map(|&n| self_similar_error(n, false)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..=4.5).contains(&ratio), "errors {e:?}");
    }
}

#[test]
fn reduced_form_converges_at_second_order() {
    let e: Vec<f64> = [256, 512, 1024].iter().map(|&n| self_similar_error(n, true)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..=4.5).contains(&ratio), "errors {e:?}");
    }
}

#[test]
fn zero_data_stays_zero() {
    let grid = RadialGrid::new(1.0, 128).unwrap();
    let zero = FieldState::zeros(FieldForm::Angle, grid.len());
    let controls = EvolveControls { snapshot_stride: 8, ..Default::default() };
    for params in [ModelParams::full(1.0, 1.0, 1.0), ModelParams::strong_field()] {
        let traj = evolve_physical(&params, &grid, &zero, 0.5, 0.5, &controls).unwrap();
        assert!(traj.snapshots.iter().all(|s| s.values.iter().chain(&s.rates).all(|&v| v == 0.0)));
    }
    let zero_u = FieldState::zeros(FieldForm::Reduced, grid.len());
    let traj = evolve_semilinear(&ModelParams::full(1.0, 1.0, 1.0), &grid, &zero_u, 0.5, 0.5, &controls).unwrap();
    assert!(traj.snapshots.iter().all(|s| s.values.iter().all(|&v| v == 0.0)));
}

#[test]
fn semilinear_matches_angle_form() {
    let p = ProfileParams::d5();
    let params = ModelParams::full(1.0, 1.0, 1.0);
    for n in [256, 512] {
        let grid = RadialGrid::new(1.0625, n).unwrap();
        let controls = cone_controls(16);
        let psi0 = FieldState::from_fn(FieldForm::Angle, &grid, |r| (p.eval_u(r).unwrap(), r * p.eval_u_prime(r).unwrap()));
        let u0 = FieldState::from_fn(FieldForm::Reduced, &grid, |r| (p.eval_u_tilde(r).unwrap(), p.eval_u_prime(r).unwrap()));
        let a = evolve_physical(&params, &grid, &psi0, 0.5, 0.5, &controls).unwrap();
        let b = evolve_semilinear(&params, &grid, &u0, 0.5, 0.5, &controls).unwrap();
        assert_eq!(a.snapshots.len(), b.snapshots.len());
        let mut err: f64 = 0.0;
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(x.t, y.t);
            for (i, &r) in grid.nodes.iter().enumerate() {
                if r <= 1.0 - x.t {
                    err = err.max((x.values[i] - r * y.values[i]).abs());
                }
            }
        }
        let h = grid.spacing;
        assert!(err <= 5.0 * h * h, "n = {n}: {err:e}");
    }
}

fn smooth_bump(r: f64, scale: f64) -> (f64, f64) {
    let x = r / scale;
    (0.5 * x * (-x * x).exp(), 0.0)
}

#[test]
fn lambda_rescaling_equivalence() {
    let lambda = 2.0;
    let n = 512;
    let controls = EvolveControls { snapshot_stride: 1 << 20, ..Default::default() };
    let rescaled_grid = RadialGrid::new(6.0, n).unwrap();
    let a_init = FieldState::from_fn(FieldForm::Angle, &rescaled_grid, |r| smooth_bump(r, 1.0));
    let a = evolve_physical(&ModelParams::full(1.0, 1.0, lambda), &rescaled_grid, &a_init, 1.0, 0.5, &controls).unwrap();
    let unit_grid = RadialGrid::new(6.0 * lambda, n).unwrap();
    let b_init = FieldState::from_fn(FieldForm::Angle, &unit_grid, |r| smooth_bump(r, lambda));
    let b = evolve_physical(&ModelParams::full(1.0, 1.0, 1.0), &unit_grid, &b_init, lambda, 0.5, &controls).unwrap();
    assert_eq!(a.steps, b.steps);
    let (sa, sb) = (a.last(), b.last());
    for i in 0..=n {
        assert!((sa.values[i] - sb.values[i]).abs() <= 1e-10);
        assert!((sa.rates[i] - lambda * sb.rates[i]).abs() <= 1e-10);
    }
}

fn compact_bump(r: f64, lo: f64, hi: f64) -> f64 {
    if r <= lo || r >= hi {
        return 0.0;
    }
    let x = (2.0 * r - lo - hi) / (hi - lo);
    (-1.0 / (1.0 - x * x)).exp() * std::f64::consts::E
}

#[test]
fn finite_propagation_speed() {
    let r0 = 1.0;
    let grid = RadialGrid::new(6.0, 2048).unwrap();
    let h = grid.spacing;
    let init = FieldState::from_fn(FieldForm::Angle, &grid, |r| (1e-3 * compact_bump(r, r0, 3.0), 0.0));
    let controls = EvolveControls { snapshot_stride: 1, ..Default::default() };
    let traj = evolve_physical(&ModelParams::full(1.0, 1.0, 1.0), &grid, &init, r0 + 0.5, 0.5, &controls).unwrap();
    let origin_max = |t_max: f64| {
        traj.snapshots.iter().filter(|s| s.t < t_max).flat_map(|s| s.values[..4].iter().chain(&s.rates[..4])).fold(0.0f64, |m, v| m.max(v.abs()))
    };
    let arrived = origin_max(f64::INFINITY);
    assert!(arrived > 0.0);
    let early = origin_max(r0 - 4.0 * h);
    assert!(early <= 1e-3 * arrived, "precursor {early:e} against signal {arrived:e}");
    assert!(origin_max(r0 - 16.0 * h) <= 1e-6 * arrived);
}

#[test]
fn conservation_strong_field_quartic_energy() {
    let grid = RadialGrid::new(4.0, 1024).unwrap();
    let params = ModelParams::strong_field();
    let init = FieldState::from_fn(FieldForm::Angle, &grid, |r| (std::f64::consts::FRAC_PI_2 * (r / 0.3).tanh(), 0.0));
    let controls = EvolveControls { snapshot_stride: 128, ..Default::default() };
    let traj = evolve_physical(&params, &grid, &init, 1.0, 0.5, &controls).unwrap();
    let e0 = skyrme_core::model::energies(&traj.snapshots[0], &grid, &params, 5).unwrap().e4;
    for s in &traj.snapshots[1..] {
        let e = skyrme_core::model::energies(s, &grid, &params, 5).unwrap().e4;
        assert!(((e - e0) / e0).abs() / s.t <= 1e-5);
    }
}

#[test]
fn blowup_fit_on_exact_series() {
    let c = 4.0 / 5f64.sqrt();
    let series: Vec<(f64, f64)> = (0..2000).map(|k| 0.999 * k as f64 / 2000.0).map(|t| (t, c / (1.0 - t))).collect();
    let report = fit_blowup_series(&series, 0.5).unwrap();
    assert!(report.detected);
    assert_relative_eq!(report.exponent_fit, -1.0, epsilon = 1e-6);
    assert_relative_eq!(report.t_fit, 1.0, epsilon = 1e-6);
    assert_relative_eq!(report.c_fit, c, max_relative = 1e-5);
    assert!(report.residual < 1e-8);
    assert!(report.window.0 < report.window.1);
}

#[test]
fn blowup_fit_rejects_non_monotone_series() {
    let series: Vec<(f64, f64)> = (0..200).map(|k| k as f64 / 200.0).map(|t| (t, 1.0 + 0.5 * (8.0 * t).sin())).collect();
    let report = fit_blowup_series(&series, 0.5).unwrap();
    assert!(!report.detected);
    assert!(fit_blowup_series(&series, 0.0).is_err());
}

#[test]
fn dispersing_small_data_is_not_blowup() {
    let p = ProfileParams::d5();
    let grid = RadialGrid::new(2.0, 512).unwrap();
    let init = FieldState::from_fn(FieldForm::Angle, &grid, |r| (1e-3 * p.eval_u(r).unwrap(), 0.0));
    let controls = EvolveControls { snapshot_stride: 64, ..Default::default() };
    let traj = evolve_physical(&ModelParams::full(1.0, 1.0, 1.0), &grid, &init, 1.5, 0.5, &controls).unwrap();
    assert_eq!(traj.stop, StopReason::Completed);
    let report = fit_blowup_rate(&traj, 0.5).unwrap();
    assert!(!report.detected);
}

#[test]
fn full_model_gradient_grows_monotonically_before_blowup() {
    let p = ProfileParams::d5();
    let grid = RadialGrid::new(1.0625, 1024).unwrap();
    let init = FieldState::from_fn(FieldForm::Angle, &grid, |r| (p.eval_u(r).unwrap(), r * p.eval_u_prime(r).unwrap()));
    let traj = evolve_physical(&ModelParams::full(1.0, 1.0, 0.05), &grid, &init, 1.0, 0.5, &cone_controls(64)).unwrap();
    let late: Vec<f64> = traj.origin_gradient.iter().filter(|(t, _)| *t >= 0.5).map(|g| g.1).collect();
    assert!(late.windows(2).all(|w| w[1] > w[0]));
    let report = fit_blowup_rate(&traj, 0.5).unwrap();
    assert!(report.detected);
    assert!((report.exponent_fit + 1.0).abs() < 0.05);
}

#[test]
fn invalid_runs_are_rejected() {
    let grid = RadialGrid::new(1.0, 64).unwrap();
    let zero = FieldState::zeros(FieldForm::Angle, grid.len());
    let controls = EvolveControls::default();
    let params = ModelParams::full(1.0, 1.0, 1.0);
    assert!(matches!(evolve_physical(&params, &grid, &zero, 1.0, 1.5, &controls), Err(Error::Stability(_))));
    assert!(matches!(evolve_physical(&params, &grid, &zero, -1.0, 0.5, &controls), Err(Error::Domain(_))));
    let zero_u = FieldState::zeros(FieldForm::Reduced, grid.len());
    assert!(matches!(evolve_physical(&params, &grid, &zero_u, 1.0, 0.5, &controls), Err(Error::Shape(_))));
    let mut offset = zero.clone();
    offset.values[0] = 0.1;
    assert!(evolve_physical(&params, &grid, &offset, 1.0, 0.5, &controls).is_err());
    let kink = FieldState::from_fn(FieldForm::Angle, &grid, |r| ((2.0 * r).min(std::f64::consts::PI) * (r < 0.5) as u8 as f64, 1.0));
    assert!(matches!(evolve_physical(&ModelParams::strong_field(), &grid, &kink, 1.0, 0.5, &controls), Err(Error::Degenerate(_))));
}

#[test]
fn reduced_conversion_round_trip() {
    let grid = RadialGrid::new(1.0, 256).unwrap();
    let psi = FieldState::from_fn(FieldForm::Angle, &grid, |r| smooth_bump(r, 0.5));
    let u = angle_to_reduced(&psi, &grid);
    let back = u.to_angle(&grid);
    for i in 0..grid.len() {
        assert!((back.values[i] - psi.values[i]).abs() < 1e-14);
    }
    assert_relative_eq!(u.values[0], 1.0, epsilon = 1e-6);
    let mid = interpolate(&u.values, grid.spacing, Parity::Even, 0.3).unwrap();
    assert_relative_eq!(mid, smooth_bump(0.3, 0.5).0 / 0.3, epsilon = 1e-6);
}
