use cusplab::cusp::A3System;
use cusplab::odeflow::{
    integrate_to_section, log_section_determinant, Axis, Direction, Section, Sign,
};
use cusplab::transition::{
    estimate_transition, layer_study, slow_manifold_height, sweep_eps, TransitionSetup,
};
use cusplab::Error;

fn setup() -> TransitionSetup {
    TransitionSetup::default()
}

#[test]
fn rate_near_minus_sdi_at_b0() {
    let est = estimate_transition(&A3System::principal(), 0.0, 2.0, 1e-2, &setup()).unwrap();
    assert!((est.rate_num - 3.6).abs() < 0.25, "{}", est.rate_num);
    assert_eq!(est.z_exit_sign, Sign::Minus);
}

#[test]
fn zero_eps_is_a_domain_error() {
    let r = estimate_transition(&A3System::principal(), 0.0, 2.0, 0.0, &setup());
    assert!(matches!(r, Err(Error::Domain(_))));
}

#[test]
fn start_on_the_slow_manifold() {
    let sys = A3System::principal();
    let s = setup();
    let (base, _) = slow_manifold_height(&sys, 0.0, 1e-2, &s).unwrap();
    let on = estimate_transition(&sys, 0.0, base[2], 1e-2, &s).unwrap();
    let off = estimate_transition(&sys, 0.0, 2.0, 1e-2, &s).unwrap();
    assert!((on.z_exit - off.z_exit).abs() < 1e-8);
    assert!((on.shift_num - off.shift_num).abs() < 1e-8);
}

#[test]
fn reflection_symmetry() {
    let eps = 1e-2;
    for b in [-0.3, 0.0, 0.3] {
        let est = estimate_transition(&A3System::principal(), b, 2.0, eps, &setup()).unwrap();
        let mirrored = |_t: f64, y: &[f64; 4]| {
            let (a, b, z) = (y[0], y[1], y[2]);
            [-y[3], 0.0, -(z * z * z + b * z + a), 0.0]
        };
        let sec = Section::new(Axis::A, -1.0).unwrap().with_z_sign(Sign::Plus);
        let det = log_section_determinant(
            &mirrored,
            [1.0, b, -2.0, eps],
            &sec,
            Direction::Decreasing,
            eps,
            &setup().opts,
            1e5,
        )
        .unwrap();
        let rate = -eps * det.log_abs;
        assert!(
            (rate - est.rate_num).abs() < 1e-6,
            "b={b}: {rate} vs {}",
            est.rate_num
        );
    }
}

#[test]
fn fast_and_slow_time_agree() {
    let sys = A3System::principal();
    let eps = 1e-2;
    let sec = Section::new(Axis::A, 1.0).unwrap().with_z_sign(Sign::Minus);
    let opts = setup().opts;
    let fast = integrate_to_section(
        &sys.fast_field(),
        [-1.0, 0.0, 2.0, eps],
        &sec,
        Direction::Increasing,
        &opts,
        1e4,
    )
    .unwrap();
    let slow = integrate_to_section(
        &sys.slow_field(),
        [-1.0, 0.0, 2.0, eps],
        &sec,
        Direction::Increasing,
        &opts,
        1e2,
    )
    .unwrap();
    assert!((fast.state[2] - slow.state[2]).abs() < 1e-8);
    assert!((fast.t * eps - slow.t).abs() < 1e-8);
}

#[test]
fn shift_is_small_and_shrinks() {
    let sys = A3System::principal();
    let a = estimate_transition(&sys, 0.0, 2.0, 1e-2, &setup()).unwrap();
    let b = estimate_transition(&sys, 0.0, 2.0, 1e-3, &setup()).unwrap();
    assert!(b.shift_num.abs() < 0.1);
    assert!(b.shift_num.abs() < a.shift_num.abs());
}

#[test]
fn runs_are_deterministic() {
    let sys = A3System::principal();
    let a = sweep_eps(&sys, 0.3, 2.0, &[1e-2, 5e-3], &setup()).unwrap();
    let b = sweep_eps(&sys, 0.3, 2.0, &[1e-2, 5e-3], &setup()).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        let (x, y) = (x.estimate.as_ref().unwrap(), y.estimate.as_ref().unwrap());
        assert_eq!(x.rate_num.to_bits(), y.rate_num.to_bits());
        assert_eq!(x.shift_num.to_bits(), y.shift_num.to_bits());
    }
}

#[test]
fn zero_amplitude_flat_matches_principal() {
    let p = estimate_transition(&A3System::principal(), 0.0, 2.0, 1e-2, &setup()).unwrap();
    let f = estimate_transition(&A3System::stock_flat(0.0), 0.0, 2.0, 1e-2, &setup()).unwrap();
    assert_eq!(p.rate_num.to_bits(), f.rate_num.to_bits());
    assert_eq!(p.z_exit.to_bits(), f.z_exit.to_bits());
}

#[test]
fn flat_perturbation_stays_below_the_deviation() {
    let eps = 1e-2;
    let p = estimate_transition(&A3System::principal(), 0.0, 2.0, eps, &setup()).unwrap();
    let f = estimate_transition(&A3System::stock_flat(1.0), 0.0, 2.0, eps, &setup()).unwrap();
    let deviation = (p.rate_num - 3.6).abs();
    assert!((p.rate_num - f.rate_num).abs() < deviation);
}

#[test]
fn layer_labels_follow_mu() {
    let rows = layer_study(
        &A3System::principal(),
        1e-3,
        &[-1.0, 0.0, 1.0],
        0.5,
        1.0,
        &setup(),
    )
    .unwrap();
    for r in &rows {
        assert_eq!(r.label.inner, r.mu.abs() <= 0.5, "{r:?}");
        assert!(!r.escaped);
        assert!((r.b1_exit.unwrap() - r.mu).abs() < 1e-10);
        assert!(r.estimate.is_some());
    }
}
