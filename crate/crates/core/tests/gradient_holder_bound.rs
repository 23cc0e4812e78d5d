//! The Hölder seminorm of `∇_H T(t)f` for bounded `f`.
//!
//! Interpolating `‖∇T(t)f(x+h) − ∇T(t)f(x)‖ ≤ 2c(t)‖f‖∞` with
//! `≤ 2c(t)²‖h‖_H‖f‖∞` gives `[∇_H T(t)f]_α ≤ 2c(t)^{1+α}‖f‖∞`. A version
//! carrying an extra factor `e^{-αt}` is too strong for large `t`; the sine
//! ridge below violates it.

use std::f64::consts::FRAC_PI_2;

use mehler_core::constants::c_factor;
use mehler_core::{CovarianceModel, Mehler, Order, Profile, QuadratureSpec, ScalarField};
use nalgebra::DVector;

const OMEGA: f64 = 1.2;

fn setup() -> (CovarianceModel, Mehler, ScalarField) {
    let m = CovarianceModel::diagonal(&[4.0, 1.0, 0.0]).unwrap();
    let me = Mehler::new(m.clone(), QuadratureSpec::default()).unwrap();
    // z = e2 has |Q^{1/2} z| = 1 and ⟨z, x⟩ = x₂.
    let f = ScalarField::ridge(&m, DVector::from_vec(vec![0.0, 1.0, 0.0]), Profile::sin(OMEGA).unwrap()).unwrap();
    (m, me, f)
}

/// Largest quotient `‖∇T(t)f(x+h) − ∇T(t)f(x)‖ / ‖h‖^α` over a log range of
/// `‖h‖`, with `x` placed where the cosine difference is largest.
fn largest_quotient(me: &Mehler, f: &ScalarField, t: f64, alpha: f64) -> f64 {
    let kappa = OMEGA * (-t).exp();
    let mut best: f64 = 0.0;
    for i in 0..=120 {
        let d = 10f64.powf(-2.0 + 6.0 * i as f64 / 120.0);
        let a = FRAC_PI_2 - 0.5 * kappa * d;
        let x = DVector::from_vec(vec![0.0, a / kappa, 0.0]);
        let h = DVector::from_vec(vec![0.0, d, 0.0]);
        let g0 = me.evaluate(f, t, &x, Order::Gradient).unwrap().grad.unwrap();
        let g1 = me.evaluate(f, t, &(&x + &h), Order::Gradient).unwrap().grad.unwrap();
        best = best.max((g1 - g0).norm() / d.powf(alpha));
    }
    best
}

#[test]
fn gradient_matches_closed_form() {
    // ∇_H T(t) sin(ω x₂) = ω e^{-t} e^{-ω²(1-e^{-2t})/2} cos(ω e^{-t} x₂) e₂.
    let (_, me, f) = setup();
    for &t in &[0.01, 0.5, 5.0] {
        for &x2 in &[-3.0, 0.2, 40.0] {
            let x = DVector::from_vec(vec![0.7, x2, 0.0]);
            let g = me.evaluate(&f, t, &x, Order::Gradient).unwrap().grad.unwrap();
            let want = OMEGA * (-t).exp() * (-0.5 * OMEGA * OMEGA * -(-2.0 * t).exp_m1()).exp() * (OMEGA * (-t).exp() * x2).cos();
            assert!(g[0].abs() < 1e-14);
            assert!((g[1] - want).abs() < 1e-12, "t={t} x2={x2}: {} vs {want}", g[1]);
        }
    }
}

#[test]
fn interpolated_bound_holds() {
    let (_, me, f) = setup();
    for &alpha in &[0.3, 0.5, 0.7] {
        for &t in &[0.01, 0.1, 1.0, 5.0] {
            let q = largest_quotient(&me, &f, t, alpha);
            let bound = 2.0 * c_factor(t).unwrap().powf(1.0 + alpha);
            assert!(q <= bound, "alpha={alpha} t={t}: {q} > {bound}");
        }
    }
}

#[test]
fn extra_exponential_factor_fails_for_large_t() {
    let (_, me, f) = setup();
    let (alpha, t) = (0.5, 5.0);
    let q = largest_quotient(&me, &f, t, alpha);
    let stated = 2.0 * (-alpha * t).exp() * c_factor(t).unwrap().powf(1.0 + alpha);
    assert!(q > 2.0 * stated, "{q} vs {stated}");
}
