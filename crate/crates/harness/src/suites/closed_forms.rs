//! Semigroup, resolvent and mild-solution values against closed forms, plus
//! the Cameron–Martin formula and the law of `ĥ`.

use mehler_core::constants::kp;
use mehler_core::fields::FieldKind;
use mehler_core::gaussian::integrate_gaussian;
use mehler_core::{Modulation, Order, ScalarField, TimeField};
use nalgebra::DVector;

use super::rel;
use crate::report::WitnessPoint;
use crate::{Context, Recorder, Result};

const POINTS: usize = 8;

/// Largest relative error of `got(x)` against `want(x)` over the points, with
/// the denominator floored at `1e-3` of the largest `|want|`.
fn worst<F, G>(points: &[DVector<f64>], got: F, want: G) -> Result<(f64, Option<WitnessPoint>)>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
    G: Fn(&DVector<f64>) -> f64,
{
    let pairs: Vec<(f64, f64)> = points.iter().map(|x| Ok((got(x)?, want(x)))).collect::<Result<_>>()?;
    let floor = 1e-3 * pairs.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let mut best = (0.0, None);
    for (x, (g, w)) in points.iter().zip(&pairs) {
        let e = rel((g - w).abs(), w.abs(), floor);
        if e > best.0 || best.1.is_none() {
            best = (e, Some(WitnessPoint::point(x)));
        }
    }
    Ok(best)
}

pub fn run(ctx: &Context, rec: &mut Recorder) -> Result<()> {
    let tol = ctx.config.suite.tolerances.closed_form;
    let points: Vec<DVector<f64>> = ctx.design.points().iter().take(POINTS).cloned().collect();
    let me = ctx.mehler();
    let s = &ctx.solver;
    let horizon = ctx.config.suite.horizon;
    let mild_times: Vec<f64> = [0.25, 0.5, 1.0].iter().map(|k| k * horizon).filter(|t| *t > 0.0).collect();
    let zero = ScalarField::constant(&ctx.model, 0.0);

    for e in &ctx.corpus {
        let f = &e.field;
        match f.kind() {
            FieldKind::Linear { a, .. } => {
                for t in ctx.times() {
                    let (err, w) = worst(&points, |x| Ok(me.apply(f, t, x)?.0), |x| (-t).exp() * a.dot(x))?;
                    rec.tolerance("closed.semigroup.linear", &e.name, &[("t", t)], err, tol, w);
                }
                for &l in ctx.lambdas() {
                    let (err, w) = worst(&points, |x| Ok(s.resolvent(f, l, x, Order::Value)?.value), |x| a.dot(x) / (l + 1.0))?;
                    rec.tolerance("closed.resolvent.linear", &e.name, &[("lambda", l)], err, tol, w);
                }
                let src = TimeField::separable(Modulation::Constant(1.0), f.clone())?;
                for &t in &mild_times {
                    let (err, w) = worst(&points, |x| Ok(s.mild(&zero, &src, t, x, Order::Value)?.value), |x| a.dot(x) * -(-t).exp_m1())?;
                    rec.tolerance("closed.mild.linear_source", &e.name, &[("t", t)], err, tol, w);
                }
            }
            FieldKind::Quadratic { a, grad } => {
                let v2 = grad.norm_squared();
                for t in ctx.times() {
                    let e2 = (-2.0 * t).exp();
                    let (err, w) = worst(&points, |x| Ok(me.apply(f, t, x)?.0), |x| e2 * a.dot(x).powi(2) + (1.0 - e2) * v2)?;
                    rec.tolerance("closed.semigroup.quadratic", &e.name, &[("t", t)], err, tol, w);
                }
                for &l in ctx.lambdas() {
                    let want = |x: &DVector<f64>| a.dot(x).powi(2) / (l + 2.0) + v2 * (1.0 / l - 1.0 / (l + 2.0));
                    let (err, w) = worst(&points, |x| Ok(s.resolvent(f, l, x, Order::Value)?.value), want)?;
                    rec.tolerance("closed.resolvent.quadratic", &e.name, &[("lambda", l)], err, tol, w);
                }
                // D²_H T(t)⟨a,·⟩² = 2e^{-2t} v vᵀ with v = Q^{1/2}a.
                let t = if horizon > 0.0 { horizon } else { 1.0 };
                let want = grad * grad.transpose() * (2.0 * (-2.0 * t).exp());
                let mut err: f64 = 0.0;
                for x in &points {
                    let h = s.mild(f, &TimeField::zero(), t, x, Order::Hessian)?.hess.expect("hessian requested");
                    err = err.max((h - &want).norm() / want.norm().max(f64::MIN_POSITIVE));
                }
                rec.tolerance("closed.mild.quadratic_hessian", &e.name, &[("t", t)], err, tol, None);
            }
            FieldKind::Constant(c) => {
                for &l in ctx.lambdas() {
                    let (err, w) = worst(&points, |x| Ok(s.resolvent(f, l, x, Order::Value)?.value), |_| c / l)?;
                    rec.tolerance("closed.resolvent.constant", &e.name, &[("lambda", l)], err, tol, w);
                }
            }
            _ => {}
        }

        // Homogeneous problem and initial value, for every field.
        for &t in &mild_times {
            let (err, w) = worst(
                &points,
                |x| Ok(s.mild(f, &TimeField::zero(), t, x, Order::Value)?.value),
                |x| me.apply(f, t, x).map(|v| v.0).unwrap_or(f64::NAN),
            )?;
            rec.tolerance("closed.mild.homogeneous", &e.name, &[("t", t)], err, tol, w);
        }
        let (err, w) = worst(&points, |x| Ok(s.mild(f, &TimeField::zero(), 0.0, x, Order::Value)?.value), |x| f.eval(x))?;
        rec.tolerance("closed.mild.initial_value", &e.name, &[("t", 0.0)], err, tol, w);
    }

    // Unit source: ∫₀^t T(s)1 ds = t.
    let one = TimeField::separable(Modulation::Constant(1.0), ScalarField::constant(&ctx.model, 1.0))?;
    for &t in &mild_times {
        let (err, w) = worst(&points, |x| Ok(s.mild(&zero, &one, t, x, Order::Value)?.value), |_| t)?;
        rec.tolerance("closed.mild.unit_source", "one", &[("t", t)], err, tol, w);
    }

    cameron_martin(ctx, rec, tol)?;
    hat_moments(ctx, rec, tol)
}

/// `∫ f(y + h) γ(dy) = ∫ f(y) exp(ĥ(y) − ‖h‖²_H/2) γ(dy)` for the bounded C¹
/// ridges of the corpus and half the H-basis vectors.
fn cameron_martin(ctx: &Context, rec: &mut Recorder, tol: f64) -> Result<()> {
    let spec = ctx.mehler().spec();
    for e in ctx.corpus.iter().filter(|e| e.is_c1() && e.field.as_ridge().is_some()) {
        for (i, b) in ctx.h_basis().iter().enumerate() {
            let h = b.scaled(0.5);
            let n2 = h.norm().powi(2);
            let (shifted, _) = integrate_gaussian(&ctx.model, |y| e.field.eval(&(y + &h.ambient)), spec)?;
            let (weighted, _) = integrate_gaussian(&ctx.model, |y| e.field.eval(y) * (h.hat(&ctx.model, y) - 0.5 * n2).exp(), spec)?;
            let err = rel((shifted - weighted).abs(), shifted.abs(), 1e-3);
            rec.tolerance("closed.cameron_martin", &e.name, &[("basis", i as f64), ("h_norm", h.norm())], err, tol, None);
        }
    }
    Ok(())
}

/// `(∫|ĥ|^p dγ)^{1/p} = k_p ‖h‖_H` for a fixed `h` and even `p`.
fn hat_moments(ctx: &Context, rec: &mut Recorder, tol: f64) -> Result<()> {
    let spec = ctx.mehler().spec();
    let r = ctx.model.rank();
    if r == 0 {
        return Ok(());
    }
    let z = DVector::from_fn(r, |i, _| 0.6 - 0.5 * i as f64);
    let h = ctx.model.h_vector(&z)?;
    for p in [2.0, 4.0, 6.0] {
        let (m, _) = integrate_gaussian(&ctx.model, |y| h.hat(&ctx.model, y).abs().powf(p), spec)?;
        let got = m.powf(1.0 / p);
        let want = kp(p)? * h.norm();
        rec.tolerance("closed.hat_moment", "hat", &[("p", p), ("h_norm", h.norm())], (got - want).abs() / want, tol, None);
    }
    Ok(())
}
