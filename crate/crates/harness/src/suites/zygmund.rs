//! Zygmund regularity of `∇_H R(λ, L)f` for bounded `f`.

use mehler_core::constants::{c0, c1};
use mehler_core::seminorms::zygmund_est;
use mehler_core::{Order, ScalarField};
use nalgebra::DVector;

use crate::corpus::Entry;
use crate::report::WitnessPoint;
use crate::{Context, Recorder, Result};

const SPLIT_SCALES: [f64; 3] = [1.0, 0.25, 1.0 / 16.0];

pub fn run(ctx: &Context, rec: &mut Recorder) -> Result<()> {
    for e in ctx.corpus.iter().filter(|e| e.sup().is_some()) {
        for &l in ctx.lambdas() {
            field_at_lambda(ctx, rec, e, l)?;
        }
    }
    affine(ctx, rec)
}

fn gradient_map<'a>(
    ctx: &'a Context,
    f: &'a ScalarField,
    l: f64,
) -> impl Fn(&DVector<f64>) -> mehler_core::Result<DVector<f64>> + Sync + 'a {
    move |x| ctx.solver.resolvent(f, l, x, Order::Gradient).map(|u| u.grad.expect("gradient requested"))
}

fn field_at_lambda(ctx: &Context, rec: &mut Recorder, e: &Entry, l: f64) -> Result<()> {
    let f = &e.field;
    let name = e.name.as_str();
    let sup = e.sup().expect("bounded");
    let design = &ctx.resolvent_design;
    let grad = gradient_map(ctx, f, l);
    let est = zygmund_est(&grad, design)?;
    let err = design
        .points()
        .iter()
        .take(4)
        .map(|x| ctx.solver.resolvent(f, l, x, Order::Gradient).map(|u| u.err[1]))
        .collect::<std::result::Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let q_err = 4.0 * err / Context::min_step(design);
    let pl = [("lambda", l)];
    let w = est.witness.as_ref().map(WitnessPoint::from);
    rec.bound("zygmund.gradient", name, &pl, est.value, (2.0 * c0() + 2.0 * c1()) * sup, q_err, w);

    if !ctx.config.suite.diagnostics {
        return Ok(());
    }
    let Some(wit) = &est.witness else { return Ok(()) };
    for scale in SPLIT_SCALES {
        let h = wit.h.scaled(scale);
        let hn = h.norm();
        let x1 = &wit.x + &h.ambient;
        let x2 = &wit.x + &h.ambient * 2.0;
        let terms = [(1.0, &x2), (-2.0, &x1), (1.0, &wit.x)];
        let parts = ctx.solver.split_combination(f, l, &terms, Order::Gradient, hn * hn)?;
        let p = [("lambda", l), ("h_norm", hn)];
        let wp = Some(WitnessPoint { x: wit.x.as_slice().to_vec(), h: Some(h.ambient.as_slice().to_vec()) });
        let head = parts.head.grad_norm() / hn;
        let head_err = parts.head.err[1] / hn;
        rec.bound("zygmund.split.head", name, &p, head, 2.0 * c0() * sup, head_err, wp.clone());
        rec.bound("zygmund.split.head.integrated", name, &p, head, 8.0 * c0() * sup, head_err, wp.clone());
        rec.bound("zygmund.split.tail", name, &p, parts.tail.grad_norm() / hn, 2.0 * c1() * sup, parts.tail.err[1] / hn, wp);
    }
    Ok(())
}

/// Second differences of an affine gradient vanish.
fn affine(ctx: &Context, rec: &mut Recorder) -> Result<()> {
    let tol = ctx.config.suite.tolerances.closed_form;
    for e in ctx.corpus.iter().filter(|e| matches!(e.field.kind(), mehler_core::fields::FieldKind::Linear { .. })) {
        let scale = e.field.grad_sup().unwrap_or(1.0).max(f64::MIN_POSITIVE);
        for &l in ctx.lambdas() {
            let grad = gradient_map(ctx, &e.field, l);
            let est = zygmund_est(&grad, &ctx.resolvent_design)?;
            let w = est.witness.as_ref().map(WitnessPoint::from);
            rec.tolerance("zygmund.affine", &e.name, &[("lambda", l)], est.value / scale, tol, w);
        }
    }
    Ok(())
}
