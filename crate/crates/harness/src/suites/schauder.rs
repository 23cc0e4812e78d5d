//! Elliptic Schauder bounds for `u = R(λ, L)f` with Hölder data, and the
//! near/far split of `D²_H u(x+h) − D²_H u(x)` at `t = ‖h‖²_H`.

use mehler_core::fields::FieldKind;
use mehler_core::seminorms::{estimate_many, Flavor};
use mehler_core::solver::Resolved;
use mehler_core::Order;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use super::{rel, Peak};
use crate::corpus::Entry;
use crate::report::WitnessPoint;
use crate::{Context, Recorder, Result};

/// Scales applied to the witness increment for the split diagnostic.
const SPLIT_SCALES: [f64; 3] = [1.0, 0.25, 1.0 / 16.0];

pub fn run(ctx: &Context, rec: &mut Recorder) -> Result<()> {
    for e in &ctx.corpus {
        let holder_alphas: Vec<f64> = ctx.alphas().iter().copied().filter(|&a| e.field.holder(a).is_some()).collect();
        if e.sup().is_none() || holder_alphas.is_empty() {
            if let FieldKind::Quadratic { grad, .. } = e.field.kind() {
                quadratic(ctx, rec, e, grad)?;
            }
            continue;
        }
        for &l in ctx.lambdas() {
            field_at_lambda(ctx, rec, e, l, &holder_alphas)?;
        }
    }
    Ok(())
}

fn field_at_lambda(ctx: &Context, rec: &mut Recorder, e: &Entry, l: f64, alphas: &[f64]) -> Result<()> {
    let f = &e.field;
    let name = e.name.as_str();
    let s = &ctx.solver;
    let design = &ctx.resolvent_design;
    let points = design.points();
    let sup = e.sup().expect("bounded");

    let us: Vec<Resolved> = points.par_iter().map(|x| s.resolvent(f, l, x, Order::Hessian)).collect::<std::result::Result<_, _>>()?;
    let mut peaks = [Peak::default(); 3];
    let mut err = [0.0f64; 3];
    for (i, u) in us.iter().enumerate() {
        for (k, v) in [u.value.abs(), u.grad_norm(), u.hess_norm()].into_iter().enumerate() {
            peaks[k].offer(v, i);
            err[k] = err[k].max(u.err[k]);
        }
    }
    let pl = [("lambda", l)];
    rec.bound("schauder.sup", name, &pl, peaks[0].value, sup / l, err[0], peaks[0].witness(points));

    let hessian = |x: &DVector<f64>| -> mehler_core::Result<DMatrix<f64>> {
        s.resolvent(f, l, x, Order::Hessian).map(|u| u.hess.expect("hessian requested"))
    };
    let flavors: Vec<Flavor> = alphas.iter().map(|&a| Flavor::OperatorHolder(a)).collect();
    let scans = estimate_many(&hessian, &flavors, design)?;
    let hmin = Context::min_step(design);

    for (&a, est) in alphas.iter().zip(&scans) {
        let k = ctx.constants(a);
        let n = f.holder_norm(a).expect("filtered");
        let p = [("lambda", l), ("alpha", a)];
        let grad_rhs = k.c1 * l.powf(-0.5 - a / 2.0) * gamma(0.5 + a / 2.0) * n;
        rec.bound("schauder.gradient", name, &p, peaks[1].value, grad_rhs, err[1], peaks[1].witness(points));
        let hess_rhs = k.c2 * l.powf(-a / 2.0) * gamma(a / 2.0) * n;
        rec.bound("schauder.hessian", name, &p, peaks[2].value, hess_rhs, err[2], peaks[2].witness(points));
        let w = est.witness.as_ref().map(WitnessPoint::from);
        rec.bound("schauder.hessian_holder", name, &p, est.value, k.hess_holder() * n, 2.0 * err[2] / hmin.powf(a), w);

        let Some(wit) = &est.witness else { continue };
        for scale in SPLIT_SCALES {
            let h = wit.h.scaled(scale);
            let hn = h.norm();
            let x1 = &wit.x + &h.ambient;
            let parts = s.split_combination(f, l, &[(1.0, &x1), (-1.0, &wit.x)], Order::Hessian, hn * hn)?;
            let q = hn.powf(a);
            let ps = [("lambda", l), ("alpha", a), ("h_norm", hn)];
            let wp = Some(WitnessPoint { x: wit.x.as_slice().to_vec(), h: Some(h.ambient.as_slice().to_vec()) });
            rec.bound("schauder.split.head", name, &ps, parts.head.hess_norm() / q, 4.0 * k.c2 / a * n, parts.head.err[2] / q, wp.clone());
            rec.bound("schauder.split.tail", name, &ps, parts.tail.hess_norm() / q, 2.0 * k.c3 / (1.0 - a) * n, parts.tail.err[2] / q, wp);
        }
    }
    Ok(())
}

/// `D²_H R(λ)⟨a,·⟩² = 2 v vᵀ / (λ + 2)`.
fn quadratic(ctx: &Context, rec: &mut Recorder, e: &Entry, v: &DVector<f64>) -> Result<()> {
    let tol = ctx.config.suite.tolerances.closed_form;
    let points = &ctx.resolvent_design.points()[..ctx.resolvent_design.points().len().min(4)];
    for &l in ctx.lambdas() {
        let want = v * v.transpose() * (2.0 / (l + 2.0));
        let mut worst = (0.0f64, 0usize);
        for (i, x) in points.iter().enumerate() {
            let h = ctx.solver.resolvent(&e.field, l, x, Order::Hessian)?.hess.expect("hessian requested");
            let d = rel((h - &want).norm(), want.norm(), f64::MIN_POSITIVE);
            if d > worst.0 {
                worst = (d, i);
            }
        }
        let w = points.get(worst.1).map(WitnessPoint::point);
        rec.tolerance("schauder.quadratic_hessian", &e.name, &[("lambda", l)], worst.0, tol, w);
    }
    Ok(())
}
