//! Interpolation between `C_b` and `C¹_H` for `u = R(λ, L)f`: the
//! multiplicative gradient bound, and the Hölder embedding through an upper
//! bound of the K-functional.
//!
//! Ridge resolvents vary only along the ridge direction, so sup norms come
//! from dense scans of that line.

use mehler_core::constants::c0;
use mehler_core::fields::FieldKind;
use mehler_core::seminorms::holder_est;
use mehler_core::solver::Resolved;
use mehler_core::{Order, ScalarField};
use nalgebra::DVector;
use rayon::prelude::*;

use super::{ridge_line, symmetric_grid};
use crate::corpus::Entry;
use crate::report::WitnessPoint;
use crate::{Context, Recorder, Result};

const REACH: f64 = 6.0;
const LINE_POINTS: usize = 121;

/// `T(τ)` shifts used in the decomposition `u = (u − T(τ)u) + T(τ)u`.
fn shifts() -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend((0..8).map(|i| 1e-4 * 1e5f64.powf(i as f64 / 7.0)));
    out
}

fn line_of(ctx: &Context, f: &ScalarField) -> Option<Vec<DVector<f64>>> {
    match f.kind() {
        FieldKind::Constant(_) => Some(vec![DVector::zeros(ctx.model.dim())]),
        FieldKind::Ridge(r) if r.h_norm() > 0.0 && f.sup_norm().is_some() => {
            Some(ridge_line(&r.direction, &symmetric_grid(REACH, LINE_POINTS)))
        }
        _ => None,
    }
}

pub fn run(ctx: &Context, rec: &mut Recorder) -> Result<()> {
    for e in &ctx.corpus {
        let Some(line) = line_of(ctx, &e.field) else { continue };
        for &l in ctx.lambdas() {
            field_at_lambda(ctx, rec, e, l, &line)?;
        }
    }
    Ok(())
}

fn resolve_line(ctx: &Context, f: &ScalarField, l: f64, tau: f64, line: &[DVector<f64>]) -> Result<Vec<Resolved>> {
    Ok(line.par_iter().map(|x| ctx.solver.shifted_resolvent(f, l, tau, x, Order::Gradient)).collect::<std::result::Result<_, _>>()?)
}

fn field_at_lambda(ctx: &Context, rec: &mut Recorder, e: &Entry, l: f64, line: &[DVector<f64>]) -> Result<()> {
    let f = &e.field;
    let name = e.name.as_str();
    let u = resolve_line(ctx, f, l, 0.0, line)?;

    let (mut su, mut sg, mut sl, mut at) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    let (mut eu, mut eg) = (0.0f64, 0.0f64);
    for (i, (x, r)) in line.iter().zip(&u).enumerate() {
        su = su.max(r.value.abs());
        sl = sl.max((l * r.value - f.eval(x)).abs());
        if r.grad_norm() > sg {
            sg = r.grad_norm();
            at = i;
        }
        eu = eu.max(r.err[0]);
        eg = eg.max(r.err[1]);
    }
    // Lu = λu − f inherits λ times the value error.
    let el = l * eu;
    let geo = |a: f64, b: f64| (a * b).sqrt();
    let w = Some(WitnessPoint::point(&line[at]));
    let k = c0() * std::f64::consts::PI.sqrt();
    let p = [("lambda", l)];
    for (id, c) in [("interpolation.multiplicative", k), ("interpolation.multiplicative.minimized", 2.0 * k)] {
        let rhs = c * geo(su, sl);
        let err = eg + c * (geo(su + eu, sl + el) - geo(su, sl));
        rec.bound(id, name, &p, sg, rhs, err, w.clone());
    }

    // K̃(s) for s on the design ladder, for the full and the every-other shift grid.
    let taus = shifts();
    let mut parts = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let shifted = if tau == 0.0 { u.clone() } else { resolve_line(ctx, f, l, tau, line)? };
        let (mut a, mut b, mut err) = (0.0f64, 0.0f64, 0.0f64);
        let mut gb = 0.0f64;
        for (r0, r) in u.iter().zip(&shifted) {
            a = a.max((r0.value - r.value).abs());
            b = b.max(r.value.abs());
            gb = gb.max(r.grad_norm());
            err = err.max(r0.err[0] + r.err[0] + r.err[1]);
        }
        parts.push((if tau == 0.0 { 0.0 } else { a }, b + gb, err));
    }
    let k_tilde = |s: f64, every: usize| -> (f64, f64) {
        parts.iter().step_by(every).map(|&(a, b, e)| (a + s * b, e * (1.0 + s))).fold((f64::INFINITY, 0.0), |best, c| {
            if c.0 < best.0 {
                c
            } else {
                best
            }
        })
    };
    let design = &ctx.resolvent_design;
    let scales: Vec<f64> = design.ladder().iter().flat_map(|&m| design.directions().iter().map(move |h| m * h.norm())).collect();
    for &s in design.ladder() {
        let (full, _) = k_tilde(s, 1);
        let (coarse, _) = k_tilde(s, 2);
        rec.bound("interpolation.k_refinement", name, &[("lambda", l), ("s", s)], full, coarse, 0.0, None);
    }

    let value = |x: &DVector<f64>| ctx.solver.resolvent(f, l, x, Order::Value).map(|r| r.value);
    for &a in ctx.alphas() {
        let est = holder_est(&value, a, design)?;
        let (mut m, mut m_err) = (0.0f64, 0.0f64);
        for &s in &scales {
            let (kt, ke) = k_tilde(s, 1);
            if kt / s.powf(a) > m {
                m = kt / s.powf(a);
                m_err = ke / s.powf(a);
            }
        }
        let q_err = 2.0 * eu / Context::min_step(design).powf(a);
        let w = est.witness.as_ref().map(WitnessPoint::from);
        rec.bound("interpolation.k_functional", name, &[("lambda", l), ("alpha", a)], est.value, 2.0 * m, q_err + 2.0 * m_err, w);
    }
    Ok(())
}
