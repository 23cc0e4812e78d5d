//! `C^{2+α}_H` norms of the mild solution `v(t)` against the size of the data.
//! The constant `C(T)` has no explicit value; the suite reports the empirical
//! ratio and only asserts that it is finite.

use mehler_core::seminorms::{estimate_many, Flavor};
use mehler_core::solver::Resolved;
use mehler_core::{Modulation, Order, ScalarField, TimeField};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::report::WitnessPoint;
use crate::{Context, Recorder, Result};

struct Case {
    label: String,
    f: ScalarField,
    g: TimeField,
}

fn cases(ctx: &Context) -> Result<Vec<Case>> {
    let zero = ScalarField::constant(&ctx.model, 0.0);
    let mut out = Vec::new();
    let smooth: Vec<_> = ctx.corpus.iter().filter(|e| ctx.alphas().iter().all(|&a| e.field.c2alpha_norm(a).is_some())).collect();
    for e in &smooth {
        out.push(Case { label: e.name.clone(), f: e.field.clone(), g: TimeField::zero() });
    }
    let source = ctx
        .corpus
        .iter()
        .find(|e| e.field.as_ridge().is_some_and(|r| r.h_norm() > 0.0) && ctx.alphas().iter().all(|&a| e.field.holder_norm(a).is_some()));
    if let Some(s) = source {
        let g = TimeField::separable(Modulation::Cos { omega: 2.0, phase: 0.3 }, s.field.clone())?;
        out.push(Case { label: format!("0+cos*{}", s.name), f: zero.clone(), g: g.clone() });
        if let Some(e) = smooth.first() {
            out.push(Case { label: format!("{}+cos*{}", e.name, s.name), f: e.field.clone(), g });
        }
    }
    Ok(out)
}

pub fn run(ctx: &Context, rec: &mut Recorder) -> Result<()> {
    let horizon = ctx.config.suite.horizon;
    let times: Vec<f64> = [0.0, 0.25, 0.5, 1.0].iter().map(|k| k * horizon).collect();
    let design = &ctx.resolvent_design;
    let points = design.points();
    let alphas = ctx.alphas();
    let hmin = Context::min_step(design);

    for case in cases(ctx)? {
        let mut worst = vec![0.0f64; alphas.len()];
        for (ti, &t) in times.iter().enumerate() {
            if ti > 0 && t == 0.0 {
                continue;
            }
            let jets: Vec<Resolved> = points
                .par_iter()
                .map(|x| ctx.solver.mild(&case.f, &case.g, t, x, Order::Hessian))
                .collect::<std::result::Result<_, _>>()?;
            let (mut sup, mut grad, mut hess, mut err) = (0.0f64, 0.0f64, 0.0f64, [0.0f64; 3]);
            for j in &jets {
                sup = sup.max(j.value.abs());
                grad = grad.max(j.grad_norm());
                hess = hess.max(j.hess_norm());
                for k in 0..3 {
                    err[k] = err[k].max(j.err[k]);
                }
            }
            let hessian = |x: &DVector<f64>| -> mehler_core::Result<DMatrix<f64>> {
                ctx.solver.mild(&case.f, &case.g, t, x, Order::Hessian).map(|v| v.hess.expect("hessian requested"))
            };
            let flavors: Vec<Flavor> = alphas.iter().map(|&a| Flavor::OperatorHolder(a)).collect();
            let scans = estimate_many(&hessian, &flavors, design)?;

            for (i, (&a, est)) in alphas.iter().zip(&scans).enumerate() {
                let norm = sup + grad + hess + est.value;
                let err_total = err.iter().sum::<f64>() + 2.0 * err[2] / hmin.powf(a);
                let f_norm = case.f.c2alpha_norm(a).expect("C^{2+α} data");
                let g_norm = case.g.holder_norm_bound(a).expect("Hölder source");
                let p = [("t", t), ("alpha", a)];
                let w = est.witness.as_ref().map(WitnessPoint::from);
                if t == 0.0 {
                    rec.bound("parabolic.initial_norm", &case.label, &p, norm, f_norm, err_total, w);
                    continue;
                }
                let ratio = norm / (f_norm + g_norm);
                worst[i] = worst[i].max(ratio);
                rec.reported("parabolic.norm_ratio", &case.label, &p, ratio, None, w);
            }
        }
        for (&a, c) in alphas.iter().zip(&worst) {
            rec.reported("parabolic.constant", &case.label, &[("alpha", a), ("horizon", horizon)], *c, None, None);
        }
    }
    Ok(())
}
