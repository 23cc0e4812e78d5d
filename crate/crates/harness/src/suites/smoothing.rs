//! Sup-norm and Hölder smoothing bounds for `T(t)f` over the semigroup
//! design, one record per (inequality, field, t[, α]).

use mehler_core::constants::{c_factor, k3_cubed};
use mehler_core::seminorms::{estimate_many, Flavor, SeminormEstimate};
use mehler_core::Order;
use nalgebra::{DMatrix, DVector};

use super::semigroup_sups;
use crate::corpus::Entry;
use crate::report::WitnessPoint;
use crate::{Context, Recorder, Result};

pub fn run(ctx: &Context, rec: &mut Recorder) -> Result<()> {
    for e in ctx.corpus.iter().filter(|e| e.sup().is_some()) {
        for t in ctx.times() {
            field_at_time(ctx, rec, e, t)?;
        }
    }
    Ok(())
}

fn witness(est: &SeminormEstimate) -> Option<WitnessPoint> {
    est.witness.as_ref().map(WitnessPoint::from)
}

fn field_at_time(ctx: &Context, rec: &mut Recorder, e: &Entry, t: f64) -> Result<()> {
    let f = &e.field;
    let name = e.name.as_str();
    let sup = e.sup().expect("bounded entries only");
    let points = ctx.design.points();
    let c = c_factor(t)?;
    let pt = [("t", t)];

    let s = semigroup_sups(ctx, f, t, points, Order::Third, false)?;
    let w = |k: usize| s.peaks[k].witness(points);
    rec.bound("smoothing.sup", name, &pt, s.peaks[0].value, sup, s.err[0], w(0));
    rec.bound("smoothing.bounded.gradient", name, &pt, s.peaks[1].value, c * sup, s.err[1], w(1));
    rec.bound("smoothing.bounded.hessian", name, &pt, s.peaks[2].value, 2.0 * c * c * sup, s.err[2], w(2));
    rec.bound("smoothing.bounded.third", name, &pt, s.peaks[3].value, (3.0 + k3_cubed()) * c.powi(3) * sup, s.err[3], w(3));

    if e.is_c1() {
        let g = f.grad_sup().expect("C¹ entries have a gradient bound");
        let s1 = semigroup_sups(ctx, f, t, points, Order::Third, true)?;
        let w1 = |k: usize| s1.peaks[k].witness(points);
        rec.bound("smoothing.c1.gradient", name, &pt, s1.peaks[1].value, g, s1.err[1], w1(1));
        rec.bound("smoothing.c1.hessian", name, &pt, s1.peaks[2].value, c * g, s1.err[2], w1(2));
        rec.bound("smoothing.c1.third", name, &pt, s1.peaks[3].value, 2.0 * c * c * g, s1.err[3], w1(3));
    }

    let alphas = ctx.alphas();
    let holder_alphas: Vec<f64> = alphas.iter().copied().filter(|&a| f.holder(a).is_some()).collect();
    for &a in &holder_alphas {
        let k = ctx.constants(a);
        let n = f.holder_norm(a).expect("Hölder entries");
        let p = [("t", t), ("alpha", a)];
        rec.bound("smoothing.holder_data.gradient", name, &p, s.peaks[1].value, k.c1 * t.powf(-(1.0 - a) / 2.0) * n, s.err[1], w(1));
        rec.bound("smoothing.holder_data.hessian", name, &p, s.peaks[2].value, k.c2 * t.powf(-1.0 + a / 2.0) * n, s.err[2], w(2));
        rec.bound("smoothing.holder_data.third", name, &p, s.peaks[3].value, k.c3 * t.powf(-1.5 + a / 2.0) * n, s.err[3], w(3));
    }

    // Difference quotients. Evaluation errors enter a quotient at most as
    // 2·err / ‖h‖^α at the smallest step of the design.
    let me = ctx.mehler();
    let design = &ctx.design;
    let hmin = Context::min_step(design);
    let q_err = |err: f64, a: f64| 2.0 * err / hmin.powf(a);

    let value = |x: &DVector<f64>| me.apply(f, t, x).map(|v| v.0);
    let value_est = if holder_alphas.is_empty() {
        Vec::new()
    } else {
        let flavors: Vec<Flavor> = holder_alphas.iter().map(|&a| Flavor::Holder(a)).collect();
        estimate_many(&value, &flavors, design)?
    };
    let gradient = |x: &DVector<f64>| me.evaluate(f, t, x, Order::Gradient).map(|v| v.grad.expect("gradient requested"));
    let flavors: Vec<Flavor> = alphas.iter().map(|&a| Flavor::Holder(a)).collect();
    let grad_est = estimate_many(&gradient, &flavors, design)?;

    for (&a, est) in holder_alphas.iter().zip(&value_est) {
        let holder = f.holder(a).expect("filtered");
        let p = [("t", t), ("alpha", a)];
        let decay = (-a * t).exp();
        rec.bound("smoothing.holder", name, &p, est.value, decay * holder, q_err(s.err[0], a), witness(est));
        let ge = &grad_est[alphas.iter().position(|&b| b == a).expect("same list")];
        rec.bound("smoothing.grad_holder", name, &p, ge.value, decay * c * holder, q_err(s.err[1], a), witness(ge));
        let lhs = s.peaks[0].value + est.value;
        rec.bound("smoothing.contraction.k0", name, &p, lhs, sup + holder, s.err[0] + q_err(s.err[0], a), witness(est));
    }

    for (&a, ge) in alphas.iter().zip(&grad_est) {
        let p = [("t", t), ("alpha", a)];
        let proven = 2.0 * c.powf(1.0 + a) * sup;
        rec.bound("smoothing.grad_holder_bounded", name, &p, ge.value, proven, q_err(s.err[1], a), witness(ge));
        let with_decay = (-a * t).exp() * proven;
        rec.reported("smoothing.grad_holder_bounded.with_decay", name, &p, ge.value, Some(with_decay), witness(ge));
    }

    // Norms in C^{1+α}_H and C^{2+α}_H, for fields whose derivative seminorms are known.
    let k1_alphas: Vec<f64> = alphas.iter().copied().filter(|&a| f.grad_sup().is_some() && f.grad_holder(a).is_some()).collect();
    for &a in &k1_alphas {
        let ge = &grad_est[alphas.iter().position(|&b| b == a).expect("same list")];
        let lhs = s.peaks[0].value + s.peaks[1].value + ge.value;
        let rhs = sup + f.grad_sup().expect("filtered") + f.grad_holder(a).expect("filtered");
        let err = s.err[0] + s.err[1] + q_err(s.err[1], a);
        rec.bound("smoothing.contraction.k1", name, &[("t", t), ("alpha", a)], lhs, rhs, err, witness(ge));
    }
    let k2_alphas: Vec<f64> = k1_alphas.iter().copied().filter(|&a| f.hess_sup().is_some() && f.hess_holder(a).is_some()).collect();
    if !k2_alphas.is_empty() {
        let hessian = |x: &DVector<f64>| -> mehler_core::Result<DMatrix<f64>> {
            me.evaluate(f, t, x, Order::Hessian).map(|v| v.hess.expect("hessian requested"))
        };
        let flavors: Vec<Flavor> = k2_alphas.iter().map(|&a| Flavor::OperatorHolder(a)).collect();
        let hess_est = estimate_many(&hessian, &flavors, design)?;
        for (&a, he) in k2_alphas.iter().zip(&hess_est) {
            let lhs = s.peaks[0].value + s.peaks[1].value + s.peaks[2].value + he.value;
            let rhs = f.c2alpha_norm(a).expect("filtered");
            let err = s.err[0] + s.err[1] + s.err[2] + q_err(s.err[2], a);
            rec.bound("smoothing.contraction.k2", name, &[("t", t), ("alpha", a)], lhs, rhs, err, witness(he));
        }
    }
    Ok(())
}
