//! Each derivative formula against central differences of the formula one
//! order below, for both the bounded-data and the C¹-data families.

use mehler_core::{Order, SemigroupEvaluation};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::rel;
use crate::report::WitnessPoint;
use crate::{Context, Recorder, Result};

/// Base step; scaled by `min(1, √t)`, the length over which `T(t)f` varies.
const STEP: f64 = 1e-4;
const POINTS: usize = 4;

/// Discrepancies at one point per order 1..=3, and reference norms per order 0..=3.
struct PointCheck {
    diff: [f64; 3],
    scale: [f64; 4],
}

fn check_point(ctx: &Context, f: &mehler_core::ScalarField, t: f64, x: &DVector<f64>, c1: bool) -> Result<PointCheck> {
    let me = ctx.mehler();
    let eval = |y: &DVector<f64>, o: Order| -> Result<SemigroupEvaluation> {
        Ok(if c1 { me.evaluate_c1(f, t, y, o)? } else { me.evaluate(f, t, y, o)? })
    };
    let base = eval(x, Order::Third)?;
    let grad = base.grad.expect("order three");
    let hess = base.hess.expect("order three");
    let d3 = base.d3.expect("order three");
    let r = grad.len();
    let step = STEP * t.sqrt().min(1.0);
    let mut fd_grad = DVector::zeros(r);
    let mut fd_hess = DMatrix::zeros(r, r);
    let mut third_diff2 = 0.0;
    for (i, e) in ctx.h_basis().iter().enumerate() {
        let up = eval(&(x + &e.ambient * step), Order::Hessian)?;
        let dn = eval(&(x - &e.ambient * step), Order::Hessian)?;
        let s = 0.5 / step;
        fd_grad[i] = (up.value - dn.value) * s;
        fd_hess.set_column(i, &((up.grad.unwrap() - dn.grad.unwrap()) * s));
        let slice = (up.hess.unwrap() - dn.hess.unwrap()) * s;
        for j in 0..r {
            for k in 0..r {
                third_diff2 += (slice[(j, k)] - d3.get(i, j, k)).powi(2);
            }
        }
    }
    Ok(PointCheck {
        diff: [(fd_grad - &grad).norm(), (fd_hess - &hess).norm(), third_diff2.sqrt()],
        scale: [base.value.abs(), grad.norm(), hess.norm(), d3.frobenius()],
    })
}

pub fn run(ctx: &Context, rec: &mut Recorder) -> Result<()> {
    let tol = ctx.config.suite.tolerances;
    let tols = [tol.gradient, tol.hessian, tol.third];
    let points: Vec<DVector<f64>> = ctx.design.points().iter().take(POINTS).cloned().collect();
    let families = [
        (false, ["formula.bounded.gradient", "formula.bounded.hessian", "formula.bounded.third"]),
        (true, ["formula.c1.gradient", "formula.c1.hessian", "formula.c1.third"]),
    ];
    for e in &ctx.corpus {
        for (c1, ids) in &families {
            if *c1 && !e.field.has_h_gradient() {
                continue;
            }
            for t in ctx.times() {
                let checks: Vec<PointCheck> = points.par_iter().map(|x| check_point(ctx, &e.field, t, x, *c1)).collect::<Result<_>>()?;
                for k in 0..3 {
                    // Differences of order-k quantities carry rounding noise of
                    // about ε·|lower orders|/step; a derivative that vanishes is
                    // compared against that noise instead of against itself.
                    let lower = checks.iter().map(|c| c.scale[..=k].iter().copied().fold(0.0, f64::max)).fold(0.0, f64::max);
                    let noise = 1e3 * f64::EPSILON * lower / (STEP * t.sqrt().min(1.0));
                    let floor = (1e-2 * checks.iter().map(|c| c.scale[k + 1]).fold(0.0, f64::max)).max(noise / tols[k]);
                    let (mut worst, mut at) = (0.0, 0);
                    for (i, c) in checks.iter().enumerate() {
                        let v = rel(c.diff[k], c.scale[k + 1], floor);
                        if v > worst {
                            worst = v;
                            at = i;
                        }
                    }
                    let w = Some(WitnessPoint::point(&points[at]));
                    rec.tolerance(ids[k], &e.name, &[("t", t), ("step", STEP * t.sqrt().min(1.0))], worst, tols[k], w);
                }
            }
        }
    }
    Ok(())
}
