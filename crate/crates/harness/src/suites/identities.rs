//! Semigroup law, resolvent identity and the resolvent equation `λu − Lu = f`.

use mehler_core::fields::FieldKind;
use mehler_core::profile::CustomProfile;
use mehler_core::{Order, Profile, ScalarField};
use nalgebra::DVector;

use super::rel;
use crate::corpus::Entry;
use crate::report::WitnessPoint;
use crate::{Context, Recorder, Result};

const POINTS: usize = 4;
const LAW_TIMES: [(f64, f64); 3] = [(0.2, 0.5), (0.5, 1.0), (1.0, 0.3)];
/// Step for the drift term `⟨x, ∇u(x)⟩ = d/dε u(e^ε x)` at `ε = 0`.
const DRIFT_STEP: f64 = 1e-4;

pub fn run(ctx: &Context, rec: &mut Recorder) -> Result<()> {
    let points: Vec<DVector<f64>> = ctx.design.points().iter().take(POINTS).cloned().collect();
    for e in &ctx.corpus {
        semigroup_law(ctx, rec, e, &points)?;
        resolvent_identity(ctx, rec, e, &points)?;
        resolvent_equation(ctx, rec, e, &points)?;
    }
    Ok(())
}

/// `T(s)f` as a field, when it is again a ridge, linear or constant.
fn semigroup_image(ctx: &Context, e: &Entry, s: f64) -> Result<Option<ScalarField>> {
    let f = &e.field;
    Ok(match f.kind() {
        FieldKind::Constant(_) => Some(f.clone()),
        FieldKind::Linear { a, .. } => Some(ScalarField::linear(&ctx.model, a * (-s).exp())?),
        FieldKind::Ridge(r) => {
            let z = r.direction.clone();
            let zz = z.norm_squared();
            let solver = ctx.solver.clone();
            let inner = f.clone();
            let func = move |u: f64| solver.mehler().apply(&inner, s, &(&z * (u / zz))).map_or(f64::NAN, |v| v.0);
            let profile = CustomProfile::new(format!("T({s})[{}]", r.profile.label()), Vec::new(), f.sup_norm(), func);
            Some(ScalarField::ridge(&ctx.model, r.direction.clone(), Profile::Custom(profile))?)
        }
        _ => None,
    })
}

fn semigroup_law(ctx: &Context, rec: &mut Recorder, e: &Entry, points: &[DVector<f64>]) -> Result<()> {
    let tol = 2.0 * ctx.config.suite.tolerances.semigroup_law;
    let me = ctx.mehler();
    for (t, s) in LAW_TIMES {
        let Some(inner) = semigroup_image(ctx, e, s)? else { return Ok(()) };
        let (mut worst, mut at) = (0.0f64, 0usize);
        for (i, x) in points.iter().enumerate() {
            let direct = me.apply(&e.field, t + s, x)?.0;
            let nested = me.apply(&inner, t, x)?.0;
            let d = (direct - nested).abs() / direct.abs().max(1.0);
            if d > worst {
                worst = d;
                at = i;
            }
        }
        let w = Some(WitnessPoint::point(&points[at]));
        rec.tolerance("identity.semigroup_law", &e.name, &[("t", t), ("s", s)], worst, tol, w);
    }
    Ok(())
}

/// `R(1)f − R(2)f = R(1)R(2)f`.
fn resolvent_identity(ctx: &Context, rec: &mut Recorder, e: &Entry, points: &[DVector<f64>]) -> Result<()> {
    let tol = ctx.config.suite.tolerances.resolvent_identity;
    let f = &e.field;
    let inner = match f.kind() {
        FieldKind::Constant(c) => ScalarField::constant(&ctx.model, c / 2.0),
        FieldKind::Linear { a, .. } => ScalarField::linear(&ctx.model, a / 3.0)?,
        FieldKind::Ridge(_) => ctx.solver.resolvent_ridge(f, 2.0, &ctx.knots())?,
        _ => return Ok(()),
    };
    let s = &ctx.solver;
    let floor = 1e-3 * f.sup_norm().unwrap_or(1.0);
    let (mut worst, mut at) = (0.0f64, 0usize);
    for (i, x) in points.iter().enumerate() {
        let lhs = s.resolvent(f, 1.0, x, Order::Value)?.value - s.resolvent(f, 2.0, x, Order::Value)?.value;
        let rhs = s.resolvent(&inner, 1.0, x, Order::Value)?.value;
        let d = rel((lhs - rhs).abs(), rhs.abs(), floor);
        if d > worst {
            worst = d;
            at = i;
        }
    }
    let w = Some(WitnessPoint::point(&points[at]));
    rec.tolerance("identity.resolvent", &e.name, &[("lambda", 1.0), ("mu", 2.0)], worst, tol, w);
    Ok(())
}

/// Residual of `λu − (Tr D²_H u − ⟨x, ∇u⟩) = f` at `u = R(λ)f`.
fn resolvent_equation(ctx: &Context, rec: &mut Recorder, e: &Entry, points: &[DVector<f64>]) -> Result<()> {
    let tol = ctx.config.suite.tolerances.resolvent_equation;
    let f = &e.field;
    let s = &ctx.solver;
    for &l in ctx.lambdas() {
        let (mut worst, mut at) = (0.0f64, 0usize);
        for (i, x) in points.iter().enumerate() {
            let u = s.resolvent(f, l, x, Order::Hessian)?;
            let trace = u.hess.as_ref().expect("hessian requested").trace();
            let up = s.resolvent(f, l, &(x * DRIFT_STEP.exp()), Order::Value)?.value;
            let dn = s.resolvent(f, l, &(x * (-DRIFT_STEP).exp()), Order::Value)?.value;
            let drift = (up - dn) / (2.0 * DRIFT_STEP);
            let fx = f.eval(x);
            let residual = l * u.value - (trace - drift) - fx;
            let scale = f.sup_norm().unwrap_or(fx.abs()).max(1.0);
            let d = residual.abs() / scale;
            if d > worst {
                worst = d;
                at = i;
            }
        }
        let w = Some(WitnessPoint::point(&points[at]));
        rec.tolerance("identity.resolvent_equation", &e.name, &[("lambda", l)], worst, tol, w);
    }
    Ok(())
}
