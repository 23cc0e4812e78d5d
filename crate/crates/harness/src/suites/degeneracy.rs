//! Behaviour in the kernel of `Q`: no smoothing along directions outside the
//! Cameron–Martin space, and the usual gradient bound along its range.

use mehler_core::constants::c_factor;
use mehler_core::Order;

use super::{semigroup_sups, Peak};
use crate::report::WitnessPoint;
use crate::{Context, Recorder, Result};

const TIME: f64 = 1.0;
const FINE: f64 = 1e-4;
const COARSE: f64 = 1e-1;
/// A Lipschitz `T(t)f` would keep the two quotients comparable.
const MIN_RATIO: f64 = 10.0;

pub fn run(ctx: &Context, rec: &mut Recorder) -> Result<()> {
    let me = ctx.mehler();
    for e in &ctx.corpus {
        let Some(r) = e.field.as_ridge() else { continue };
        if e.sup().is_none() {
            continue;
        }
        if r.h_norm() == 0.0 {
            // Start on the kink of T(1)f and step along the ridge direction.
            let z = &r.direction;
            let k = z / z.norm();
            let x0 = &ctx.design.points()[0];
            let x = x0 - z * (z.dot(x0) / z.norm_squared());
            let base = me.apply(&e.field, TIME, &x)?;
            let quotient = |d: f64| -> Result<(f64, f64)> {
                let v = me.apply(&e.field, TIME, &(&x + &k * d))?;
                Ok(((v.0 - base.0).abs() / d, (v.1 + base.1) / d))
            };
            let (fine, fine_err) = quotient(FINE)?;
            let (coarse, _) = quotient(COARSE)?;
            let ratio = fine / coarse;
            let w = Some(WitnessPoint { x: x.as_slice().to_vec(), h: Some((&k * FINE).as_slice().to_vec()) });
            let p = [("t", TIME), ("fine", FINE), ("coarse", COARSE)];
            // Recorded as MIN_RATIO ≤ ratio.
            rec.bound("degeneracy.kernel_quotient_ratio", &e.name, &p, MIN_RATIO, ratio, fine_err / coarse, w);
        } else {
            let s = semigroup_sups(ctx, &e.field, TIME, ctx.design.points(), Order::Gradient, false)?;
            let g: Peak = s.peaks[1];
            let rhs = c_factor(TIME)? * e.sup().expect("bounded");
            rec.bound("degeneracy.range_gradient", &e.name, &[("t", TIME)], g.value, rhs, s.err[1], g.witness(ctx.design.points()));
        }
    }
    Ok(())
}
