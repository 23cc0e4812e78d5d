//! The verification suites. Each appends records to a [`Recorder`](crate::Recorder).

pub mod closed_forms;
pub mod degeneracy;
pub mod formulas;
pub mod identities;
pub mod interpolation;
pub mod parabolic;
pub mod schauder;
pub mod smoothing;
pub mod zygmund;

use mehler_core::{Order, ScalarField, SemigroupEvaluation};
use nalgebra::DVector;
use rayon::prelude::*;

use crate::report::WitnessPoint;
use crate::{Context, Result};

/// Largest value over a set of points and where it occurs.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Peak {
    pub value: f64,
    pub at: usize,
}

impl Peak {
    fn offer(&mut self, v: f64, i: usize) {
        if v > self.value {
            self.value = v;
            self.at = i;
        }
    }

    pub fn witness(&self, points: &[DVector<f64>]) -> Option<WitnessPoint> {
        points.get(self.at).map(WitnessPoint::point)
    }
}

/// Sups of `|T(t)f|` and of the norms of its H-derivatives over a point set,
/// with the largest error estimate of each order.
#[derive(Debug, Clone, Default)]
pub(crate) struct Sups {
    pub peaks: [Peak; 4],
    pub err: [f64; 4],
}

impl Sups {
    fn collect(evals: &[SemigroupEvaluation]) -> Self {
        let mut s = Sups::default();
        for (i, e) in evals.iter().enumerate() {
            let norms = [e.value.abs(), e.grad_norm(), e.hess_norm(), e.d3_norm()];
            for k in 0..4 {
                s.peaks[k].offer(norms[k], i);
                s.err[k] = s.err[k].max(e.err[k]);
            }
        }
        s
    }
}

/// `T(t)f` at every point, by the bounded-data formulas or (with `c1`) by the
/// formulas for data with an H-gradient.
pub(crate) fn semigroup_at(
    ctx: &Context,
    f: &ScalarField,
    t: f64,
    points: &[DVector<f64>],
    order: Order,
    c1: bool,
) -> Result<Vec<SemigroupEvaluation>> {
    let me = ctx.mehler();
    let evals: Vec<_> = points
        .par_iter()
        .map(|x| if c1 { me.evaluate_c1(f, t, x, order) } else { me.evaluate(f, t, x, order) })
        .collect::<std::result::Result<_, _>>()?;
    Ok(evals)
}

pub(crate) fn semigroup_sups(ctx: &Context, f: &ScalarField, t: f64, points: &[DVector<f64>], order: Order, c1: bool) -> Result<Sups> {
    Ok(Sups::collect(&semigroup_at(ctx, f, t, points, order, c1)?))
}

/// Relative discrepancy `‖a − b‖ / max(‖b‖, floor)`.
pub(crate) fn rel(diff: f64, scale: f64, floor: f64) -> f64 {
    let d = scale.max(floor);
    if d > 0.0 {
        diff / d
    } else {
        diff
    }
}

/// Points `s·z/|z|²` on the line where a ridge along `z` has argument `s`.
pub(crate) fn ridge_line(z: &DVector<f64>, args: &[f64]) -> Vec<DVector<f64>> {
    let zz = z.norm_squared();
    args.iter().map(|&s| z * (s / zz)).collect()
}

/// `n` evenly spaced values on `[-reach, reach]`.
pub(crate) fn symmetric_grid(reach: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| -reach + 2.0 * reach * i as f64 / (n - 1) as f64).collect()
}
