//! Universal constants of the Mehler semigroup: Gaussian absolute moments
//! `k_p`, the smoothing factor `c(t)`, `c₀`, `c₁`, and the Hölder-data
//! constants `C_{1,α}`, `C_{2,α}`, `C_{3,α}`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{invalid, Result};
use crate::quadrature::adaptive;

/// `(E|ξ|^p)^{1/p}` for a standard normal `ξ`, by adaptive quadrature.
pub fn kp(p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid(format!("k_p needs finite p >= 1 (got {p})")));
    }
    let dens = |x: f64| 2.0 * x.powf(p) * (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    let mut total = 0.0;
    // The mass of x^p e^{-x²/2} sits near sqrt(p); split there and cut far out.
    let peak = p.sqrt();
    let cuts = [0.0, peak, 2.0 * peak + 4.0, 4.0 * peak + 12.0, 6.0 * peak + 40.0];
    for w in cuts.windows(2) {
        total += adaptive(dens, w[0], w[1], 1e-300, 1e-14, 2000)?.value;
    }
    Ok(total.powf(1.0 / p))
}

/// `c(t) = e^{-t} / sqrt(1 - e^{-2t})`.
pub fn c_factor(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid(format!("c(t) needs t > 0 (got {t})")));
    }
    Ok(c_unchecked(t))
}

pub(crate) fn c_unchecked(t: f64) -> f64 {
    (-t).exp() / (-(-2.0 * t).exp_m1()).sqrt()
}

/// `sqrt(1 - e^{-2t})`.
pub fn noise_scale(t: f64) -> f64 {
    (-(-2.0 * t).exp_m1()).sqrt()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

/// Largest value of `g` over a log grid on `[1e-14, 1e3]`, refined around
/// the best grid point by golden-section search in `ln t`.
fn sup_over_t(g: impl Fn(f64) -> f64) -> f64 {
    let grid: Vec<f64> = log_grid(1e-14, 1e3, 2001).collect();
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for (i, &t) in grid.iter().enumerate() {
        let v = g(t);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = grid[best_i.saturating_sub(1)].ln();
    let hi = grid[(best_i + 1).min(grid.len() - 1)].ln();
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    for _ in 0..100 {
        let c = b - gr * (b - a);
        let d = a + gr * (b - a);
        if g(c.exp()) > g(d.exp()) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(g((0.5 * (a + b)).exp()))
}

/// Numeric supremum of `t^{1/2} c(t)` over the grid, without the analytic limit.
pub fn c0_numeric() -> f64 {
    sup_over_t(|t| t.sqrt() * c_unchecked(t))
}

/// `c₀ = sup_{t>0} t^{1/2} c(t)`; the supremum is the limit `1/√2` at `t → 0⁺`,
/// which dominates any grid value.
pub fn c0() -> f64 {
    c0_numeric().max(FRAC_1_SQRT_2)
}

/// `k₃³ = E|ξ|³ = 2 sqrt(2/π)`, computed through [`kp`].
pub fn k3_cubed() -> f64 {
    kp(3.0).map(|k| k.powi(3)).unwrap_or(2.0 * (2.0 / PI).sqrt())
}

/// `c₁ = (3 + k₃³) c₀³`.
pub fn c1() -> f64 {
    (3.0 + k3_cubed()) * c0().powi(3)
}

/// Constants of the Hölder-data smoothing bounds
/// `‖∇T(t)f‖ ≤ C₁ t^{-(1-α)/2}‖f‖_{C^α}`, `‖D²T(t)f‖ ≤ C₂ t^{-1+α/2}‖f‖_{C^α}`,
/// `‖D³T(t)f‖ ≤ C₃ t^{-3/2+α/2}‖f‖_{C^α}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderConstants {
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl HolderConstants {
    /// Each constant is the larger of a numeric supremum over `t` and its
    /// closed-form reduction.
    pub fn derive(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1) (got {alpha})")));
        }
        let c0 = c0();
        let c1 = Self::c1_numeric(alpha).max(Self::c1_closed(alpha, c0));
        let c2_num = sup_over_t(|t| t.powf(1.0 - alpha / 2.0) * c_unchecked(t / 2.0) * c1 * (t / 2.0).powf(-(1.0 - alpha) / 2.0));
        let c3_num =
            sup_over_t(|t| t.powf(1.5 - alpha / 2.0) * 2.0 * c_unchecked(t / 2.0).powi(2) * c1 * (t / 2.0).powf(-(1.0 - alpha) / 2.0));
        let c2 = c2_num.max(2f64.powf(1.0 - alpha / 2.0) * c1 * c0);
        let c3 = c3_num.max(2f64.powf(2.5 - alpha / 2.0) * c1 * c0 * c0);
        Ok(Self { alpha, c1, c2, c3 })
    }

    /// `sup_t t^{(1-α)/2} (c(t) t^{α/2}/(α+1) + t^{(α-1)/2})` on the grid.
    pub fn c1_numeric(alpha: f64) -> f64 {
        sup_over_t(|t| t.powf((1.0 - alpha) / 2.0) * (c_unchecked(t) * t.powf(alpha / 2.0) / (alpha + 1.0) + t.powf((alpha - 1.0) / 2.0)))
    }

    pub fn c1_closed(alpha: f64, c0: f64) -> f64 {
        c0 / (alpha + 1.0) + 1.0
    }

    /// Constant of the `D²`-Hölder bound for resolvents and Duhamel integrals.
    pub fn hess_holder(&self) -> f64 {
        4.0 * self.c2 / self.alpha + 2.0 * self.c3 / (1.0 - self.alpha)
    }
}
