//! Hermite moments `I_k = E[(φ(m + wη) - φ(m)) He_k(η)]`, `η ~ N(0,1)`,
//! `k ≤ 3`, for the profiles of ridge fields.
//!
//! Constant pieces are integrated in closed form, power-law cusps with a
//! Gauss–Jacobi panel, and everything else with Kronrod panels of width at
//! most two in `η`; entire profiles of moderate bandwidth use Gauss–Hermite.

use std::sync::{Arc, RwLock};

use libm::erfc;

use crate::error::Result;
use crate::profile::{PieceKind, Profile1d, Shape};
use crate::quadrature::{kronrod_error, kronrod_nodes, GaussRule};

/// Half-width of the `η` window; the normal mass beyond it is below 1e-32.
pub const ETA_CUTOFF: f64 = 12.0;
const PANEL: f64 = 2.0;
const GH_ORDER: usize = 48;
const GH_CHECK: usize = 40;
/// Largest `bandwidth · w` handled by Gauss–Hermite rather than panels.
const GH_MAX_SPREAD: f64 = 1.0;
const JACOBI_ORDER: usize = 20;
const JACOBI_CHECK: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub m: [f64; 4],
    pub err: [f64; 4],
}

#[inline]
pub(crate) fn hermite_all(x: f64) -> [f64; 4] {
    [1.0, x, x * x - 1.0, x * x * x - 3.0 * x]
}

#[inline]
fn normal_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        (-0.5 * x * x).exp() * 0.398_942_280_401_432_7
    }
}

fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `∫_a^b He_k(η) ϕ(η) dη` for `k ≤ 3`, with infinite limits allowed.
pub fn hermite_segment(a: f64, b: f64) -> [f64; 4] {
    let m0 = if a >= 0.0 {
        upper_tail(a) - upper_tail(b)
    } else if b <= 0.0 {
        upper_tail(-b) - upper_tail(-a)
    } else {
        1.0 - upper_tail(b) - upper_tail(-a)
    };
    let edge = |x: f64, k: usize| if x.is_infinite() { 0.0 } else { hermite_all(x)[k] * normal_pdf(x) };
    [m0, edge(a, 0) - edge(b, 0), edge(a, 1) - edge(b, 1), edge(a, 2) - edge(b, 2)]
}

/// Cached quadrature rules for the moment integrals.
#[derive(Debug)]
pub struct RidgeIntegrator {
    gh: GaussRule,
    gh_check: GaussRule,
    jacobi: RwLock<Vec<(f64, Arc<(GaussRule, GaussRule)>)>>,
}

impl RidgeIntegrator {
    pub fn new() -> Result<Self> {
        Ok(Self { gh: GaussRule::hermite(GH_ORDER)?, gh_check: GaussRule::hermite(GH_CHECK)?, jacobi: RwLock::new(Vec::new()) })
    }

    fn jacobi_rules(&self, exponent: f64) -> Result<Arc<(GaussRule, GaussRule)>> {
        if let Some((_, r)) = self.jacobi.read().expect("jacobi cache poisoned").iter().find(|(b, _)| *b == exponent) {
            return Ok(r.clone());
        }
        let rules = Arc::new((GaussRule::jacobi_unit(JACOBI_ORDER, exponent)?, GaussRule::jacobi_unit(JACOBI_CHECK, exponent)?));
        self.jacobi.write().expect("jacobi cache poisoned").push((exponent, rules.clone()));
        Ok(rules)
    }

    /// Moments `I_0..I_kmax` of `η ↦ φ(m + wη) - φ(m)`; higher entries are zero.
    pub fn moments(&self, p: &dyn Profile1d, m: f64, w: f64, kmax: usize) -> Result<Moments> {
        let mut out = Moments::default();
        if w == 0.0 {
            return Ok(out);
        }
        let nk = kmax.min(3) + 1;
        match p.shape() {
            Shape::Entire { bandwidth } if bandwidth * w <= GH_MAX_SPREAD => {
                // Stein: E[φ(m + wη) He_k(η)] = w^k E[φ^{(k)}(m + wη)], which
                // keeps relative accuracy as w → 0.
                let stein = p.nth_derivative(m, nk - 1).is_some();
                let run = |rule: &GaussRule| {
                    let mut acc = [0.0; 4];
                    for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
                        if stein {
                            acc[0] += wt * p.increment(m, w * x);
                            for k in 1..nk {
                                acc[k] += wt * p.nth_derivative(m + w * x, k).unwrap_or(f64::NAN);
                            }
                        } else {
                            let g = wt * p.increment(m, w * x);
                            let he = hermite_all(x);
                            for k in 0..nk {
                                acc[k] += g * he[k];
                            }
                        }
                    }
                    if stein {
                        for k in 1..nk {
                            acc[k] *= w.powi(k as i32);
                        }
                    }
                    acc
                };
                let hi = run(&self.gh);
                let lo = run(&self.gh_check);
                for k in 0..nk {
                    out.m[k] = hi[k];
                    out.err[k] = (hi[k] - lo[k]).abs();
                }
            }
            Shape::Entire { bandwidth } => {
                let width = PANEL.min(2.0 / (bandwidth * w));
                self.panels(p, m, w, -ETA_CUTOFF, ETA_CUTOFF, width, nk, &mut out);
            }
            Shape::Pieces(pieces) => {
                let phi_m = p.value(m);
                for piece in pieces {
                    let (a, b) = ((piece.lo - m) / w, (piece.hi - m) / w);
                    let (a, b) = if w > 0.0 { (a, b) } else { (b, a) };
                    match piece.kind {
                        PieceKind::Const(c) => {
                            let seg = hermite_segment(a, b);
                            for k in 0..nk {
                                out.m[k] += (c - phi_m) * seg[k];
                            }
                        }
                        PieceKind::Smooth => {
                            let (a, b) = (a.max(-ETA_CUTOFF), b.min(ETA_CUTOFF));
                            if a < b {
                                self.panels(p, m, w, a, b, PANEL, nk, &mut out);
                            }
                        }
                        PieceKind::Power { origin, exponent, coef } => {
                            let eta0 = (origin - m) / w;
                            let (ca, cb) = (a.max(-ETA_CUTOFF), b.min(ETA_CUTOFF));
                            if ca >= cb {
                                continue;
                            }
                            let at_lo = (eta0 - a).abs() <= (eta0 - b).abs();
                            if eta0.abs() > ETA_CUTOFF {
                                self.panels(p, m, w, ca, cb, PANEL, nk, &mut out);
                                continue;
                            }
                            let len = PANEL.min(cb - ca);
                            let (ja, jb) = if at_lo { (eta0, eta0 + len) } else { (eta0 - len, eta0) };
                            self.cusp_panel(w, eta0, len, at_lo, exponent, coef, nk, &mut out)?;
                            let seg = hermite_segment(ja, jb);
                            for k in 0..nk {
                                out.m[k] -= phi_m * seg[k];
                            }
                            let (ra, rb) = if at_lo { (jb, cb) } else { (ca, ja) };
                            if ra < rb {
                                self.panels(p, m, w, ra, rb, PANEL, nk, &mut out);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `∫ coef·|w(η - η0)|^β He_k ϕ` over the panel of length `len` starting at
    /// the cusp `η0` (going up when `upward`).
    #[allow(clippy::too_many_arguments)]
    fn cusp_panel(&self, w: f64, eta0: f64, len: f64, upward: bool, exponent: f64, coef: f64, nk: usize, out: &mut Moments) -> Result<()> {
        let rules = self.jacobi_rules(exponent)?;
        let scale = coef * (w.abs() * len).powf(exponent) * len;
        let dir = if upward { 1.0 } else { -1.0 };
        let run = |rule: &GaussRule| {
            let mut acc = [0.0; 4];
            for (&u, &wt) in rule.nodes.iter().zip(&rule.weights) {
                let eta = eta0 + dir * len * u;
                let g = wt * normal_pdf(eta);
                let he = hermite_all(eta);
                for k in 0..nk {
                    acc[k] += g * he[k];
                }
            }
            acc
        };
        let hi = run(&rules.0);
        let lo = run(&rules.1);
        for k in 0..nk {
            out.m[k] += scale * hi[k];
            out.err[k] += scale * (hi[k] - lo[k]).abs();
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn panels(&self, p: &dyn Profile1d, m: f64, w: f64, a: f64, b: f64, width: f64, nk: usize, out: &mut Moments) {
        let count = ((b - a) / width).ceil().max(1.0) as usize;
        let h = (b - a) / count as f64;
        for i in 0..count {
            let lo = a + h * i as f64;
            let hi = if i + 1 == count { b } else { lo + h };
            let nodes = kronrod_nodes(lo, hi);
            let mut vals = [[0.0; 4]; 17];
            let (mut kr, mut ga) = ([0.0; 4], [0.0; 4]);
            for (v, n) in vals.iter_mut().zip(&nodes) {
                let g = p.increment(m, w * n.x) * normal_pdf(n.x);
                let he = hermite_all(n.x);
                for k in 0..nk {
                    v[k] = g * he[k];
                    kr[k] += n.kronrod * v[k];
                    ga[k] += n.gauss * v[k];
                }
            }
            for k in 0..nk {
                let mean = kr[k] / (hi - lo);
                let resasc: f64 = vals.iter().zip(&nodes).map(|(v, n)| n.kronrod * (v[k] - mean).abs()).sum();
                out.m[k] += kr[k];
                out.err[k] += kronrod_error(kr[k], ga[k], resasc);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;
    use crate::quadrature::adaptive;

    fn bump_oracle(m: f64, a: f64) -> [f64; 4] {
        // E[φ(m + aη) He_k(η)] = a^k G^{(k)}(m), G(m) = (1+a²)^{-1/2} e^{-m²/(2(1+a²))}.
        let v = 1.0 + a * a;
        let g = (-m * m / (2.0 * v)).exp() / v.sqrt();
        let g1 = -m / v * g;
        let g2 = (m * m / (v * v) - 1.0 / v) * g;
        let g3 = (-m * m * m / (v * v * v) + 3.0 * m / (v * v)) * g;
        [g - (-0.5 * m * m).exp(), a * g1, a * a * g2, a * a * a * g3]
    }

    fn sin_oracle(om: f64, m: f64, a: f64) -> [f64; 4] {
        // E[sin(ω(m + aη)) He_k] = (ωa)^k e^{-(ωa)²/2} sin^{(k)}(ωm).
        let b = om * a;
        let e = (-0.5 * b * b).exp();
        let s = (om * m).sin();
        let c = (om * m).cos();
        [e * s - s, b * e * c, -b * b * e * s, -b * b * b * e * c]
    }

    /// Independent route: adaptive quadrature in s with breakpoints at the kinks.
    fn direct(p: &Profile, m: f64, w: f64, k: usize) -> f64 {
        let f = |s: f64| {
            let eta = (s - m) / w;
            (p.value(s) - p.value(m)) * hermite_all(eta)[k] * normal_pdf(eta) / w
        };
        let lo = m - ETA_CUTOFF * w;
        let hi = m + ETA_CUTOFF * w;
        let mut cuts = vec![lo, hi];
        for c in [-1.0, 0.0, 1.0] {
            if c > lo && c < hi {
                cuts.push(c);
            }
        }
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.windows(2).map(|c| adaptive(f, c[0], c[1], 1e-15, 1e-13, 4000).unwrap().value).sum()
    }

    #[test]
    fn segment_moments() {
        let full = hermite_segment(f64::NEG_INFINITY, f64::INFINITY);
        assert!((full[0] - 1.0).abs() < 1e-16 && full[1..].iter().all(|v| v.abs() < 1e-16));
        let half = hermite_segment(0.0, f64::INFINITY);
        assert!((half[0] - 0.5).abs() < 1e-16);
        assert!((half[1] - normal_pdf(0.0)).abs() < 1e-16);
        // Tail accuracy where Φ(b) - Φ(a) would cancel.
        let far = hermite_segment(9.0, 10.0);
        assert!((far[0] / (upper_tail(9.0) - upper_tail(10.0)) - 1.0).abs() < 1e-12);
        assert!(far[0] > 0.0 && far[0] < 1.2e-19);
        // Oracle: 30-digit Φ(2/3) - Φ(-1).
        assert!((hermite_segment(-1.0, 0.4 / 0.6)[0] - 0.588_852_208_521_620_055).abs() < 1e-16);
    }

    #[test]
    fn entire_profiles_match_closed_forms() {
        let r = RidgeIntegrator::new().unwrap();
        let bump = Profile::SmoothBump;
        let sin = Profile::sin(1.5).unwrap();
        for &m in &[-2.0, -0.3, 0.0, 0.8, 3.5] {
            for &w in &[1e-4, 0.05, 0.7, 1.0, 2.0, 4.0, 9.0] {
                let got = r.moments(&bump, m, w, 3).unwrap();
                let want = bump_oracle(m, w);
                for k in 0..4 {
                    assert!((got.m[k] - want[k]).abs() < 1e-13, "bump m={m} w={w} k={k}: {} vs {}", got.m[k], want[k]);
                }
                let got = r.moments(&sin, m, w, 3).unwrap();
                let want = sin_oracle(1.5, m, w);
                for k in 0..4 {
                    assert!((got.m[k] - want[k]).abs() < 1e-12, "sin m={m} w={w} k={k}: {} vs {}", got.m[k], want[k]);
                }
            }
        }
    }

    #[test]
    fn small_width_moments_keep_relative_accuracy() {
        // At tiny w the moments scale like w^k; cancellation would destroy them.
        let r = RidgeIntegrator::new().unwrap();
        let sin = Profile::sin(1.0).unwrap();
        let w = 1e-5;
        let got = r.moments(&sin, 0.3, w, 3).unwrap();
        let want = sin_oracle(1.0, 0.3, w);
        for k in 1..4 {
            assert!((got.m[k] / want[k] - 1.0).abs() < 1e-8, "k={k}: {} vs {}", got.m[k], want[k]);
        }
    }

    #[test]
    fn cusp_profiles_match_direct_quadrature() {
        let r = RidgeIntegrator::new().unwrap();
        for &beta in &[0.5, 0.8] {
            let p = Profile::abs_clip_pow(beta).unwrap();
            for &m in &[-1.7, -0.4, 0.0, 0.05, 0.9, 1.0, 2.5] {
                for &w in &[0.01, 0.1, 0.6, 2.0, 5.0] {
                    let got = r.moments(&p, m, w, 3).unwrap();
                    for k in 0..4 {
                        let want = direct(&p, m, w, k);
                        assert!((got.m[k] - want).abs() < 1e-11, "beta={beta} m={m} w={w} k={k}: {} vs {want}", got.m[k]);
                        assert!(got.err[k] < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_width_gives_zero() {
        let r = RidgeIntegrator::new().unwrap();
        let got = r.moments(&Profile::SmoothBump, 0.4, 0.0, 3).unwrap();
        assert_eq!(got, Moments::default());
    }
}
