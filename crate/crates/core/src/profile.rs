//! One-dimensional profiles `φ` for ridge fields `f(x) = φ(⟨z, x⟩)`, with
//! their sup-norms, Hölder constants, derivatives, and the piece structure the
//! ridge integrator needs.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};

#[derive(Clone)]
pub enum Profile {
    /// `min(|s|, 1)^β`, `0 < β ≤ 1`.
    AbsClipPow {
        exponent: f64,
    },
    /// `sin(ω s)`.
    Sin {
        frequency: f64,
    },
    /// `exp(-s²/2)`.
    SmoothBump,
    Custom(CustomProfile),
}

/// A user-supplied bounded profile, continuous and smooth between `breakpoints`.
#[derive(Clone)]
pub struct CustomProfile {
    pub label: String,
    pub breakpoints: Vec<f64>,
    pub sup: Option<f64>,
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomProfile {
    pub fn new(
        label: impl Into<String>,
        breakpoints: Vec<f64>,
        sup: Option<f64>,
        func: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let mut breakpoints = breakpoints;
        breakpoints.sort_by(|a, b| a.total_cmp(b));
        breakpoints.dedup();
        Self { label: label.into(), breakpoints, sup, func: Arc::new(func) }
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::AbsClipPow { exponent } => write!(f, "AbsClipPow({exponent})"),
            Profile::Sin { frequency } => write!(f, "Sin({frequency})"),
            Profile::SmoothBump => write!(f, "SmoothBump"),
            Profile::Custom(c) => write!(f, "Custom({})", c.label),
        }
    }
}

/// How the ridge integrator should treat a stretch of the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PieceKind {
    Const(f64),
    /// `coef · |s - origin|^exponent`, with `origin` at one end of the piece.
    Power {
        origin: f64,
        exponent: f64,
        coef: f64,
    },
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub kind: PieceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Entire function; `bandwidth` is the rough frequency scale that decides
    /// whether Gauss–Hermite alone resolves `φ(m + wη)`.
    Entire {
        bandwidth: f64,
    },
    Pieces(Vec<Piece>),
}

/// What the ridge integrator needs from a one-dimensional integrand.
pub trait Profile1d {
    fn value(&self, s: f64) -> f64;
    /// `φ(s + d) - φ(s)`, evaluated without cancellation where possible.
    fn increment(&self, s: f64, d: f64) -> f64;
    fn shape(&self) -> Shape;
    /// `φ^{(k)}(s)` for entire profiles.
    fn nth_derivative(&self, _s: f64, _k: usize) -> Option<f64> {
        None
    }
}

impl Profile {
    pub fn abs_clip_pow(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(invalid(format!("AbsClipPow exponent must lie in (0, 1] (got {exponent})")));
        }
        Ok(Profile::AbsClipPow { exponent })
    }

    pub fn sin(frequency: f64) -> Result<Self> {
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(invalid(format!("Sin frequency must be positive (got {frequency})")));
        }
        Ok(Profile::Sin { frequency })
    }

    pub fn label(&self) -> String {
        format!("{self:?}")
    }

    pub fn sup_abs(&self) -> Option<f64> {
        match self {
            Profile::Custom(c) => c.sup,
            _ => Some(1.0),
        }
    }

    /// Largest Hölder exponent for which the profile has a finite seminorm
    /// (1 means Lipschitz).
    pub fn max_holder_exponent(&self) -> f64 {
        match self {
            Profile::AbsClipPow { exponent } => *exponent,
            Profile::Custom(_) => 0.0,
            _ => 1.0,
        }
    }

    pub fn derivative(&self, s: f64) -> Option<f64> {
        match self {
            Profile::Sin { frequency: w } => Some(w * (w * s).cos()),
            Profile::SmoothBump => Some(-s * (-0.5 * s * s).exp()),
            _ => None,
        }
    }

    pub fn second_derivative(&self, s: f64) -> Option<f64> {
        match self {
            Profile::Sin { frequency: w } => Some(-w * w * (w * s).sin()),
            Profile::SmoothBump => Some((s * s - 1.0) * (-0.5 * s * s).exp()),
            _ => None,
        }
    }

    pub fn third_derivative(&self, s: f64) -> Option<f64> {
        match self {
            Profile::Sin { frequency: w } => Some(-w * w * w * (w * s).cos()),
            Profile::SmoothBump => Some((3.0 * s - s * s * s) * (-0.5 * s * s).exp()),
            _ => None,
        }
    }

    /// `sup |φ'|`, when finite.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Profile::AbsClipPow { exponent } if *exponent == 1.0 => Some(1.0),
            Profile::Sin { frequency } => Some(*frequency),
            Profile::SmoothBump => Some((-0.5f64).exp()),
            _ => None,
        }
    }

    /// `sup |φ''|` for twice-differentiable profiles.
    pub fn second_sup(&self) -> Option<f64> {
        match self {
            Profile::Sin { frequency } => Some(frequency * frequency),
            Profile::SmoothBump => Some(1.0),
            _ => None,
        }
    }

    /// `[φ]_α`; `None` when infinite or not declared.
    pub fn holder(&self, alpha: f64) -> Option<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return None;
        }
        match self {
            Profile::AbsClipPow { exponent } => (alpha <= *exponent).then_some(1.0),
            Profile::Sin { frequency } => Some(frequency.powf(alpha) * sin_holder(alpha)),
            Profile::SmoothBump => Some(numeric_holder(|s| (-0.5 * s * s).exp(), alpha)),
            Profile::Custom(_) => None,
        }
    }

    /// `[φ']_α` for profiles with a Hölder-continuous derivative.
    pub fn derivative_holder(&self, alpha: f64) -> Option<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return None;
        }
        match self {
            Profile::Sin { frequency } => Some(frequency.powf(1.0 + alpha) * sin_holder(alpha)),
            Profile::SmoothBump => Some(numeric_holder(|s| -s * (-0.5 * s * s).exp(), alpha)),
            _ => None,
        }
    }

    /// `[φ'']_α` for profiles with a Hölder-continuous second derivative.
    pub fn second_derivative_holder(&self, alpha: f64) -> Option<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return None;
        }
        match self {
            Profile::Sin { frequency } => Some(frequency.powf(2.0 + alpha) * sin_holder(alpha)),
            Profile::SmoothBump => Some(numeric_holder(|s| (s * s - 1.0) * (-0.5 * s * s).exp(), alpha)),
            _ => None,
        }
    }

    pub fn is_c1(&self) -> bool {
        self.lipschitz().is_some() && self.derivative(0.0).is_some()
    }
}

impl Profile1d for Profile {
    fn nth_derivative(&self, s: f64, k: usize) -> Option<f64> {
        match self {
            Profile::Sin { frequency: w } => Some(w.powi(k as i32) * (w * s + k as f64 * std::f64::consts::FRAC_PI_2).sin()),
            Profile::SmoothBump => {
                // (-1)^k He_k(s) e^{-s²/2}.
                let (mut h0, mut h1) = (1.0, s);
                if k == 0 {
                    h1 = h0;
                }
                for j in 1..k {
                    let h2 = s * h1 - j as f64 * h0;
                    h0 = h1;
                    h1 = h2;
                }
                let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
                Some(sign * h1 * (-0.5 * s * s).exp())
            }
            _ => None,
        }
    }

    fn value(&self, s: f64) -> f64 {
        match self {
            Profile::AbsClipPow { exponent } => s.abs().min(1.0).powf(*exponent),
            Profile::Sin { frequency } => (frequency * s).sin(),
            Profile::SmoothBump => (-0.5 * s * s).exp(),
            Profile::Custom(c) => (c.func)(s),
        }
    }

    fn increment(&self, s: f64, d: f64) -> f64 {
        match self {
            Profile::AbsClipPow { exponent: b } => {
                let x = s + d;
                if s.abs() >= 1.0 && x.abs() >= 1.0 {
                    return 0.0;
                }
                let (hi, lo) = (x.abs().min(1.0), s.abs().min(1.0));
                if lo == 0.0 {
                    return hi.powf(*b);
                }
                if hi == 0.0 {
                    return -lo.powf(*b);
                }
                let same_side = x.abs() < 1.0 && s.abs() < 1.0 && (x > 0.0) == (s > 0.0);
                let diff = if same_side { d * s.signum() } else { hi - lo };
                lo.powf(*b) * (b * (diff / lo).ln_1p()).exp_m1()
            }
            Profile::Sin { frequency: w } => 2.0 * (w * (s + 0.5 * d)).cos() * (0.5 * w * d).sin(),
            Profile::SmoothBump => (-0.5 * s * s).exp() * (-s * d - 0.5 * d * d).exp_m1(),
            Profile::Custom(c) => (c.func)(s + d) - (c.func)(s),
        }
    }

    fn shape(&self) -> Shape {
        match self {
            Profile::AbsClipPow { exponent } => {
                let inf = f64::INFINITY;
                Shape::Pieces(vec![
                    Piece { lo: -inf, hi: -1.0, kind: PieceKind::Const(1.0) },
                    Piece { lo: -1.0, hi: 0.0, kind: PieceKind::Power { origin: 0.0, exponent: *exponent, coef: 1.0 } },
                    Piece { lo: 0.0, hi: 1.0, kind: PieceKind::Power { origin: 0.0, exponent: *exponent, coef: 1.0 } },
                    Piece { lo: 1.0, hi: inf, kind: PieceKind::Const(1.0) },
                ])
            }
            Profile::Sin { frequency } => Shape::Entire { bandwidth: *frequency },
            Profile::SmoothBump => Shape::Entire { bandwidth: 1.0 },
            Profile::Custom(c) => {
                let mut edges = vec![f64::NEG_INFINITY];
                edges.extend(c.breakpoints.iter().copied());
                edges.push(f64::INFINITY);
                Shape::Pieces(edges.windows(2).map(|w| Piece { lo: w[0], hi: w[1], kind: PieceKind::Smooth }).collect())
            }
        }
    }
}

/// `φ'` of a C¹ profile, as an integrand for the C¹ representation formulas.
pub struct DerivativeOf<'a>(pub &'a Profile);

impl Profile1d for DerivativeOf<'_> {
    fn value(&self, s: f64) -> f64 {
        self.0.derivative(s).unwrap_or(f64::NAN)
    }

    fn increment(&self, s: f64, d: f64) -> f64 {
        match self.0 {
            Profile::Sin { frequency: w } => -2.0 * w * (w * (s + 0.5 * d)).sin() * (0.5 * w * d).sin(),
            _ => self.value(s + d) - self.value(s),
        }
    }

    fn shape(&self) -> Shape {
        self.0.shape()
    }

    fn nth_derivative(&self, s: f64, k: usize) -> Option<f64> {
        self.0.nth_derivative(s, k + 1)
    }
}

/// `[sin]_α = 2^{1-α} sup_u sin(u)/u^α`, the maximiser solving `tan u = u/α`
/// on `(0, π/2)`.
pub fn sin_holder(alpha: f64) -> f64 {
    let g = |u: f64| u.tan() - u / alpha;
    // g < 0 just above 0 (tan u ≈ u < u/α) and g → +∞ at π/2.
    let (mut lo, mut hi) = (1e-9, std::f64::consts::FRAC_PI_2 - 1e-15);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    2f64.powf(1.0 - alpha) * u.sin() / u.powf(alpha)
}

/// Hölder constant of a smooth bounded function that is flat outside
/// `[-8, 8]`: coarse search over (left end, log gap), then pattern-search
/// refinement, plus a `1e-9` relative safety margin.
pub fn numeric_holder(g: impl Fn(f64) -> f64, alpha: f64) -> f64 {
    let q = |a: f64, ld: f64| {
        let d = ld.exp();
        (g(a + d) - g(a)).abs() / d.powf(alpha)
    };
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    let na = 640;
    let nd = 160;
    for i in 0..=na {
        let a = -8.0 + 16.0 * i as f64 / na as f64;
        for j in 0..=nd {
            let ld = (1e-3f64).ln() + ((20.0f64).ln() - (1e-3f64).ln()) * j as f64 / nd as f64;
            let v = q(a, ld);
            if v > best.2 {
                best = (a, ld, v);
            }
        }
    }
    let (mut a, mut ld, mut v) = best;
    let mut step = (16.0 / na as f64, 0.1);
    while step.0 > 1e-13 {
        let mut moved = false;
        for (da, dl) in [(step.0, 0.0), (-step.0, 0.0), (0.0, step.1), (0.0, -step.1)] {
            let cand = q(a + da, ld + dl);
            if cand > v {
                a += da;
                ld += dl;
                v = cand;
                moved = true;
            }
        }
        if !moved {
            step = (0.5 * step.0, 0.5 * step.1);
        }
    }
    v * (1.0 + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: brute-force maximum over all pairs of a uniform grid.
    fn grid_holder(g: impl Fn(f64) -> f64, alpha: f64, lo: f64, hi: f64, n: usize) -> f64 {
        let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let vs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                best = best.max((vs[j] - vs[i]).abs() / (xs[j] - xs[i]).powf(alpha));
            }
        }
        best
    }

    #[test]
    fn abs_clip_pow_holder_is_one() {
        for &(b, a) in &[(0.5, 0.5), (0.5, 0.3), (0.8, 0.7), (1.0, 0.5)] {
            let p = Profile::abs_clip_pow(b).unwrap();
            assert_eq!(p.holder(a), Some(1.0));
            let grid = grid_holder(|s| p.value(s), a, -5.0, 5.0, 1001);
            assert!(grid <= 1.0 + 1e-12 && grid > 0.999, "beta={b} alpha={a}: {grid}");
        }
        assert_eq!(Profile::abs_clip_pow(0.5).unwrap().holder(0.7), None);
    }

    #[test]
    fn sin_holder_matches_grid() {
        for &alpha in &[0.3, 0.5, 0.7] {
            let p = Profile::sin(1.5).unwrap();
            let exact = p.holder(alpha).unwrap();
            let grid = grid_holder(|s| p.value(s), alpha, -5.0, 5.0, 1001);
            assert!(grid <= exact * (1.0 + 1e-12), "alpha={alpha}: grid {grid} > {exact}");
            assert!(grid >= exact * (1.0 - 1e-4), "alpha={alpha}: grid {grid} << {exact}");
        }
        // Lipschitz constant ω and the unit case [sin]_{1/2}.
        assert_eq!(Profile::sin(2.0).unwrap().lipschitz(), Some(2.0));
        // Oracle: 2^{1-α} max sin(u)/u^α over a fine grid of (0, π].
        for &alpha in &[0.3, 0.5, 0.7] {
            let grid = (1..=200_000)
                .map(|i| {
                    let u = std::f64::consts::PI * i as f64 / 200_000.0;
                    u.sin() / u.powf(alpha)
                })
                .fold(0.0, f64::max)
                * 2f64.powf(1.0 - alpha);
            assert!((sin_holder(alpha) - grid).abs() < 1e-9, "alpha={alpha}");
        }
    }

    #[test]
    fn bump_holder_matches_grid() {
        let p = Profile::SmoothBump;
        for &alpha in &[0.3, 0.5, 0.7] {
            let num = p.holder(alpha).unwrap();
            let grid = grid_holder(|s| p.value(s), alpha, -5.0, 5.0, 1001);
            assert!(grid <= num, "alpha={alpha}: {grid} > {num}");
            assert!(grid >= num * (1.0 - 1e-4), "alpha={alpha}: {grid} vs {num}");
            let num2 = p.second_derivative_holder(alpha).unwrap();
            let grid2 = grid_holder(|s| p.second_derivative(s).unwrap(), alpha, -5.0, 5.0, 1001);
            assert!(grid2 <= num2 && grid2 >= num2 * (1.0 - 1e-4), "{grid2} vs {num2}");
        }
    }

    #[test]
    fn increments_match_direct_differences() {
        let profiles =
            [Profile::abs_clip_pow(0.5).unwrap(), Profile::abs_clip_pow(0.8).unwrap(), Profile::sin(1.5).unwrap(), Profile::SmoothBump];
        let pts = [-2.0, -1.0, -0.7, -1e-3, 0.0, 0.2, 0.999, 1.0, 3.0];
        let ds = [-2.5, -1.0, -0.3, -1e-6, 1e-6, 0.4, 1.3, 2.0];
        for p in &profiles {
            for &s in &pts {
                for &d in &ds {
                    let direct = p.value(s + d) - p.value(s);
                    let inc = p.increment(s, d);
                    assert!((direct - inc).abs() < 1e-13, "{p:?} s={s} d={d}: {direct} vs {inc}");
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for p in [Profile::sin(1.5).unwrap(), Profile::SmoothBump] {
            for &s in &[-1.3, 0.0, 0.4, 2.2] {
                let h = 1e-5;
                let d1 = (p.value(s + h) - p.value(s - h)) / (2.0 * h);
                let d2 = (p.derivative(s + h).unwrap() - p.derivative(s - h).unwrap()) / (2.0 * h);
                let d3 = (p.second_derivative(s + h).unwrap() - p.second_derivative(s - h).unwrap()) / (2.0 * h);
                assert!((d1 - p.derivative(s).unwrap()).abs() < 1e-9);
                assert!((d2 - p.second_derivative(s).unwrap()).abs() < 1e-9);
                assert!((d3 - p.third_derivative(s).unwrap()).abs() < 1e-9);
                let dp = DerivativeOf(&p);
                assert!((dp.increment(s, 0.3) - (dp.value(s + 0.3) - dp.value(s))).abs() < 1e-14);
            }
        }
        let lip = (-0.5f64).exp();
        assert_eq!(Profile::SmoothBump.lipschitz(), Some(lip));
    }

    #[test]
    fn nth_derivative_agrees_with_named_ones() {
        for p in [Profile::sin(1.5).unwrap(), Profile::SmoothBump] {
            for &s in &[-1.3, 0.0, 0.4, 2.2] {
                let named = [p.value(s), p.derivative(s).unwrap(), p.second_derivative(s).unwrap(), p.third_derivative(s).unwrap()];
                for (k, want) in named.iter().enumerate() {
                    assert!((p.nth_derivative(s, k).unwrap() - want).abs() < 1e-13, "{p:?} k={k} s={s}");
                }
                let h = 1e-5;
                let d4 = (p.third_derivative(s + h).unwrap() - p.third_derivative(s - h).unwrap()) / (2.0 * h);
                assert!((p.nth_derivative(s, 4).unwrap() - d4).abs() < 1e-8);
                assert_eq!(DerivativeOf(&p).nth_derivative(s, 2), p.nth_derivative(s, 3));
            }
        }
        assert!(Profile::abs_clip_pow(0.5).unwrap().nth_derivative(0.3, 1).is_none());
    }

    #[test]
    fn constructors_validate() {
        assert!(Profile::abs_clip_pow(0.0).is_err());
        assert!(Profile::abs_clip_pow(1.5).is_err());
        assert!(Profile::sin(-1.0).is_err());
    }
}
