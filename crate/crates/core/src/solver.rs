//! Resolvents `R(λ, L)f = ∫₀^∞ e^{-λt} T(t)f dt` and mild solutions
//! `v(t) = T(t)f + ∫₀^t T(s)g(t - s) ds`, with their first and second
//! H-derivatives, by composite Kronrod quadrature in time.
//!
//! Near `t = 0` the integrands behave like `t^{-β}` with `β` fixed by the
//! regularity of the data (`β = 1 - α/2` for Hessians of `C^α_H` data). The
//! mesh substitutes `t = τ²` there and grades the `τ`-panels geometrically;
//! the piece `[0, t_min]` that is left out is bounded analytically, as is the
//! tail beyond `T_max`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::constants::{c0, c_unchecked, HolderConstants};
use crate::error::{invalid, Error, Result};
use crate::fields::{ScalarField, TimeField};
use crate::profile::{CustomProfile, Profile};
use crate::quadrature::{kronrod_error, kronrod_nodes};
use crate::semigroup::{Mehler, Order, SemigroupEvaluation};
use crate::tensor::sym_norm;

/// Largest Hölder exponent used when a Lipschitz field is treated as Hölder.
const HOLDER_CAP: f64 = 0.95;
const SMALLEST_CUT: f64 = 1e-300;
/// Panel width on the smooth part of a finite interval.
const INTERVAL_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshParams {
    /// End of the graded part `[0, split]`.
    pub split: f64,
    /// Relative target for the truncated head and tail.
    pub rel_tol: f64,
    /// Ratio between consecutive graded `τ`-panels.
    pub grading: f64,
    /// Widest panel on `[split, T_max]`.
    pub max_width: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        Self { split: 1.0, rel_tol: 1e-8, grading: 0.25, max_width: 4.0 }
    }
}

impl MeshParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.split > 0.0
            && self.split.is_finite()
            && self.rel_tol > 0.0
            && self.rel_tol < 1.0
            && self.grading > 0.0
            && self.grading < 1.0
            && self.max_width > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::SpecInvalid(format!("invalid time mesh parameters {self:?}")))
        }
    }
}

/// `|integrand(t)| ≤ bound · t^{-beta}` on `(0, split]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    pub beta: f64,
    pub bound: f64,
}

impl Singularity {
    /// `t_min` at which `∫₀^{t_min} t^{-β} dt ≤ 0.1 rel_tol`.
    fn cut(&self, rel_tol: f64) -> f64 {
        let e = 1.0 - self.beta;
        (0.1 * rel_tol * e).powf(1.0 / e).max(SMALLEST_CUT)
    }

    /// Bound of the part of the integral over `[0, t_min]`.
    pub fn head(&self, t_min: f64) -> f64 {
        let e = 1.0 - self.beta;
        self.bound * t_min.powf(e) / e
    }
}

#[derive(Debug, Clone, Copy)]
struct MeshNode {
    t: f64,
    /// Kronrod and Gauss weights in the panel variable, and `dt/dvar`.
    wk: f64,
    wg: f64,
    jac: f64,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    start: usize,
    width: f64,
}

/// Composite Kronrod mesh on `[t_min, t_max]`.
#[derive(Debug, Clone)]
pub struct TimeMesh {
    nodes: Vec<MeshNode>,
    panels: Vec<Panel>,
    pub t_min: f64,
    pub t_max: f64,
}

impl TimeMesh {
    fn empty(t_min: f64) -> Self {
        Self { nodes: Vec::new(), panels: Vec::new(), t_min, t_max: t_min }
    }

    fn push_linear(&mut self, a: f64, b: f64) {
        self.panels.push(Panel { start: self.nodes.len(), width: b - a });
        for n in kronrod_nodes(a, b) {
            self.nodes.push(MeshNode { t: n.x, wk: n.kronrod, wg: n.gauss, jac: 1.0 });
        }
        self.t_max = self.t_max.max(b);
    }

    /// `τ`-panels of `t = τ²` from `sqrt(t_min)` up to `sqrt(end)`.
    fn push_graded(&mut self, end: f64, grading: f64) {
        let tau_min = self.t_min.sqrt();
        let mut hi = end.sqrt();
        let mut pieces = Vec::new();
        while hi > tau_min {
            let lo = (hi * grading).max(tau_min);
            pieces.push((lo, hi));
            hi = lo;
        }
        for (lo, hi) in pieces.into_iter().rev() {
            self.panels.push(Panel { start: self.nodes.len(), width: hi - lo });
            for n in kronrod_nodes(lo, hi) {
                self.nodes.push(MeshNode { t: n.x * n.x, wk: n.kronrod, wg: n.gauss, jac: 2.0 * n.x });
            }
        }
        self.t_max = self.t_max.max(end);
    }

    /// Panels starting at `a` whose widths double from `a` up to `max_width`.
    fn push_doubling(&mut self, a: f64, b: f64, max_width: f64) {
        let mut lo = a;
        let mut w = a.min(max_width);
        while lo < b {
            let hi = (lo + w).min(b);
            self.push_linear(lo, hi);
            lo = hi;
            w = (2.0 * w).min(max_width);
        }
    }

    /// Truncation point of `∫ e^{-λt}` tails at relative level `0.1 rel_tol`.
    pub fn laplace_horizon(lambda: f64, from: f64, rel_tol: f64) -> f64 {
        from + (10.0 / (lambda * rel_tol)).ln().max(1.0) / lambda
    }

    /// Mesh for `∫₀^∞ e^{-λt} g(t) dt`.
    pub fn laplace(lambda: f64, t_min: f64, p: &MeshParams) -> Self {
        let mut m = Self::empty(t_min);
        if t_min < p.split {
            m.push_graded(p.split, p.grading);
        }
        let start = p.split.max(t_min);
        let end = Self::laplace_horizon(lambda, start, p.rel_tol);
        m.push_doubling(start, end, p.max_width);
        m
    }

    /// Mesh for `∫_a^∞ e^{-λt} g(t) dt`, `a > 0`, doubling away from `a`.
    pub fn laplace_from(lambda: f64, a: f64, p: &MeshParams) -> Self {
        let mut m = Self::empty(a);
        let end = Self::laplace_horizon(lambda, a, p.rel_tol);
        m.push_doubling(a, end, p.max_width);
        m
    }

    /// Mesh for `∫₀^{end} g(s) ds`, graded at `s = 0`.
    pub fn interval(end: f64, t_min: f64, p: &MeshParams) -> Self {
        let mut m = Self::empty(t_min);
        let graded_end = end.min(p.split);
        if t_min < graded_end {
            m.push_graded(graded_end, p.grading);
        }
        let count = ((end - graded_end) / INTERVAL_WIDTH).ceil() as usize;
        for i in 0..count {
            let a = graded_end + (end - graded_end) * i as f64 / count as f64;
            let b = graded_end + (end - graded_end) * (i + 1) as f64 / count as f64;
            m.push_linear(a, b);
        }
        m.t_max = end;
        m
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().map(|n| (n.t, n.wk * n.jac))
    }

    /// Integrates a vector-valued `g`, which also reports per-component
    /// error estimates of its own values. Returns the integral, the panel
    /// error per component, and the accumulated integrand error.
    fn integrate(&self, len: usize, mut g: impl FnMut(f64) -> Result<(Vec<f64>, Vec<f64>)>) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let mut total = vec![0.0; len];
        let mut quad_err = vec![0.0; len];
        let mut inner = vec![0.0; len];
        let mut vals = vec![vec![0.0; len]; 17];
        for p in &self.panels {
            let nodes = &self.nodes[p.start..p.start + 17];
            let (mut k, mut gs) = (vec![0.0; len], vec![0.0; len]);
            for (slot, n) in vals.iter_mut().zip(nodes) {
                let (v, e) = g(n.t)?;
                for j in 0..len {
                    slot[j] = v[j] * n.jac;
                    k[j] += n.wk * slot[j];
                    gs[j] += n.wg * slot[j];
                    inner[j] += n.wk * n.jac * e[j];
                }
            }
            for j in 0..len {
                let mean = k[j] / p.width;
                let resasc: f64 = vals.iter().zip(nodes).map(|(v, n)| n.wk * (v[j] - mean).abs()).sum();
                total[j] += k[j];
                quad_err[j] += kronrod_error(k[j], gs[j], resasc);
            }
        }
        Ok((total, quad_err, inner))
    }
}

/// A time integral of `T(t)f` and its H-derivatives at one point.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub value: f64,
    pub grad: Option<DVector<f64>>,
    pub hess: Option<DMatrix<f64>>,
    /// Error estimates for the value, `‖grad‖` and `‖hess‖`.
    pub err: [f64; 3],
    /// Integrand evaluations used.
    pub nodes: usize,
}

impl Resolved {
    pub fn grad_norm(&self) -> f64 {
        self.grad.as_ref().map_or(0.0, |g| g.norm())
    }

    pub fn hess_norm(&self) -> f64 {
        self.hess.as_ref().map_or(0.0, sym_norm)
    }

    fn add(&mut self, other: &Resolved, s: f64) {
        self.value += s * other.value;
        if let (Some(a), Some(b)) = (self.grad.as_mut(), other.grad.as_ref()) {
            a.axpy(s, b, 1.0);
        }
        if let (Some(a), Some(b)) = (self.hess.as_mut(), other.hess.as_ref()) {
            *a += b * s;
        }
        for k in 0..3 {
            self.err[k] += s.abs() * other.err[k];
        }
        self.nodes += other.nodes;
    }
}

/// The pieces of a proof-style split of `∫₀^∞` at `t = ‖h‖²_H`.
#[derive(Debug, Clone)]
pub struct SplitParts {
    pub cut: f64,
    /// `∫₀^{cut}` of the combination.
    pub head: Resolved,
    /// `∫_{cut}^∞` of the combination.
    pub tail: Resolved,
}

/// Quadrature plan for one field and derivative order: which formula family
/// to use and how the integrand behaves near `t = 0` and for large `t`.
#[derive(Debug, Clone, Copy)]
struct Plan {
    order: Order,
    c1: bool,
    sing: [Singularity; 3],
    tail: [f64; 3],
}

impl Plan {
    fn t_min(&self, rel_tol: f64) -> f64 {
        self.sing[..=self.order as usize].iter().map(|s| s.cut(rel_tol)).fold(f64::INFINITY, f64::min)
    }
}

fn pack_len(r: usize, order: Order) -> usize {
    match order {
        Order::Value => 1,
        Order::Gradient => 1 + r,
        _ => 1 + r + r * r,
    }
}

fn pack(e: &SemigroupEvaluation, r: usize, order: Order, out: &mut [f64]) {
    out[0] = e.value;
    if order >= Order::Gradient {
        if let Some(g) = &e.grad {
            out[1..1 + r].copy_from_slice(g.as_slice());
        }
    }
    if order >= Order::Hessian {
        if let Some(h) = &e.hess {
            out[1 + r..1 + r + r * r].copy_from_slice(h.as_slice());
        }
    }
}

/// Spreads per-order error estimates over the packed components.
fn pack_err(e: &SemigroupEvaluation, r: usize, order: Order, out: &mut [f64]) {
    out[0] = e.err[0];
    if order >= Order::Gradient && r > 0 {
        out[1] = e.err[1];
    }
    if order >= Order::Hessian && r > 0 {
        out[1 + r] = e.err[2];
    }
}

fn rss(v: &[f64]) -> f64 {
    v.iter().map(|e| e * e).sum::<f64>().sqrt()
}

fn unpack(total: &[f64], errs: [&[f64]; 2], r: usize, order: Order, nodes: usize) -> Resolved {
    let norm_err = |lo: usize, hi: usize| errs[0][lo..hi].iter().sum::<f64>() + rss(&errs[1][lo..hi]);
    let mut out = Resolved { value: total[0], grad: None, hess: None, err: [norm_err(0, 1), 0.0, 0.0], nodes };
    if order >= Order::Gradient {
        out.grad = Some(DVector::from_column_slice(&total[1..1 + r]));
        out.err[1] = norm_err(1, 1 + r);
    }
    if order >= Order::Hessian {
        let h = DMatrix::from_column_slice(r, r, &total[1 + r..1 + r + r * r]);
        out.hess = Some(0.5 * (&h + h.transpose()));
        out.err[2] = norm_err(1 + r, 1 + r + r * r);
    }
    out
}

/// Time-integral solver sharing one [`Mehler`] evaluator.
#[derive(Debug, Clone)]
pub struct Solver {
    mehler: Arc<Mehler>,
    params: MeshParams,
}

impl Solver {
    pub fn new(mehler: Arc<Mehler>, params: MeshParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { mehler, params })
    }

    pub fn mehler(&self) -> &Mehler {
        &self.mehler
    }

    pub fn params(&self) -> &MeshParams {
        &self.params
    }

    fn holder_data(f: &ScalarField) -> Option<(f64, f64)> {
        let a = f.holder_exponent().min(HOLDER_CAP);
        if a <= 0.0 {
            return None;
        }
        Some((a, f.holder_norm(a)?))
    }

    fn plan(&self, f: &ScalarField, x: &DVector<f64>, order: Order) -> Result<Plan> {
        let c1 = f.has_h_gradient();
        let mut sing = [Singularity { beta: 0.0, bound: 0.0 }; 3];
        let mut tail = [0.0; 3];
        if f.orbit_bound(x, 0).is_some() {
            for k in 0..=order as usize {
                let b = f.orbit_bound(x, k).unwrap_or(0.0);
                sing[k] = Singularity { beta: 0.0, bound: b };
                tail[k] = b;
            }
            return Ok(Plan { order, c1, sing, tail });
        }
        let sup = f.sup_norm().ok_or_else(|| invalid("time integrals of T(t)f need a bounded field or a polynomial"))?;
        let cs = c_unchecked(self.params.split);
        sing[0] = Singularity { beta: 0.0, bound: sup };
        tail[0] = sup;
        let grad_sup = if c1 { f.grad_sup() } else { None };
        let holder = Self::holder_data(f);
        if order >= Order::Gradient {
            (sing[1], tail[1]) = match (grad_sup, holder) {
                (Some(gs), _) => (Singularity { beta: 0.0, bound: gs }, gs),
                (None, Some((a, n))) => {
                    let k = HolderConstants::derive(a)?;
                    (Singularity { beta: (1.0 - a) / 2.0, bound: k.c1 * n }, cs * sup)
                }
                (None, None) => (Singularity { beta: 0.5, bound: c0() * sup }, cs * sup),
            };
        }
        if order >= Order::Hessian {
            (sing[2], tail[2]) = match (grad_sup, holder) {
                (Some(gs), _) => (Singularity { beta: 0.5, bound: c0() * gs }, cs * gs),
                (None, Some((a, n))) => {
                    let k = HolderConstants::derive(a)?;
                    (Singularity { beta: 1.0 - a / 2.0, bound: k.c2 * n }, 2.0 * cs * cs * sup)
                }
                (None, None) => {
                    return Err(invalid(
                        "second H-derivatives of time integrals need Hölder or C¹ data; bounded data give a divergent integral",
                    ))
                }
            };
        }
        if order >= Order::Third {
            return Err(invalid("time integrals are available up to second derivatives"));
        }
        Ok(Plan { order, c1, sing, tail })
    }

    fn eval(&self, f: &ScalarField, t: f64, x: &DVector<f64>, order: Order, c1: bool) -> Result<SemigroupEvaluation> {
        if c1 && order > Order::Value {
            self.mehler.evaluate_c1(f, t, x, order)
        } else {
            self.mehler.evaluate(f, t, x, order)
        }
    }

    /// `∫ weight(t) Σ_i coef_i D^k T(t)f(x_i) dt` over `mesh`.
    fn combination(
        &self,
        f: &ScalarField,
        terms: &[(f64, &DVector<f64>)],
        plan: &Plan,
        mesh: &TimeMesh,
        weight: impl Fn(f64) -> f64,
    ) -> Result<Resolved> {
        let r = self.mehler.model().rank();
        let order = plan.order;
        let len = pack_len(r, order);
        let mut buf = vec![0.0; len];
        let mut ebuf = vec![0.0; len];
        let (total, quad, inner) = mesh.integrate(len, |t| {
            let w = weight(t);
            let mut v = vec![0.0; len];
            let mut e = vec![0.0; len];
            for &(c, x) in terms {
                let ev = self.eval(f, t, x, order, plan.c1)?;
                pack(&ev, r, order, &mut buf);
                pack_err(&ev, r, order, &mut ebuf);
                for j in 0..len {
                    v[j] += w * c * buf[j];
                    e[j] += (w * c).abs() * ebuf[j];
                }
            }
            Ok((v, e))
        })?;
        Ok(unpack(&total, [&inner, &quad], r, order, mesh.len() * terms.len()))
    }

    /// `R(λ, L)f(x)` and, up to `order`, its H-derivatives
    /// `∫₀^∞ e^{-λt} D^k_H T(t)f(x) dt`.
    pub fn resolvent(&self, f: &ScalarField, lambda: f64, x: &DVector<f64>, order: Order) -> Result<Resolved> {
        self.resolvent_combination(f, lambda, &[(1.0, x)], order)
    }

    /// The resolvent applied to a finite difference `Σ coef_i u(x_i)`.
    pub fn resolvent_combination(&self, f: &ScalarField, lambda: f64, terms: &[(f64, &DVector<f64>)], order: Order) -> Result<Resolved> {
        check_lambda(lambda)?;
        let plan = self.plan(f, terms[0].1, order)?;
        let t_min = plan.t_min(self.params.rel_tol);
        let mesh = TimeMesh::laplace(lambda, t_min, &self.params);
        let mut out = self.combination(f, terms, &plan, &mesh, |t| (-lambda * t).exp())?;
        let scale: f64 = terms.iter().map(|(c, _)| c.abs()).sum();
        let decay = (-lambda * mesh.t_max).exp() / lambda;
        for k in 0..=order as usize {
            out.err[k] += scale * (plan.sing[k].head(t_min) + plan.tail[k] * decay);
        }
        Ok(out)
    }

    /// `T(τ)R(λ, L)f(x) = e^{λτ} ∫_τ^∞ e^{-λs} T(s)f(x) ds`.
    pub fn shifted_resolvent(&self, f: &ScalarField, lambda: f64, tau: f64, x: &DVector<f64>, order: Order) -> Result<Resolved> {
        if tau == 0.0 {
            return self.resolvent(f, lambda, x, order);
        }
        if !(tau > 0.0) {
            return Err(invalid(format!("shift must be nonnegative (got {tau})")));
        }
        check_lambda(lambda)?;
        let plan = self.plan(f, x, order)?;
        let mesh = TimeMesh::laplace_from(lambda, tau, &self.params);
        let mut out = self.combination(f, &[(1.0, x)], &plan, &mesh, |s| (-lambda * (s - tau)).exp())?;
        let decay = (-lambda * (mesh.t_max - tau)).exp() / lambda;
        for k in 0..=order as usize {
            out.err[k] += plan.tail[k].max(plan.sing[k].bound) * decay;
        }
        Ok(out)
    }

    /// Splits `∫₀^∞ e^{-λt} Σ coef_i D^k T(t)f(x_i) dt` at `cut`.
    pub fn split_combination(
        &self,
        f: &ScalarField,
        lambda: f64,
        terms: &[(f64, &DVector<f64>)],
        order: Order,
        cut: f64,
    ) -> Result<SplitParts> {
        check_lambda(lambda)?;
        if !(cut > 0.0) {
            return Err(invalid(format!("split point must be positive (got {cut})")));
        }
        let plan = self.plan(f, terms[0].1, order)?;
        let t_min = plan.t_min(self.params.rel_tol).min(0.5 * cut);
        let head_mesh = TimeMesh::interval(cut, t_min, &MeshParams { split: cut, ..self.params });
        let mut head = self.combination(f, terms, &plan, &head_mesh, |t| (-lambda * t).exp())?;
        let tail_mesh = TimeMesh::laplace_from(lambda, cut, &self.params);
        let mut tail = self.combination(f, terms, &plan, &tail_mesh, |t| (-lambda * t).exp())?;
        let scale: f64 = terms.iter().map(|(c, _)| c.abs()).sum();
        let decay = (-lambda * tail_mesh.t_max).exp() / lambda;
        for k in 0..=order as usize {
            head.err[k] += scale * plan.sing[k].head(t_min);
            tail.err[k] += scale * plan.tail[k].max(plan.sing[k].bound) * decay;
        }
        Ok(SplitParts { cut, head, tail })
    }

    /// Mild solution `v(t, x) = T(t)f(x) + ∫₀^t T(s)g(t - s, ·)(x) ds` with
    /// H-derivatives up to `order`.
    pub fn mild(&self, f: &ScalarField, g: &TimeField, t: f64, x: &DVector<f64>, order: Order) -> Result<Resolved> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(invalid(format!("time must be finite and nonnegative (got {t})")));
        }
        if order >= Order::Third {
            return Err(invalid("mild solutions are available up to second derivatives"));
        }
        let r = self.mehler.model().rank();
        let mut out = if t == 0.0 {
            let mut o = Resolved { value: f.eval(x), grad: None, hess: None, err: [0.0; 3], nodes: 0 };
            if order >= Order::Gradient {
                o.grad = Some(f.h_gradient(x).ok_or(Error::MissingMetadata("closed-form H-gradient"))?);
            }
            if order >= Order::Hessian {
                o.hess = Some(f.h_hessian(x).ok_or(Error::MissingMetadata("closed-form H-Hessian"))?);
            }
            return Ok(o);
        } else {
            let e = self.eval(f, t, x, order, f.has_h_gradient())?;
            let len = pack_len(r, order);
            let (mut v, mut er) = (vec![0.0; len], vec![0.0; len]);
            pack(&e, r, order, &mut v);
            pack_err(&e, r, order, &mut er);
            unpack(&v, [&er, &vec![0.0; len]], r, order, 1)
        };
        for (psi, fi) in &g.terms {
            let plan = self.plan(fi, x, order)?;
            let t_min = plan.t_min(self.params.rel_tol).min(0.5 * t);
            let mesh = TimeMesh::interval(t, t_min, &self.params);
            let mut part = self.combination(fi, &[(1.0, x)], &plan, &mesh, |s| psi.eval(t - s))?;
            for k in 0..=order as usize {
                part.err[k] += psi.sup_abs() * plan.sing[k].head(t_min);
            }
            out.add(&part, 1.0);
        }
        Ok(out)
    }

    /// `R(λ, L)f` for a ridge field `f = φ(⟨z,·⟩)` is again a ridge, `ψ(⟨z,·⟩)`.
    /// Tabulates `ψ` and `ψ'` at `knots` and interpolates with cubic Hermite
    /// pieces; outside the knots `ψ` is evaluated directly. Ridges constant
    /// along H are evaluated directly everywhere.
    pub fn resolvent_ridge(&self, f: &ScalarField, lambda: f64, knots: &[f64]) -> Result<ScalarField> {
        let rd = f.as_ridge().ok_or_else(|| invalid("resolvent_ridge needs a ridge field"))?;
        check_lambda(lambda)?;
        let sup = f.sup_norm().map(|s| s / lambda);
        let z = rd.direction.clone();
        let zz = z.norm_squared();
        let nv = rd.h_norm();
        let model = self.mehler.model().clone();
        let solver = self.clone();
        let field = f.clone();
        let at = move |u: f64| &z * (u / zz);
        let direct = {
            let at = at.clone();
            move |u: f64| solver.resolvent(&field, lambda, &at(u), Order::Value).map_or(f64::NAN, |r| r.value)
        };
        let label = format!("R({lambda})[{}]", rd.profile.label());
        let profile = if nv == 0.0 {
            CustomProfile::new(label, Vec::new(), sup, direct)
        } else {
            let mut ks: Vec<f64> = knots.to_vec();
            ks.sort_by(|a, b| a.total_cmp(b));
            ks.dedup();
            if ks.len() < 2 {
                return Err(invalid("resolvent_ridge needs at least two knots"));
            }
            let v2 = nv * nv;
            let mut table = Vec::with_capacity(ks.len());
            for &u in &ks {
                let r = self.resolvent(f, lambda, &at(u), Order::Gradient)?;
                let slope = r.grad.as_ref().map_or(0.0, |g| g.dot(&rd.whitened) / v2);
                table.push((u, r.value, slope));
            }
            let bps = ks.clone();
            CustomProfile::new(label, bps, sup, move |u: f64| {
                if u < table[0].0 || u > table[table.len() - 1].0 {
                    return direct(u);
                }
                let i = table.partition_point(|e| e.0 <= u).clamp(1, table.len() - 1);
                let (x0, y0, d0) = table[i - 1];
                let (x1, y1, d1) = table[i];
                let h = x1 - x0;
                let s = (u - x0) / h;
                let (s2, s3) = (s * s, s * s * s);
                (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1
            })
        };
        ScalarField::ridge(&model, rd.direction.clone(), Profile::Custom(profile))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("λ must be positive (got {lambda})")))
    }
}

/// Knots for [`Solver::resolvent_ridge`]: spacing `fine` on `[-1.5, 1.5]`,
/// `coarse` out to `±6`, and unit spacing out to `±reach`.
pub fn ridge_knots(fine: f64, coarse: f64, reach: f64) -> Vec<f64> {
    let mut ks = Vec::new();
    let mut push_range = |a: f64, b: f64, h: f64| {
        let n = ((b - a) / h).round().max(1.0) as usize;
        for i in 0..=n {
            ks.push(a + (b - a) * i as f64 / n as f64);
        }
    };
    let reach = reach.max(6.0);
    push_range(-reach, -6.0, 1.0);
    push_range(-6.0, -1.5, coarse);
    push_range(-1.5, 1.5, fine);
    push_range(1.5, 6.0, coarse);
    push_range(6.0, reach, 1.0);
    ks.sort_by(|a, b| a.total_cmp(b));
    ks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    ks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Modulation;
    use crate::gaussian::{CovarianceModel, QuadratureSpec};
    use crate::quadrature::adaptive;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn solver(m: &CovarianceModel) -> Solver {
        let me = Arc::new(Mehler::new(m.clone(), QuadratureSpec::default()).unwrap());
        Solver::new(me, MeshParams::default()).unwrap()
    }

    #[test]
    fn mesh_integrates_singular_powers() {
        // ∫₀^∞ e^{-t} t^{-β} dt = Γ(1 - β).
        let p = MeshParams::default();
        for &beta in &[0.0, 0.25, 0.5, 0.85] {
            let s = Singularity { beta, bound: 1.0 };
            let t_min = s.cut(p.rel_tol);
            let mesh = TimeMesh::laplace(1.0, t_min, &p);
            let (val, err, _) = mesh.integrate(1, |t| Ok((vec![(-t).exp() * t.powf(-beta)], vec![0.0]))).unwrap();
            let exact = statrs::function::gamma::gamma(1.0 - beta);
            // t^{-β} ≤ 1 past t = 1, so the dropped tail is at most e^{-T}.
            let total_err = err[0] + s.head(t_min) + (-mesh.t_max).exp();
            assert!((val[0] - exact).abs() <= total_err + 1e-12, "beta={beta}: {} vs {exact}", val[0]);
            assert!((val[0] - exact).abs() < 1e-8 * exact, "beta={beta}");
        }
    }

    #[test]
    fn closed_form_resolvents() {
        let m = CovarianceModel::diagonal(&[4.0, 1.0]).unwrap();
        let s = solver(&m);
        let x = v(&[0.7, -1.2]);
        for &lam in &[0.5, 1.0, 2.0] {
            let one = ScalarField::constant(&m, 1.0);
            let r = s.resolvent(&one, lam, &x, Order::Hessian).unwrap();
            assert!((r.value - 1.0 / lam).abs() < 1e-8 / lam);
            assert!(r.grad_norm() == 0.0 && r.hess_norm() == 0.0);

            let a = v(&[1.0, 0.0]);
            let lin = ScalarField::linear(&m, a.clone()).unwrap();
            let r = s.resolvent(&lin, lam, &x, Order::Hessian).unwrap();
            assert!((r.value - 0.7 / (lam + 1.0)).abs() < 1e-8 * 0.7 / (lam + 1.0));
            let g = r.grad.unwrap();
            assert!((g - v(&[2.0 / (lam + 1.0), 0.0])).norm() < 1e-8);

            // R(λ)⟨a,·⟩² = ⟨a,x⟩²/(λ+2) + |Q^{1/2}a|²(1/λ - 1/(λ+2)).
            let q = ScalarField::quadratic(&m, a).unwrap();
            let r = s.resolvent(&q, lam, &x, Order::Hessian).unwrap();
            let want = 0.49 / (lam + 2.0) + 4.0 * (1.0 / lam - 1.0 / (lam + 2.0));
            assert!((r.value - want).abs() < 1e-8 * want, "{} vs {want}", r.value);
            let w = v(&[2.0, 0.0]);
            let hess = &w * w.transpose() * (2.0 / (lam + 2.0));
            assert!((r.hess.unwrap() - hess).norm() < 1e-8 * 8.0);
        }
    }

    #[test]
    fn resolvent_matches_direct_laplace_transform() {
        let m = CovarianceModel::diagonal(&[4.0, 1.0, 0.0]).unwrap();
        let s = solver(&m);
        let f = ScalarField::ridge(&m, v(&[1.0, 0.0, 0.0]), Profile::abs_clip_pow(0.5).unwrap()).unwrap();
        let x = v(&[0.05, 0.3, 0.0]);
        let r = s.resolvent(&f, 1.0, &x, Order::Value).unwrap();
        // Independent route: adaptive quadrature of e^{-t} T(t)f(x) in t.
        let me = s.mehler();
        let g = |t: f64| (-t).exp() * me.apply(&f, t.max(1e-300), &x).unwrap().0;
        let head = adaptive(g, 0.0, 1.0, 1e-13, 1e-12, 2000).unwrap();
        let tail = adaptive(g, 1.0, 40.0, 1e-13, 1e-12, 2000).unwrap();
        assert!((r.value - head.value - tail.value).abs() < 1e-9, "{} vs {}", r.value, head.value + tail.value);
        assert!(r.err[0] < 1e-7);
    }

    #[test]
    fn hessian_needs_holder_data() {
        let m = CovarianceModel::diagonal(&[4.0, 1.0]).unwrap();
        let s = solver(&m);
        let clipped_sign = Profile::Custom(CustomProfile::new("step", vec![0.0], Some(1.0), |u: f64| if u > 0.0 { 1.0 } else { 0.0 }));
        let f = ScalarField::ridge(&m, v(&[1.0, 0.0]), clipped_sign).unwrap();
        assert!(s.resolvent(&f, 1.0, &v(&[0.1, 0.0]), Order::Gradient).is_ok());
        assert!(s.resolvent(&f, 1.0, &v(&[0.1, 0.0]), Order::Hessian).is_err());
        assert!(s.resolvent(&f, 0.0, &v(&[0.1, 0.0]), Order::Value).is_err());
    }

    #[test]
    fn mild_solution_closed_forms() {
        let m = CovarianceModel::diagonal(&[4.0, 1.0]).unwrap();
        let s = solver(&m);
        let x = v(&[0.8, 0.4]);
        let zero = ScalarField::constant(&m, 0.0);
        let one = ScalarField::constant(&m, 1.0);
        let a = v(&[1.0, 0.0]);
        let lin = ScalarField::linear(&m, a.clone()).unwrap();
        let f = ScalarField::ridge(&m, v(&[0.3, 0.9]), Profile::sin(1.5).unwrap()).unwrap();
        for &t in &[0.0, 0.3, 1.0, 2.5] {
            let r = s.mild(&f, &TimeField::zero(), t, &x, Order::Value).unwrap();
            assert!((r.value - s.mehler().apply(&f, t, &x).unwrap().0).abs() < 1e-14);
            let g = TimeField::separable(Modulation::Constant(1.0), one.clone()).unwrap();
            let r = s.mild(&zero, &g, t, &x, Order::Value).unwrap();
            assert!((r.value - t).abs() < 1e-8 * t.max(1e-300) + 1e-15);
            let g = TimeField::separable(Modulation::Constant(1.0), lin.clone()).unwrap();
            let r = s.mild(&zero, &g, t, &x, Order::Value).unwrap();
            let want = 0.8 * (1.0 - (-t).exp());
            assert!((r.value - want).abs() < 1e-8 * want.max(1e-300) + 1e-15, "{} vs {want}", r.value);
        }
        let q = ScalarField::quadratic(&m, a).unwrap();
        let r = s.mild(&q, &TimeField::zero(), 1.0, &x, Order::Hessian).unwrap();
        let w = v(&[2.0, 0.0]);
        assert!((r.hess.unwrap() - &w * w.transpose() * (2.0 * (-2f64).exp())).norm() < 1e-12);
        let r0 = s.mild(&q, &TimeField::zero(), 0.0, &x, Order::Hessian).unwrap();
        assert_eq!(r0.hess.unwrap(), q.h_hessian(&x).unwrap());
    }

    #[test]
    fn ridge_knots_are_sorted() {
        let k = ridge_knots(0.01, 0.1, 20.0);
        assert!(k.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(k[0], -20.0);
        assert_eq!(*k.last().unwrap(), 20.0);
    }
}
