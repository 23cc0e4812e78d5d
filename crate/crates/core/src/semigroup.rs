//! The Mehler semigroup `T(t)f(x) = ∫ f(e^{-t}x + sqrt(1 - e^{-2t}) y) γ(dy)`
//! and its H-derivatives up to order three.
//!
//! Two families of representation formulas are provided. For bounded data the
//! derivatives are Gaussian integrals of `f` against Hermite-type weights
//! (`ĥ`, `ĥk̂ - ⟨h,k⟩_H`, ...) scaled by powers of `c(t)`. For data with an
//! H-gradient, one derivative is moved onto `f`, which lowers the power of
//! `c(t)` by one and makes the gradient formula valid at `t = 0`.
//!
//! Ridge fields are integrated through their one-dimensional Hermite moments;
//! every other field goes through the `r`-dimensional [`GaussianRule`].

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::constants::{c_unchecked, noise_scale};
use crate::error::{invalid, Error, Result};
use crate::fields::{FieldKind, ScalarField};
use crate::gaussian::{CovarianceModel, EngineKind, GaussianRule, QuadratureSpec};
use crate::profile::{DerivativeOf, Profile1d};
use crate::ridge::RidgeIntegrator;
use crate::tensor::Tensor3;

/// Highest derivative requested from an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value = 0,
    Gradient = 1,
    Hessian = 2,
    Third = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Closed form (t = 0, or a ridge that is constant along H).
    Exact,
    /// One-dimensional Hermite moments of a ridge profile.
    Ridge,
    Gaussian(EngineKind),
}

/// `T(t)f(x)` with H-derivatives in whitened coordinates.
#[derive(Debug, Clone)]
pub struct SemigroupEvaluation {
    pub t: f64,
    pub value: f64,
    pub grad: Option<DVector<f64>>,
    pub hess: Option<DMatrix<f64>>,
    pub d3: Option<Tensor3>,
    /// Integration-error estimates for the value and for the norms of the
    /// gradient, Hessian and third derivative.
    pub err: [f64; 4],
    pub engine: Engine,
}

impl SemigroupEvaluation {
    fn exact(t: f64, value: f64) -> Self {
        Self { t, value, grad: None, hess: None, d3: None, err: [0.0; 4], engine: Engine::Exact }
    }

    fn zero_derivatives(mut self, r: usize, order: Order) -> Self {
        if order >= Order::Gradient {
            self.grad = Some(DVector::zeros(r));
        }
        if order >= Order::Hessian {
            self.hess = Some(DMatrix::zeros(r, r));
        }
        if order >= Order::Third {
            self.d3 = Some(Tensor3::zeros(r));
        }
        self
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad.as_ref().map_or(0.0, |g| g.norm())
    }

    pub fn hess_norm(&self) -> f64 {
        self.hess.as_ref().map_or(0.0, crate::tensor::sym_norm)
    }

    pub fn d3_norm(&self) -> f64 {
        self.d3.as_ref().map_or(0.0, |t| t.norm())
    }
}

/// Evaluator bound to one covariance model and quadrature configuration.
#[derive(Debug)]
pub struct Mehler {
    model: CovarianceModel,
    spec: QuadratureSpec,
    ridge: RidgeIntegrator,
    rule: OnceLock<GaussianRule>,
}

/// Index layout of the packed symmetric components in the generic engine.
struct Layout {
    r: usize,
    pairs: Vec<(usize, usize)>,
    triples: Vec<(usize, usize, usize)>,
}

impl Layout {
    fn new(r: usize, order: Order) -> Self {
        let mut pairs = Vec::new();
        let mut triples = Vec::new();
        if order >= Order::Hessian {
            for i in 0..r {
                for j in i..r {
                    pairs.push((i, j));
                }
            }
        }
        if order >= Order::Third {
            for i in 0..r {
                for j in i..r {
                    for k in j..r {
                        triples.push((i, j, k));
                    }
                }
            }
        }
        Self { r, pairs, triples }
    }

    fn grad_len(&self, order: Order) -> usize {
        if order >= Order::Gradient {
            self.r
        } else {
            0
        }
    }
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

fn unpack_matrix(r: usize, pairs: &[(usize, usize)], vals: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(r, r);
    for (&(i, j), &v) in pairs.iter().zip(vals) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    m
}

fn unpack_tensor(r: usize, triples: &[(usize, usize, usize)], vals: &[f64]) -> Tensor3 {
    let mut data = vec![0.0; r * r * r];
    for (&(i, j, k), &v) in triples.iter().zip(vals) {
        for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
            data[(a * r + b) * r + c] = v;
        }
    }
    Tensor3::from_fn(r, |a, b, c| data[(a * r + b) * r + c])
}

fn rss(v: &[f64]) -> f64 {
    v.iter().map(|e| e * e).sum::<f64>().sqrt()
}

impl Mehler {
    pub fn new(model: CovarianceModel, spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { model, spec, ridge: RidgeIntegrator::new()?, rule: OnceLock::new() })
    }

    pub fn model(&self) -> &CovarianceModel {
        &self.model
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// The node set of the generic engine, built on first use.
    pub fn rule(&self) -> Result<&GaussianRule> {
        if let Some(r) = self.rule.get() {
            return Ok(r);
        }
        let rule = GaussianRule::new(self.model.rank(), &self.spec, 0x6d65_686c)?;
        Ok(self.rule.get_or_init(|| rule))
    }

    fn check(&self, f: &ScalarField, t: f64, x: &DVector<f64>) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(invalid(format!("time must be finite and nonnegative (got {t})")));
        }
        if f.dim() != self.model.dim() {
            return Err(Error::DimensionMismatch { expected: self.model.dim(), got: f.dim() });
        }
        self.model.check_dim(x)
    }

    /// `T(t)f(x)` and its integration-error estimate.
    pub fn apply(&self, f: &ScalarField, t: f64, x: &DVector<f64>) -> Result<(f64, f64)> {
        let e = self.evaluate(f, t, x, Order::Value)?;
        Ok((e.value, e.err[0]))
    }

    /// Bounded-data formulas: `⟨∇_H T(t)f(x), h⟩_H = c(t) ∫ f(·) ĥ dγ` and its
    /// second and third order analogues. Derivatives need `t > 0`.
    pub fn evaluate(&self, f: &ScalarField, t: f64, x: &DVector<f64>, order: Order) -> Result<SemigroupEvaluation> {
        self.check(f, t, x)?;
        if t == 0.0 {
            if order > Order::Value {
                return Err(invalid("H-derivatives of T(t)f for bounded data need t > 0"));
            }
            return Ok(SemigroupEvaluation::exact(0.0, f.eval(x)));
        }
        let r = self.model.rank();
        let decay = (-t).exp();
        match f.kind() {
            FieldKind::Constant(c) => Ok(SemigroupEvaluation::exact(t, *c).zero_derivatives(r, order)),
            FieldKind::Ridge(rd) if self.spec.ridge_reduction => {
                let m = decay * rd.argument(x);
                let nv = rd.h_norm();
                if nv == 0.0 {
                    return Ok(SemigroupEvaluation::exact(t, rd.profile.value(m)).zero_derivatives(r, order));
                }
                let w = noise_scale(t) * nv;
                let mom = self.ridge.moments(&rd.profile, m, w, order as usize)?;
                let c = c_unchecked(t);
                let vhat = &rd.whitened / nv;
                let mut out = SemigroupEvaluation {
                    t,
                    value: rd.profile.value(m) + mom.m[0],
                    grad: None,
                    hess: None,
                    d3: None,
                    err: [mom.err[0], c * mom.err[1], c * c * mom.err[2], c.powi(3) * mom.err[3]],
                    engine: Engine::Ridge,
                };
                if order >= Order::Gradient {
                    out.grad = Some(&vhat * (c * mom.m[1]));
                }
                if order >= Order::Hessian {
                    out.hess = Some(&vhat * vhat.transpose() * (c * c * mom.m[2]));
                }
                if order >= Order::Third {
                    out.d3 = Some(Tensor3::rank_one(&vhat, c.powi(3) * mom.m[3]));
                }
                Ok(out)
            }
            _ => self.generic(f, t, x, order),
        }
    }

    fn generic(&self, f: &ScalarField, t: f64, x: &DVector<f64>, order: Order) -> Result<SemigroupEvaluation> {
        let rule = self.rule()?;
        let r = self.model.rank();
        let decay = (-t).exp();
        let sigma = noise_scale(t);
        let center = x * decay;
        let f0 = f.eval(&center);
        let lay = Layout::new(r, order);
        let ng = lay.grad_len(order);
        let len = 1 + ng + lay.pairs.len() + lay.triples.len();
        let color = self.model.color_map();
        let mut point = center.clone();
        let res = rule.integrate(len, |xi, out| {
            point.copy_from(&center);
            point.gemv(sigma, color, &DVector::from_column_slice(xi), 1.0);
            let g = f.eval(&point) - f0;
            out[0] = g;
            for i in 0..ng {
                out[1 + i] = g * xi[i];
            }
            let base = 1 + ng;
            for (p, &(i, j)) in lay.pairs.iter().enumerate() {
                out[base + p] = g * (xi[i] * xi[j] - delta(i, j));
            }
            let base = base + lay.pairs.len();
            for (p, &(i, j, k)) in lay.triples.iter().enumerate() {
                out[base + p] = g * (xi[i] * xi[j] * xi[k] - xi[i] * delta(j, k) - xi[j] * delta(i, k) - xi[k] * delta(i, j));
            }
        });
        let c = c_unchecked(t);
        let mut out = SemigroupEvaluation {
            t,
            value: f0 + res.value[0],
            grad: None,
            hess: None,
            d3: None,
            err: [res.err[0], 0.0, 0.0, 0.0],
            engine: Engine::Gaussian(rule.kind()),
        };
        if order >= Order::Gradient {
            out.grad = Some(DVector::from_column_slice(&res.value[1..1 + ng]) * c);
            out.err[1] = c * rss(&res.err[1..1 + ng]);
        }
        let base = 1 + ng;
        if order >= Order::Hessian {
            let n = lay.pairs.len();
            out.hess = Some(unpack_matrix(r, &lay.pairs, &res.value[base..base + n]) * (c * c));
            let e = unpack_matrix(r, &lay.pairs, &res.err[base..base + n]);
            out.err[2] = c * c * e.norm();
        }
        if order >= Order::Third {
            let base = base + lay.pairs.len();
            let n = lay.triples.len();
            let c3 = c.powi(3);
            out.d3 = Some(unpack_tensor(r, &lay.triples, &res.value[base..base + n]).scale(c3));
            out.err[3] = c3 * unpack_tensor(r, &lay.triples, &res.err[base..base + n]).frobenius();
        }
        Ok(out)
    }

    /// Formulas for data with an H-gradient:
    /// `⟨∇_H T(t)f(x), h⟩_H = e^{-t} ∫ ⟨∇_H f(·), h⟩_H dγ`, with one more `k̂` (resp.
    /// `k̂l̂ - ⟨k,l⟩_H`) and a factor `c(t)` (resp. `c(t)²`) for the higher orders.
    /// At `t = 0` the gradient and Hessian come from the field's metadata.
    pub fn evaluate_c1(&self, f: &ScalarField, t: f64, x: &DVector<f64>, order: Order) -> Result<SemigroupEvaluation> {
        self.check(f, t, x)?;
        let r = self.model.rank();
        if f.h_gradient(x).is_none() {
            return Err(Error::MissingMetadata("closed-form H-gradient"));
        }
        if t == 0.0 {
            let mut out = SemigroupEvaluation::exact(0.0, f.eval(x));
            if order >= Order::Gradient {
                out.grad = f.h_gradient(x);
            }
            if order >= Order::Hessian {
                out.hess = Some(f.h_hessian(x).ok_or(Error::MissingMetadata("closed-form H-Hessian"))?);
            }
            if order >= Order::Third {
                return Err(invalid("third H-derivative at t = 0 needs C³ data"));
            }
            return Ok(out);
        }
        let decay = (-t).exp();
        match f.kind() {
            FieldKind::Constant(c) => Ok(SemigroupEvaluation::exact(t, *c).zero_derivatives(r, order)),
            FieldKind::Ridge(rd) if self.spec.ridge_reduction => {
                let m = decay * rd.argument(x);
                let nv = rd.h_norm();
                if nv == 0.0 {
                    return Ok(SemigroupEvaluation::exact(t, rd.profile.value(m)).zero_derivatives(r, order));
                }
                let w = noise_scale(t) * nv;
                let c = c_unchecked(t);
                let vhat = &rd.whitened / nv;
                let value = self.ridge.moments(&rd.profile, m, w, 0)?;
                let kmax = (order as usize).saturating_sub(1);
                let d = DerivativeOf(&rd.profile);
                let dm = rd.profile.derivative(m).ok_or(Error::MissingMetadata("profile derivative"))?;
                let j = self.ridge.moments(&d, m, w, kmax)?;
                let mut out = SemigroupEvaluation {
                    t,
                    value: rd.profile.value(m) + value.m[0],
                    grad: None,
                    hess: None,
                    d3: None,
                    err: [value.err[0], decay * nv * j.err[0], decay * c * nv * j.err[1], decay * c * c * nv * j.err[2]],
                    engine: Engine::Ridge,
                };
                if order >= Order::Gradient {
                    out.grad = Some(&rd.whitened * (decay * (dm + j.m[0])));
                }
                if order >= Order::Hessian {
                    out.hess = Some(&vhat * vhat.transpose() * (decay * c * nv * j.m[1]));
                }
                if order >= Order::Third {
                    out.d3 = Some(Tensor3::rank_one(&vhat, decay * c * c * nv * j.m[2]));
                }
                Ok(out)
            }
            _ => self.generic_c1(f, t, x, order),
        }
    }

    fn generic_c1(&self, f: &ScalarField, t: f64, x: &DVector<f64>, order: Order) -> Result<SemigroupEvaluation> {
        let rule = self.rule()?;
        let r = self.model.rank();
        let decay = (-t).exp();
        let sigma = noise_scale(t);
        let center = x * decay;
        let f0 = f.eval(&center);
        let g0 = f.h_gradient(&center).ok_or(Error::MissingMetadata("closed-form H-gradient"))?;
        let ng = if order >= Order::Gradient { r } else { 0 };
        let nh = if order >= Order::Hessian { r * r } else { 0 };
        let nt = if order >= Order::Third { r * r * r } else { 0 };
        let len = 1 + ng + nh + nt;
        let color = self.model.color_map();
        let mut point = center.clone();
        let mut missing = false;
        let res = rule.integrate(len, |xi, out| {
            point.copy_from(&center);
            point.gemv(sigma, color, &DVector::from_column_slice(xi), 1.0);
            out[0] = f.eval(&point) - f0;
            if ng == 0 {
                return;
            }
            let Some(g) = f.h_gradient(&point) else {
                missing = true;
                return;
            };
            for i in 0..r {
                let gi = g[i] - g0[i];
                out[1 + i] = gi;
                for j in 0..(if nh > 0 { r } else { 0 }) {
                    out[1 + ng + i * r + j] = gi * xi[j];
                    for k in 0..(if nt > 0 { r } else { 0 }) {
                        out[1 + ng + nh + (i * r + j) * r + k] = gi * (xi[j] * xi[k] - delta(j, k));
                    }
                }
            }
        });
        if missing {
            return Err(Error::MissingMetadata("closed-form H-gradient"));
        }
        let c = c_unchecked(t);
        let mut out = SemigroupEvaluation {
            t,
            value: f0 + res.value[0],
            grad: None,
            hess: None,
            d3: None,
            err: [res.err[0], 0.0, 0.0, 0.0],
            engine: Engine::Gaussian(rule.kind()),
        };
        if ng > 0 {
            let mean = DVector::from_column_slice(&res.value[1..1 + r]);
            out.grad = Some((mean + g0) * decay);
            out.err[1] = decay * rss(&res.err[1..1 + r]);
        }
        if nh > 0 {
            let raw = DMatrix::from_row_slice(r, r, &res.value[1 + ng..1 + ng + nh]);
            out.hess = Some(crate::tensor::symmetrize(&raw) * (decay * c));
            out.err[2] = decay * c * rss(&res.err[1 + ng..1 + ng + nh]);
        }
        if nt > 0 {
            let base = 1 + ng + nh;
            let raw = Tensor3::from_fn(r, |i, j, k| res.value[base + (i * r + j) * r + k]);
            out.d3 = Some(raw.symmetrized().scale(decay * c * c));
            out.err[3] = decay * c * c * rss(&res.err[base..base + nt]);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;

    fn demo() -> CovarianceModel {
        CovarianceModel::diagonal(&[4.0, 1.0, 0.0]).unwrap()
    }

    fn mehler(m: CovarianceModel, ridge: bool) -> Mehler {
        Mehler::new(m, QuadratureSpec { ridge_reduction: ridge, ..Default::default() }).unwrap()
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn closed_forms_on_polynomials() {
        let m = CovarianceModel::diagonal(&[4.0, 1.0]).unwrap();
        let me = mehler(m.clone(), true);
        let a = v(&[1.0, 0.0]);
        let x = v(&[1.0, 0.0]);
        let lin = ScalarField::linear(&m, a.clone()).unwrap();
        for &t in &[0.1, 1.0, 3.0] {
            let e = me.evaluate(&lin, t, &x, Order::Third).unwrap();
            assert!((e.value - (-t).exp()).abs() < 1e-13);
            let g = e.grad.unwrap();
            assert!((g - v(&[2.0 * (-t).exp(), 0.0])).norm() < 1e-12);
            assert!(e.hess.unwrap().norm() < 1e-12);
        }
        // e^{-2}·1 + (1 - e^{-2})·4.
        let q = ScalarField::quadratic(&m, a).unwrap();
        let e = me.evaluate(&q, 1.0, &x, Order::Third).unwrap();
        let want = (-2f64).exp() + (1.0 - (-2f64).exp()) * 4.0;
        assert!((e.value - want).abs() < 1e-12 * want);
        assert!((e.value - 3.593994150290162).abs() < 1e-12);
        let w = v(&[2.0, 0.0]);
        let hess = &w * w.transpose() * (2.0 * (-2f64).exp());
        assert!((e.hess.unwrap() - hess).norm() < 1e-12);
        assert!(e.d3.unwrap().frobenius() < 1e-12);
    }

    #[test]
    fn constants_have_zero_derivatives() {
        let m = demo();
        let me = mehler(m.clone(), true);
        let one = ScalarField::constant(&m, 1.0);
        let e = me.evaluate(&one, 0.4, &v(&[1.0, 2.0, 3.0]), Order::Third).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.grad_norm() + e.hess_norm() + e.d3_norm(), 0.0);
    }

    #[test]
    fn ridge_reduction_agrees_with_generic_engine() {
        let m = demo();
        let fast = mehler(m.clone(), true);
        let slow = mehler(m.clone(), false);
        let fields = [
            ScalarField::ridge(&m, v(&[0.6, 0.8, 0.0]), Profile::sin(1.5).unwrap()).unwrap(),
            ScalarField::ridge(&m, v(&[0.5, 0.5, 0.0]), Profile::SmoothBump).unwrap(),
            ScalarField::ridge(&m, v(&[0.3, -0.4, 1.0]), Profile::sin(0.7).unwrap()).unwrap(),
        ];
        let x = v(&[0.3, -0.5, 0.2]);
        for f in &fields {
            for &t in &[0.2, 1.0, 2.5] {
                let a = fast.evaluate(f, t, &x, Order::Third).unwrap();
                let b = slow.evaluate(f, t, &x, Order::Third).unwrap();
                assert!((a.value - b.value).abs() < 1e-10);
                assert!((a.grad.as_ref().unwrap() - b.grad.as_ref().unwrap()).norm() < 1e-9);
                assert!((a.hess.as_ref().unwrap() - b.hess.as_ref().unwrap()).norm() < 1e-8);
                let mut diff = a.d3.clone().unwrap();
                diff.axpy(-1.0, b.d3.as_ref().unwrap());
                assert!(diff.frobenius() < 1e-7 * (1.0 + a.d3_norm()), "{}", diff.frobenius());
                let ac = fast.evaluate_c1(f, t, &x, Order::Third).unwrap();
                let bc = slow.evaluate_c1(f, t, &x, Order::Third).unwrap();
                assert!((ac.grad.as_ref().unwrap() - bc.grad.as_ref().unwrap()).norm() < 1e-9);
                assert!((ac.hess.as_ref().unwrap() - bc.hess.as_ref().unwrap()).norm() < 1e-8);
                let mut diff = ac.d3.clone().unwrap();
                diff.axpy(-1.0, bc.d3.as_ref().unwrap());
                assert!(diff.frobenius() < 1e-7 * (1.0 + ac.d3_norm()));
            }
        }
    }

    #[test]
    fn bounded_and_c1_formulas_agree() {
        let m = demo();
        let me = mehler(m.clone(), true);
        let f = ScalarField::ridge(&m, v(&[1.0, 1.0, 0.0]), Profile::sin(1.0).unwrap()).unwrap();
        let x = v(&[0.2, 0.1, -0.3]);
        let a = me.evaluate(&f, 1.0, &x, Order::Third).unwrap();
        let b = me.evaluate_c1(&f, 1.0, &x, Order::Third).unwrap();
        assert!((a.grad.unwrap() - b.grad.unwrap()).norm() < 1e-12);
        assert!((a.hess.unwrap() - b.hess.unwrap()).norm() < 1e-12);
    }

    #[test]
    fn t_zero_conventions() {
        let m = demo();
        let me = mehler(m.clone(), true);
        let f = ScalarField::ridge(&m, v(&[1.0, 0.0, 0.0]), Profile::sin(1.0).unwrap()).unwrap();
        let x = v(&[0.7, 0.0, 0.0]);
        assert_eq!(me.apply(&f, 0.0, &x).unwrap().0, f.eval(&x));
        assert!(me.evaluate(&f, 0.0, &x, Order::Gradient).is_err());
        assert!(me.evaluate(&f, -1.0, &x, Order::Value).is_err());
        let e = me.evaluate_c1(&f, 0.0, &x, Order::Hessian).unwrap();
        assert_eq!(e.grad.unwrap(), f.h_gradient(&x).unwrap());
        assert!(me.evaluate_c1(&f, 0.0, &x, Order::Third).is_err());
        let cusp = ScalarField::ridge(&m, v(&[1.0, 0.0, 0.0]), Profile::abs_clip_pow(0.5).unwrap()).unwrap();
        assert!(matches!(me.evaluate_c1(&cusp, 1.0, &x, Order::Gradient), Err(Error::MissingMetadata(_))));
    }

    #[test]
    fn derivatives_are_symmetric() {
        let m = CovarianceModel::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.3], vec![0.0, 0.3, 0.5]]).unwrap();
        let me = mehler(m.clone(), true);
        let f = ScalarField::product(
            ScalarField::ridge(&m, v(&[1.0, 0.0, 0.0]), Profile::sin(1.0).unwrap()).unwrap(),
            ScalarField::ridge(&m, v(&[0.0, 1.0, 1.0]), Profile::SmoothBump).unwrap(),
        )
        .unwrap();
        let x = v(&[0.1, 0.2, 0.3]);
        for e in [me.evaluate(&f, 0.5, &x, Order::Third).unwrap(), me.evaluate_c1(&f, 0.5, &x, Order::Third).unwrap()] {
            let h = e.hess.unwrap();
            assert!((&h - h.transpose()).amax() < 1e-10);
            assert!(e.d3.unwrap().asymmetry() < 1e-10);
        }
    }
}
