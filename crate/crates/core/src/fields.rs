//! Test functions with exactly known norms: ridges `φ(⟨z, x⟩)`, constants,
//! linear and quadratic forms, products, and time-modulated source terms.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::gaussian::CovarianceModel;
use crate::profile::{Profile, Profile1d};

/// `|Q^{1/2} z|` below this fraction of `|z| sqrt(λ_max)` is treated as zero.
const KERNEL_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct Ridge {
    /// `z`, ambient.
    pub direction: DVector<f64>,
    /// `v = S U_rᵀ z`, the whitened H-gradient of `x ↦ ⟨z, x⟩`; `|v| = |Q^{1/2} z|`.
    pub whitened: DVector<f64>,
    pub profile: Profile,
}

impl Ridge {
    pub fn h_norm(&self) -> f64 {
        self.whitened.norm()
    }

    pub fn argument(&self, x: &DVector<f64>) -> f64 {
        self.direction.dot(x)
    }
}

#[derive(Debug, Clone)]
pub enum FieldKind {
    Constant(f64),
    Ridge(Ridge),
    /// `⟨a, x⟩`; `grad` is the whitened H-gradient `S U_rᵀ a`.
    Linear {
        a: DVector<f64>,
        grad: DVector<f64>,
    },
    /// `⟨a, x⟩²`.
    Quadratic {
        a: DVector<f64>,
        grad: DVector<f64>,
    },
    Product(Box<ScalarField>, Box<ScalarField>),
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    dim: usize,
    rank: usize,
    kind: FieldKind,
}

impl ScalarField {
    pub fn constant(model: &CovarianceModel, c: f64) -> Self {
        Self { dim: model.dim(), rank: model.rank(), kind: FieldKind::Constant(c) }
    }

    pub fn ridge(model: &CovarianceModel, z: DVector<f64>, profile: Profile) -> Result<Self> {
        model.check_dim(&z)?;
        if z.iter().all(|&v| v == 0.0) {
            return Err(invalid("ridge direction must be nonzero"));
        }
        let mut whitened = model.h_gradient(&z);
        let top = model.eigenvalues()[0].sqrt();
        if whitened.norm() <= KERNEL_TOL * z.norm() * top {
            whitened.fill(0.0);
        }
        Ok(Self { dim: model.dim(), rank: model.rank(), kind: FieldKind::Ridge(Ridge { direction: z, whitened, profile }) })
    }

    pub fn linear(model: &CovarianceModel, a: DVector<f64>) -> Result<Self> {
        model.check_dim(&a)?;
        let grad = model.h_gradient(&a);
        Ok(Self { dim: model.dim(), rank: model.rank(), kind: FieldKind::Linear { a, grad } })
    }

    pub fn quadratic(model: &CovarianceModel, a: DVector<f64>) -> Result<Self> {
        model.check_dim(&a)?;
        let grad = model.h_gradient(&a);
        Ok(Self { dim: model.dim(), rank: model.rank(), kind: FieldKind::Quadratic { a, grad } })
    }

    pub fn product(f: ScalarField, g: ScalarField) -> Result<Self> {
        if f.dim != g.dim || f.rank != g.rank {
            return Err(Error::DimensionMismatch { expected: f.dim, got: g.dim });
        }
        Ok(Self { dim: f.dim, rank: f.rank, kind: FieldKind::Product(Box::new(f), Box::new(g)) })
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn as_ridge(&self) -> Option<&Ridge> {
        match &self.kind {
            FieldKind::Ridge(r) => Some(r),
            _ => None,
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        match &self.kind {
            FieldKind::Constant(c) => *c,
            FieldKind::Ridge(r) => r.profile.value(r.argument(x)),
            FieldKind::Linear { a, .. } => a.dot(x),
            FieldKind::Quadratic { a, .. } => a.dot(x).powi(2),
            FieldKind::Product(f, g) => f.eval(x) * g.eval(x),
        }
    }

    fn is_zero_form(a: &DVector<f64>) -> bool {
        a.iter().all(|&v| v == 0.0)
    }

    /// Declared `‖f‖_∞`; `None` for unbounded or undeclared fields.
    pub fn sup_norm(&self) -> Option<f64> {
        match &self.kind {
            FieldKind::Constant(c) => Some(c.abs()),
            FieldKind::Ridge(r) => r.profile.sup_abs(),
            FieldKind::Linear { a, .. } | FieldKind::Quadratic { a, .. } => Self::is_zero_form(a).then_some(0.0),
            FieldKind::Product(f, g) => Some(f.sup_norm()? * g.sup_norm()?),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.sup_norm().is_some()
    }

    /// `[f]_α` along H when a closed form is known; `None` otherwise,
    /// including when the seminorm is infinite.
    pub fn holder(&self, alpha: f64) -> Option<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return None;
        }
        match &self.kind {
            FieldKind::Constant(_) => Some(0.0),
            FieldKind::Ridge(r) => {
                let nv = r.h_norm();
                if nv == 0.0 {
                    Some(0.0)
                } else {
                    Some(r.profile.holder(alpha)? * nv.powf(alpha))
                }
            }
            FieldKind::Linear { a, .. } | FieldKind::Quadratic { a, .. } => Self::is_zero_form(a).then_some(0.0),
            FieldKind::Product(..) => None,
        }
    }

    /// `‖f‖_{C^α_H} = ‖f‖_∞ + [f]_α`.
    pub fn holder_norm(&self, alpha: f64) -> Option<f64> {
        Some(self.sup_norm()? + self.holder(alpha)?)
    }

    /// Best exponent for which the field is H-Hölder (1 for H-Lipschitz,
    /// 0 when unknown).
    pub fn holder_exponent(&self) -> f64 {
        match &self.kind {
            FieldKind::Constant(_) | FieldKind::Linear { .. } => 1.0,
            FieldKind::Quadratic { a, .. } => {
                if Self::is_zero_form(a) {
                    1.0
                } else {
                    0.0
                }
            }
            FieldKind::Ridge(r) => {
                if r.h_norm() == 0.0 {
                    1.0
                } else {
                    r.profile.max_holder_exponent()
                }
            }
            FieldKind::Product(f, g) => {
                if f.grad_sup().is_some() && g.grad_sup().is_some() {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Whether [`ScalarField::h_gradient`] has a closed form.
    pub fn has_h_gradient(&self) -> bool {
        self.h_gradient(&DVector::zeros(self.dim)).is_some()
    }

    /// Whitened H-gradient at `x`, when a closed form is available.
    pub fn h_gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        match &self.kind {
            FieldKind::Constant(_) => Some(DVector::zeros(self.rank)),
            FieldKind::Ridge(r) => {
                if r.h_norm() == 0.0 {
                    Some(DVector::zeros(self.rank))
                } else {
                    Some(&r.whitened * r.profile.derivative(r.argument(x))?)
                }
            }
            FieldKind::Linear { grad, .. } => Some(grad.clone()),
            FieldKind::Quadratic { a, grad } => Some(grad * (2.0 * a.dot(x))),
            FieldKind::Product(f, g) => Some(g.h_gradient(x)? * f.eval(x) + f.h_gradient(x)? * g.eval(x)),
        }
    }

    /// Whitened H-Hessian at `x`, when a closed form is available.
    pub fn h_hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let r = self.rank;
        match &self.kind {
            FieldKind::Constant(_) | FieldKind::Linear { .. } => Some(DMatrix::zeros(r, r)),
            FieldKind::Ridge(rd) => {
                if rd.h_norm() == 0.0 {
                    Some(DMatrix::zeros(r, r))
                } else {
                    let d2 = rd.profile.second_derivative(rd.argument(x))?;
                    Some(&rd.whitened * rd.whitened.transpose() * d2)
                }
            }
            FieldKind::Quadratic { grad, .. } => Some(grad * grad.transpose() * 2.0),
            FieldKind::Product(f, g) => {
                let (fx, gx) = (f.eval(x), g.eval(x));
                let (df, dg) = (f.h_gradient(x)?, g.h_gradient(x)?);
                let cross = &df * dg.transpose();
                Some(g.h_hessian(x)? * fx + f.h_hessian(x)? * gx + &cross + cross.transpose())
            }
        }
    }

    /// `sup ‖∇_H f‖_H`.
    pub fn grad_sup(&self) -> Option<f64> {
        match &self.kind {
            FieldKind::Constant(_) => Some(0.0),
            FieldKind::Ridge(r) => {
                if r.h_norm() == 0.0 {
                    Some(0.0)
                } else {
                    Some(r.profile.lipschitz()? * r.h_norm())
                }
            }
            FieldKind::Linear { grad, .. } => Some(grad.norm()),
            FieldKind::Quadratic { a, .. } => Self::is_zero_form(a).then_some(0.0),
            FieldKind::Product(f, g) => Some(f.sup_norm()? * g.grad_sup()? + g.sup_norm()? * f.grad_sup()?),
        }
    }

    /// `sup ‖D²_H f‖`.
    pub fn hess_sup(&self) -> Option<f64> {
        match &self.kind {
            FieldKind::Constant(_) | FieldKind::Linear { .. } => Some(0.0),
            FieldKind::Ridge(r) => {
                if r.h_norm() == 0.0 {
                    Some(0.0)
                } else {
                    Some(r.profile.second_sup()? * r.h_norm().powi(2))
                }
            }
            FieldKind::Quadratic { grad, .. } => Some(2.0 * grad.norm_squared()),
            FieldKind::Product(..) => None,
        }
    }

    /// `[D_H f]_α`.
    pub fn grad_holder(&self, alpha: f64) -> Option<f64> {
        match &self.kind {
            FieldKind::Constant(_) | FieldKind::Linear { .. } => Some(0.0),
            FieldKind::Ridge(r) => {
                if r.h_norm() == 0.0 {
                    Some(0.0)
                } else {
                    Some(r.profile.derivative_holder(alpha)? * r.h_norm().powf(1.0 + alpha))
                }
            }
            _ => None,
        }
    }

    /// `[D²_H f]_α`.
    pub fn hess_holder(&self, alpha: f64) -> Option<f64> {
        match &self.kind {
            FieldKind::Constant(_) | FieldKind::Linear { .. } | FieldKind::Quadratic { .. } => Some(0.0),
            FieldKind::Ridge(r) => {
                if r.h_norm() == 0.0 {
                    Some(0.0)
                } else {
                    Some(r.profile.second_derivative_holder(alpha)? * r.h_norm().powf(2.0 + alpha))
                }
            }
            FieldKind::Product(..) => None,
        }
    }

    /// `‖f‖_{C^{2+α}_H} = ‖f‖_∞ + ‖∇f‖_∞ + ‖D²f‖_∞ + [D²f]_α`.
    pub fn c2alpha_norm(&self, alpha: f64) -> Option<f64> {
        Some(self.sup_norm()? + self.grad_sup()? + self.hess_sup()? + self.hess_holder(alpha)?)
    }

    /// For polynomial fields, a bound on `sup_{t ≥ 0} ‖D^k_H T(t)f(x)‖`, `k ≤ 2`,
    /// from the closed forms `T(t)⟨a,·⟩ = e^{-t}⟨a,·⟩` and
    /// `T(t)⟨a,·⟩² = e^{-2t}⟨a,·⟩² + (1 - e^{-2t})|Q^{1/2}a|²`.
    pub fn orbit_bound(&self, x: &DVector<f64>, k: usize) -> Option<f64> {
        match (&self.kind, k) {
            (FieldKind::Constant(c), 0) => Some(c.abs()),
            (FieldKind::Constant(_), _) => Some(0.0),
            (FieldKind::Linear { a, grad }, 0) => Some(a.dot(x).abs() + grad.norm()),
            (FieldKind::Linear { grad, .. }, 1) => Some(grad.norm()),
            (FieldKind::Linear { .. }, _) => Some(0.0),
            (FieldKind::Quadratic { a, grad }, 0) => Some(a.dot(x).powi(2) + grad.norm_squared()),
            (FieldKind::Quadratic { a, grad }, 1) => Some(2.0 * a.dot(x).abs() * grad.norm()),
            (FieldKind::Quadratic { grad, .. }, 2) => Some(2.0 * grad.norm_squared()),
            _ => None,
        }
    }

    /// Unit whitened direction along which ridge quotients are attained.
    pub fn attaining_direction(&self) -> Option<DVector<f64>> {
        let r = self.as_ridge()?;
        let n = r.h_norm();
        (n > 0.0).then(|| &r.whitened / n)
    }
}

/// Time modulation `ψ` with `|ψ| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Modulation {
    Constant(f64),
    /// `cos(ω t + phase)`.
    Cos {
        omega: f64,
        phase: f64,
    },
}

impl Modulation {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Modulation::Constant(c) => c,
            Modulation::Cos { omega, phase } => (omega * t + phase).cos(),
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match *self {
            Modulation::Constant(c) => c.abs(),
            Modulation::Cos { .. } => 1.0,
        }
    }
}

/// `g(t, x) = Σ ψ_i(t) f_i(x)`.
#[derive(Debug, Clone)]
pub struct TimeField {
    pub terms: Vec<(Modulation, ScalarField)>,
}

impl TimeField {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn separable(psi: Modulation, f: ScalarField) -> Result<Self> {
        if psi.sup_abs() > 1.0 {
            return Err(invalid(format!("time modulation must satisfy |ψ| <= 1 (got {psi:?})")));
        }
        Ok(Self { terms: vec![(psi, f)] })
    }

    pub fn plus(mut self, other: TimeField) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn eval(&self, t: f64, x: &DVector<f64>) -> f64 {
        self.terms.iter().map(|(psi, f)| psi.eval(t) * f.eval(x)).sum()
    }

    /// Upper bound of `sup_t ‖g(t, ·)‖_{C^α_H}`.
    pub fn holder_norm_bound(&self, alpha: f64) -> Option<f64> {
        self.terms.iter().map(|(psi, f)| Some(psi.sup_abs() * f.holder_norm(alpha)?)).sum()
    }

    pub fn sup_bound(&self) -> Option<f64> {
        self.terms.iter().map(|(psi, f)| Some(psi.sup_abs() * f.sup_norm()?)).sum()
    }
}
