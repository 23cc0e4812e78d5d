//! Empirical H-Hölder and H-Zygmund seminorms over a finite sample design.
//!
//! Every estimate is a maximum of difference quotients over the design, so it
//! is a lower bound of the true seminorm. Each estimate carries the `(x, h)`
//! pair that attains it.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::gaussian::{mix_seed, CovarianceModel, HVector};
use crate::tensor::Normed;

const POINT_STREAM: u64 = 0x7074_73;
const DIRECTION_STREAM: u64 = 0x6469_72;

/// Sizes of a [`SampleDesign`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignParams {
    /// γ-distributed base points, in addition to the anchors.
    pub points: usize,
    /// Unit H-directions; the first `min(directions, rank)` are the whitened basis.
    pub directions: usize,
    /// Ladder `2^{-m}` for `m = m_lo..=m_hi`.
    pub m_lo: i32,
    pub m_hi: i32,
    pub seed: u64,
}

impl Default for DesignParams {
    fn default() -> Self {
        Self { points: 64, directions: 32, m_lo: 0, m_hi: 10, seed: 42 }
    }
}

/// Base points, unit H-directions and a decreasing scale ladder.
#[derive(Debug, Clone)]
pub struct SampleDesign {
    points: Vec<DVector<f64>>,
    directions: Vec<HVector>,
    ladder: Vec<f64>,
    seed: u64,
}

impl SampleDesign {
    /// Anchor `0`, then `params.points` samples of γ; whitened basis vectors,
    /// then uniformly random unit directions of H.
    pub fn new(model: &CovarianceModel, params: &DesignParams) -> Result<Self> {
        if params.directions == 0 {
            return Err(invalid("a design needs at least one direction"));
        }
        if params.m_lo > params.m_hi {
            return Err(invalid(format!("empty ladder 2^-{}..2^-{}", params.m_lo, params.m_hi)));
        }
        let r = model.rank();
        if r == 0 {
            return Err(invalid("H is trivial: Q has rank 0"));
        }
        let mut points = vec![DVector::zeros(model.dim())];
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(params.seed, POINT_STREAM));
        for _ in 0..params.points {
            let xi: Vec<f64> = (0..r).map(|_| -> f64 { StandardNormal.sample(&mut rng) }).collect();
            points.push(model.color(&xi));
        }
        let mut directions = Vec::with_capacity(params.directions);
        for i in 0..params.directions.min(r) {
            directions.push(model.h_vector(&DVector::from_fn(r, |j, _| if i == j { 1.0 } else { 0.0 }))?);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(params.seed, DIRECTION_STREAM));
        while directions.len() < params.directions {
            let z: DVector<f64> = DVector::from_fn(r, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
            let n = z.norm();
            if n > 1e-8 {
                directions.push(model.h_vector(&(z / n))?);
            }
        }
        let ladder = (params.m_lo..=params.m_hi).map(|m| 2f64.powi(-m)).collect();
        Ok(Self { points, directions, ladder, seed: params.seed })
    }

    pub fn with_anchor(mut self, x: DVector<f64>) -> Self {
        self.points.push(x);
        self
    }

    /// Adds the direction `z / |z|` (whitened coordinates).
    pub fn with_direction(mut self, model: &CovarianceModel, z: &DVector<f64>) -> Result<Self> {
        let n = z.norm();
        if !(n > 0.0) {
            return Err(invalid("direction must be nonzero"));
        }
        self.directions.push(model.h_vector(&(z / n))?);
        Ok(self)
    }

    /// Keeps only the first `points` base points and `directions` directions.
    pub fn truncated(&self, points: usize, directions: usize) -> Self {
        Self {
            points: self.points[..points.min(self.points.len())].to_vec(),
            directions: self.directions[..directions.min(self.directions.len())].to_vec(),
            ladder: self.ladder.clone(),
            seed: self.seed,
        }
    }

    pub fn with_ladder(mut self, ladder: Vec<f64>) -> Result<Self> {
        if ladder.is_empty() || ladder.windows(2).any(|w| !(w[1] < w[0])) || ladder.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid("ladder must be positive and strictly decreasing"));
        }
        self.ladder = ladder;
        Ok(self)
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn directions(&self) -> &[HVector] {
        &self.directions
    }

    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn pair_count(&self) -> usize {
        self.points.len() * self.directions.len() * self.ladder.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flavor {
    Holder(f64),
    Zygmund,
    /// Hölder seminorm of a symmetric-matrix-valued map in operator norm.
    OperatorHolder(f64),
}

impl Flavor {
    fn exponent(&self) -> f64 {
        match self {
            Flavor::Holder(a) | Flavor::OperatorHolder(a) => *a,
            Flavor::Zygmund => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Flavor::Holder(a) | Flavor::OperatorHolder(a) if !(*a > 0.0 && *a < 1.0) => {
                Err(invalid(format!("Hölder exponent must lie in (0, 1) (got {a})")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub x: DVector<f64>,
    pub h: HVector,
}

#[derive(Debug, Clone)]
pub struct SeminormEstimate {
    pub value: f64,
    /// `None` only when every quotient vanished.
    pub witness: Option<Witness>,
    pub flavor: Flavor,
    pub pairs: usize,
}

/// The quotient at one `(x, h)`: `‖F(x+h) − F(x)‖ / |h|^α` or
/// `‖F(x+2h) − 2F(x+h) + F(x)‖ / |h|`.
pub fn quotient<T: Normed>(f: &(dyn Fn(&DVector<f64>) -> Result<T> + Sync), flavor: Flavor, x: &DVector<f64>, h: &HVector) -> Result<f64> {
    flavor.validate()?;
    let n = h.norm();
    if !(n > 0.0) {
        return Err(invalid("quotient needs a nonzero increment"));
    }
    let fx = checked(f, x)?;
    let f1 = checked(f, &(x + &h.ambient))?;
    let num = match flavor {
        Flavor::Zygmund => {
            let f2 = checked(f, &(x + &h.ambient * 2.0))?;
            T::combination_norm(&[(1.0, &f2), (-2.0, &f1), (1.0, &fx)])
        }
        _ => T::combination_norm(&[(1.0, &f1), (-1.0, &fx)]),
    };
    Ok(num / n.powf(flavor.exponent()))
}

/// Quotients at `x` along `h` for every ladder scale, largest scale first.
pub fn ladder_profile<T: Normed>(
    f: &(dyn Fn(&DVector<f64>) -> Result<T> + Sync),
    flavor: Flavor,
    x: &DVector<f64>,
    h: &HVector,
    ladder: &[f64],
) -> Result<Vec<f64>> {
    ladder.iter().map(|&s| quotient(f, flavor, x, &h.scaled(s))).collect()
}

fn checked<T: Normed>(f: &(dyn Fn(&DVector<f64>) -> Result<T> + Sync), x: &DVector<f64>) -> Result<T> {
    let v = f(x)?;
    if !v.norm_of().is_finite() {
        return Err(Error::ToleranceNotMet(format!("non-finite evaluation at {:?}", x.as_slice())));
    }
    Ok(v)
}

/// Best quotient over the design for each flavor, sharing evaluations.
fn scan<T: Normed>(
    f: &(dyn Fn(&DVector<f64>) -> Result<T> + Sync),
    flavors: &[Flavor],
    design: &SampleDesign,
) -> Result<Vec<SeminormEstimate>> {
    for fl in flavors {
        fl.validate()?;
    }
    let second = flavors.contains(&Flavor::Zygmund);
    let none = (0.0, usize::MAX, usize::MAX);
    let per_point: Vec<Result<Vec<(f64, usize, usize)>>> = design
        .points
        .par_iter()
        .map(|x| {
            let fx = checked(f, x)?;
            let mut best = vec![none; flavors.len()];
            for (i, h) in design.directions.iter().enumerate() {
                for (j, &s) in design.ladder.iter().enumerate() {
                    let step = &h.ambient * s;
                    let f1 = checked(f, &(x + &step))?;
                    let first = T::combination_norm(&[(1.0, &f1), (-1.0, &fx)]);
                    let zyg = if second {
                        let f2 = checked(f, &(x + &step * 2.0))?;
                        T::combination_norm(&[(1.0, &f2), (-2.0, &f1), (1.0, &fx)])
                    } else {
                        0.0
                    };
                    let n = s * h.norm();
                    for (b, fl) in best.iter_mut().zip(flavors) {
                        let num = if *fl == Flavor::Zygmund { zyg } else { first };
                        let q = num / n.powf(fl.exponent());
                        if q > b.0 {
                            *b = (q, i, j);
                        }
                    }
                }
            }
            Ok(best)
        })
        .collect();
    let mut out: Vec<SeminormEstimate> =
        flavors.iter().map(|&flavor| SeminormEstimate { value: 0.0, witness: None, flavor, pairs: design.pair_count() }).collect();
    for (x, res) in design.points.iter().zip(per_point) {
        for (est, (q, i, j)) in out.iter_mut().zip(res?) {
            if q > est.value {
                est.value = q;
                est.witness = Some(Witness { x: x.clone(), h: design.directions[i].scaled(design.ladder[j]) });
            }
        }
    }
    Ok(out)
}

fn scan_one<T: Normed>(f: &(dyn Fn(&DVector<f64>) -> Result<T> + Sync), flavor: Flavor, design: &SampleDesign) -> Result<SeminormEstimate> {
    Ok(scan(f, &[flavor], design)?.remove(0))
}

/// Estimates for several flavors from one pass over the design.
pub fn estimate_many<T: Normed>(
    f: &(dyn Fn(&DVector<f64>) -> Result<T> + Sync),
    flavors: &[Flavor],
    design: &SampleDesign,
) -> Result<Vec<SeminormEstimate>> {
    scan(f, flavors, design)
}

/// `max ‖F(x+h) − F(x)‖ / |h|_H^α` over the design.
pub fn holder_est<T: Normed>(
    f: &(dyn Fn(&DVector<f64>) -> Result<T> + Sync),
    alpha: f64,
    design: &SampleDesign,
) -> Result<SeminormEstimate> {
    scan_one(f, Flavor::Holder(alpha), design)
}

/// [`holder_est`] for symmetric-matrix-valued maps in operator norm.
pub fn operator_holder_est(
    f: &(dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Sync),
    alpha: f64,
    design: &SampleDesign,
) -> Result<SeminormEstimate> {
    scan_one(f, Flavor::OperatorHolder(alpha), design)
}

/// `max ‖F(x+2h) − 2F(x+h) + F(x)‖ / |h|_H` over the design.
pub fn zygmund_est<T: Normed>(f: &(dyn Fn(&DVector<f64>) -> Result<T> + Sync), design: &SampleDesign) -> Result<SeminormEstimate> {
    scan_one(f, Flavor::Zygmund, design)
}

/// Value, whitened H-gradient and H-Hessian at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct C2AlphaEstimate {
    pub sup: f64,
    pub grad_sup: f64,
    pub hess_sup: f64,
    pub hess_holder: SeminormEstimate,
}

impl C2AlphaEstimate {
    pub fn total(&self) -> f64 {
        self.sup + self.grad_sup + self.hess_sup + self.hess_holder.value
    }
}

/// Components of `‖u‖_{C^{2+α}_H}`: sups over the base points and
/// `[D²_H u]_α` over the whole design.
pub fn c2alpha_norm_est(u: &(dyn Fn(&DVector<f64>) -> Result<Jet> + Sync), alpha: f64, design: &SampleDesign) -> Result<C2AlphaEstimate> {
    let jets: Vec<Result<Jet>> = design.points.par_iter().map(u).collect();
    let (mut sup, mut grad_sup, mut hess_sup) = (0.0f64, 0.0f64, 0.0f64);
    for j in jets {
        let j = j?;
        sup = sup.max(j.value.abs());
        grad_sup = grad_sup.max(j.grad.norm());
        hess_sup = hess_sup.max(j.hess.norm_of());
    }
    let hess = |x: &DVector<f64>| u(x).map(|j| j.hess);
    let hess_holder = operator_holder_est(&hess, alpha, design)?;
    Ok(C2AlphaEstimate { sup, grad_sup, hess_sup, hess_holder })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ScalarField;
    use crate::profile::Profile;
    use proptest::prelude::*;

    fn model() -> CovarianceModel {
        CovarianceModel::diagonal(&[4.0, 1.0, 0.0]).unwrap()
    }

    fn small() -> DesignParams {
        DesignParams { points: 16, directions: 8, m_lo: 0, m_hi: 6, seed: 7 }
    }

    fn scalar(f: &ScalarField) -> impl Fn(&DVector<f64>) -> Result<f64> + Sync + '_ {
        move |x| Ok(f.eval(x))
    }

    fn cusp(m: &CovarianceModel) -> ScalarField {
        // |Q^{1/2} z| = √2 for z = (0.5, 1, 0) under Q = diag(4, 1, 0).
        let z = DVector::from_vec(vec![0.5, 1.0, 0.0]);
        ScalarField::ridge(m, z, Profile::abs_clip_pow(0.5).unwrap()).unwrap()
    }

    #[test]
    fn design_shape() {
        let m = model();
        let d = SampleDesign::new(&m, &small()).unwrap();
        assert_eq!(d.points().len(), 17);
        assert_eq!(d.points()[0], DVector::zeros(3));
        assert!(d.points().iter().all(|x| x[2] == 0.0));
        assert_eq!(d.directions().len(), 8);
        assert!(d.directions().iter().all(|h| (h.norm() - 1.0).abs() < 1e-14));
        assert_eq!(d.directions()[0].ambient, DVector::from_vec(vec![2.0, 0.0, 0.0]));
        assert_eq!(d.ladder().len(), 7);
        assert!(d.ladder().windows(2).all(|w| w[1] < w[0]));
        assert!(SampleDesign::new(&m, &DesignParams { m_lo: 3, m_hi: 2, ..small() }).is_err());
        assert!(SampleDesign::new(&m, &DesignParams { directions: 0, ..small() }).is_err());
    }

    #[test]
    fn constant_has_zero_seminorms() {
        let m = model();
        let d = SampleDesign::new(&m, &small()).unwrap();
        let c = ScalarField::constant(&m, 3.0);
        let f = scalar(&c);
        let h = holder_est(&f, 0.5, &d).unwrap();
        assert_eq!(h.value, 0.0);
        assert!(h.witness.is_none());
        assert_eq!(zygmund_est(&f, &d).unwrap().value, 0.0);
    }

    #[test]
    fn cusp_ridge_is_nearly_attained() {
        let m = model();
        let f = cusp(&m);
        let exact = f.holder(0.5).unwrap();
        assert!((exact - 2f64.powf(0.25)).abs() < 1e-12);
        let d = SampleDesign::new(&m, &small()).unwrap().with_direction(&m, &f.attaining_direction().unwrap()).unwrap();
        let g = scalar(&f);
        let est = holder_est(&g, 0.5, &d).unwrap();
        assert!(est.value >= 0.95 * exact, "{} vs {exact}", est.value);
        assert!(est.value <= exact + 1e-10);
        let w = est.witness.unwrap();
        let again = quotient(&g, Flavor::Holder(0.5), &w.x, &w.h).unwrap();
        assert!((again - est.value).abs() <= 1e-12 * est.value);
    }

    #[test]
    fn linear_quotient_grows_with_scale() {
        // |s| / |s|^{1/2} increases with s, so the largest rung wins.
        let m = model();
        let f = ScalarField::linear(&m, DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        let g = scalar(&f);
        let mut last = 0.0;
        for m_lo in [0, -2, -4] {
            let p = DesignParams { m_lo, ..small() };
            let d = SampleDesign::new(&m, &p).unwrap();
            let est = holder_est(&g, 0.5, &d).unwrap();
            assert!(est.value > last);
            last = est.value;
            let w = est.witness.unwrap();
            assert!((w.h.norm() - d.ladder()[0]).abs() < 1e-14);
        }
        let d = SampleDesign::new(&m, &small()).unwrap();
        // Capped at |h| ≤ 1 the maximum is |Q^{1/2} a| = 2 along e1.
        assert!((holder_est(&g, 0.5, &d).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn affine_has_no_second_differences() {
        let m = model();
        let f = ScalarField::linear(&m, DVector::from_vec(vec![1.0, -2.0, 5.0])).unwrap();
        let d = SampleDesign::new(&m, &small()).unwrap();
        let g = |x: &DVector<f64>| Ok(f.eval(x) + 4.0);
        assert!(zygmund_est(&g, &d).unwrap().value < 1e-12);
    }

    #[test]
    fn lipschitz_zygmund_is_at_most_four_l() {
        let m = model();
        let z = DVector::from_vec(vec![0.3, 0.7, 0.0]);
        let f = ScalarField::ridge(&m, z, Profile::sin(2.0).unwrap()).unwrap();
        let lip = f.grad_sup().unwrap();
        let d = SampleDesign::new(&m, &small()).unwrap();
        let g = scalar(&f);
        for s in d.ladder() {
            let single = d.clone().with_ladder(vec![*s]).unwrap();
            assert!(zygmund_est(&g, &single).unwrap().value <= 4.0 * lip);
        }
    }

    #[test]
    fn homogeneous_profile_is_scale_free() {
        let m = model();
        let f = cusp(&m);
        let h = m.h_vector(&f.attaining_direction().unwrap()).unwrap();
        let g = scalar(&f);
        // ⟨z, s·h⟩ = √2 s stays inside the unclipped region for s ≤ 2^{-1}.
        let ladder: Vec<f64> = (1..=10).map(|k| 2f64.powi(-k)).collect();
        let q = ladder_profile(&g, Flavor::Holder(0.5), &DVector::zeros(3), &h, &ladder).unwrap();
        for v in &q {
            assert!((v - q[0]).abs() <= 1e-10, "{q:?}");
        }
    }

    #[test]
    fn c2alpha_of_constant_and_quadratic() {
        let m = model();
        let d = SampleDesign::new(&m, &small()).unwrap();
        let u = |_: &DVector<f64>| Ok(Jet { value: -2.5, grad: DVector::zeros(2), hess: DMatrix::zeros(2, 2) });
        let e = c2alpha_norm_est(&u, 0.5, &d).unwrap();
        assert_eq!((e.sup, e.grad_sup, e.hess_sup, e.hess_holder.value), (2.5, 0.0, 0.0, 0.0));
        assert_eq!(e.total(), 2.5);

        let q = ScalarField::quadratic(&m, DVector::from_vec(vec![1.0, 1.0, 0.0])).unwrap();
        let jet = |x: &DVector<f64>| Ok(Jet { value: q.eval(x), grad: q.h_gradient(x).unwrap(), hess: q.h_hessian(x).unwrap() });
        let e = c2alpha_norm_est(&jet, 0.5, &d).unwrap();
        assert_eq!(e.hess_holder.value, 0.0);
        assert!((e.hess_sup - q.hess_sup().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn shared_pass_matches_separate_estimates() {
        let m = model();
        let f = cusp(&m);
        let g = scalar(&f);
        let d = SampleDesign::new(&m, &small()).unwrap();
        let flavors = [Flavor::Holder(0.3), Flavor::Zygmund, Flavor::Holder(0.5)];
        let many = estimate_many(&g, &flavors, &d).unwrap();
        assert_eq!(many[0].value, holder_est(&g, 0.3, &d).unwrap().value);
        assert_eq!(many[1].value, zygmund_est(&g, &d).unwrap().value);
        assert_eq!(many[2].value, holder_est(&g, 0.5, &d).unwrap().value);
        assert_eq!(many[2].witness, holder_est(&g, 0.5, &d).unwrap().witness);
    }

    #[test]
    fn failures_propagate() {
        let m = model();
        let d = SampleDesign::new(&m, &small()).unwrap();
        let bad = |x: &DVector<f64>| if x[0] > 1.0 { Ok(f64::NAN) } else { Ok(0.0) };
        assert!(holder_est(&bad, 0.5, &d).is_err());
        let err = |_: &DVector<f64>| -> Result<f64> { Err(Error::MissingMetadata("test")) };
        assert!(zygmund_est(&err, &d).is_err());
        assert!(holder_est(&|_: &DVector<f64>| Ok(0.0), 1.0, &d).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn larger_designs_never_decrease(extra_p in 0usize..12, extra_d in 0usize..6, extra_m in 0i32..3, w in 0.5f64..3.0) {
            let m = model();
            let z = DVector::from_vec(vec![0.4, -0.9, 0.2]);
            let f = ScalarField::ridge(&m, z, Profile::sin(w).unwrap()).unwrap();
            let g = scalar(&f);
            let p = small();
            let base = SampleDesign::new(&m, &p).unwrap();
            let big = SampleDesign::new(&m, &DesignParams {
                points: p.points + extra_p,
                directions: p.directions + extra_d,
                m_lo: p.m_lo - extra_m,
                m_hi: p.m_hi + extra_m,
                ..p
            }).unwrap();
            let a = holder_est(&g, 0.4, &base).unwrap().value;
            let b = holder_est(&g, 0.4, &big).unwrap().value;
            prop_assert!(b >= a);
            let a = zygmund_est(&g, &base).unwrap().value;
            let b = zygmund_est(&g, &big).unwrap().value;
            prop_assert!(b >= a);
        }

        #[test]
        fn estimates_stay_below_exact_seminorms(
            z0 in -1.0f64..1.0, z1 in -1.0f64..1.0, z2 in -1.0f64..1.0,
            beta in 0.2f64..1.0, alpha_frac in 0.1f64..1.0, seed in 0u64..1000,
        ) {
            prop_assume!(z0.abs() + z1.abs() > 0.05);
            let m = model();
            let alpha = (beta * alpha_frac).min(0.99);
            let f = ScalarField::ridge(&m, DVector::from_vec(vec![z0, z1, z2]), Profile::abs_clip_pow(beta).unwrap()).unwrap();
            let d = SampleDesign::new(&m, &DesignParams { seed, ..small() }).unwrap();
            let est = holder_est(&scalar(&f), alpha, &d).unwrap();
            prop_assert!(est.value <= f.holder(alpha).unwrap() + 1e-10);
        }
    }
}
