//! The centered Gaussian measure `N(0, Q)` with possibly singular `Q`, its
//! Cameron–Martin space, and the node sets used to integrate against it.
//!
//! Everything is expressed in whitened coordinates: with `Q = U Λ Uᵀ` and the
//! `r` active eigenpairs collected in `U_r`, `S = diag(sqrt λ_i)`, an element of
//! `H` is `h = U_r S z` with `‖h‖_H = |z|`, and `γ` is the image of the standard
//! normal on `R^r` under `ξ ↦ U_r S ξ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::sobol::{self, Sobol};

pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;
const NEGATIVE_TOL: f64 = -1e-10;

#[derive(Debug, Clone)]
pub struct CovarianceModel {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    rank: usize,
    zero_threshold: f64,
    /// `S U_rᵀ`, r×n: maps a Euclidean gradient to the whitened H-gradient.
    sqrt_t: DMatrix<f64>,
    /// `U_r S`, n×r: maps whitened coordinates to ambient vectors.
    color: DMatrix<f64>,
    /// `S⁻¹ U_rᵀ`, r×n: the functionals `ê_i`.
    whiten: DMatrix<f64>,
}

impl CovarianceModel {
    pub fn new(q: &DMatrix<f64>) -> Result<Self> {
        Self::with_threshold(q, DEFAULT_ZERO_THRESHOLD)
    }

    /// `zero_threshold` is relative to the largest eigenvalue.
    pub fn with_threshold(q: &DMatrix<f64>, zero_threshold: f64) -> Result<Self> {
        let (rows, cols) = q.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        if !(0.0..1.0).contains(&zero_threshold) {
            return Err(Error::InvalidArgument(format!("zero threshold {zero_threshold} must lie in [0, 1)")));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("covariance has non-finite entries".into()));
        }
        let scale = q.amax().max(1.0);
        let asym = (q - q.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(asym));
        }
        let sym = (q + q.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let n = rows;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let mut eigenvalues = Vec::with_capacity(n);
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (j, &k) in order.iter().enumerate() {
            let lam = eig.eigenvalues[k];
            if lam < NEGATIVE_TOL {
                return Err(Error::NegativeEigenvalue(lam));
            }
            eigenvalues.push(lam.max(0.0));
            let mut col = eig.eigenvectors.column(k).clone_owned();
            // Deterministic sign: largest-magnitude component positive.
            let imax = col.iamax();
            if col[imax] < 0.0 {
                col = -col;
            }
            eigenvectors.set_column(j, &col);
        }
        let top = eigenvalues[0];
        let rank = eigenvalues.iter().filter(|&&l| top > 0.0 && l > zero_threshold * top).count();

        let ur = eigenvectors.columns(0, rank).clone_owned();
        let s = DVector::from_iterator(rank, eigenvalues[..rank].iter().map(|l| l.sqrt()));
        let color = DMatrix::from_fn(n, rank, |i, j| ur[(i, j)] * s[j]);
        let sqrt_t = color.transpose();
        let whiten = DMatrix::from_fn(rank, n, |i, j| ur[(j, i)] / s[i]);
        Ok(Self { eigenvalues, eigenvectors, rank, zero_threshold, sqrt_t, color, whiten })
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(&DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare { rows: n, cols: bad.len() });
        }
        Self::new(&DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn zero_threshold(&self) -> f64 {
        self.zero_threshold
    }

    /// Descending, clamped to be nonnegative.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are eigenvectors, in the order of [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        &self.color * self.color.transpose()
    }

    /// `U_r S`, mapping whitened coordinates to ambient vectors.
    pub fn color_map(&self) -> &DMatrix<f64> {
        &self.color
    }

    pub fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// `h = Q^{1/2} z` restricted to range(Q), from whitened coordinates.
    pub fn h_vector(&self, z: &DVector<f64>) -> Result<HVector> {
        if z.len() != self.rank {
            return Err(Error::DimensionMismatch { expected: self.rank, got: z.len() });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("whitened coordinates must be finite".into()));
        }
        Ok(HVector { ambient: &self.color * z, whitened: z.clone() })
    }

    /// Recognise an ambient vector as an element of H; fails when it has a
    /// component outside range(Q) above `1e-10 |h|`.
    pub fn h_from_ambient(&self, h: &DVector<f64>) -> Result<HVector> {
        self.check_dim(h)?;
        let ur = self.eigenvectors.columns(0, self.rank);
        let proj = ur * (ur.transpose() * h);
        let off = (h - &proj).norm();
        if off > 1e-10 * h.norm() {
            return Err(Error::NotInCameronMartin(off));
        }
        Ok(HVector { ambient: h.clone(), whitened: &self.whiten * h })
    }

    /// Values of the basis functionals `ê_i(x)`; `x` is projected onto
    /// range(Q) implicitly.
    pub fn whiten(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.whiten * x
    }

    pub fn color(&self, xi: &[f64]) -> DVector<f64> {
        &self.color * DVector::from_column_slice(xi)
    }

    /// Whitened H-gradient `S U_rᵀ ∇f` of a Euclidean gradient.
    pub fn h_gradient(&self, euclidean: &DVector<f64>) -> DVector<f64> {
        &self.sqrt_t * euclidean
    }

    /// `Q^{1/2} z` in whitened form (the H-gradient of `x ↦ ⟨z, x⟩`).
    pub fn sqrt_transpose(&self) -> &DMatrix<f64> {
        &self.sqrt_t
    }

    /// `|Q^{1/2} z|`.
    pub fn sqrt_q_norm(&self, z: &DVector<f64>) -> f64 {
        (&self.sqrt_t * z).norm()
    }
}

/// An element of the Cameron–Martin space in both coordinate systems.
#[derive(Debug, Clone, PartialEq)]
pub struct HVector {
    pub ambient: DVector<f64>,
    pub whitened: DVector<f64>,
}

impl HVector {
    pub fn norm(&self) -> f64 {
        self.whitened.norm()
    }

    /// `ĥ(x) = Σ z_i ê_i(x)`.
    pub fn hat(&self, model: &CovarianceModel, x: &DVector<f64>) -> f64 {
        self.whitened.dot(&model.whiten(x))
    }

    pub fn scaled(&self, s: f64) -> HVector {
        HVector { ambient: &self.ambient * s, whitened: &self.whitened * s }
    }
}

/// Configuration of the Gaussian-integration engines.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub gh_order: usize,
    /// Lower order used for the tensor-rule error estimate.
    pub gh_check_order: usize,
    pub gh_max_dims: usize,
    pub qmc_log2_points: u32,
    pub qmc_replicates: usize,
    pub seed: u64,
    /// Reduce ridge fields to one-dimensional Hermite moments.
    pub ridge_reduction: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { gh_order: 40, gh_check_order: 32, gh_max_dims: 4, qmc_log2_points: 16, qmc_replicates: 8, seed: 42, ridge_reduction: true }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SpecInvalid(m));
        if !(2..=200).contains(&self.gh_order) {
            return bad(format!("gh_order {} outside 2..=200", self.gh_order));
        }
        if !(1..self.gh_order).contains(&self.gh_check_order) {
            return bad(format!("gh_check_order {} must be positive and below gh_order {}", self.gh_check_order, self.gh_order));
        }
        if self.gh_max_dims > 6 {
            return bad(format!("gh_max_dims {} above 6 would need more than 10^9 nodes", self.gh_max_dims));
        }
        if !(4..=24).contains(&self.qmc_log2_points) {
            return bad(format!("qmc_log2_points {} outside 4..=24", self.qmc_log2_points));
        }
        if !(2..=64).contains(&self.qmc_replicates) {
            return bad(format!("qmc_replicates {} outside 2..=64", self.qmc_replicates));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    TensorHermite { order: usize },
    SobolQmc { points: usize, replicates: usize },
    MonteCarlo { points: usize, replicates: usize },
}

#[derive(Debug, Clone)]
struct NodeSet {
    points: Vec<f64>,
    weights: Vec<f64>,
}

/// A (possibly replicated) node set for `N(0, I_r)`.
#[derive(Debug, Clone)]
pub struct GaussianRule {
    dim: usize,
    kind: EngineKind,
    sets: Vec<NodeSet>,
    check: Option<NodeSet>,
}

/// Componentwise integral with an error estimate per component.
#[derive(Debug, Clone, PartialEq)]
pub struct Integral {
    pub value: Vec<f64>,
    pub err: Vec<f64>,
}

const TENSOR_WEIGHT_FLOOR: f64 = 1e-25;

fn tensor_set(dim: usize, order: usize) -> Result<NodeSet> {
    let rule = GaussRule::hermite(order)?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![0usize; dim];
    let total = order.pow(dim as u32);
    for _ in 0..total {
        let w: f64 = idx.iter().map(|&i| rule.weights[i]).product();
        if w > TENSOR_WEIGHT_FLOOR {
            points.extend(idx.iter().map(|&i| rule.nodes[i]));
            weights.push(w);
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < order {
                break;
            }
            *slot = 0;
        }
    }
    Ok(NodeSet { points, weights })
}

/// SplitMix64 finaliser, used to derive independent seeds from `(seed, tag)`.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl GaussianRule {
    pub fn new(dim: usize, spec: &QuadratureSpec, tag: u64) -> Result<Self> {
        spec.validate()?;
        if dim <= spec.gh_max_dims {
            let order = spec.gh_order;
            return Ok(Self {
                dim,
                kind: EngineKind::TensorHermite { order },
                sets: vec![tensor_set(dim, order)?],
                check: Some(tensor_set(dim, spec.gh_check_order)?),
            });
        }
        let points = 1usize << spec.qmc_log2_points;
        let replicates = spec.qmc_replicates;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, tag));
        let mut sets = Vec::with_capacity(replicates);
        let weights = vec![1.0 / points as f64; points];
        if dim <= sobol::MAX_DIM {
            let normal = Normal::standard();
            let sob = Sobol::new(dim)?;
            for _ in 0..replicates {
                let shift: Vec<u32> = (0..dim).map(|_| rand::Rng::random(&mut rng)).collect();
                let pts = sob.points(points, &shift).into_iter().map(|u| normal.inverse_cdf(u)).collect();
                sets.push(NodeSet { points: pts, weights: weights.clone() });
            }
            Ok(Self { dim, kind: EngineKind::SobolQmc { points, replicates }, sets, check: None })
        } else {
            for _ in 0..replicates {
                let pts = (0..points * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                sets.push(NodeSet { points: pts, weights: weights.clone() });
            }
            Ok(Self { dim, kind: EngineKind::MonteCarlo { points, replicates }, sets, check: None })
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> EngineKind {
        self.kind
    }

    /// Total number of integrand evaluations per call.
    pub fn evaluations(&self) -> usize {
        self.sets.iter().map(|s| s.weights.len()).sum::<usize>() + self.check.as_ref().map_or(0, |c| c.weights.len())
    }

    /// Integrates a vector-valued integrand. `f(xi, out)` receives a zeroed
    /// `out` of length `len` and fills it in.
    pub fn integrate(&self, len: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Integral {
        let mut buf = vec![0.0; len];
        let mut run = |set: &NodeSet, f: &mut dyn FnMut(&[f64], &mut [f64])| {
            let mut acc = vec![0.0; len];
            let d = self.dim.max(1);
            for (k, &w) in set.weights.iter().enumerate() {
                let xi = if self.dim == 0 { &[][..] } else { &set.points[k * d..(k + 1) * d] };
                buf.iter_mut().for_each(|b| *b = 0.0);
                f(xi, &mut buf);
                for (a, b) in acc.iter_mut().zip(&buf) {
                    *a += w * b;
                }
            }
            acc
        };
        match &self.check {
            Some(check) => {
                let value = run(&self.sets[0], &mut f);
                let low = run(check, &mut f);
                let err = value.iter().zip(&low).map(|(a, b)| (a - b).abs()).collect();
                Integral { value, err }
            }
            None => {
                let reps: Vec<Vec<f64>> = self.sets.iter().map(|s| run(s, &mut f)).collect();
                let m = reps.len() as f64;
                let value: Vec<f64> = (0..len).map(|j| reps.iter().map(|r| r[j]).sum::<f64>() / m).collect();
                let err = (0..len)
                    .map(|j| {
                        let var = reps.iter().map(|r| (r[j] - value[j]).powi(2)).sum::<f64>() / (m - 1.0);
                        (var / m).sqrt()
                    })
                    .collect();
                Integral { value, err }
            }
        }
    }
}

/// `∫ g dγ` with the engine selected by `spec`.
pub fn integrate_gaussian(model: &CovarianceModel, g: impl Fn(&DVector<f64>) -> f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let rule = GaussianRule::new(model.rank(), spec, 0)?;
    let res = rule.integrate(1, |xi, out| out[0] = g(&model.color(xi)));
    Ok((res.value[0], res.err[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn identity_and_diagonal() {
        let m = CovarianceModel::diagonal(&[1.0, 1.0]).unwrap();
        assert_eq!(m.eigenvalues(), &[1.0, 1.0]);
        assert_eq!(m.rank(), 2);
        let m = CovarianceModel::diagonal(&[4.0, 1.0, 0.0]).unwrap();
        assert_eq!(m.eigenvalues(), &[4.0, 1.0, 0.0]);
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn two_by_two_eigensolve() {
        // Oracle: characteristic polynomial x^2 - 4x + 3 by hand.
        let m = CovarianceModel::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!(close(m.eigenvalues()[0], 3.0, 1e-14));
        assert!(close(m.eigenvalues()[1], 1.0, 1e-14));
        let v = m.eigenvectors();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[(0, 0)].abs() - s).abs() < 1e-14 && (v[(0, 0)] - v[(1, 0)]).abs() < 1e-14);
        assert!((v[(0, 1)] + v[(1, 1)]).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(matches!(CovarianceModel::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]), Err(Error::NotSymmetric(_))));
        assert!(matches!(CovarianceModel::diagonal(&[1.0, -1e-3]), Err(Error::NegativeEigenvalue(_))));
        let m = CovarianceModel::diagonal(&[1.0, -1e-11]).unwrap();
        assert_eq!(m.eigenvalues()[1], 0.0);
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn h_vector_examples() {
        let m = CovarianceModel::diagonal(&[4.0, 1.0]).unwrap();
        let h = m.h_vector(&DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!((h.ambient[0] - 2.0).abs() < 1e-15 && h.ambient[1].abs() < 1e-15);
        assert_eq!(h.norm(), 1.0);
        assert!((h.hat(&m, &DVector::from_vec(vec![3.0, 7.0])) - 1.5).abs() < 1e-15);

        // Oracle: ‖ĥ‖²_{L²(γ)} by one-dimensional Gauss–Hermite in x₁.
        let gh = GaussRule::hermite(20).unwrap();
        let l2 = gh.integrate(|u| {
            let x = DVector::from_vec(vec![2.0 * u, 0.0]);
            h.hat(&m, &x).powi(2)
        });
        assert!((l2 - 1.0).abs() < 1e-13);

        let h = m.h_vector(&DVector::from_vec(vec![0.0, 3.0])).unwrap();
        assert!((h.ambient[1] - 3.0).abs() < 1e-15);
        assert!((h.norm() - 3.0).abs() < 1e-15);
        // ⟨Qw, w⟩ with w = Q⁻¹h.
        let w = [h.ambient[0] / 4.0, h.ambient[1] / 1.0];
        assert!((4.0 * w[0] * w[0] + w[1] * w[1] - 9.0).abs() < 1e-13);

        let zero = m.h_vector(&DVector::zeros(2)).unwrap();
        assert_eq!(zero.norm(), 0.0);
        assert_eq!(zero.ambient, DVector::zeros(2));
    }

    #[test]
    fn kernel_components_are_rejected() {
        let m = CovarianceModel::diagonal(&[1.0, 0.0]).unwrap();
        assert!(m.h_from_ambient(&DVector::from_vec(vec![1.0, 0.0])).is_ok());
        assert!(matches!(m.h_from_ambient(&DVector::from_vec(vec![1.0, 1e-3])), Err(Error::NotInCameronMartin(_))));
    }

    #[test]
    fn gaussian_integrals() {
        let m = CovarianceModel::diagonal(&[4.0, 1.0, 0.0]).unwrap();
        let spec = QuadratureSpec::default();
        let (one, _) = integrate_gaussian(&m, |_| 1.0, &spec).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
        let (lin, _) = integrate_gaussian(&m, |x| 3.0 * x[0] - x[1] + 2.0 * x[2], &spec).unwrap();
        assert!(lin.abs() < 1e-12);
        let (tr, _) = integrate_gaussian(&m, |x| x.norm_squared(), &spec).unwrap();
        assert!((tr - 5.0).abs() < 1e-12, "{tr}");
    }

    #[test]
    fn qmc_engine_for_high_rank() {
        let diag: Vec<f64> = (0..6).map(|i| 1.0 + i as f64 * 0.5).collect();
        let m = CovarianceModel::diagonal(&diag).unwrap();
        let spec = QuadratureSpec { qmc_log2_points: 14, ..QuadratureSpec::default() };
        let (tr, err) = integrate_gaussian(&m, |x| x.norm_squared(), &spec).unwrap();
        let exact: f64 = diag.iter().sum();
        assert!((tr - exact).abs() < 3.0 * err + 1e-3, "{tr} vs {exact} (err {err})");
        let (one, _) = integrate_gaussian(&m, |_| 1.0, &spec).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        let spec = QuadratureSpec { gh_order: 1, ..QuadratureSpec::default() };
        assert!(matches!(spec.validate(), Err(Error::SpecInvalid(_))));
        let spec = QuadratureSpec { qmc_replicates: 1, ..QuadratureSpec::default() };
        assert!(spec.validate().is_err());
    }
}
