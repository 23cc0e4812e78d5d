//! Symmetric 3-tensors on `R^r` and the operator norms used for H-derivatives.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Safety factor applied to power-iteration norms, which are lower bounds.
pub const POWER_ITERATION_SAFETY: f64 = 1.05;
const RESTARTS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim * dim] }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    t.data[(i * dim + j) * dim + k] = f(i, j, k);
                }
            }
        }
        t
    }

    /// `a · v ⊗ v ⊗ v`.
    pub fn rank_one(v: &DVector<f64>, a: f64) -> Self {
        Self::from_fn(v.len(), |i, j, k| a * v[i] * v[j] * v[k])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Average over the six index permutations.
    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.dim, |i, j, k| {
            (self.get(i, j, k) + self.get(i, k, j) + self.get(j, i, k) + self.get(j, k, i) + self.get(k, i, j) + self.get(k, j, i)) / 6.0
        })
    }

    /// Largest deviation from full symmetry.
    pub fn asymmetry(&self) -> f64 {
        let s = self.symmetrized();
        self.data.iter().zip(&s.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    /// `T(x, x, x)`.
    pub fn cubic(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let xij = x[i] * x[j];
                for k in 0..n {
                    acc += self.data[(i * n + j) * n + k] * xij * x[k];
                }
            }
        }
        acc
    }

    /// `T(·, x, x)`.
    fn contract2(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        acc += self.data[(i * n + j) * n + k] * x[j] * x[k];
                    }
                }
                acc
            })
            .collect()
    }

    /// Operator norm `sup_{|x|=1} |T(x,x,x)|` of a symmetric tensor. Exact up
    /// to rounding for `r ≤ 2`; otherwise a power-iteration lower bound times
    /// [`POWER_ITERATION_SAFETY`].
    pub fn norm(&self) -> f64 {
        match self.dim {
            0 => 0.0,
            1 => self.data[0].abs(),
            2 => {
                let g = |th: f64| self.cubic(&[th.cos(), th.sin()]).abs();
                let n = 720;
                let step = std::f64::consts::PI / n as f64;
                let (mut best_th, mut best) = (0.0, 0.0);
                for i in 0..n {
                    let th = i as f64 * step;
                    let v = g(th);
                    if v > best {
                        best = v;
                        best_th = th;
                    }
                }
                let (mut a, mut b) = (best_th - step, best_th + step);
                let gr = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..80 {
                    let c = b - gr * (b - a);
                    let d = a + gr * (b - a);
                    if g(c) > g(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                }
                best.max(g(0.5 * (a + b)))
            }
            n => {
                let mut rng = ChaCha8Rng::seed_from_u64(0x7e45_0a3d);
                let mut best: f64 = 0.0;
                for _ in 0..RESTARTS {
                    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    normalize(&mut x);
                    for _ in 0..200 {
                        let mut y = self.contract2(&x);
                        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if ny == 0.0 {
                            break;
                        }
                        normalize(&mut y);
                        let delta: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
                        x = y;
                        if delta < 1e-14 {
                            break;
                        }
                    }
                    best = best.max(self.cubic(&x).abs());
                }
                best * POWER_ITERATION_SAFETY
            }
        }
    }
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// Spectral norm of a symmetric matrix.
pub fn sym_norm(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        0 => 0.0,
        1 => m[(0, 0)].abs(),
        2 => {
            let (a, b, d) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            mean.abs() + rad
        }
        _ => SymmetricEigen::new(0.5 * (m + m.transpose())).eigenvalues.amax(),
    }
}

/// Averages a matrix with its transpose.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// A value with a norm in which combinations `Σ c_i F_i` can be measured;
/// the seminorm estimators are generic over it.
pub trait Normed: Clone + Send + Sync {
    fn combination_norm(terms: &[(f64, &Self)]) -> f64;

    fn norm_of(&self) -> f64 {
        Self::combination_norm(&[(1.0, self)])
    }
}

impl Normed for f64 {
    fn combination_norm(terms: &[(f64, &Self)]) -> f64 {
        terms.iter().map(|(c, v)| c * **v).sum::<f64>().abs()
    }
}

impl Normed for DVector<f64> {
    fn combination_norm(terms: &[(f64, &Self)]) -> f64 {
        let mut acc = DVector::zeros(terms[0].1.len());
        for (c, v) in terms {
            acc.axpy(*c, v, 1.0);
        }
        acc.norm()
    }
}

impl Normed for DMatrix<f64> {
    fn combination_norm(terms: &[(f64, &Self)]) -> f64 {
        let (r, c) = terms[0].1.shape();
        let mut acc = DMatrix::zeros(r, c);
        for (k, v) in terms {
            acc += *v * *k;
        }
        sym_norm(&acc)
    }
}

impl Normed for Tensor3 {
    fn combination_norm(terms: &[(f64, &Self)]) -> f64 {
        let mut acc = Tensor3::zeros(terms[0].1.dim());
        for (c, v) in terms {
            acc.axpy(*c, v);
        }
        acc.norm()
    }
}
