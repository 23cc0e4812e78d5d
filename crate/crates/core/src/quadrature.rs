//! One-dimensional quadrature: Gauss rules built from three-term recurrences,
//! the 17-point Gauss–Kronrod panel with its embedded 8-point Gauss rule, and
//! a small adaptive driver built on that panel.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Nodes and weights of an interpolatory rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss rule for the weight whose monic orthogonal polynomials satisfy
    /// `p_{k+1} = (x - a_k) p_k - b_k p_{k-1}`; `b[k-1]` holds `b_k` and
    /// `mu0` is the total mass of the weight.
    pub fn from_recurrence(a: &[f64], b: &[f64], mu0: f64) -> Result<Self> {
        let n = a.len();
        if n == 0 || b.len() + 1 < n {
            return Err(Error::SpecInvalid(format!(
                "recurrence needs n >= 1 diagonal and n - 1 off-diagonal terms (got {}, {})",
                a.len(),
                b.len()
            )));
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            jac[(i, i)] = a[i];
            if i + 1 < n {
                let s = b[i].sqrt();
                jac[(i, i + 1)] = s;
                jac[(i + 1, i)] = s;
            }
        }
        let eig = SymmetricEigen::new(jac);
        let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        nodes.sort_by(|x, y| x.total_cmp(y));

        // Newton polish on the monic recurrence; the eigensolver is only
        // accurate to a few ulps times the spectral radius.
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let (p, dp) = monic_eval(a, b, *x);
                if dp == 0.0 || !p.is_finite() || !dp.is_finite() {
                    break;
                }
                let step = p / dp;
                *x -= step;
                if step.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
        }

        let weights = nodes
            .iter()
            .map(|&x| {
                let mut q_prev = 0.0;
                let mut q = 1.0 / mu0.sqrt();
                let mut sum = q * q;
                for k in 0..n - 1 {
                    let sb_next = b[k].sqrt();
                    let sb = if k == 0 { 0.0 } else { b[k - 1].sqrt() };
                    let q_next = ((x - a[k]) * q - sb * q_prev) / sb_next;
                    q_prev = q;
                    q = q_next;
                    sum += q * q;
                }
                1.0 / sum
            })
            .collect();
        Ok(Self { nodes, weights })
    }

    /// Gauss–Legendre on `[-1, 1]`.
    pub fn legendre(n: usize) -> Result<Self> {
        check_order(n)?;
        let a = vec![0.0; n];
        let b: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                k * k / (4.0 * k * k - 1.0)
            })
            .collect();
        Self::from_recurrence(&a, &b, 2.0)
    }

    /// Gauss–Hermite for the standard normal density (weights sum to one).
    pub fn hermite(n: usize) -> Result<Self> {
        check_order(n)?;
        let a = vec![0.0; n];
        let b: Vec<f64> = (1..n).map(|k| k as f64).collect();
        Self::from_recurrence(&a, &b, 1.0)
    }

    /// Gauss–Jacobi on `[0, 1]` for the weight `u^beta`, `beta > -1`.
    pub fn jacobi_unit(n: usize, beta: f64) -> Result<Self> {
        check_order(n)?;
        if !(beta > -1.0) || !beta.is_finite() {
            return Err(Error::SpecInvalid(format!("Jacobi exponent {beta} must exceed -1")));
        }
        // Jacobi weight (1 + x)^beta on [-1, 1], then u = (1 + x) / 2.
        let a: Vec<f64> = (0..n)
            .map(|k| {
                let k = k as f64;
                let s = 2.0 * k + beta;
                if k == 0.0 {
                    beta / (beta + 2.0)
                } else {
                    beta * beta / (s * (s + 2.0))
                }
            })
            .collect();
        let b: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                let s = 2.0 * k + beta;
                4.0 * k * k * (k + beta) * (k + beta) / (s * s * (s + 1.0) * (s - 1.0))
            })
            .collect();
        let mu0 = (2.0f64).powf(beta + 1.0) / (beta + 1.0);
        let rule = Self::from_recurrence(&a, &b, mu0)?;
        let scale = (2.0f64).powf(-beta - 1.0);
        Ok(Self { nodes: rule.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect(), weights: rule.weights.iter().map(|w| w * scale).collect() })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 || n > 400 {
        return Err(Error::SpecInvalid(format!("rule order {n} outside 1..=400")));
    }
    Ok(())
}

fn monic_eval(a: &[f64], b: &[f64], x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    for k in 0..a.len() {
        let bk = if k == 0 { 0.0 } else { b[k - 1] };
        let p_next = (x - a[k]) * p - bk * p_prev;
        let d_next = p + (x - a[k]) * d - bk * d_prev;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// Nonnegative half of the 17-point Kronrod rule (node, weight); node 0 first.
pub const KRONROD17: [(f64, f64); 9] = [
    (0.0, 0.184_446_405_744_691_643_528_971),
    (0.183_434_642_495_649_804_939_476_1, 0.181_400_025_068_034_643_061_748_5),
    (0.360_701_097_928_131_957_192_548_6, 0.172_070_608_555_211_311_857_294_9),
    (0.525_532_409_916_328_985_817_739, 0.156_652_606_168_188_400_490_248_1),
    (0.672_354_070_945_158_677_156_310_7, 0.136_263_109_255_172_215_262_338_7),
    (0.796_666_477_413_626_739_591_553_9, 0.111_646_370_826_839_613_222_108_2),
    (0.894_120_906_847_456_421_948_361, 0.082_482_298_931_358_330_688_625_19),
    (0.960_289_856_497_536_231_683_560_9, 0.049_439_395_002_139_308_500_363_97),
    (0.993_379_875_881_716_155_935_888_1, 0.017_822_383_320_710_355_152_786_96),
];

/// Weights of the embedded 8-point Gauss rule at the odd Kronrod nodes.
pub const GAUSS8: [f64; 4] = [
    0.362_683_783_378_361_982_965_150_4,
    0.313_706_645_877_887_287_337_962_2,
    0.222_381_034_453_374_470_544_356,
    0.101_228_536_290_376_259_152_531_4,
];

/// One node of a Kronrod panel mapped to `[a, b]`, with both weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelNode {
    pub x: f64,
    pub kronrod: f64,
    pub gauss: f64,
}

/// The 17 nodes of the Kronrod panel on `[a, b]`.
pub fn kronrod_nodes(a: f64, b: f64) -> [PanelNode; 17] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [PanelNode { x: c, kronrod: KRONROD17[0].1 * h, gauss: 0.0 }; 17];
    for j in 1..9 {
        let (xj, wk) = KRONROD17[j];
        let wg = if j % 2 == 1 { GAUSS8[j / 2] * h } else { 0.0 };
        out[2 * j - 1] = PanelNode { x: c - h * xj, kronrod: wk * h, gauss: wg };
        out[2 * j] = PanelNode { x: c + h * xj, kronrod: wk * h, gauss: wg };
    }
    out
}

/// Panel integral with the QUADPACK-style error heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelEstimate {
    pub value: f64,
    pub err: f64,
}

/// Error heuristic from the Kronrod/Gauss difference and the panel's
/// mean absolute deviation `resasc`.
pub fn kronrod_error(k: f64, g: f64, resasc: f64) -> f64 {
    let diff = (k - g).abs();
    if resasc > 0.0 && diff > 0.0 {
        resasc * (200.0 * diff / resasc).powf(1.5).min(1.0)
    } else {
        diff
    }
}

pub fn kronrod17(mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> PanelEstimate {
    let nodes = kronrod_nodes(a, b);
    let mut vals = [0.0; 17];
    let (mut k, mut g) = (0.0, 0.0);
    for (v, n) in vals.iter_mut().zip(&nodes) {
        *v = f(n.x);
        k += n.kronrod * *v;
        g += n.gauss * *v;
    }
    let mean = k / (b - a);
    let resasc: f64 = vals.iter().zip(&nodes).map(|(v, n)| n.kronrod * (v - mean).abs()).sum();
    PanelEstimate { value: k, err: kronrod_error(k, g, resasc.abs()) }
}

/// Globally adaptive bisection with Kronrod panels.
pub fn adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, epsabs: f64, epsrel: f64, max_panels: usize) -> Result<PanelEstimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument("adaptive quadrature needs a finite interval".into()));
    }
    let mut panels = vec![(a, b, kronrod17(&mut f, a, b))];
    loop {
        let value: f64 = panels.iter().map(|p| p.2.value).sum();
        let err: f64 = panels.iter().map(|p| p.2.err).sum();
        if err <= epsabs.max(epsrel * value.abs()) {
            return Ok(PanelEstimate { value, err });
        }
        if panels.len() >= max_panels {
            return Err(Error::ToleranceNotMet(format!("adaptive quadrature stopped at {} panels with error {err:e}", panels.len())));
        }
        let worst = panels.iter().enumerate().max_by(|x, y| x.1 .2.err.total_cmp(&y.1 .2.err)).map(|(i, _)| i).unwrap_or(0);
        let (lo, hi, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        panels.push((lo, mid, kronrod17(&mut f, lo, mid)));
        panels.push((mid, hi, kronrod17(&mut f, mid, hi)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let r = GaussRule::legendre(16).unwrap();
        for k in 0..32 {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let got = r.integrate(|x| x.powi(k));
            assert!((got - exact).abs() < 1e-14, "k={k}: {got} vs {exact}");
        }
    }

    #[test]
    fn hermite_reproduces_normal_moments() {
        let r = GaussRule::hermite(40).unwrap();
        // E[X^{2k}] = (2k-1)!!
        let mut dfact = 1.0;
        for k in 0..20 {
            if k > 0 {
                dfact *= (2 * k - 1) as f64;
            }
            let got = r.integrate(|x| x.powi(2 * k));
            assert!((got / dfact - 1.0).abs() < 1e-11, "k={k}: {got} vs {dfact}");
            assert!(r.integrate(|x| x.powi(2 * k + 1)).abs() < 1e-9 * dfact.max(1.0));
        }
    }

    #[test]
    fn jacobi_unit_moments() {
        for &beta in &[-0.5, 0.0, 0.3, 0.5, 0.7, 2.0] {
            let r = GaussRule::jacobi_unit(12, beta).unwrap();
            for k in 0..24 {
                let exact = 1.0 / (beta + k as f64 + 1.0);
                let got = r.integrate(|u| u.powi(k));
                assert!((got - exact).abs() < 1e-13, "beta={beta} k={k}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn kronrod_table_exact_to_degree_25() {
        let nodes = kronrod_nodes(-1.0, 1.0);
        for k in 0..=25 {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let got: f64 = nodes.iter().map(|n| n.kronrod * n.x.powi(k)).sum();
            assert!((got - exact).abs() < 1e-14, "kronrod k={k}");
            if k <= 15 {
                let g: f64 = nodes.iter().map(|n| n.gauss * n.x.powi(k)).sum();
                assert!((g - exact).abs() < 1e-14, "gauss k={k}");
            }
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = adaptive(|x: f64| x.sqrt().recip(), 0.0, 1.0, 1e-9, 1e-9, 400);
        // 1/sqrt(x) is integrable but the midpoint-free rule never hits 0.
        let r = r.unwrap();
        assert!((r.value - 2.0).abs() < 1e-7, "{}", r.value);
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(GaussRule::legendre(0).is_err());
        assert!(GaussRule::jacobi_unit(4, -1.5).is_err());
    }
}
