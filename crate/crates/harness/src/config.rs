//! TOML run configuration. Unknown keys are rejected everywhere.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mehler_core::seminorms::DesignParams;
use mehler_core::{MeshParams, QuadratureSpec};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub covariance: CovarianceConfig,
    #[serde(default)]
    pub corpus: BTreeMap<String, CorpusEntry>,
    #[serde(default)]
    pub suite: SuiteConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Exactly one of `diagonal` or `matrix`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceConfig {
    pub diagonal: Option<Vec<f64>>,
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Relative eigenvalue threshold below which a direction is degenerate.
    pub zero_threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorpusEntry {
    Constant { value: f64 },
    Ridge { direction: Vec<f64>, profile: ProfileConfig },
    Linear { coefficients: Vec<f64> },
    Quadratic { coefficients: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    AbsClipPow { exponent: f64 },
    Sin { frequency: f64 },
    SmoothBump,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

impl TimeGrid {
    /// Log-spaced values from `from` to `to`.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.from];
        }
        let (a, b) = (self.from.ln(), self.to.ln());
        let last = self.count - 1;
        (0..self.count)
            .map(|i| match i {
                0 => self.from,
                i if i == last => self.to,
                i => (a + (b - a) * i as f64 / last as f64).exp(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub points: usize,
    pub directions: usize,
    pub m_lo: i32,
    pub m_hi: i32,
}

impl DesignConfig {
    pub fn params(&self, seed: u64) -> DesignParams {
        DesignParams { points: self.points, directions: self.directions, m_lo: self.m_lo, m_hi: self.m_hi, seed }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub t_grid: TimeGrid,
    /// Horizon `T` of the parabolic suite.
    pub horizon: f64,
    pub seed: u64,
    /// Multiplicative slack on right-hand sides.
    pub slack: f64,
    /// Multiple of the propagated error estimate added to right-hand sides.
    pub err_multiple: f64,
    /// Emit the split-piece diagnostics of the Schauder and Zygmund suites.
    pub diagnostics: bool,
    /// Design for maps that are cheap to evaluate (semigroup suites).
    pub design: DesignConfig,
    /// Design for resolvent and Duhamel maps.
    pub resolvent_design: DesignConfig,
    pub tolerances: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            alphas: vec![0.3, 0.5, 0.7],
            lambdas: vec![0.5, 1.0, 2.0],
            t_grid: TimeGrid { from: 1e-3, to: 5.0, count: 10 },
            horizon: 1.0,
            seed: 42,
            slack: 1e-3,
            err_multiple: 3.0,
            diagnostics: true,
            design: DesignConfig { points: 64, directions: 32, m_lo: 0, m_hi: 10 },
            resolvent_design: DesignConfig { points: 6, directions: 3, m_lo: 0, m_hi: 10 },
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative errors of the derivative formulas against finite differences.
    pub gradient: f64,
    pub hessian: f64,
    pub third: f64,
    pub closed_form: f64,
    pub resolvent_identity: f64,
    /// Per-evaluation tolerance; the semigroup law is checked at twice this.
    pub semigroup_law: f64,
    pub resolvent_equation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gradient: 1e-5,
            hessian: 1e-4,
            third: 1e-3,
            closed_form: 1e-8,
            resolvent_identity: 1e-4,
            semigroup_law: 1e-9,
            resolvent_equation: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub gh_order: usize,
    pub gh_check_order: usize,
    pub gh_max_dims: usize,
    pub qmc_log2_points: u32,
    pub qmc_replicates: usize,
    pub ridge_reduction: bool,
    pub rel_tol: f64,
    pub split: f64,
    pub grading: f64,
    pub max_width: f64,
    /// Knot spacing of tabulated resolvent profiles near the origin and further out.
    pub knot_fine: f64,
    pub knot_coarse: f64,
    pub knot_reach: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        let m = MeshParams::default();
        Self {
            gh_order: q.gh_order,
            gh_check_order: q.gh_check_order,
            gh_max_dims: q.gh_max_dims,
            qmc_log2_points: q.qmc_log2_points,
            qmc_replicates: q.qmc_replicates,
            ridge_reduction: q.ridge_reduction,
            rel_tol: m.rel_tol,
            split: m.split,
            grading: m.grading,
            max_width: m.max_width,
            knot_fine: 0.01,
            knot_coarse: 0.05,
            knot_reach: 24.0,
        }
    }
}

impl QuadratureConfig {
    pub fn spec(&self, seed: u64) -> QuadratureSpec {
        QuadratureSpec {
            gh_order: self.gh_order,
            gh_check_order: self.gh_check_order,
            gh_max_dims: self.gh_max_dims,
            qmc_log2_points: self.qmc_log2_points,
            qmc_replicates: self.qmc_replicates,
            seed,
            ridge_reduction: self.ridge_reduction,
        }
    }

    pub fn mesh(&self) -> MeshParams {
        MeshParams { split: self.split, rel_tol: self.rel_tol, grading: self.grading, max_width: self.max_width }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
    /// Also write `curves.csv` with `(t, lhs, rhs)` rows.
    pub curves: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("reports"), format: Format::Json, curves: true }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Config = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        match (&self.covariance.diagonal, &self.covariance.matrix) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return bad("[covariance] needs exactly one of `diagonal` or `matrix`".into()),
        }
        let s = &self.suite;
        if s.alphas.is_empty() || s.lambdas.is_empty() {
            return bad("suite.alphas and suite.lambdas must be nonempty".into());
        }
        if let Some(a) = s.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad(format!("alpha {a} is outside (0, 1)"));
        }
        if let Some(l) = s.lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return bad(format!("lambda {l} is not positive"));
        }
        let g = &s.t_grid;
        if g.count == 0 || !(g.from > 0.0) || !(g.to >= g.from) || !g.to.is_finite() {
            return bad("suite.t_grid needs 0 < from <= to and count >= 1".into());
        }
        if !(s.horizon >= 0.0 && s.horizon.is_finite()) {
            return bad(format!("suite.horizon {} is not a nonnegative number", s.horizon));
        }
        if !(s.slack >= 0.0) || !(s.err_multiple >= 0.0) {
            return bad("suite.slack and suite.err_multiple must be nonnegative".into());
        }
        for d in [&s.design, &s.resolvent_design] {
            if d.directions == 0 || d.m_lo > d.m_hi {
                return bad("designs need at least one direction and m_lo <= m_hi".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [covariance]
        diagonal = [4.0, 1.0, 0.0]

        [corpus.cusp]
        kind = "ridge"
        direction = [0.5, 0.0, 0.0]
        profile = { shape = "abs_clip_pow", exponent = 0.5 }

        [corpus.one]
        kind = "constant"
        value = 1.0
    "#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = Config::from_toml(MINIMAL).unwrap();
        assert_eq!(c.corpus.len(), 2);
        assert_eq!(c.suite.alphas, vec![0.3, 0.5, 0.7]);
        assert_eq!(c.suite.design.points, 64);
        assert_eq!(c.output.format, Format::Json);
        let ts = c.suite.t_grid.values();
        assert_eq!(ts.len(), 10);
        assert!((ts[0] - 1e-3).abs() < 1e-15 && (ts[9] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_errors() {
        for extra in ["[suite]\nalpha = [0.5]", "[output]\nfromat = \"csv\"", "[corpus.x]\nkind = \"constant\"\nvalue = 1.0\ncolor = 2"] {
            let text = format!("{MINIMAL}\n{extra}");
            assert!(Config::from_toml(&text).is_err(), "{extra}");
        }
    }

    #[test]
    fn invalid_values_are_errors() {
        for extra in ["[suite]\nalphas = [1.0]", "[suite]\nlambdas = []", "[suite]\nslack = -1.0"] {
            assert!(Config::from_toml(&format!("{MINIMAL}\n{extra}")).is_err(), "{extra}");
        }
        assert!(Config::from_toml("[covariance]\n").is_err());
    }
}
