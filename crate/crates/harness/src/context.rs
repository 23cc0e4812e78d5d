use std::sync::Arc;

use mehler_core::constants::HolderConstants;
use mehler_core::gaussian::mix_seed;
use mehler_core::solver::ridge_knots;
use mehler_core::{CovarianceModel, HVector, Mehler, SampleDesign, Solver};
use nalgebra::{DMatrix, DVector};

use crate::config::Config;
use crate::corpus::{self, Entry};
use crate::{HarnessError, Result};

/// Everything a suite needs, built once from a [`Config`].
#[derive(Debug)]
pub struct Context {
    pub config: Config,
    pub model: CovarianceModel,
    pub solver: Solver,
    pub corpus: Vec<Entry>,
    /// Design for semigroup maps.
    pub design: SampleDesign,
    /// Smaller design for resolvent and Duhamel maps.
    pub resolvent_design: SampleDesign,
    constants: Vec<HolderConstants>,
}

impl Context {
    pub fn new(config: Config) -> Result<Self> {
        config.validate()?;
        let cov = &config.covariance;
        let q = match (&cov.diagonal, &cov.matrix) {
            (Some(d), None) => DMatrix::from_diagonal(&DVector::from_column_slice(d)),
            (None, Some(rows)) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(HarnessError::Config("covariance.matrix must be square".into()));
                }
                DMatrix::from_fn(n, n, |i, j| rows[i][j])
            }
            _ => unreachable!("validated"),
        };
        let model = match cov.zero_threshold {
            Some(th) => CovarianceModel::with_threshold(&q, th)?,
            None => CovarianceModel::new(&q)?,
        };
        let seed = config.suite.seed;
        let mehler = Arc::new(Mehler::new(model.clone(), config.quadrature.spec(mix_seed(seed, 1)))?);
        let solver = Solver::new(mehler, config.quadrature.mesh())?;
        let corpus = config.corpus.iter().map(|(name, e)| corpus::build(&model, name, e)).collect::<Result<Vec<_>>>()?;
        let design = SampleDesign::new(&model, &config.suite.design.params(seed))?;
        let resolvent_design = SampleDesign::new(&model, &config.suite.resolvent_design.params(seed))?;
        let constants = config.suite.alphas.iter().map(|&a| HolderConstants::derive(a)).collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { config, model, solver, corpus, design, resolvent_design, constants })
    }

    pub fn mehler(&self) -> &Mehler {
        self.solver.mehler()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.config.suite.alphas
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.config.suite.lambdas
    }

    pub fn times(&self) -> Vec<f64> {
        self.config.suite.t_grid.values()
    }

    /// `C_{k,α}` for a configured `α`.
    pub fn constants(&self, alpha: f64) -> HolderConstants {
        self.constants
            .iter()
            .find(|k| k.alpha == alpha)
            .copied()
            .unwrap_or_else(|| HolderConstants::derive(alpha).expect("alpha validated in (0, 1)"))
    }

    pub fn knots(&self) -> Vec<f64> {
        let q = &self.config.quadrature;
        ridge_knots(q.knot_fine, q.knot_coarse, q.knot_reach)
    }

    /// Whitened unit basis of H.
    pub fn h_basis(&self) -> Vec<HVector> {
        let r = self.model.rank();
        (0..r)
            .map(|i| {
                let z = DVector::from_fn(r, |j, _| if i == j { 1.0 } else { 0.0 });
                self.model.h_vector(&z).expect("basis has rank length")
            })
            .collect()
    }

    pub fn entry(&self, name: &str) -> Option<&Entry> {
        self.corpus.iter().find(|e| e.name == name)
    }

    /// Smallest `‖h‖_H` used by a design, for turning evaluation errors into
    /// quotient errors.
    pub fn min_step(design: &SampleDesign) -> f64 {
        let s = design.ladder().iter().copied().fold(f64::INFINITY, f64::min);
        let d = design.directions().iter().map(|h| h.norm()).fold(f64::INFINITY, f64::min);
        s * d
    }
}
