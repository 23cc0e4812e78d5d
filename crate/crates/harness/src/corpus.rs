//! Builds the declared test fields.

use mehler_core::{CovarianceModel, Profile, ScalarField};
use nalgebra::DVector;

use crate::config::{CorpusEntry, ProfileConfig};
use crate::{HarnessError, Result};

#[derive(Debug, Clone)]
pub struct Entry {
    pub name: String,
    pub field: ScalarField,
}

impl Entry {
    /// Bounded with a known sup norm.
    pub fn sup(&self) -> Option<f64> {
        self.field.sup_norm()
    }

    /// Ridge whose direction is invisible to the Cameron–Martin space.
    pub fn is_kernel_ridge(&self) -> bool {
        self.field.as_ridge().is_some_and(|r| r.h_norm() == 0.0)
    }

    /// Bounded with a bounded H-gradient given in closed form.
    pub fn is_c1(&self) -> bool {
        self.sup().is_some() && self.field.grad_sup().is_some() && self.field.has_h_gradient()
    }
}

fn profile(p: &ProfileConfig) -> Result<Profile> {
    Ok(match p {
        ProfileConfig::AbsClipPow { exponent } => Profile::abs_clip_pow(*exponent)?,
        ProfileConfig::Sin { frequency } => Profile::sin(*frequency)?,
        ProfileConfig::SmoothBump => Profile::SmoothBump,
    })
}

fn vector(model: &CovarianceModel, name: &str, v: &[f64]) -> Result<DVector<f64>> {
    if v.len() != model.dim() {
        return Err(HarnessError::Config(format!("corpus.{name}: expected {} coefficients, got {}", model.dim(), v.len())));
    }
    Ok(DVector::from_column_slice(v))
}

pub fn build(model: &CovarianceModel, name: &str, e: &CorpusEntry) -> Result<Entry> {
    let field = match e {
        CorpusEntry::Constant { value } => ScalarField::constant(model, *value),
        CorpusEntry::Ridge { direction, profile: p } => ScalarField::ridge(model, vector(model, name, direction)?, profile(p)?)?,
        CorpusEntry::Linear { coefficients } => ScalarField::linear(model, vector(model, name, coefficients)?)?,
        CorpusEntry::Quadratic { coefficients } => ScalarField::quadratic(model, vector(model, name, coefficients)?)?,
    };
    Ok(Entry { name: name.to_string(), field })
}
