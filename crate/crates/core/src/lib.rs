//! Numerical Mehler semigroup on `R^n` with a possibly degenerate Gaussian
//! measure, together with resolvents, H-derivative formulas and empirical
//! Hölder and Zygmund seminorm estimators.

pub mod constants;
pub mod error;
pub mod fields;
pub mod gaussian;
pub mod profile;
pub mod quadrature;
pub mod ridge;
pub mod semigroup;
pub mod seminorms;
pub mod sobol;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use fields::{Modulation, ScalarField, TimeField};
pub use gaussian::{CovarianceModel, HVector, QuadratureSpec};
pub use profile::Profile;
pub use semigroup::{Mehler, Order, SemigroupEvaluation};
pub use seminorms::{DesignParams, SampleDesign, SeminormEstimate};
pub use solver::{MeshParams, Solver};
pub use tensor::{Normed, Tensor3};
