//! Discrete Green operators and pointwise estimates for nonnegative
//! solutions of `-L u + xi psi(u) = g` with Dirichlet data.

pub mod domain;
pub mod error;
pub mod estimates;
pub mod f64;
pub mod field;
pub mod green;
pub mod linalg;
pub mod nonlinearity;
pub mod phi_transform;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod semilinear;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use domain::{DomainChain, Grid, OperatorSpec, Site};
pub use estimates::{EstimateReport, EstimateSummary};
pub use field::{Field, FieldRole};
pub use green::GreenSystem;
pub use nonlinearity::{FamilyTag, PsiSpec};
pub use phi_transform::PhiTransform;
pub use semilinear::{SolveConfig, SolveResult};
