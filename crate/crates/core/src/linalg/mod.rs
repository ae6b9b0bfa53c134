//! Sparse storage and the linear solvers behind the Green operator.

mod banded;
mod cg;
mod sparse;

pub use banded::BandedLu;
pub use cg::ConjugateGradient;
pub use sparse::{SparseBuilder, SparseMatrix};
