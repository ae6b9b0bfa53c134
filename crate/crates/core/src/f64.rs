//! `f64` instantiations of the generic types.

pub type Grid = crate::domain::Grid<f64>;
pub type DomainChain = crate::domain::DomainChain<f64>;
pub type OperatorSpec = crate::domain::OperatorSpec<f64>;
pub type Field = crate::field::Field<f64>;
pub type GreenSystem = crate::green::GreenSystem<f64>;
pub type PsiSpec = crate::nonlinearity::PsiSpec<f64>;
pub type PsiFamily = crate::nonlinearity::PsiFamily<f64>;
pub type PhiTransform = crate::phi_transform::PhiTransform<f64>;
pub type SolveConfig = crate::semilinear::SolveConfig<f64>;
pub type SolveResult = crate::semilinear::SolveResult<f64>;
pub type EstimateReport = crate::estimates::EstimateReport<f64>;
pub type EstimateSummary = crate::estimates::EstimateSummary<f64>;
pub type EstimateRecord = crate::estimates::EstimateRecord<f64>;
