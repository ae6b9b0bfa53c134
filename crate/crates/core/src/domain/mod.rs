//! Grids standing in for the domain, the discretized operator, and nested
//! exhaustion chains.

mod grid;
mod operator;

pub use grid::{Grid, Lattice, NodeKind, Site};
pub use operator::{
    assemble_operator, check_ellipticity, AssembledOperator, Coefficients, DriftStencil,
    OperatorSpec, Scheme,
};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Increasing sequence of grids on one lattice, each level's closed node set
/// lying inside the next level's interior.
#[derive(Clone, Debug)]
pub struct DomainChain<T> {
    levels: Vec<Grid<T>>,
}

impl<T: Scalar> DomainChain<T> {
    pub fn new(levels: Vec<Grid<T>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidGrid("empty domain chain".into()));
        }
        for (k, w) in levels.windows(2).enumerate() {
            if !w[0].compactly_nested_in(&w[1]) {
                return Err(Error::GridMismatch(format!(
                    "level {k} is not compactly contained in level {}",
                    k + 1
                )));
            }
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[Grid<T>] {
        &self.levels
    }

    pub fn finest(&self) -> &Grid<T> {
        self.levels.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// Chain of `levels` grids: level `k` (0-based) is `grid` with
/// `levels - 1 - k` node layers peeled off, the last level is `grid` itself.
pub fn exhaustion_chain<T: Scalar>(grid: &Grid<T>, levels: usize) -> Result<DomainChain<T>> {
    if levels < 1 {
        return Err(Error::InvalidGrid("a chain needs at least one level".into()));
    }
    let grids = (0..levels)
        .map(|k| grid.peel(levels - 1 - k))
        .collect::<Result<Vec<_>>>()?;
    DomainChain::new(grids)
}
