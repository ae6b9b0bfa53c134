//! Nodal fields over a grid.

use serde::{Deserialize, Serialize};

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// What a field stands for in a problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    BoundaryData,
    Source,
    Solution,
    Potential,
}

/// One value per active node of a grid, in node order.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    values: Vec<T>,
    role: FieldRole,
}

impl<T: Scalar> Field<T> {
    pub fn new(role: FieldRole, values: Vec<T>) -> Self {
        Self { values, role }
    }

    /// Samples `f` at interior nodes and at the trace points of boundary nodes.
    pub fn from_fn(grid: &Grid<T>, role: FieldRole, f: impl Fn([T; 2]) -> T) -> Self {
        let values = (0..grid.len())
            .map(|n| {
                if grid.is_interior(n) {
                    f(grid.coords(n))
                } else {
                    f(grid.trace_point(n))
                }
            })
            .collect();
        Self { values, role }
    }

    pub fn constant(grid: &Grid<T>, role: FieldRole, value: T) -> Self {
        Self {
            values: vec![value; grid.len()],
            role,
        }
    }

    pub fn zeros(grid: &Grid<T>, role: FieldRole) -> Self {
        Self::constant(grid, role, T::zero())
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn with_role(mut self, role: FieldRole) -> Self {
        self.role = role;
        self
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, node: usize) -> T {
        self.values[node]
    }

    /// Pointwise `factor * self`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            values: self.values.iter().map(|v| *v * factor).collect(),
            role: self.role,
        }
    }

    /// Pointwise `f(self)`.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            values: self.values.iter().map(|v| f(*v)).collect(),
            role: self.role,
        }
    }

    /// Values of the nodes listed in `nodes`.
    pub fn gather(&self, nodes: &[usize]) -> Vec<T> {
        nodes.iter().map(|&n| self.values[n]).collect()
    }

    pub fn check_len(&self, grid: &Grid<T>, what: &str) -> Result<()> {
        if self.values.len() == grid.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what} has {} values, grid has {} nodes",
                self.values.len(),
                grid.len()
            )))
        }
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        match self.values.iter().find(|v| !v.is_finite()) {
            None => Ok(()),
            Some(v) => Err(Error::Domain {
                what,
                value: v.to_f64_lossy(),
            }),
        }
    }

    /// Fails on a negative value among `nodes`.
    pub fn check_nonnegative(&self, nodes: &[usize], what: &'static str) -> Result<()> {
        self.check_finite(what)?;
        match nodes.iter().map(|&n| self.values[n]).find(|v| *v < T::zero()) {
            None => Ok(()),
            Some(v) => Err(Error::Domain {
                what,
                value: v.to_f64_lossy(),
            }),
        }
    }

    /// `true` when `self <= other + tol` at every node.
    pub fn dominated_by(&self, other: &Self, tol: T) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| *a <= *b + tol)
    }
}
