//! Discrete harmonic extension and Green operator of `-A_h` on a grid.

use serde::{Deserialize, Serialize};

use crate::domain::{assemble_operator, AssembledOperator, DomainChain, Grid, OperatorSpec, Site};
use crate::error::{Error, Result};
use crate::field::{Field, FieldRole};
use crate::linalg::{BandedLu, ConjugateGradient, SparseMatrix};
use crate::scalar::{sup_norm, Scalar};

/// Interior-node count above which `Auto` switches symmetric systems to
/// conjugate gradients.
pub const ITERATIVE_THRESHOLD: usize = 100_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    #[default]
    Auto,
    Banded,
    ConjugateGradient,
}

#[derive(Clone, Debug)]
enum Factorization<T> {
    Banded(BandedLu<T>),
    Cg(ConjugateGradient<T>),
}

/// Factorized `K = -A_h` on the interior of a grid together with the
/// interior-boundary coupling. Immutable once built; solves only read it.
#[derive(Clone)]
pub struct GreenSystem<T> {
    grid: Grid<T>,
    op: OperatorSpec<T>,
    assembled: AssembledOperator<T>,
    factorization: Factorization<T>,
}

impl<T: Scalar> std::fmt::Debug for GreenSystem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GreenSystem")
            .field("nodes", &self.grid.len())
            .field("interior", &self.grid.interior().len())
            .field("operator", &self.op)
            .field(
                "solver",
                &match self.factorization {
                    Factorization::Banded(_) => "banded",
                    Factorization::Cg(_) => "conjugate_gradient",
                },
            )
            .finish()
    }
}

impl<T: Scalar> GreenSystem<T> {
    pub fn new(grid: &Grid<T>, op: &OperatorSpec<T>) -> Result<Self> {
        Self::with_solver(grid, op, SolverChoice::Auto)
    }

    pub fn with_solver(grid: &Grid<T>, op: &OperatorSpec<T>, solver: SolverChoice) -> Result<Self> {
        let assembled = assemble_operator(grid, op)?;
        let k = assembled.interior.scaled(-T::one());
        let use_cg = match solver {
            SolverChoice::Banded => false,
            SolverChoice::ConjugateGradient => true,
            SolverChoice::Auto => {
                grid.interior().len() > ITERATIVE_THRESHOLD && k.is_symmetric(T::tol(1e-13))
            }
        };
        let factorization = if use_cg {
            Factorization::Cg(ConjugateGradient::new(k, T::tol(1e-12))?)
        } else {
            Factorization::Banded(BandedLu::factor(&k)?)
        };
        Ok(Self {
            grid: grid.clone(),
            op: op.clone(),
            assembled,
            factorization,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn operator(&self) -> &OperatorSpec<T> {
        &self.op
    }

    pub fn assembled(&self) -> &AssembledOperator<T> {
        &self.assembled
    }

    /// Interior block `A_I` of the assembled operator.
    pub fn interior_matrix(&self) -> &SparseMatrix<T> {
        &self.assembled.interior
    }

    /// Solves `K x = rhs` for an interior vector.
    pub fn solve_interior(&self, rhs: &[T]) -> Result<Vec<T>> {
        if rhs.len() != self.grid.interior().len() {
            return Err(Error::GridMismatch(format!(
                "right-hand side of length {} for {} interior nodes",
                rhs.len(),
                self.grid.interior().len()
            )));
        }
        let x = match &self.factorization {
            Factorization::Banded(lu) => lu.solve(rhs),
            Factorization::Cg(cg) => cg.solve(rhs)?,
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("non-finite solution".into()));
        }
        Ok(x)
    }

    fn scatter(&self, interior: Vec<T>, boundary: Option<&Field<T>>, role: FieldRole) -> Field<T> {
        let mut values = vec![T::zero(); self.grid.len()];
        for (&n, v) in self.grid.interior().iter().zip(interior) {
            values[n] = v;
        }
        if let Some(f) = boundary {
            for &n in self.grid.boundary() {
                values[n] = f.get(n);
            }
        }
        Field::new(role, values)
    }

    /// `H_D f`: `A_h h = 0` on the interior with `h = f` on the boundary.
    pub fn harmonic_extension(&self, f: &Field<T>) -> Result<Field<T>> {
        f.check_len(&self.grid, "boundary data")?;
        let fb = f.gather(self.grid.boundary());
        if fb.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain {
                what: "boundary data",
                value: f64::NAN,
            });
        }
        let rhs = self.assembled.coupling.mul_vec(&fb);
        let h = self.solve_interior(&rhs)?;
        Ok(self.scatter(h, Some(f), FieldRole::Solution))
    }

    /// `G_D g`: `-A_h u = g` on the interior, `u = 0` on the boundary.
    pub fn green_apply(&self, g: &Field<T>) -> Result<Field<T>> {
        g.check_len(&self.grid, "source")?;
        let gi = g.gather(self.grid.interior());
        if gi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain {
                what: "source",
                value: f64::NAN,
            });
        }
        let u = self.solve_interior(&gi)?;
        Ok(self.scatter(u, None, FieldRole::Potential))
    }

    /// `G_D(., y)`: solves `-A_h u = e_y / w_y` with `w_y` the node weight.
    pub fn green_matrix_column(&self, y: usize) -> Result<Field<T>> {
        let row = self
            .grid
            .interior_row(y)
            .ok_or_else(|| Error::Precondition(format!("node {y} is not an interior node")))?;
        let mut rhs = vec![T::zero(); self.grid.interior().len()];
        rhs[row] = self.grid.weight().recip();
        let u = self.solve_interior(&rhs)?;
        Ok(self.scatter(u, None, FieldRole::Potential))
    }

    /// `S_D(f, g) = H_D f + G_D g` for nonnegative data.
    pub fn s_datum(&self, f: &Field<T>, g: &Field<T>) -> Result<Field<T>> {
        f.check_len(&self.grid, "boundary data")?;
        g.check_len(&self.grid, "source")?;
        f.check_nonnegative(self.grid.boundary(), "boundary data")?;
        g.check_nonnegative(self.grid.interior(), "source")?;
        let h = self.harmonic_extension(f)?;
        let p = self.green_apply(g)?;
        let values = h.values().iter().zip(p.values()).map(|(a, b)| *a + *b).collect();
        Ok(Field::new(FieldRole::Potential, values))
    }

    /// `A_h u` at interior nodes, in interior-row order.
    pub fn apply_operator(&self, u: &Field<T>) -> Result<Vec<T>> {
        u.check_len(&self.grid, "field")?;
        Ok(self.assembled.apply(&self.grid, u.values()))
    }

    /// Largest `|A_h G_D g|` over interior nodes where `g` vanishes.
    pub fn harmonicity_off_support_check(&self, g: &Field<T>) -> Result<T> {
        let u = self.green_apply(g)?;
        let r = self.apply_operator(&u)?;
        Ok(self
            .grid
            .interior()
            .iter()
            .zip(r)
            .filter(|(&n, _)| g.get(n) == T::zero())
            .fold(T::zero(), |m, (_, v)| m.max(v.abs())))
    }

    /// Sampled `sup G_D(x, y) / Gamma(x - y)` with `Gamma = 1` in 1D and
    /// `max(1, -log r)` in 2D, `r` floored at the smallest lattice spacing.
    /// At most `max_columns` columns are sampled, evenly spread over the
    /// interior.
    pub fn gamma_bound_diagnostic(&self, max_columns: usize) -> Result<T> {
        let interior = self.grid.interior();
        let m = interior.len();
        let k = max_columns.clamp(1, m);
        let h = self.grid.spacing();
        let floor = if self.grid.dim() == 1 { h[0] } else { h[0].min(h[1]) };
        let mut best = T::zero();
        let mut last = usize::MAX;
        for i in 0..k {
            let idx = if k == 1 { m / 2 } else { i * (m - 1) / (k - 1) };
            if idx == last {
                continue;
            }
            last = idx;
            let y = interior[idx];
            let col = self.green_matrix_column(y)?;
            let xy = self.grid.coords(y);
            for &x in interior {
                let gamma = if self.grid.dim() == 1 {
                    T::one()
                } else {
                    let xx = self.grid.coords(x);
                    let r = (xx[0] - xy[0]).hypot(xx[1] - xy[1]).max(floor);
                    T::one().max(-r.ln())
                };
                best = best.max(col.get(x) / gamma);
            }
        }
        Ok(best)
    }
}

/// Max discrepancy of `G_D(., y) = G_Omega(., y) - H_D G_Omega(., y)` over the
/// interior of the small grid.
pub fn restriction_identity_check<T: Scalar>(
    small: &GreenSystem<T>,
    big: &GreenSystem<T>,
    y: Site,
) -> Result<T> {
    let (sg, bg) = (small.grid(), big.grid());
    if !sg.nested_in(bg) {
        return Err(Error::GridMismatch(
            "small grid is not nested in the big grid".into(),
        ));
    }
    let ys = sg
        .node_at(y)
        .filter(|&n| sg.is_interior(n))
        .ok_or_else(|| Error::Precondition("y is not interior to the small grid".into()))?;
    let yb = bg.node_at(y).expect("nested grids share interior nodes");
    let g_big = big.green_matrix_column(yb)?;
    let g_small = small.green_matrix_column(ys)?;
    let restricted: Vec<T> = (0..sg.len())
        .map(|n| g_big.get(bg.node_at(sg.site(n)).expect("nested node")))
        .collect();
    let restricted = Field::new(FieldRole::BoundaryData, restricted);
    let h = small.harmonic_extension(&restricted)?;
    Ok(sg.interior().iter().fold(T::zero(), |m, &n| {
        let rhs = restricted.get(n) - h.get(n);
        m.max((g_small.get(n) - rhs).abs())
    }))
}

/// Green function values along an exhaustion chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreenLimitReport<T> {
    /// `G_{D_k}(probe, y)` per level.
    pub values: Vec<T>,
    /// Largest `G_{D_k}(x, y) - G_{D_{k+1}}(x, y)` over consecutive levels and
    /// shared nodes; nonpositive for a monotone chain.
    pub max_decrease: T,
}

impl<T: Scalar> GreenLimitReport<T> {
    pub fn is_monotone(&self, tol: T) -> bool {
        self.max_decrease <= tol && self.values.windows(2).all(|w| w[0] <= w[1] + tol)
    }
}

/// Evaluates `G_{D_k}(probe, y)` on each level of `chain`.
pub fn green_limit_check<T: Scalar>(
    chain: &DomainChain<T>,
    op: &OperatorSpec<T>,
    y: Site,
    probe: Site,
) -> Result<GreenLimitReport<T>> {
    let mut values = Vec::with_capacity(chain.len());
    let mut max_decrease = T::neg_infinity();
    let mut previous: Option<(&Grid<T>, Field<T>)> = None;
    for grid in chain.levels() {
        let sys = GreenSystem::new(grid, op)?;
        let yn = grid
            .node_at(y)
            .filter(|&n| grid.is_interior(n))
            .ok_or_else(|| Error::Precondition("y is not interior to every level".into()))?;
        let col = sys.green_matrix_column(yn)?;
        let pn = grid
            .node_at(probe)
            .ok_or_else(|| Error::Precondition("probe is not a node of every level".into()))?;
        values.push(col.get(pn));
        if let Some((pg, pcol)) = &previous {
            for n in 0..pg.len() {
                let m = grid.node_at(pg.site(n)).expect("chain levels are nested");
                max_decrease = max_decrease.max(pcol.get(n) - col.get(m));
            }
        }
        previous = Some((grid, col));
    }
    if max_decrease == T::neg_infinity() {
        max_decrease = T::zero();
    }
    Ok(GreenLimitReport {
        values,
        max_decrease,
    })
}

/// Residual `||-A_h u - g||_inf` of a potential, relative to `||g||_inf`.
pub fn relative_potential_residual<T: Scalar>(
    sys: &GreenSystem<T>,
    u: &Field<T>,
    g: &Field<T>,
) -> Result<T> {
    let au = sys.apply_operator(u)?;
    let gi = g.gather(sys.grid().interior());
    let r: Vec<T> = au.iter().zip(&gi).map(|(a, b)| -*a - *b).collect();
    let scale = sup_norm(&gi).max(T::min_positive_value());
    Ok(sup_norm(&r) / scale)
}

#[cfg(test)]
mod tests;
