use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::scalar::Scalar;

use super::grid::Grid;

/// Coefficients of `L u = sum a_ij d_ij u + sum b_i d_i u` at one point.
/// One-dimensional operators use `a[0][0]` and `b[0]` only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients<T> {
    pub a: [[T; 2]; 2],
    pub b: [T; 2],
}

impl<T: Scalar> Coefficients<T> {
    pub fn laplacian() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            a: [[o, z], [z, o]],
            b: [z, z],
        }
    }

    pub fn with_drift(mut self, b: [T; 2]) -> Self {
        self.b = b;
        self
    }

    /// Smallest eigenvalue of the (symmetric part of the) diffusion matrix.
    pub fn min_eigenvalue(&self, dim: usize) -> T {
        if dim == 1 {
            return self.a[0][0];
        }
        let half = T::lit(0.5);
        let off = half * (self.a[0][1] + self.a[1][0]);
        let mean = half * (self.a[0][0] + self.a[1][1]);
        let diff = half * (self.a[0][0] - self.a[1][1]);
        mean - (diff * diff + off * off).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Centered drift where the mesh Peclet number is below one, upwind elsewhere.
    #[default]
    Centered,
    /// First-order upwind drift everywhere.
    Upwind,
}

type CoefficientFn<T> = dyn Fn(&[T; 2]) -> Coefficients<T> + Send + Sync;

#[derive(Clone)]
enum CoefficientField<T> {
    Constant(Coefficients<T>),
    Variable(Arc<CoefficientFn<T>>),
}

/// Second-order elliptic operator in nondivergence form.
#[derive(Clone)]
pub struct OperatorSpec<T> {
    dim: usize,
    field: CoefficientField<T>,
    scheme: Scheme,
}

impl<T: Scalar> fmt::Debug for OperatorSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("OperatorSpec");
        d.field("dim", &self.dim).field("scheme", &self.scheme);
        match &self.field {
            CoefficientField::Constant(c) => d.field("coefficients", c),
            CoefficientField::Variable(_) => d.field("coefficients", &"<variable>"),
        };
        d.finish()
    }
}

impl<T: Scalar> OperatorSpec<T> {
    pub fn laplacian(dim: usize) -> Self {
        Self::constant(dim, Coefficients::laplacian())
    }

    pub fn laplacian_with_drift(dim: usize, b: [T; 2]) -> Self {
        Self::constant(dim, Coefficients::laplacian().with_drift(b))
    }

    pub fn constant(dim: usize, coefficients: Coefficients<T>) -> Self {
        Self {
            dim,
            field: CoefficientField::Constant(coefficients),
            scheme: Scheme::default(),
        }
    }

    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[T; 2]) -> Coefficients<T> + Send + Sync + 'static,
    {
        Self {
            dim,
            field: CoefficientField::Variable(Arc::new(f)),
            scheme: Scheme::default(),
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn at(&self, x: &[T; 2]) -> Coefficients<T> {
        match &self.field {
            CoefficientField::Constant(c) => *c,
            CoefficientField::Variable(f) => f(x),
        }
    }

    /// Constant coefficients, when the operator has them.
    pub fn constant_coefficients(&self) -> Option<Coefficients<T>> {
        match &self.field {
            CoefficientField::Constant(c) => Some(*c),
            CoefficientField::Variable(_) => None,
        }
    }

    /// Constant, drift-free operators assemble to symmetric matrices.
    pub fn is_self_adjoint(&self) -> bool {
        self.constant_coefficients().is_some_and(|c| {
            (0..self.dim).all(|i| c.b[i] == T::zero()) && c.a[0][1] == c.a[1][0]
        })
    }
}

/// Ellipticity constant: the minimum over interior nodes of the smallest
/// eigenvalue of `a(x)`. Fails on a nonpositive or asymmetric `a`.
pub fn check_ellipticity<T: Scalar>(op: &OperatorSpec<T>, grid: &Grid<T>) -> Result<T> {
    let mut beta = T::infinity();
    for &n in grid.interior() {
        let c = op.at(&grid.coords(n));
        if grid.dim() == 2 && c.a[0][1] != c.a[1][0] {
            return Err(Error::Precondition(format!(
                "diffusion matrix not symmetric at node {n}"
            )));
        }
        let lambda = c.min_eigenvalue(grid.dim());
        if !(lambda > T::zero()) {
            return Err(Error::NotElliptic {
                node: n,
                min_eigenvalue: lambda.to_f64_lossy(),
            });
        }
        beta = beta.min(lambda);
    }
    Ok(beta)
}

/// Drift discretization chosen per node and axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriftStencil {
    Centered,
    Upwind,
}

/// Finite-difference matrix `A_h` of `L`: the interior block and the coupling
/// to boundary nodes, so that `(A_h u)_i = (interior u_I)_i + (coupling u_B)_i`.
#[derive(Clone, Debug)]
pub struct AssembledOperator<T> {
    pub interior: SparseMatrix<T>,
    pub coupling: SparseMatrix<T>,
    pub drift: Vec<[DriftStencil; 2]>,
}

impl<T: Scalar> AssembledOperator<T> {
    /// `A_h u` at interior nodes for a field `u` over all nodes of `grid`.
    pub fn apply(&self, grid: &Grid<T>, u: &[T]) -> Vec<T> {
        let ui: Vec<T> = grid.interior().iter().map(|&n| u[n]).collect();
        let ub: Vec<T> = grid.boundary().iter().map(|&n| u[n]).collect();
        let mut out = self.interior.mul_vec(&ui);
        for (o, v) in out.iter_mut().zip(self.coupling.mul_vec(&ub)) {
            *o = *o + v;
        }
        out
    }

    /// Interior block as `i j value` lines.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        for (i, j, v) in self.interior.triplets() {
            s.push_str(&format!("{i} {j} {v:.16e}\n"));
        }
        s
    }
}

/// Assembles `A_h` on the interior of `grid`.
///
/// Second derivatives use the 3-point stencil per axis. A mixed term
/// `2 a_12 d_xy` uses the 7-point stencil whose corner weights sit on the
/// diagonal matching the sign of `a_12`. Drift is centered where
/// `h |b_i| / (2 a_ii) < 1` (and the scheme is [`Scheme::Centered`]), upwind
/// otherwise. The result must make `-A_h` an M-matrix; assembly fails at the
/// first node where it does not.
pub fn assemble_operator<T: Scalar>(
    grid: &Grid<T>,
    op: &OperatorSpec<T>,
) -> Result<AssembledOperator<T>> {
    if op.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "operator of dimension {} on a {}-dimensional grid",
            op.dim(),
            grid.dim()
        )));
    }
    let dim = grid.dim();
    let h = grid.spacing();
    let lattice = grid.lattice();
    let two = T::lit(2.0);
    let n_int = grid.interior().len();
    let mut interior = SparseMatrix::builder(n_int, n_int);
    let mut coupling = SparseMatrix::builder(n_int, grid.boundary().len());
    let mut drift = Vec::with_capacity(n_int);
    let tol = T::tol(1e-12);

    for &node in grid.interior() {
        let x = grid.coords(node);
        let c = op.at(&x);
        // entries indexed by offset (di + 1) + 3 (dj + 1)
        let mut w = [T::zero(); 9];
        let idx = |di: isize, dj: isize| ((di + 1) + 3 * (dj + 1)) as usize;
        let mut schemes = [DriftStencil::Centered; 2];
        for axis in 0..dim {
            let a = c.a[axis][axis];
            let b = c.b[axis];
            let hh = h[axis];
            let (plus, minus) = if axis == 0 {
                (idx(1, 0), idx(-1, 0))
            } else {
                (idx(0, 1), idx(0, -1))
            };
            let diff = a / (hh * hh);
            w[plus] = w[plus] + diff;
            w[minus] = w[minus] + diff;
            w[idx(0, 0)] = w[idx(0, 0)] - two * diff;

            let peclet = hh * b.abs() / (two * a);
            if op.scheme() == Scheme::Centered && peclet < T::one() {
                let d = b / (two * hh);
                w[plus] = w[plus] + d;
                w[minus] = w[minus] - d;
            } else {
                schemes[axis] = DriftStencil::Upwind;
                let d = b / hh;
                if b > T::zero() {
                    w[plus] = w[plus] + d;
                    w[idx(0, 0)] = w[idx(0, 0)] - d;
                } else {
                    w[idx(0, 0)] = w[idx(0, 0)] + d;
                    w[minus] = w[minus] - d;
                }
            }
        }
        if dim == 2 {
            let a12 = T::lit(0.5) * (c.a[0][1] + c.a[1][0]);
            if a12 != T::zero() {
                let k = a12.abs() / (h[0] * h[1]);
                let s: isize = if a12 > T::zero() { 1 } else { -1 };
                w[idx(1, s)] = w[idx(1, s)] + k;
                w[idx(-1, -s)] = w[idx(-1, -s)] + k;
                for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    w[idx(di, dj)] = w[idx(di, dj)] - k;
                }
                w[idx(0, 0)] = w[idx(0, 0)] + two * k;
            }
        }
        drift.push(schemes);

        let diag = w[idx(0, 0)];
        let scale = diag.abs();
        let fail = |reason: String| Error::NotMMatrix {
            node,
            coords: x[..dim].iter().map(|v| v.to_f64_lossy()).collect(),
            reason,
        };
        if !(diag < T::zero()) || !diag.is_finite() {
            return Err(fail(format!("diagonal of A_h is {diag}, must be negative")));
        }
        let mut off_sum = T::zero();
        let site = grid.site(node);
        let mut row: Vec<(usize, T)> = Vec::new();
        let mut brow: Vec<(usize, T)> = Vec::new();
        for dj in -1..=1isize {
            for di in -1..=1isize {
                if di == 0 && dj == 0 {
                    continue;
                }
                let v = w[idx(di, dj)];
                if v == T::zero() {
                    continue;
                }
                if v < -tol * scale || !v.is_finite() {
                    return Err(fail(format!(
                        "off-diagonal entry {v} at offset ({di}, {dj}) is negative"
                    )));
                }
                off_sum = off_sum + v;
                let nb = lattice
                    .offset(site, [di, dj])
                    .and_then(|s| grid.node_at(s))
                    .ok_or_else(|| fail(format!("stencil neighbor ({di}, {dj}) missing")))?;
                match grid.interior_row(nb) {
                    Some(r) => row.push((r, v)),
                    None => brow.push((grid.boundary_slot(nb).unwrap(), v)),
                }
            }
        }
        if off_sum > -diag * (T::one() + tol) {
            return Err(fail(format!(
                "row not diagonally dominant: off-diagonal sum {off_sum} vs |diagonal| {scale}"
            )));
        }
        row.push((grid.interior_row(node).unwrap(), diag));
        row.sort_by_key(|e| e.0);
        brow.sort_by_key(|e| e.0);
        interior.push_row(row);
        coupling.push_row(brow);
    }
    Ok(AssembledOperator {
        interior: interior.build(),
        coupling: coupling.build(),
        drift,
    })
}
