//! Fixed-point solver for `u + G_D(xi psi(u)) = s` and the Dirichlet problem
//! `-L u + xi psi(u) = g`, `u = f` on the boundary.

use serde::{Deserialize, Serialize};

use crate::domain::{DomainChain, Grid, OperatorSpec};
use crate::error::{Error, Result};
use crate::field::{Field, FieldRole};
use crate::green::GreenSystem;
use crate::nonlinearity::PsiSpec;
use crate::scalar::{sup_diff, sup_norm, Scalar};

/// Smallest relaxation factor reached by halving.
pub const MIN_RELAXATION: f64 = 1.0 / 1_048_576.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// `u_0 = s`.
    #[default]
    Datum,
    /// `u_0 = 0`.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig<T> {
    /// Sup-norm bound on `u + G_D(xi psi(u)) - s`.
    pub tol: T,
    pub max_iter: usize,
    /// Initial relaxation factor in `(0, 1]`.
    pub relaxation: T,
    /// Clamp iterates to `[0, s]`.
    pub clamp: bool,
    pub initial: InitialGuess,
}

impl<T: Scalar> Default for SolveConfig<T> {
    fn default() -> Self {
        Self {
            tol: T::tol(1e-12),
            max_iter: 10_000,
            relaxation: T::one(),
            clamp: true,
            initial: InitialGuess::Datum,
        }
    }
}

impl<T: Scalar> SolveConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero() && self.tol.is_finite()) {
            return Err(Error::Precondition(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.relaxation > T::zero() && self.relaxation <= T::one()) {
            return Err(Error::Precondition(format!(
                "relaxation must lie in (0, 1], got {}",
                self.relaxation
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult<T> {
    pub u: Field<T>,
    /// The datum `s` the equation was solved against.
    pub datum: Field<T>,
    pub iterations: usize,
    /// `||u + G_D(xi psi(u)) - s||_inf` of the returned `u`.
    pub residual: T,
    pub converged: bool,
    /// Nodewise `min` and `max` of `u` and its fixed-point image.
    pub bracket: (Field<T>, Field<T>),
    /// Relaxation factor in use when the iteration stopped.
    pub relaxation: T,
}

impl<T: Scalar> SolveResult<T> {
    /// Fails with [`Error::NotConverged`] on an uncertified result.
    pub fn certified(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual: self.residual.to_f64_lossy(),
            })
        }
    }
}

/// `xi psi(u)` on interior nodes, zero on the boundary.
pub fn absorption<T: Scalar>(
    grid: &Grid<T>,
    xi: &Field<T>,
    psi: &PsiSpec<T>,
    u: &Field<T>,
) -> Result<Field<T>> {
    let mut out = Field::zeros(grid, FieldRole::Source);
    for &n in grid.interior() {
        out.values_mut()[n] = xi.get(n) * psi.eval(u.get(n))?;
    }
    Ok(out)
}

struct FixedPoint<'a, T> {
    sys: &'a GreenSystem<T>,
    xi: &'a Field<T>,
    psi: &'a PsiSpec<T>,
    s: &'a Field<T>,
}

impl<T: Scalar> FixedPoint<'_, T> {
    /// `s - G_D(xi psi(u))`.
    fn image(&self, u: &Field<T>) -> Result<Field<T>> {
        let src = absorption(self.sys.grid(), self.xi, self.psi, u)?;
        let p = self.sys.green_apply(&src)?;
        let values = self.s.values().iter().zip(p.values()).map(|(a, b)| *a - *b).collect();
        Ok(Field::new(FieldRole::Solution, values))
    }

    fn clamp(&self, u: &mut Field<T>) {
        for (v, s) in u.values_mut().iter_mut().zip(self.s.values()) {
            *v = v.max(T::zero()).min(*s);
        }
    }
}

fn check_inputs<T: Scalar>(
    sys: &GreenSystem<T>,
    xi: &Field<T>,
    s: &Field<T>,
    cfg: &SolveConfig<T>,
) -> Result<()> {
    cfg.validate()?;
    let grid = sys.grid();
    xi.check_len(grid, "xi")?;
    s.check_len(grid, "datum")?;
    xi.check_nonnegative(grid.interior(), "xi")?;
    let all: Vec<usize> = (0..grid.len()).collect();
    s.check_nonnegative(&all, "datum")
}

/// Damped Picard iteration `u <- (1 - w) u + w (s - G_D(xi psi(u)))`.
///
/// When a step fails to lower the residual `w` is halved (down to
/// [`MIN_RELAXATION`]) and the iteration restarts from the best iterate so
/// far; at the floor every step is accepted. Once the residual is
/// within `cfg.tol`, one undamped step is taken if it stays within `cfg.tol`;
/// its image solves the discrete PDE up to the fixed-point defect rather than
/// `A_h` times it.
pub fn solve_integral_equation<T: Scalar>(
    sys: &GreenSystem<T>,
    xi: &Field<T>,
    psi: &PsiSpec<T>,
    s: &Field<T>,
    cfg: &SolveConfig<T>,
) -> Result<SolveResult<T>> {
    check_inputs(sys, xi, s, cfg)?;
    let fp = FixedPoint { sys, xi, psi, s };
    let mut u = match cfg.initial {
        InitialGuess::Datum => s.clone().with_role(FieldRole::Solution),
        InitialGuess::Zero => Field::zeros(sys.grid(), FieldRole::Solution),
    };
    let mut tu = fp.image(&u)?;
    let mut r = sup_diff(u.values(), tu.values());
    let mut best = (u.clone(), tu.clone(), r);
    let mut omega = cfg.relaxation;
    let min_omega = T::lit(MIN_RELAXATION);
    let mut iterations = 0;

    while r > cfg.tol && iterations < cfg.max_iter {
        iterations += 1;
        let values = u
            .values()
            .iter()
            .zip(tu.values())
            .map(|(a, b)| (T::one() - omega) * *a + omega * *b)
            .collect();
        let mut cand = Field::new(FieldRole::Solution, values);
        if cfg.clamp {
            fp.clamp(&mut cand);
        }
        if cand.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: iterations });
        }
        let tc = fp.image(&cand)?;
        let rc = sup_diff(cand.values(), tc.values());
        if !rc.is_finite() {
            return Err(Error::NonFinite { iteration: iterations });
        }
        if rc >= r && omega > min_omega {
            omega = (omega / T::lit(2.0)).max(min_omega);
            u = best.0.clone();
            tu = best.1.clone();
            r = best.2;
            continue;
        }
        u = cand;
        tu = tc;
        r = rc;
        if r <= best.2 {
            best = (u.clone(), tu.clone(), r);
        }
    }

    let (mut u, mut tu, mut r) = best;
    let converged = r <= cfg.tol;
    if converged && r > T::zero() {
        let mut polished = tu.clone();
        if cfg.clamp {
            fp.clamp(&mut polished);
        }
        let tp = fp.image(&polished)?;
        let rp = sup_diff(polished.values(), tp.values());
        if rp <= cfg.tol {
            u = polished;
            tu = tp;
            r = rp;
        }
    }
    let lower = u
        .values()
        .iter()
        .zip(tu.values())
        .map(|(a, b)| a.min(*b))
        .collect();
    let upper = u
        .values()
        .iter()
        .zip(tu.values())
        .map(|(a, b)| a.max(*b))
        .collect();
    Ok(SolveResult {
        u,
        datum: s.clone(),
        iterations,
        residual: r,
        converged,
        bracket: (
            Field::new(FieldRole::Solution, lower),
            Field::new(FieldRole::Solution, upper),
        ),
        relaxation: omega,
    })
}

/// Solves `-A_h u + xi psi(u) = g` with `u = f` on the boundary through the
/// integral equation with datum `s = H_D f + G_D g`.
pub fn solve_dirichlet<T: Scalar>(
    sys: &GreenSystem<T>,
    xi: &Field<T>,
    psi: &PsiSpec<T>,
    f: &Field<T>,
    g: &Field<T>,
    cfg: &SolveConfig<T>,
) -> Result<SolveResult<T>> {
    let s = sys.s_datum(f, g)?;
    solve_integral_equation(sys, xi, psi, &s, cfg)
}

/// `-A_h u + xi psi(u) - g` at every node, zero on the boundary.
pub fn pde_residual_field<T: Scalar>(
    sys: &GreenSystem<T>,
    u: &Field<T>,
    xi: &Field<T>,
    psi: &PsiSpec<T>,
    g: &Field<T>,
) -> Result<Field<T>> {
    let grid = sys.grid();
    xi.check_len(grid, "xi")?;
    g.check_len(grid, "source")?;
    let au = sys.apply_operator(u)?;
    let mut out = Field::zeros(grid, FieldRole::Source);
    for (&n, a) in grid.interior().iter().zip(au) {
        out.values_mut()[n] = -a + xi.get(n) * psi.eval(u.get(n))? - g.get(n);
    }
    Ok(out)
}

/// `max |-A_h u + xi psi(u) - g|` over interior nodes.
pub fn pde_residual<T: Scalar>(
    sys: &GreenSystem<T>,
    u: &Field<T>,
    xi: &Field<T>,
    psi: &PsiSpec<T>,
    g: &Field<T>,
) -> Result<T> {
    Ok(sup_norm(pde_residual_field(sys, u, xi, psi, g)?.values()))
}

/// Boundary data, source and absorption coefficient of one problem.
#[derive(Clone, Copy, Debug)]
pub struct ProblemData<'a, T> {
    pub f: &'a Field<T>,
    pub g: &'a Field<T>,
    pub xi: &'a Field<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport<T> {
    pub u1: Field<T>,
    pub u2: Field<T>,
    /// `max (u1 - u2)`; nonpositive when the solutions are ordered.
    pub max_violation: T,
    pub holds: bool,
}

fn first_violation<T: Scalar>(a: &Field<T>, b: &Field<T>, nodes: &[usize]) -> Option<usize> {
    nodes.iter().copied().find(|&n| a.get(n) > b.get(n))
}

/// Solves both problems and checks `u1 <= u2 + 1e-10` for data with
/// `f1 <= f2`, `g1 <= g2` and `xi1 >= xi2`.
pub fn comparison_check<T: Scalar>(
    sys: &GreenSystem<T>,
    psi: &PsiSpec<T>,
    lower: ProblemData<'_, T>,
    upper: ProblemData<'_, T>,
    cfg: &SolveConfig<T>,
) -> Result<ComparisonReport<T>> {
    let grid = sys.grid();
    for fld in [lower.f, lower.g, lower.xi, upper.f, upper.g, upper.xi] {
        fld.check_len(grid, "comparison data")?;
    }
    if let Some(n) = first_violation(lower.f, upper.f, grid.boundary()) {
        return Err(Error::Precondition(format!("f1 > f2 at node {n}")));
    }
    if let Some(n) = first_violation(lower.g, upper.g, grid.interior()) {
        return Err(Error::Precondition(format!("g1 > g2 at node {n}")));
    }
    if let Some(n) = first_violation(upper.xi, lower.xi, grid.interior()) {
        return Err(Error::Precondition(format!("xi1 < xi2 at node {n}")));
    }
    let u1 = solve_dirichlet(sys, lower.xi, psi, lower.f, lower.g, cfg)?.certified()?.u;
    let u2 = solve_dirichlet(sys, upper.xi, psi, upper.f, upper.g, cfg)?.certified()?.u;
    let max_violation = u1
        .values()
        .iter()
        .zip(u2.values())
        .fold(T::neg_infinity(), |m, (a, b)| m.max(*a - *b));
    Ok(ComparisonReport {
        holds: max_violation <= T::tol(1e-10),
        u1,
        u2,
        max_violation,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneLimitReport<T> {
    pub solutions: Vec<Field<T>>,
    pub limit: Field<T>,
    /// Largest nodewise step against the expected direction.
    pub max_violation: T,
    /// `||u_last - u_limit||_inf`.
    pub limit_gap: T,
}

impl<T: Scalar> MonotoneLimitReport<T> {
    pub fn is_monotone(&self, tol: T) -> bool {
        self.max_violation <= tol
    }
}

fn ascending<T: Scalar>(seq: &[&Field<T>], nodes: &[usize]) -> bool {
    seq.windows(2)
        .all(|w| nodes.iter().all(|&n| w[0].get(n) <= w[1].get(n)))
}

fn limit_report<T: Scalar>(
    solutions: Vec<Field<T>>,
    limit: Field<T>,
    decreasing: bool,
) -> MonotoneLimitReport<T> {
    let mut max_violation = T::neg_infinity();
    for w in solutions.windows(2) {
        for (a, b) in w[0].values().iter().zip(w[1].values()) {
            let step = if decreasing { *b - *a } else { *a - *b };
            max_violation = max_violation.max(step);
        }
    }
    if max_violation == T::neg_infinity() {
        max_violation = T::zero();
    }
    let limit_gap = solutions
        .last()
        .map_or(T::zero(), |u| sup_diff(u.values(), limit.values()));
    MonotoneLimitReport {
        solutions,
        limit,
        max_violation,
        limit_gap,
    }
}

/// Solutions for an ascending sequence `xi_n` bounded by `xi`; they should
/// decrease towards the solution at `xi`.
pub fn monotone_limits_check<T: Scalar>(
    sys: &GreenSystem<T>,
    psi: &PsiSpec<T>,
    f: &Field<T>,
    g: &Field<T>,
    xi_sequence: &[Field<T>],
    xi: &Field<T>,
    cfg: &SolveConfig<T>,
) -> Result<MonotoneLimitReport<T>> {
    let mut seq: Vec<&Field<T>> = xi_sequence.iter().collect();
    seq.push(xi);
    if !ascending(&seq, sys.grid().interior()) {
        return Err(Error::Precondition(
            "xi sequence is not ascending towards its limit".into(),
        ));
    }
    let s = sys.s_datum(f, g)?;
    let solutions = xi_sequence
        .iter()
        .map(|x| Ok(solve_integral_equation(sys, x, psi, &s, cfg)?.certified()?.u))
        .collect::<Result<Vec<_>>>()?;
    let limit = solve_integral_equation(sys, xi, psi, &s, cfg)?.certified()?.u;
    Ok(limit_report(solutions, limit, true))
}

/// Solutions for ascending data `(f_n, g_n)` bounded by `(f, g)`; they should
/// increase towards the solution at `(f, g)`.
pub fn monotone_data_limits_check<T: Scalar>(
    sys: &GreenSystem<T>,
    psi: &PsiSpec<T>,
    xi: &Field<T>,
    data_sequence: &[(Field<T>, Field<T>)],
    limit: (&Field<T>, &Field<T>),
    cfg: &SolveConfig<T>,
) -> Result<MonotoneLimitReport<T>> {
    let grid = sys.grid();
    let mut fs: Vec<&Field<T>> = data_sequence.iter().map(|d| &d.0).collect();
    let mut gs: Vec<&Field<T>> = data_sequence.iter().map(|d| &d.1).collect();
    fs.push(limit.0);
    gs.push(limit.1);
    if !ascending(&fs, grid.boundary()) || !ascending(&gs, grid.interior()) {
        return Err(Error::Precondition(
            "data sequence is not ascending towards its limit".into(),
        ));
    }
    let solutions = data_sequence
        .iter()
        .map(|(f, g)| Ok(solve_dirichlet(sys, xi, psi, f, g, cfg)?.certified()?.u))
        .collect::<Result<Vec<_>>>()?;
    let u = solve_dirichlet(sys, xi, psi, limit.0, limit.1, cfg)?.certified()?.u;
    Ok(limit_report(solutions, u, false))
}

/// One level of an exhaustion solve: `v = U^xi_{D_n}(0, g)`, `p = G_{D_n} g`.
#[derive(Clone, Debug)]
pub struct ExhaustionLevel<T: Scalar> {
    pub system: GreenSystem<T>,
    pub xi: Field<T>,
    pub g: Field<T>,
    pub potential: Field<T>,
    pub result: SolveResult<T>,
}

#[derive(Clone, Debug)]
pub struct ExhaustionReport<T: Scalar> {
    pub levels: Vec<ExhaustionLevel<T>>,
    /// Largest `p_n - p_{n+1}` at shared nodes; nonpositive when the
    /// potentials increase with the domain.
    pub potential_max_decrease: T,
}

fn restrict<T: Scalar>(fine: &Grid<T>, coarse: &Grid<T>, field: &Field<T>, role: FieldRole) -> Field<T> {
    let values = (0..coarse.len())
        .map(|n| field.get(fine.node_at(coarse.site(n)).expect("chain levels are nested")))
        .collect();
    Field::new(role, values)
}

/// Solves with zero boundary data on every level of `chain`; `xi` and `g`
/// live on the finest level and are restricted to the others.
pub fn exhaustion_solve<T: Scalar>(
    chain: &DomainChain<T>,
    op: &OperatorSpec<T>,
    xi: &Field<T>,
    psi: &PsiSpec<T>,
    g: &Field<T>,
    cfg: &SolveConfig<T>,
) -> Result<ExhaustionReport<T>> {
    let finest = chain.finest();
    xi.check_len(finest, "xi")?;
    g.check_len(finest, "source")?;
    let mut levels: Vec<ExhaustionLevel<T>> = Vec::with_capacity(chain.len());
    let mut potential_max_decrease = T::neg_infinity();
    for grid in chain.levels() {
        let system = GreenSystem::new(grid, op)?;
        let xi_n = restrict(finest, grid, xi, FieldRole::Source);
        let g_n = restrict(finest, grid, g, FieldRole::Source);
        let f0 = Field::zeros(grid, FieldRole::BoundaryData);
        let potential = system.s_datum(&f0, &g_n)?;
        let result = solve_integral_equation(&system, &xi_n, psi, &potential, cfg)?;
        if let Some(prev) = levels.last() {
            let pg = prev.system.grid();
            for n in 0..pg.len() {
                let m = grid.node_at(pg.site(n)).expect("chain levels are nested");
                potential_max_decrease =
                    potential_max_decrease.max(prev.potential.get(n) - potential.get(m));
            }
        }
        levels.push(ExhaustionLevel {
            system,
            xi: xi_n,
            g: g_n,
            potential,
            result,
        });
    }
    if potential_max_decrease == T::neg_infinity() {
        potential_max_decrease = T::zero();
    }
    Ok(ExhaustionReport {
        levels,
        potential_max_decrease,
    })
}
