//! Pointwise lower bounds for solutions and supersolutions:
//!
//! * `s phi(G_D(xi psi(s)) / s) <= u <= s` for `u = U^xi_D(f, g)`, `s = S_D(f, g)`;
//! * `u >= p phi(G_D(xi psi(p)) / p)` for every nonnegative supersolution of
//!   `-L u + xi psi(u) >= g`, `p = G_D g`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, FieldRole};
use crate::green::GreenSystem;
use crate::nonlinearity::{FamilyTag, PsiSpec};
use crate::phi_transform::{phi_closed_form, PhiTransform};
use crate::scalar::{sup_diff, Scalar};
use crate::semilinear::{absorption, pde_residual_field, solve_dirichlet, SolveConfig};

/// Nodewise tolerance of the bound checks.
pub const VERIFY_TOL: f64 = 1e-6;
/// Smallest admissible supersolution residual `-A_h u + xi psi(u) - g`.
pub const SUPERSOLUTION_RESIDUAL_TOL: f64 = 1e-8;
/// Reference values below this are treated as zero.
pub const RATIO_GUARD: f64 = 1e-300;

fn guard<T: Scalar>() -> T {
    T::lit(RATIO_GUARD).max(T::min_positive_value())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Sandwich,
    Supersolution,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateRecord<T> {
    pub node: usize,
    pub coords: [T; 2],
    pub u: T,
    /// `s` for the sandwich, `p = G_D g` for the supersolution bound.
    pub reference: T,
    pub lower_bound: T,
    /// `s` for the sandwich; the supersolution bound has no upper side.
    pub upper_bound: Option<T>,
    pub slack_lower: T,
    pub slack_upper: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateSummary<T> {
    pub kind: EstimateKind,
    pub family: FamilyTag,
    pub c: T,
    pub nodes: usize,
    pub min_slack_lower: T,
    pub min_slack_upper: T,
    /// Nodes where an asserted slack falls below `-tolerance`.
    pub violated_node_count: usize,
    pub tolerance: T,
    /// `0 <= u <= s` at every node, without tolerance (sandwich only).
    pub envelope_exact: Option<bool>,
    pub solver_iterations: Option<usize>,
    pub solver_residual: Option<T>,
    /// Smallest `-A_h u + xi psi(u) - g` of the checked supersolution.
    pub supersolution_residual: Option<T>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport<T> {
    pub records: Vec<EstimateRecord<T>>,
    pub summary: EstimateSummary<T>,
}

impl<T: Scalar> EstimateReport<T> {
    pub fn passed(&self) -> bool {
        self.summary.violated_node_count == 0 && self.summary.envelope_exact != Some(false)
    }
}

fn check_transform<T: Scalar>(psi: &PsiSpec<T>, tr: &PhiTransform<T>) -> Result<()> {
    if tr.spec() == psi {
        Ok(())
    } else {
        Err(Error::Precondition(
            "phi transform was built from a different nonlinearity or constant".into(),
        ))
    }
}

/// `r phi(q / r)` nodewise, zero where `r` is below the guard.
fn scaled_phi<T: Scalar>(tr: &PhiTransform<T>, r: &Field<T>, q: &Field<T>) -> Result<Field<T>> {
    let tiny = guard::<T>();
    let values = r
        .values()
        .iter()
        .zip(q.values())
        .map(|(&r, &q)| {
            if r < tiny {
                Ok(T::zero())
            } else {
                Ok(r * tr.phi((q / r).max(T::zero()))?)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Field::new(FieldRole::Solution, values))
}

/// `s phi(G_D(xi psi(s)) / s)`, zero where `s` vanishes.
pub fn lower_bound_field<T: Scalar>(
    sys: &GreenSystem<T>,
    xi: &Field<T>,
    psi: &PsiSpec<T>,
    tr: &PhiTransform<T>,
    s: &Field<T>,
) -> Result<Field<T>> {
    check_transform(psi, tr)?;
    let q = sys.green_apply(&absorption(sys.grid(), xi, psi, s)?)?;
    scaled_phi(tr, s, &q)
}

fn positive_potential<T: Scalar>(sys: &GreenSystem<T>, g: &Field<T>) -> Result<Field<T>> {
    g.check_nonnegative(sys.grid().interior(), "source")?;
    let p = sys.green_apply(g)?;
    if let Some(&n) = sys.grid().interior().iter().find(|&&n| !(p.get(n) > T::zero())) {
        return Err(Error::Precondition(format!(
            "potential G_D g vanishes at interior node {n}"
        )));
    }
    Ok(p)
}

/// `p phi(G_D(xi psi(p)) / p)` with `p = G_D g`, which must be positive on the
/// interior.
pub fn supersolution_bound_field<T: Scalar>(
    sys: &GreenSystem<T>,
    xi: &Field<T>,
    psi: &PsiSpec<T>,
    tr: &PhiTransform<T>,
    g: &Field<T>,
) -> Result<Field<T>> {
    check_transform(psi, tr)?;
    let p = positive_potential(sys, g)?;
    let q = sys.green_apply(&absorption(sys.grid(), xi, psi, &p)?)?;
    scaled_phi(tr, &p, &q)
}

/// `p phi(q / p)` with the analytic `phi` of a catalog family.
///
/// With the default constants this is the familiar list of bounds:
/// `p (1 + (gamma-1) q/p)_+^{1/(1-gamma)}` and `p exp(-q/p)` for powers,
/// `2 p artanh(tanh(1/2) exp(-q/p))` for `sinh` and
/// `p ((1+b)^{exp(-q/p)} - 1)/b` for `a (1+bt) log(1+bt)`. Nodes with `p`
/// below the guard get 0.
pub fn closed_form_bound<T: Scalar>(psi: &PsiSpec<T>, p: &Field<T>, q: &Field<T>) -> Result<Field<T>> {
    if psi.tag() == FamilyTag::Custom {
        return Err(Error::UnsupportedFamily(FamilyTag::Custom.to_string()));
    }
    if p.len() != q.len() {
        return Err(Error::GridMismatch("p and q differ in length".into()));
    }
    let tiny = guard::<T>();
    let values = p
        .values()
        .iter()
        .zip(q.values())
        .map(|(&p, &q)| {
            if p < T::zero() {
                Err(Error::Domain {
                    what: "p",
                    value: p.to_f64_lossy(),
                })
            } else if p < tiny {
                Ok(T::zero())
            } else {
                Ok(p * phi_closed_form(psi, (q / p).max(T::zero()))?)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Field::new(FieldRole::Solution, values))
}

fn summarize<T: Scalar>(
    kind: EstimateKind,
    psi: &PsiSpec<T>,
    records: &[EstimateRecord<T>],
    tol: T,
) -> EstimateSummary<T> {
    let min_slack_lower = records.iter().fold(T::infinity(), |m, r| m.min(r.slack_lower));
    let min_slack_upper = records.iter().fold(T::infinity(), |m, r| m.min(r.slack_upper));
    let violated_node_count = records
        .iter()
        .filter(|r| r.slack_lower < -tol || (r.upper_bound.is_some() && r.slack_upper < -tol))
        .count();
    EstimateSummary {
        kind,
        family: psi.tag(),
        c: psi.c(),
        nodes: records.len(),
        min_slack_lower,
        min_slack_upper,
        violated_node_count,
        tolerance: tol,
        envelope_exact: None,
        solver_iterations: None,
        solver_residual: None,
        supersolution_residual: None,
        note: None,
    }
}

/// Solves `U^xi_D(f, g)` and checks `s phi(G_D(xi psi(s))/s) - tol <= u <= s + tol`
/// nodewise. Uncertified solves are an error, never a report.
pub fn verify_sandwich<T: Scalar>(
    sys: &GreenSystem<T>,
    xi: &Field<T>,
    psi: &PsiSpec<T>,
    tr: &PhiTransform<T>,
    f: &Field<T>,
    g: &Field<T>,
    cfg: &SolveConfig<T>,
) -> Result<EstimateReport<T>> {
    check_transform(psi, tr)?;
    let grid = sys.grid();
    let sol = solve_dirichlet(sys, xi, psi, f, g, cfg)?.certified()?;
    let s = &sol.datum;
    if let Some(&n) = grid.interior().iter().find(|&&n| !(s.get(n) > T::zero())) {
        return Err(Error::Precondition(format!(
            "S_D(f, g) vanishes at interior node {n}"
        )));
    }
    let lower = lower_bound_field(sys, xi, psi, tr, s)?;
    let records: Vec<EstimateRecord<T>> = (0..grid.len())
        .map(|n| {
            let u = sol.u.get(n);
            EstimateRecord {
                node: n,
                coords: grid.coords(n),
                u,
                reference: s.get(n),
                lower_bound: lower.get(n),
                upper_bound: Some(s.get(n)),
                slack_lower: u - lower.get(n),
                slack_upper: s.get(n) - u,
            }
        })
        .collect();
    let mut summary = summarize(EstimateKind::Sandwich, psi, &records, T::tol(VERIFY_TOL));
    summary.envelope_exact = Some(
        records
            .iter()
            .all(|r| r.u >= T::zero() && r.u <= r.reference),
    );
    summary.solver_iterations = Some(sol.iterations);
    summary.solver_residual = Some(sol.residual);
    Ok(EstimateReport { records, summary })
}

/// Smallest `-A_h u + xi psi(u) - g` over the interior and the node attaining it.
pub fn supersolution_residual<T: Scalar>(
    sys: &GreenSystem<T>,
    u: &Field<T>,
    xi: &Field<T>,
    psi: &PsiSpec<T>,
    g: &Field<T>,
) -> Result<(usize, T)> {
    let r = pde_residual_field(sys, u, xi, psi, g)?;
    Ok(sys
        .grid()
        .interior()
        .iter()
        .map(|&n| (n, r.get(n)))
        .fold((usize::MAX, T::infinity()), |m, x| if x.1 < m.1 { x } else { m }))
}

/// Checks `u_super >= p phi(G_D(xi psi(p))/p) - tol` for a nonnegative discrete
/// supersolution `u_super`.
pub fn verify_supersolution<T: Scalar>(
    sys: &GreenSystem<T>,
    xi: &Field<T>,
    psi: &PsiSpec<T>,
    tr: &PhiTransform<T>,
    g: &Field<T>,
    u_super: &Field<T>,
) -> Result<EstimateReport<T>> {
    check_transform(psi, tr)?;
    let grid = sys.grid();
    u_super.check_len(grid, "supersolution")?;
    let all: Vec<usize> = (0..grid.len()).collect();
    u_super.check_nonnegative(&all, "supersolution")?;
    let (node, residual) = supersolution_residual(sys, u_super, xi, psi, g)?;
    if residual < -T::tol(SUPERSOLUTION_RESIDUAL_TOL) {
        return Err(Error::NotSupersolution {
            node,
            residual: residual.to_f64_lossy(),
        });
    }
    let p = positive_potential(sys, g)?;
    let lower = supersolution_bound_field(sys, xi, psi, tr, g)?;
    let records: Vec<EstimateRecord<T>> = (0..grid.len())
        .map(|n| {
            let u = u_super.get(n);
            EstimateRecord {
                node: n,
                coords: grid.coords(n),
                u,
                reference: p.get(n),
                lower_bound: lower.get(n),
                upper_bound: None,
                slack_lower: u - lower.get(n),
                slack_upper: p.get(n) - u,
            }
        })
        .collect();
    let mut summary = summarize(EstimateKind::Supersolution, psi, &records, T::tol(VERIFY_TOL));
    summary.supersolution_residual = Some(residual);
    summary.note = Some(
        "membership in the supersolution class is checked through the discrete residual \
         -A_h u + xi psi(u) - g >= -1e-8"
            .into(),
    );
    Ok(EstimateReport { records, summary })
}

/// Sup-norm gap between the supersolution bound evaluated with the numeric
/// `phi` and with the analytic one.
pub fn closed_form_cross_check<T: Scalar>(
    sys: &GreenSystem<T>,
    xi: &Field<T>,
    psi: &PsiSpec<T>,
    g: &Field<T>,
) -> Result<T> {
    let tr = PhiTransform::numeric(psi.clone())?;
    let numeric = supersolution_bound_field(sys, xi, psi, &tr, g)?;
    let p = positive_potential(sys, g)?;
    let q = sys.green_apply(&absorption(sys.grid(), xi, psi, &p)?)?;
    let analytic = closed_form_bound(psi, &p, &q)?;
    Ok(sup_diff(numeric.values(), analytic.values()))
}

#[cfg(test)]
mod tests;
