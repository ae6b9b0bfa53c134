//! The transform `Theta(t) = int_t^1 ds / (c psi(s))` on `(0, 1]`, its
//! threshold `ell = Theta(0+)` and the inverse `phi`, extended by zero on
//! `[ell, inf)`.
//!
//! `phi` maps `[0, inf)` onto `[0, 1]`, is nonincreasing and convex on
//! `(0, ell)`, and solves `phi' = -c psi(phi)` with `phi(0) = 1`.
//!
//! Numeric transforms precompute `Theta` on the dyadic knots `2^-k`,
//! `k = 0..=60`, integrating each panel with adaptive Gauss-Kronrod. The
//! integrand may be singular at the origin; splitting at dyadic knots keeps
//! every panel away from it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::{FamilyTag, PsiFamily, PsiSpec};
use crate::quadrature::integrate;
use crate::roots::brent;
use crate::scalar::Scalar;

/// Number of dyadic panels in the precomputed table.
pub const TABLE_DEPTH: usize = 60;

const PANEL_ABS_TOL: f64 = 1e-13;
const PANEL_REL_TOL: f64 = 1e-14;
const PANEL_SEGMENTS: usize = 400;
// Panel ratios above this value count as non-contracting.
const CONTRACTION_LIMIT: f64 = 1.0 - 1e-3;
const RATIO_WINDOW: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "family", rename_all = "snake_case")]
pub enum PhiMode {
    Numeric,
    ClosedForm(FamilyTag),
}

#[derive(Clone, Debug)]
pub struct PhiTransform<T> {
    spec: PsiSpec<T>,
    ell: T,
    mode: PhiMode,
    /// `theta[k] = Theta(2^-k)`; empty in closed-form mode.
    table: Vec<T>,
}

fn dyadic<T: Scalar>(k: usize) -> T {
    T::lit(2f64.powi(-(k as i32)))
}

impl<T: Scalar> PhiTransform<T> {
    /// Builds the quadrature table and detects whether `ell` is finite.
    pub fn numeric(spec: PsiSpec<T>) -> Result<Self> {
        if spec.max_argument() < T::one() {
            return Err(Error::InvalidPsi(
                "sampled nonlinearity must cover [0, 1] to build Theta".into(),
            ));
        }
        let mut tr = Self {
            spec,
            ell: T::infinity(),
            mode: PhiMode::Numeric,
            table: Vec::with_capacity(TABLE_DEPTH + 1),
        };
        let mut panels = Vec::with_capacity(TABLE_DEPTH);
        let mut acc = T::zero();
        tr.table.push(acc);
        for k in 1..=TABLE_DEPTH {
            let p = tr.panel_integral(dyadic(k), dyadic(k - 1))?;
            panels.push(p);
            acc = acc + p;
            tr.table.push(acc);
        }
        tr.ell = ell_from_panels(&panels, acc);
        Ok(tr)
    }

    /// Uses the analytic `Theta`, `phi` and `ell` of a catalog family.
    pub fn closed_form(spec: PsiSpec<T>) -> Result<Self> {
        let ell = ell_closed_form(&spec)?;
        Ok(Self {
            mode: PhiMode::ClosedForm(spec.tag()),
            spec,
            ell,
            table: Vec::new(),
        })
    }

    pub fn spec(&self) -> &PsiSpec<T> {
        &self.spec
    }

    pub fn c(&self) -> T {
        self.spec.c()
    }

    pub fn mode(&self) -> PhiMode {
        self.mode
    }

    /// `ell = int_0^1 ds / (c psi(s))`, possibly `+inf`.
    pub fn ell(&self) -> T {
        self.ell
    }

    fn integrand(&self, s: T) -> T {
        match self.spec.eval(s) {
            Ok(v) => (self.spec.c() * v).recip(),
            Err(_) => T::nan(),
        }
    }

    fn panel_integral(&self, lo: T, hi: T) -> Result<T> {
        let q = integrate(
            |s| self.integrand(s),
            lo,
            hi,
            T::tol(PANEL_ABS_TOL),
            T::tol(PANEL_REL_TOL),
            PANEL_SEGMENTS,
        );
        if q.value.is_nan() {
            return Err(Error::InvalidPsi(format!(
                "1/(c psi) not integrable on [{lo}, {hi}]"
            )));
        }
        Ok(q.value)
    }

    /// `Theta(t)` for `t` in `(0, 1]`.
    pub fn theta(&self, t: T) -> Result<T> {
        if !(t > T::zero() && t <= T::one()) {
            return Err(Error::Domain {
                what: "theta",
                value: t.to_f64_lossy(),
            });
        }
        if let PhiMode::ClosedForm(_) = self.mode {
            return theta_closed_form(&self.spec, t);
        }
        // t in (2^-(k+1), 2^-k]
        let mut k = (-t.log2()).floor().to_usize().unwrap_or(0);
        while k > 0 && dyadic::<T>(k) < t {
            k -= 1;
        }
        while dyadic::<T>(k + 1) >= t {
            k += 1;
        }
        let (mut knot, mut base) = if k <= TABLE_DEPTH {
            (dyadic::<T>(k), self.table[k])
        } else {
            (dyadic::<T>(TABLE_DEPTH), self.table[TABLE_DEPTH])
        };
        let mut j = TABLE_DEPTH;
        while j < k {
            let next = dyadic::<T>(j + 1);
            base = base + self.panel_integral(next, knot)?;
            knot = next;
            j += 1;
        }
        Ok(base + self.panel_integral(t, knot)?)
    }

    /// `phi(r)`: the `s` in `(0, 1]` with `Theta(s) = r`, or zero for `r >= ell`.
    pub fn phi(&self, r: T) -> Result<T> {
        if r.is_nan() || r < T::zero() {
            return Err(Error::Domain {
                what: "phi",
                value: r.to_f64_lossy(),
            });
        }
        if r == T::zero() {
            return Ok(T::one());
        }
        if r >= self.ell {
            return Ok(T::zero());
        }
        if let PhiMode::ClosedForm(_) = self.mode {
            return phi_closed_form(&self.spec, r);
        }
        // Locate the dyadic panel with Theta(2^-k) <= r < Theta(2^-(k+1)).
        let idx = self.table.partition_point(|v| *v <= r);
        let (k, base) = if idx <= TABLE_DEPTH {
            (idx - 1, self.table[idx - 1])
        } else {
            let mut k = TABLE_DEPTH;
            let mut base = self.table[TABLE_DEPTH];
            loop {
                let lo = dyadic::<T>(k + 1);
                if lo <= T::min_positive_value() || !lo.is_normal() {
                    return Ok(T::zero());
                }
                let next = base + self.panel_integral(lo, dyadic(k))?;
                if next > r {
                    break;
                }
                base = next;
                k += 1;
            }
            (k, base)
        };
        let hi = dyadic::<T>(k);
        let lo = dyadic::<T>(k + 1);
        let target = r - base;
        let xtol = T::tol(1e-12).min(lo * T::lit(1e-13));
        let mut failure = None;
        let s = brent(
            |s| match self.panel_integral(s, hi) {
                Ok(v) => v - target,
                Err(e) => {
                    failure = Some(e);
                    T::nan()
                }
            },
            lo,
            hi,
            xtol,
            200,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        s
    }
}

/// Extrapolates the dyadic panel integrals. Geometric contraction of the
/// trailing panels means `ell` is finite and the tail is summed as a
/// geometric series; otherwise `ell` is infinite.
fn ell_from_panels<T: Scalar>(panels: &[T], total: T) -> T {
    if !total.is_finite() {
        return T::infinity();
    }
    let n = panels.len();
    let limit = T::lit(CONTRACTION_LIMIT);
    for k in n - RATIO_WINDOW..n {
        let ratio = panels[k] / panels[k - 1];
        if !ratio.is_finite() || ratio > limit {
            return T::infinity();
        }
    }
    let last = panels[n - 1];
    let ratio = last / panels[n - 2];
    total + last * ratio / (T::one() - ratio)
}

/// `ell` for the catalog families, using the constant carried by `spec`.
pub fn ell_closed_form<T: Scalar>(spec: &PsiSpec<T>) -> Result<T> {
    let c = spec.c();
    let one = T::one();
    Ok(match spec.family() {
        PsiFamily::PowerLaw { gamma } if *gamma < one => (c * (one - *gamma)).recip(),
        PsiFamily::AffinePower { a, b, gamma } if *gamma < one => {
            ((*a + *b) / *b).ln() / ((one - *gamma) * *a * c)
        }
        PsiFamily::PowerLaw { .. }
        | PsiFamily::AffinePower { .. }
        | PsiFamily::Sinh
        | PsiFamily::LogGrowth { .. } => T::infinity(),
        PsiFamily::CustomSampled { .. } => {
            return Err(Error::UnsupportedFamily(FamilyTag::Custom.to_string()))
        }
    })
}

/// Analytic `Theta(t)` for the catalog families, `t` in `(0, 1]`.
pub fn theta_closed_form<T: Scalar>(spec: &PsiSpec<T>, t: T) -> Result<T> {
    let c = spec.c();
    let one = T::one();
    Ok(match spec.family() {
        PsiFamily::PowerLaw { gamma } => {
            if *gamma == one {
                -t.ln() / c
            } else {
                (one - t.powf(one - *gamma)) / (c * (one - *gamma))
            }
        }
        PsiFamily::AffinePower { a, b, gamma } => {
            if *gamma == one {
                -t.ln() / (c * (*a + *b))
            } else {
                ((*a * t.powf(one - *gamma) + *b) / (*a + *b)).ln() / ((*gamma - one) * *a * c)
            }
        }
        PsiFamily::Sinh => {
            let half = T::lit(0.5);
            (half.tanh().ln() - (half * t).tanh().ln()) / c
        }
        PsiFamily::LogGrowth { a, b } => ((*b).ln_1p() / (*b * t).ln_1p()).ln() / (c * *a * *b),
        PsiFamily::CustomSampled { .. } => {
            return Err(Error::UnsupportedFamily(FamilyTag::Custom.to_string()))
        }
    })
}

/// Analytic inverse of `Theta`, extended by zero past `ell`:
///
/// * `t^gamma`: `(1 + (gamma - 1) c r)_+^{1/(1-gamma)}`, or `exp(-c r)` at `gamma = 1`;
/// * `a t + b t^gamma`: `((a+b)/a exp((gamma-1) a c r) - b/a)_+^{1/(1-gamma)}`,
///   or `exp(-c (a+b) r)` at `gamma = 1`;
/// * `sinh`: `2 artanh(tanh(1/2) exp(-c r))`;
/// * `a (1+bt) log(1+bt)`: `((1+b)^{exp(-c a b r)} - 1) / b`.
///
/// With the catalog constants these reduce to the usual displays (for example
/// `exp(-r)`, `2 artanh(alpha e^{-r})` and `((1+b)^{e^{-r}} - 1)/b`).
pub fn phi_closed_form<T: Scalar>(spec: &PsiSpec<T>, r: T) -> Result<T> {
    if r.is_nan() || r < T::zero() {
        return Err(Error::Domain {
            what: "phi",
            value: r.to_f64_lossy(),
        });
    }
    let c = spec.c();
    let one = T::one();
    let zero = T::zero();
    Ok(match spec.family() {
        PsiFamily::PowerLaw { gamma } => {
            if *gamma == one {
                (-c * r).exp()
            } else {
                let base = (one + (*gamma - one) * c * r).max(zero);
                base.powf((one - *gamma).recip())
            }
        }
        PsiFamily::AffinePower { a, b, gamma } => {
            if *gamma == one {
                (-c * (*a + *b) * r).exp()
            } else {
                let base = ((*a + *b) / *a * ((*gamma - one) * *a * c * r).exp() - *b / *a).max(zero);
                base.powf((one - *gamma).recip())
            }
        }
        PsiFamily::Sinh => {
            let alpha = T::lit(0.5).tanh();
            T::lit(2.0) * (alpha * (-c * r).exp()).atanh()
        }
        PsiFamily::LogGrowth { a, b } => {
            let e = (-c * *a * *b * r).exp();
            (e * (*b).ln_1p()).exp_m1() / *b
        }
        PsiFamily::CustomSampled { .. } => {
            return Err(Error::UnsupportedFamily(FamilyTag::Custom.to_string()))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn numeric(spec: PsiSpec<f64>) -> PhiTransform<f64> {
        PhiTransform::numeric(spec).unwrap()
    }

    #[test]
    fn theta_examples() {
        let lin = numeric(PsiSpec::power_law(1.0).unwrap());
        assert_abs_diff_eq!(lin.theta(0.5).unwrap(), 2f64.ln(), epsilon = 1e-12);
        assert_eq!(lin.theta(1.0).unwrap(), 0.0);
        let sqrt = numeric(PsiSpec::power_law(0.5).unwrap());
        assert_abs_diff_eq!(sqrt.theta(0.25).unwrap(), 1.0, epsilon = 1e-12);
        assert!(sqrt.theta(0.0).is_err());
        assert!(sqrt.theta(1.5).is_err());
    }

    #[test]
    fn theta_below_table() {
        let lin = numeric(PsiSpec::power_law(1.0).unwrap());
        let t = 1e-25;
        assert_abs_diff_eq!(lin.theta(t).unwrap(), -t.ln(), epsilon = 1e-11);
    }

    #[test]
    fn ell_examples() {
        assert_abs_diff_eq!(numeric(PsiSpec::power_law(0.5).unwrap()).ell(), 2.0, epsilon = 1e-10);
        assert!(numeric(PsiSpec::power_law(1.0).unwrap()).ell().is_infinite());
        assert!(numeric(PsiSpec::log_growth(1.0, 1.0).unwrap()).ell().is_infinite());
        let aff = PsiSpec::affine_power(1.0, 2.0, 0.5).unwrap();
        assert_abs_diff_eq!(
            numeric(aff.clone()).ell(),
            ell_closed_form(&aff).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn phi_examples() {
        let lin = numeric(PsiSpec::power_law(1.0).unwrap());
        assert_eq!(lin.phi(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(lin.phi(2f64.ln()).unwrap(), 0.5, epsilon = 1e-12);
        let sqrt = numeric(PsiSpec::power_law(0.5).unwrap());
        assert_eq!(sqrt.phi(3.0).unwrap(), 0.0);
        assert!(sqrt.phi(-1.0).is_err());
    }

    #[test]
    fn phi_close_to_finite_threshold() {
        let sqrt = numeric(PsiSpec::power_law(0.5).unwrap());
        // phi(r) = (1 - r/2)^2
        for r in [1.9, 1.999, 1.99999] {
            let exact = (1.0 - r / 2.0f64).powi(2);
            assert_abs_diff_eq!(sqrt.phi(r).unwrap(), exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_form_examples() {
        let sinh = PsiSpec::<f64>::sinh();
        assert_abs_diff_eq!(phi_closed_form(&sinh, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        let log = PsiSpec::log_growth(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            phi_closed_form(&log, 1.0).unwrap(),
            0.290_454_649_087_585_45,
            epsilon = 1e-14
        );
        let sq = PsiSpec::power_law(2.0).unwrap();
        assert_abs_diff_eq!(phi_closed_form(&sq, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        let custom = PsiSpec::custom(vec![1.0], vec![1.0], 1.0).unwrap();
        assert!(matches!(
            phi_closed_form(&custom, 1.0),
            Err(Error::UnsupportedFamily(_))
        ));
    }

    #[test]
    fn closed_form_mode_matches_numeric() {
        let spec = PsiSpec::affine_power(1.0, 1.0, 2.0).unwrap();
        let cf = PhiTransform::closed_form(spec.clone()).unwrap();
        let num = numeric(spec);
        for t in [0.01, 0.3, 0.9] {
            assert_abs_diff_eq!(cf.theta(t).unwrap(), num.theta(t).unwrap(), epsilon = 1e-12);
        }
        for r in [0.1, 1.0, 7.0] {
            assert_abs_diff_eq!(cf.phi(r).unwrap(), num.phi(r).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn custom_requires_unit_coverage() {
        let short = PsiSpec::custom(vec![0.5], vec![1.0], 1.0).unwrap();
        assert!(PhiTransform::numeric(short).is_err());
        let ok = PsiSpec::custom(vec![0.5, 2.0], vec![0.5, 2.0], 1.0).unwrap();
        let tr: PhiTransform<f64> = PhiTransform::numeric(ok).unwrap();
        assert!(tr.ell().is_infinite());
        // psi(t) = t on [0, 2]
        assert_abs_diff_eq!(tr.phi(1.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn single_precision_transform() {
        let tr = PhiTransform::<f32>::numeric(PsiSpec::power_law(1.0).unwrap()).unwrap();
        assert!((tr.phi(1.0).unwrap() - (-1.0f32).exp()).abs() < 1e-5);
    }
}
