use super::*;
use crate::domain::{Grid, OperatorSpec};
use crate::semilinear::solve_dirichlet;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn interval(n: usize) -> Grid<f64> {
    Grid::interval(0.0, 1.0, n).unwrap()
}

fn laplace(g: &Grid<f64>) -> GreenSystem<f64> {
    GreenSystem::new(g, &OperatorSpec::laplacian(g.dim())).unwrap()
}

fn constant(g: &Grid<f64>, role: FieldRole, v: f64) -> Field<f64> {
    Field::constant(g, role, v)
}

fn numeric(psi: &PsiSpec<f64>) -> PhiTransform<f64> {
    PhiTransform::numeric(psi.clone()).unwrap()
}

#[test]
fn lower_bound_examples() {
    let g = interval(31);
    let sys = laplace(&g);
    let psi = PsiSpec::power_law(1.0).unwrap();
    let tr = numeric(&psi);
    let s = Field::from_fn(&g, FieldRole::Potential, |x| 1.0 + x[0] * (1.0 - x[0]));

    let zero = Field::zeros(&g, FieldRole::Source);
    let b = lower_bound_field(&sys, &zero, &psi, &tr, &s).unwrap();
    assert_eq!(b.values(), s.values());

    let xi = constant(&g, FieldRole::Source, 2.0);
    let b = lower_bound_field(&sys, &xi, &psi, &tr, &s).unwrap();
    let gs = sys.green_apply(&s).unwrap();
    for n in 0..g.len() {
        let expected = s.get(n) * (-2.0 * gs.get(n) / s.get(n)).exp();
        assert_abs_diff_eq!(b.get(n), expected, epsilon = 1e-12);
    }

    let s0 = Field::zeros(&g, FieldRole::Potential);
    let b = lower_bound_field(&sys, &xi, &psi, &tr, &s0).unwrap();
    assert!(b.values().iter().all(|v| *v == 0.0));

    let other = numeric(&PsiSpec::power_law(2.0).unwrap());
    assert!(matches!(
        lower_bound_field(&sys, &xi, &psi, &other, &s),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn supersolution_bound_examples() {
    let g = interval(63);
    let sys = laplace(&g);
    let psi = PsiSpec::power_law(1.0).unwrap();
    let tr = numeric(&psi);
    let one = constant(&g, FieldRole::Source, 1.0);
    let zero = Field::zeros(&g, FieldRole::Source);

    let b = supersolution_bound_field(&sys, &zero, &psi, &tr, &one).unwrap();
    for n in 0..g.len() {
        let x = g.coords(n)[0];
        assert_abs_diff_eq!(b.get(n), x * (1.0 - x) / 2.0, epsilon = 1e-13);
    }

    let b = supersolution_bound_field(&sys, &one, &psi, &tr, &one).unwrap();
    let p = Field::from_fn(&g, FieldRole::Potential, |x| x[0] * (1.0 - x[0]) / 2.0);
    let gp = sys.green_apply(&p).unwrap();
    for &n in g.interior() {
        let expected = p.get(n) * (-gp.get(n) / p.get(n)).exp();
        assert_abs_diff_eq!(b.get(n), expected, epsilon = 1e-12);
    }

    assert!(matches!(
        supersolution_bound_field(&sys, &one, &psi, &tr, &zero),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn closed_form_rows() {
    let p: Field<f64> = Field::new(FieldRole::Potential, vec![0.5, 1.0, 2.0]);
    let q: Field<f64> = Field::new(FieldRole::Potential, vec![0.1, 0.3, 5.0]);
    let lin = closed_form_bound(&PsiSpec::power_law(1.0).unwrap(), &p, &q).unwrap();
    for i in 0..3 {
        assert_abs_diff_eq!(lin.get(i), p.get(i) * (-q.get(i) / p.get(i)).exp(), epsilon = 1e-15);
    }

    // 1 + (gamma - 1) q / p = 1 - 0.5 * 2.5 < 0
    let half = closed_form_bound(&PsiSpec::power_law(0.5).unwrap(), &p, &q).unwrap();
    assert_eq!(half.get(2), 0.0);
    assert_abs_diff_eq!(half.get(0), 0.5 * (1.0 - 0.5 * 0.2f64).powi(2), epsilon = 1e-15);

    let ones: Field<f64> = Field::new(FieldRole::Potential, vec![1.0]);
    let zeros: Field<f64> = Field::new(FieldRole::Potential, vec![0.0]);
    let log = closed_form_bound(&PsiSpec::log_growth(1.0, 1.0).unwrap(), &ones, &zeros).unwrap();
    assert_abs_diff_eq!(log.get(0), 1.0, epsilon = 1e-15);
    let log = closed_form_bound(&PsiSpec::log_growth(1.0, 1.0).unwrap(), &ones, &ones).unwrap();
    assert_abs_diff_eq!(log.get(0), 2f64.powf((-1.0f64).exp()) - 1.0, epsilon = 1e-15);

    let sinh = closed_form_bound(&PsiSpec::sinh(), &ones, &ones).unwrap();
    assert_abs_diff_eq!(sinh.get(0), 2.0 * (0.5f64.tanh() * (-1.0f64).exp()).atanh(), epsilon = 1e-15);

    // affine power, gamma > 1 with the default constant 1/a:
    // p ((a+b)/a exp((gamma-1) q/p) - b/a)^{1/(1-gamma)}
    let (a, b, gamma) = (2.0, 3.0, 2.0);
    let aff = closed_form_bound(&PsiSpec::affine_power(a, b, gamma).unwrap(), &p, &q).unwrap();
    for i in 0..3 {
        let r = q.get(i) / p.get(i);
        let expected = p.get(i) * ((a + b) / a * ((gamma - 1.0) * r).exp() - b / a).powf(1.0 / (1.0 - gamma));
        assert_abs_diff_eq!(aff.get(i), expected, epsilon = 1e-14);
    }
    // gamma < 1 with c = 1/(a+b) reproduces the exponent a/(a+b) (gamma-1) q/p
    let gamma = 0.5;
    let spec = PsiSpec::affine_power(a, b, gamma).unwrap().with_c(1.0 / (a + b)).unwrap();
    let aff = closed_form_bound(&spec, &p, &q).unwrap();
    for i in 0..3 {
        let r = q.get(i) / p.get(i);
        let base = (a + b) / a * (a / (a + b) * (gamma - 1.0) * r).exp() - b / a;
        let expected = p.get(i) * base.max(0.0).powf(1.0 / (1.0 - gamma));
        assert_abs_diff_eq!(aff.get(i), expected, epsilon = 1e-14);
    }

    let custom = PsiSpec::custom(vec![1.0, 2.0], vec![1.0, 2.0], 1.0).unwrap();
    assert!(matches!(
        closed_form_bound(&custom, &p, &q),
        Err(Error::UnsupportedFamily(_))
    ));
}

#[test]
fn sandwich_without_absorption_is_tight() {
    let g = interval(31);
    let sys = laplace(&g);
    let psi = PsiSpec::sinh();
    let tr = numeric(&psi);
    let zero = Field::zeros(&g, FieldRole::Source);
    let f = constant(&g, FieldRole::BoundaryData, 1.0);
    let one = constant(&g, FieldRole::Source, 1.0);
    let r = verify_sandwich(&sys, &zero, &psi, &tr, &f, &one, &SolveConfig::default()).unwrap();
    assert!(r.passed());
    assert_eq!(r.summary.min_slack_lower, 0.0);
    assert_eq!(r.summary.min_slack_upper, 0.0);
    assert!(r.records.iter().all(|x| x.slack_lower == 0.0 && x.slack_upper == 0.0));
}

#[test]
fn sandwich_on_quadratic_absorption() {
    let g = interval(255);
    let sys = laplace(&g);
    let psi = PsiSpec::power_law(2.0).unwrap();
    let tr = numeric(&psi);
    let one = constant(&g, FieldRole::Source, 1.0);
    let f = Field::zeros(&g, FieldRole::BoundaryData);
    let r = verify_sandwich(&sys, &one, &psi, &tr, &f, &one, &SolveConfig::default()).unwrap();
    assert_eq!(r.summary.violated_node_count, 0);
    assert_eq!(r.summary.envelope_exact, Some(true));
    assert!(r.summary.min_slack_lower > -1e-12);
    assert_eq!(r.records.len(), g.len());
    assert_eq!(r.summary.family, FamilyTag::Power);
}

#[test]
fn sandwich_in_the_linear_case() {
    let g = interval(63);
    let sys = laplace(&g);
    let psi = PsiSpec::power_law(1.0).unwrap();
    let tr = numeric(&psi);
    let xi = Field::from_fn(&g, FieldRole::Source, |x| 4.0 * x[0]);
    let f = constant(&g, FieldRole::BoundaryData, 0.5);
    let one = constant(&g, FieldRole::Source, 1.0);
    let r = verify_sandwich(&sys, &xi, &psi, &tr, &f, &one, &SolveConfig::default()).unwrap();
    assert!(r.passed());
}

#[test]
fn sandwich_rejects_uncertified_solves() {
    let g = interval(31);
    let sys = laplace(&g);
    let psi = PsiSpec::sinh();
    let tr = numeric(&psi);
    let xi = constant(&g, FieldRole::Source, 50.0);
    let f = constant(&g, FieldRole::BoundaryData, 1.0);
    let one = constant(&g, FieldRole::Source, 1.0);
    let cfg = SolveConfig {
        max_iter: 1,
        ..SolveConfig::default()
    };
    assert!(matches!(
        verify_sandwich(&sys, &xi, &psi, &tr, &f, &one, &cfg),
        Err(Error::NotConverged { .. })
    ));
    let zero_f = Field::zeros(&g, FieldRole::BoundaryData);
    let zero_g = Field::zeros(&g, FieldRole::Source);
    assert!(matches!(
        verify_sandwich(&sys, &xi, &psi, &tr, &zero_f, &zero_g, &SolveConfig::default()),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn supersolution_examples() {
    let g = interval(127);
    let sys = laplace(&g);
    let psi = PsiSpec::power_law(2.0).unwrap();
    let tr = numeric(&psi);
    let xi = Field::from_fn(&g, FieldRole::Source, |x| 10.0 * x[0]);
    let zero_f = Field::zeros(&g, FieldRole::BoundaryData);
    let one = constant(&g, FieldRole::Source, 1.0);
    let cfg = SolveConfig::default();

    let doubled = solve_dirichlet(&sys, &xi, &psi, &zero_f, &one.scaled(2.0), &cfg).unwrap();
    let r = verify_supersolution(&sys, &xi, &psi, &tr, &one, &doubled.u).unwrap();
    assert!(r.passed());
    assert!(r.summary.supersolution_residual.unwrap() > 0.5);
    assert!(r.records.iter().all(|x| x.upper_bound.is_none()));

    let exact = solve_dirichlet(&sys, &xi, &psi, &zero_f, &one, &cfg).unwrap();
    let r = verify_supersolution(&sys, &xi, &psi, &tr, &one, &exact.u).unwrap();
    assert!(r.passed());

    let zero_u = Field::zeros(&g, FieldRole::Solution);
    assert!(matches!(
        verify_supersolution(&sys, &xi, &psi, &tr, &one, &zero_u),
        Err(Error::NotSupersolution { .. })
    ));
    assert!(verify_supersolution(&sys, &xi, &psi, &tr, &one, &exact.u.scaled(-1.0)).is_err());
}

#[test]
fn numeric_and_analytic_bounds_agree() {
    let g = interval(63);
    let sys = laplace(&g);
    let xi = Field::from_fn(&g, FieldRole::Source, |x| 1.0 + 5.0 * x[0]);
    let src = constant(&g, FieldRole::Source, 3.0);
    for psi in [
        PsiSpec::power_law(1.0).unwrap(),
        PsiSpec::power_law(0.5).unwrap(),
        PsiSpec::power_law(2.0).unwrap(),
        PsiSpec::affine_power(1.0, 1.0, 2.0).unwrap(),
        PsiSpec::sinh(),
        PsiSpec::log_growth(1.0, 1.0).unwrap(),
    ] {
        let gap = closed_form_cross_check(&sys, &xi, &psi, &src).unwrap();
        assert!(gap <= 1e-8, "{:?}: {gap}", psi.tag());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bounds_are_ordered_and_monotone_in_xi(
        xi in prop::collection::vec(0.0f64..10.0, 33),
        level in 0.0f64..2.0,
        family in 0usize..4,
    ) {
        let psi = [
            PsiSpec::power_law(0.5).unwrap(),
            PsiSpec::power_law(1.0).unwrap(),
            PsiSpec::power_law(2.0).unwrap(),
            PsiSpec::sinh(),
        ][family].clone();
        let tr = numeric(&psi);
        let g = interval(31);
        let sys = laplace(&g);
        let xi = Field::new(FieldRole::Source, xi);
        let f = constant(&g, FieldRole::BoundaryData, level);
        let one = constant(&g, FieldRole::Source, 1.0);
        let s = sys.s_datum(&f, &one).unwrap();
        let b1 = lower_bound_field(&sys, &xi, &psi, &tr, &s).unwrap();
        let b2 = lower_bound_field(&sys, &xi.scaled(2.0), &psi, &tr, &s).unwrap();
        for n in 0..g.len() {
            prop_assert!(b1.get(n) >= 0.0 && b1.get(n) <= s.get(n));
            prop_assert!(b2.get(n) <= b1.get(n));
        }
    }
}
