use super::*;
use crate::domain::{exhaustion_chain, Coefficients};
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn interval(n: usize) -> Grid<f64> {
    Grid::interval(0.0, 1.0, n).unwrap()
}

fn dense_inverse(m: &SparseMatrix<f64>) -> Vec<Vec<f64>> {
    let n = m.nrows();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; 2 * n];
            for (j, v) in m.row(i) {
                row[j] = v;
            }
            row[n + i] = 1.0;
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        a.swap(col, p);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                let pivot = a[col].clone();
                for (v, pv) in a[r].iter_mut().zip(pivot) {
                    *v -= f * pv;
                }
            }
        }
    }
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}

#[test]
fn harmonic_extension_1d() {
    let g = interval(7);
    let sys = GreenSystem::new(&g, &OperatorSpec::laplacian(1)).unwrap();
    let f = Field::from_fn(&g, FieldRole::BoundaryData, |x| x[0]);
    let h = sys.harmonic_extension(&f).unwrap();
    for n in 0..g.len() {
        assert_abs_diff_eq!(h.get(n), g.coords(n)[0], epsilon = 1e-14);
    }
    let five = Field::constant(&g, FieldRole::BoundaryData, 5.0);
    let h = sys.harmonic_extension(&five).unwrap();
    assert!(h.values().iter().all(|v| (v - 5.0).abs() < 1e-13));
}

#[test]
fn green_potential_of_unit_source() {
    let g = interval(31);
    let sys = GreenSystem::new(&g, &OperatorSpec::laplacian(1)).unwrap();
    let one = Field::constant(&g, FieldRole::Source, 1.0);
    let u = sys.green_apply(&one).unwrap();
    for n in 0..g.len() {
        let x = g.coords(n)[0];
        assert_abs_diff_eq!(u.get(n), x * (1.0 - x) / 2.0, epsilon = 1e-13);
    }
    assert!(relative_potential_residual(&sys, &u, &one).unwrap() <= 1e-10);
    let zero = Field::zeros(&g, FieldRole::Source);
    assert!(sys.green_apply(&zero).unwrap().values().iter().all(|v| *v == 0.0));
}

#[test]
fn column_matches_interval_green_function() {
    let g = interval(7);
    let sys = GreenSystem::new(&g, &OperatorSpec::laplacian(1)).unwrap();
    let y = g.nearest_node([0.5, 0.0]).unwrap();
    let col = sys.green_matrix_column(y).unwrap();
    for n in 0..g.len() {
        let x = g.coords(n)[0];
        let exact = if x <= 0.5 { x * 0.5 } else { 0.5 * (1.0 - x) };
        assert_abs_diff_eq!(col.get(n), exact, epsilon = 1e-14);
    }
    assert!(matches!(
        sys.green_matrix_column(g.boundary()[0]),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn dense_oracle_on_five_nodes() {
    for op in [
        OperatorSpec::laplacian(1),
        OperatorSpec::laplacian_with_drift(1, [3.0, 0.0]),
    ] {
        let g = interval(5);
        let sys = GreenSystem::new(&g, &op).unwrap();
        let inv = dense_inverse(&sys.interior_matrix().scaled(-1.0));
        let w = g.weight();
        let gs = [0.3, 1.0, 0.0, 2.5, 0.7];
        let mut src = Field::zeros(&g, FieldRole::Source);
        for (&n, v) in g.interior().iter().zip(gs) {
            src.values_mut()[n] = v;
        }
        let u = sys.green_apply(&src).unwrap();
        let mut sum = vec![0.0; g.len()];
        for (j, &y) in g.interior().iter().enumerate() {
            let col = sys.green_matrix_column(y).unwrap();
            for (i, &x) in g.interior().iter().enumerate() {
                assert_abs_diff_eq!(col.get(x), inv[i][j] / w, epsilon = 1e-12);
            }
            for n in 0..g.len() {
                sum[n] += col.get(n) * gs[j] * w;
            }
        }
        let scale = u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for n in 0..g.len() {
            assert!((u.get(n) - sum[n]).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn self_adjoint_columns_are_symmetric() {
    let g = Grid::rectangle([(0.0, 1.0), (0.0, 2.0)], 4, 3).unwrap();
    let sys = GreenSystem::new(&g, &OperatorSpec::laplacian(2)).unwrap();
    let cols: Vec<Field<f64>> = g
        .interior()
        .iter()
        .map(|&y| sys.green_matrix_column(y).unwrap())
        .collect();
    for (i, &x) in g.interior().iter().enumerate() {
        for (j, &y) in g.interior().iter().enumerate() {
            assert_abs_diff_eq!(cols[j].get(x), cols[i].get(y), epsilon = 1e-12);
            assert!(cols[j].get(x) > 0.0);
        }
    }
}

#[test]
fn drift_columns_are_positive() {
    let g = Grid::rectangle([(0.0, 1.0), (0.0, 1.0)], 6, 6).unwrap();
    let sys = GreenSystem::new(&g, &OperatorSpec::laplacian_with_drift(2, [20.0, -4.0])).unwrap();
    for &y in g.interior() {
        let col = sys.green_matrix_column(y).unwrap();
        assert!(g.interior().iter().all(|&x| col.get(x) > 0.0));
    }
}

#[test]
fn restriction_identity_on_nested_intervals() {
    let big = interval(15);
    // interior x = 5/16 .. 11/16, boundary at 0.25 and 0.75
    let small = big.subgrid_box([5, 0], [11, 0]).unwrap();
    assert_abs_diff_eq!(small.coords(small.boundary()[0])[0], 0.25);
    let y = big.site(big.nearest_node([0.5, 0.0]).unwrap());
    for op in [
        OperatorSpec::laplacian(1),
        OperatorSpec::laplacian_with_drift(1, [1.0, 0.0]),
    ] {
        let sb = GreenSystem::new(&big, &op).unwrap();
        let ss = GreenSystem::new(&small, &op).unwrap();
        assert!(restriction_identity_check(&ss, &sb, y).unwrap() <= 1e-10);
        assert!(restriction_identity_check(&sb, &sb, y).unwrap() <= 1e-12);
    }
    let sb = GreenSystem::new(&big, &OperatorSpec::laplacian(1)).unwrap();
    let ss = GreenSystem::new(&small, &OperatorSpec::laplacian(1)).unwrap();
    assert!(restriction_identity_check(&sb, &ss, y).is_err());
    let off = big.site(big.interior()[0]);
    assert!(matches!(
        restriction_identity_check(&ss, &sb, off),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn green_limits_increase() {
    let g = interval(15);
    let chain = exhaustion_chain(&g, 3).unwrap();
    let y = g.site(g.nearest_node([0.5, 0.0]).unwrap());
    let probe = g.site(g.nearest_node([0.375, 0.0]).unwrap());
    let op = OperatorSpec::laplacian(1);
    for p in [probe, y] {
        let report = green_limit_check(&chain, &op, y, p).unwrap();
        assert_eq!(report.values.len(), 3);
        assert!(report.is_monotone(1e-12));
        assert!(report.max_decrease < 0.0);
    }
    let single = exhaustion_chain(&g, 1).unwrap();
    let report = green_limit_check(&single, &op, y, probe).unwrap();
    assert_eq!(report.values.len(), 1);
    assert!(report.is_monotone(0.0));
}

#[test]
fn superharmonic_datum() {
    let g = interval(15);
    let sys = GreenSystem::new(&g, &OperatorSpec::laplacian(1)).unwrap();
    let one_b = Field::constant(&g, FieldRole::BoundaryData, 1.0);
    let zero_b = Field::zeros(&g, FieldRole::BoundaryData);
    let one = Field::constant(&g, FieldRole::Source, 1.0);
    let zero = Field::zeros(&g, FieldRole::Source);
    let s = sys.s_datum(&one_b, &one).unwrap();
    let p = sys.s_datum(&zero_b, &one).unwrap();
    let h = sys.s_datum(&one_b, &zero).unwrap();
    for n in 0..g.len() {
        let x = g.coords(n)[0];
        assert_abs_diff_eq!(s.get(n), 1.0 + x * (1.0 - x) / 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(p.get(n), x * (1.0 - x) / 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(h.get(n), 1.0, epsilon = 1e-13);
    }
    let neg = one.scaled(-1.0);
    assert!(sys.s_datum(&one_b, &neg).is_err());
}

#[test]
fn potentials_are_harmonic_off_the_support() {
    let g = interval(29);
    let sys = GreenSystem::new(&g, &OperatorSpec::laplacian(1)).unwrap();
    let left = Field::from_fn(&g, FieldRole::Source, |x| if x[0] < 1.0 / 3.0 { 1.0 } else { 0.0 });
    assert!(sys.harmonicity_off_support_check(&left).unwrap() <= 1e-10);
    let zero = Field::zeros(&g, FieldRole::Source);
    assert_eq!(sys.harmonicity_off_support_check(&zero).unwrap(), 0.0);

    let d = Grid::disk([0.0, 0.0], 1.0, 21).unwrap();
    let sys = GreenSystem::new(&d, &OperatorSpec::laplacian(2)).unwrap();
    let c = d.nearest_node([0.0, 0.0]).unwrap();
    let mut delta = Field::zeros(&d, FieldRole::Source);
    delta.values_mut()[c] = 1.0;
    assert!(sys.harmonicity_off_support_check(&delta).unwrap() <= 1e-10);
}

#[test]
fn gamma_diagnostic() {
    let g = interval(7);
    let sys = GreenSystem::new(&g, &OperatorSpec::laplacian(1)).unwrap();
    assert_abs_diff_eq!(sys.gamma_bound_diagnostic(64).unwrap(), 0.25, epsilon = 1e-14);

    let r = Grid::rectangle([(0.0, 1.0), (0.0, 1.0)], 15, 15).unwrap();
    let sys = GreenSystem::new(&r, &OperatorSpec::laplacian(2)).unwrap();
    let c: f64 = sys.gamma_bound_diagnostic(16).unwrap();
    assert!(c.is_finite() && c > 0.0);

    let lone = interval(3).peel(1).unwrap();
    assert_eq!(lone.interior().len(), 1);
    let sys = GreenSystem::new(&lone, &OperatorSpec::laplacian(1)).unwrap();
    assert_abs_diff_eq!(sys.gamma_bound_diagnostic(8).unwrap(), 0.125, epsilon = 1e-15);
}

#[test]
fn conjugate_gradients_agree_with_band_solver() {
    let g = Grid::rectangle([(0.0, 1.0), (0.0, 1.0)], 20, 17).unwrap();
    let op = OperatorSpec::laplacian(2);
    let direct = GreenSystem::with_solver(&g, &op, SolverChoice::Banded).unwrap();
    let cg = GreenSystem::with_solver(&g, &op, SolverChoice::ConjugateGradient).unwrap();
    let src = Field::from_fn(&g, FieldRole::Source, |x| 1.0 + x[0] * x[1]);
    let a = direct.green_apply(&src).unwrap();
    let b = cg.green_apply(&src).unwrap();
    let scale = a.values().iter().fold(0.0f64, |m, v| m.max(*v));
    for n in 0..g.len() {
        assert!((a.get(n) - b.get(n)).abs() <= 1e-10 * scale);
    }
    let drift = OperatorSpec::laplacian_with_drift(2, [1.0, 0.0]);
    assert!(GreenSystem::with_solver(&g, &drift, SolverChoice::ConjugateGradient).is_err());
}

#[test]
fn concurrent_solves_share_one_factorization() {
    let g = interval(63);
    let sys = GreenSystem::new(&g, &OperatorSpec::laplacian(1)).unwrap();
    let serial: Vec<Field<f64>> = (1..=4)
        .map(|k| sys.green_apply(&Field::constant(&g, FieldRole::Source, k as f64)).unwrap())
        .collect();
    let parallel: Vec<Field<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = (1..=4)
            .map(|k| {
                let (sys, g) = (&sys, &g);
                s.spawn(move || {
                    sys.green_apply(&Field::constant(g, FieldRole::Source, k as f64))
                        .unwrap()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(serial, parallel);
}

#[test]
fn single_precision_solves() {
    let g: Grid<f32> = Grid::interval(0.0, 1.0, 15).unwrap();
    let sys = GreenSystem::new(&g, &OperatorSpec::laplacian(1)).unwrap();
    let u = sys
        .green_apply(&Field::constant(&g, FieldRole::Source, 1.0f32))
        .unwrap();
    for n in 0..g.len() {
        let x = g.coords(n)[0];
        assert!((u.get(n) - x * (1.0 - x) / 2.0).abs() < 1e-5);
    }
}

fn variable_operator() -> OperatorSpec<f64> {
    OperatorSpec::from_fn(2, |x: &[f64; 2]| Coefficients {
        a: [[1.0 + x[0], 0.1], [0.1, 1.0 + x[1] * x[1]]],
        b: [2.0 * x[1], -1.0],
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn positivity_and_maximum_principle(
        src in prop::collection::vec(0.0f64..5.0, 49),
        bnd in prop::collection::vec(-2.0f64..3.0, 32),
    ) {
        let g = Grid::rectangle([(0.0, 1.0), (0.0, 1.0)], 7, 7).unwrap();
        let sys = GreenSystem::new(&g, &variable_operator()).unwrap();
        let mut s = Field::zeros(&g, FieldRole::Source);
        for (&n, v) in g.interior().iter().zip(&src) {
            s.values_mut()[n] = *v;
        }
        let u = sys.green_apply(&s).unwrap();
        prop_assert!(u.values().iter().all(|v| *v >= 0.0));

        let mut f = Field::zeros(&g, FieldRole::BoundaryData);
        for (&n, v) in g.boundary().iter().zip(&bnd) {
            f.values_mut()[n] = *v;
        }
        let (lo, hi) = bnd.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let h = sys.harmonic_extension(&f).unwrap();
        for &n in g.interior() {
            prop_assert!(h.get(n) >= lo - 1e-12 && h.get(n) <= hi + 1e-12);
        }
    }

    #[test]
    fn green_operator_is_linear(
        g1 in prop::collection::vec(-3.0f64..3.0, 31),
        g2 in prop::collection::vec(-3.0f64..3.0, 31),
        alpha in -4.0f64..4.0,
    ) {
        let g = interval(31);
        let sys = GreenSystem::new(&g, &OperatorSpec::laplacian_with_drift(1, [5.0, 0.0])).unwrap();
        let field = |v: &[f64]| {
            let mut f = Field::zeros(&g, FieldRole::Source);
            for (&n, x) in g.interior().iter().zip(v) {
                f.values_mut()[n] = *x;
            }
            f
        };
        let combo: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| alpha * a + b).collect();
        let lhs = sys.green_apply(&field(&combo)).unwrap();
        let u1 = sys.green_apply(&field(&g1)).unwrap();
        let u2 = sys.green_apply(&field(&g2)).unwrap();
        let scale = u1.values().iter().chain(u2.values()).fold(1e-300f64, |m, v| m.max(v.abs()));
        for n in 0..g.len() {
            let rhs = alpha * u1.get(n) + u2.get(n);
            prop_assert!((lhs.get(n) - rhs).abs() <= 1e-12 * scale * (1.0 + alpha.abs()));
        }
    }

    #[test]
    fn green_functions_grow_with_the_domain(lo in 1usize..6, hi in 10usize..15, y in 6usize..10) {
        let big = interval(15);
        let small = big.subgrid_box([lo, 0], [hi, 0]).unwrap();
        let op = OperatorSpec::laplacian_with_drift(1, [2.0, 0.0]);
        let sb = GreenSystem::new(&big, &op).unwrap();
        let ss = GreenSystem::new(&small, &op).unwrap();
        let site = big.lattice().site(y, 0);
        let cb = sb.green_matrix_column(big.node_at(site).unwrap()).unwrap();
        let cs = ss.green_matrix_column(small.node_at(site).unwrap()).unwrap();
        for n in 0..small.len() {
            let m = big.node_at(small.site(n)).unwrap();
            prop_assert!(cs.get(n) <= cb.get(m) + 1e-12);
        }
    }
}
