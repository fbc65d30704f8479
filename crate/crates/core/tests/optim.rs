use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rsi_core::optim::{solve_lp, solve_lp_by_enumeration, solve_qp, LpProblem, QpProblem, SolveStatus};

/// Box-bounded LP in up to four variables with a few random cuts through the origin's neighbourhood.
fn lp() -> impl Strategy<Value = LpProblem> {
    (2usize..=4).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec((prop::collection::vec(-1.0f64..1.0, n), -1.0f64..0.5), 0..4),
        )
            .prop_map(move |(cost, cuts)| {
                let mut p = LpProblem::new(cost);
                for j in 0..n {
                    p.set_bounds(j, -1.0, 1.0);
                }
                for (a, b) in cuts {
                    // Every cut keeps the origin feasible.
                    p.add_ge(a, b.min(0.0));
                }
                p
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplex_agrees_with_vertex_enumeration(p in lp()) {
        let sol = solve_lp(&p).unwrap();
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        let (best, _) = solve_lp_by_enumeration(&p).unwrap().expect("feasible");
        prop_assert!((sol.objective - best).abs() <= 1e-9 * best.abs().max(1.0));
        prop_assert!(sol.is_vertex);
        prop_assert!(p.max_violation(&sol.x) <= 1e-9);
    }

    #[test]
    fn qp_solutions_satisfy_kkt(
        n in 2usize..=5,
        seed in prop::collection::vec(-1.0f64..1.0, 25),
        rows in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 5), 0.0f64..1.0), 1..6),
        lin in prop::collection::vec(-3.0f64..3.0, 5),
    ) {
        let m = DMatrix::from_fn(n, n, |i, j| seed[i * 5 + j]);
        let h = m.transpose() * &m + DMatrix::identity(n, n) * 0.1;
        let c = DVector::from_fn(n, |i, _| lin[i]);
        let mut qp = QpProblem::new(h.clone(), c.clone());
        for (a, slack) in &rows {
            // The origin is strictly feasible.
            qp.add_ge(&a[..n], -slack - 0.01);
        }
        let sol = solve_qp(&qp).unwrap();
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        let mut grad = &h * &sol.x + &c;
        for (i, (a, slack)) in rows.iter().enumerate() {
            let av = DVector::from_column_slice(&a[..n]);
            let lam = sol.ineq_multipliers[i];
            let r = av.dot(&sol.x) + slack + 0.01;
            prop_assert!(lam >= -1e-10 && r >= -1e-10 && (lam * r).abs() <= 1e-8);
            grad -= av * lam;
        }
        prop_assert!(grad.amax() <= 1e-8);
        prop_assert!(sol.kkt.max() <= 1e-8);
    }
}

#[test]
fn infeasible_lp_is_reported() {
    let mut p = LpProblem::new(vec![1.0]);
    p.set_bounds(0, 0.0, 1.0);
    p.add_ge(vec![1.0], 2.0);
    assert_eq!(solve_lp(&p).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn equality_constrained_qp_projects_onto_the_plane() {
    // min |x|^2 subject to x1 + x2 = 2 gives (1, 1).
    let mut qp = QpProblem::new(DMatrix::identity(2, 2) * 2.0, DVector::zeros(2));
    qp.add_eq(&[1.0, 1.0], 2.0);
    let sol = solve_qp(&qp).unwrap();
    assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
}
