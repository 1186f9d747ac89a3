use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use ommo::functions::{make_sc_sc_quadratic, DecisionPoint, GameDomain, GameFunction};
use ommo::geometry::{project_weighted_matrix, Domain};
use ommo::learners::{Learner, Player, FEASIBILITY_TOL};
use ommo::linalg::{RegularityMatrix, Split};
use ommo::meta::{ending_time, exp_weights};
use ommo::metrics::{dynamic_gap, static_gap};
use proptest::prelude::*;

fn vec_in(d: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, d)
}

fn quadratic(a: &[f64], b: &[f64], c: f64) -> Arc<dyn GameFunction> {
    let dom = GameDomain::new(Domain::cube(2, 1.0).unwrap(), Domain::cube(2, 1.0).unwrap());
    let coupling = DMatrix::from_element(2, 2, c);
    Arc::new(make_sc_sc_quadratic(1.0, &DVector::from_column_slice(a), &DVector::from_column_slice(b), &coupling, dom).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_one_inverse_tracks_direct_inverse(vs in prop::collection::vec(vec_in(4, 3.0), 1..40), eps in 0.1f64..5.0) {
        let mut a = RegularityMatrix::init(4, eps).unwrap();
        for v in &vs {
            a.rank_one_update(&DVector::from_column_slice(v)).unwrap();
        }
        let direct = a.matrix().try_inverse().unwrap();
        prop_assert!((a.inverse() - direct).amax() <= 1e-10);
    }

    #[test]
    fn block_split_keeps_the_matrix_block_diagonal(f in vec_in(3, 2.0)) {
        let mut a = RegularityMatrix::init(3, 1.0).unwrap();
        a.add_block_split(&DVector::from_column_slice(&f), &Split::new(vec![2, 1]).unwrap()).unwrap();
        let m = a.matrix();
        prop_assert_eq!(m[(0, 2)], 0.0);
        prop_assert_eq!(m[(1, 2)], 0.0);
        prop_assert!((m[(2, 2)] - 1.0 - f[2] * f[2]).abs() < 1e-12);
    }

    #[test]
    fn weighted_projection_is_feasible_and_idempotent(u in vec_in(3, 4.0), diag in vec_in(3, 1.0)) {
        let a = DMatrix::from_diagonal(&DVector::from_iterator(3, diag.iter().map(|d| 1.5 + d)));
        for dom in [Domain::cube(3, 1.0).unwrap(), Domain::simplex(3, 1.0).unwrap(), Domain::ball(vec![0.0; 3], 1.0).unwrap()] {
            let p = project_weighted_matrix(&DVector::from_column_slice(&u), &a, &dom).unwrap();
            prop_assert!(dom.contains(&p, 1e-8).unwrap());
            let again = project_weighted_matrix(&p, &a, &dom).unwrap();
            prop_assert!((again - &p).norm() < 1e-6);
        }
    }

    #[test]
    fn learners_stay_feasible_from_any_start(
        start in vec_in(4, 1.0),
        centers in prop::collection::vec((vec_in(2, 3.0), vec_in(2, 3.0)), 1..30),
    ) {
        let fns: Vec<_> = centers.iter().map(|(a, b)| quadratic(a, b, 0.2)).collect();
        let dom = fns[0].domain().clone();
        let z0 = dom.split(&DVector::from_column_slice(&start));
        let c = *fns[0].constants();
        let mut players: Vec<Box<dyn Player>> = vec![
            Box::new(Learner::ogda(dom.clone(), 1.0).unwrap().with_start(z0.clone()).unwrap()),
            Box::new(Learner::ommns(dom.clone(), c.ec_gamma(), None).unwrap().with_start(z0.clone()).unwrap()),
            Box::new(
                Learner::online_vi(dom.clone(), Split::new(vec![2, 2]).unwrap(), c.ec_gamma(), None)
                    .unwrap()
                    .with_start(z0.clone())
                    .unwrap(),
            ),
        ];
        for p in players.iter_mut() {
            for f in &fns {
                p.observe(f.as_ref()).unwrap();
                prop_assert!(dom.contains(&p.play(), FEASIBILITY_TOL).unwrap(), "{} left the domain", p.name());
            }
        }
    }

    #[test]
    fn dynamic_gap_dominates_static_gap(a in vec_in(2, 2.0), b in vec_in(2, 2.0), z in vec_in(4, 1.0), r in vec_in(4, 1.0)) {
        let f = quadratic(&a, &b, 0.4);
        let dom = f.domain().clone();
        let z = dom.split(&DVector::from_column_slice(&z));
        let reference: DecisionPoint = dom.split(&DVector::from_column_slice(&r));
        let g_star = dynamic_gap(f.as_ref(), &z, false).unwrap().value;
        prop_assert!(g_star >= -1e-12);
        prop_assert!(static_gap(f.as_ref(), &z, &reference).unwrap() <= g_star + 1e-12);
    }

    #[test]
    fn ending_times_are_strictly_later_and_divisible(t in 1usize..100_000, k in 2usize..12) {
        let e = ending_time(t, k);
        prop_assert!(e > t);
        let mut v = 0;
        let mut s = t;
        while s % k == 0 {
            s /= k;
            v += 1;
        }
        prop_assert_eq!(e % k.pow(v + 1), 0);
        prop_assert!(e - t <= k.pow(v + 1));
    }

    #[test]
    fn exponential_weights_stay_normalized(w in prop::collection::vec(0.01f64..1.0, 1..12), seed in 0.0f64..10.0) {
        let losses: Vec<f64> = (0..w.len()).map(|i| (seed + i as f64).sin() * 5.0).collect();
        let out = exp_weights(&w, &losses, 0.7);
        prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(out.iter().all(|p| *p > 0.0));
    }
}
