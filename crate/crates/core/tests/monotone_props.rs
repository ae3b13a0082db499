use multiconj::contact::FiniteGamma;
use multiconj::monotone::{is_n_c_monotone, MonotonicityQuery, DEFAULT_BUDGET};
use multiconj::PointTuple;
use proptest::prelude::*;

fn gamma(ts: &[[f64; 3]]) -> FiniteGamma {
    FiniteGamma::new(ts.iter().map(|t| PointTuple::scalars(t).unwrap()).collect(), 0.0, "prop")
}

fn check(g: &FiniteGamma, n: usize) -> multiconj::monotone::MonotoneVerdict {
    is_n_c_monotone(&MonotonicityQuery::new(g.clone(), n, DEFAULT_BUDGET).unwrap()).unwrap()
}

/// Near-diagonal scalar tuples: monotone often enough to make the
/// implication non-vacuous.
fn near_diagonal() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec((-3i32..=3, -1i32..=1, -1i32..=1), 2..6)
        .prop_map(|v| v.into_iter().map(|(x, a, b)| [x as f64, (x + a) as f64, (x + b) as f64]).collect())
}

fn permuted_excess(tuples: &[PointTuple], perms: &[Vec<usize>]) -> f64 {
    let n = tuples.len();
    let nm = tuples[0].n();
    let mut s = 0.0;
    for j in 0..n {
        let pts: Vec<&[f64]> = (0..nm).map(|i| tuples[perms[i][j]].point(i)).collect();
        s += PointTuple::new(&pts).unwrap().cost();
    }
    s - tuples.iter().map(PointTuple::cost).sum::<f64>()
}

proptest! {
    #[test]
    fn downward_closure(ts in near_diagonal()) {
        let g = gamma(&ts);
        let v: Vec<bool> = (2..=4).map(|n| check(&g, n).monotone).collect();
        for n in 1..v.len() {
            if v[n] {
                prop_assert!(v[n - 1], "order {} monotone but {} not: {v:?}", n + 2, n + 1);
            }
        }
    }

    #[test]
    fn witness_reproduces_excess(ts in near_diagonal(), n in 2usize..=3) {
        let g = gamma(&ts);
        let v = check(&g, n);
        if let Some(w) = v.witness {
            prop_assert!(w.excess > 1e-9);
            prop_assert_eq!(w.perms[0].clone(), (0..n).collect::<Vec<_>>());
            let again = permuted_excess(&w.tuples, &w.perms);
            prop_assert!((again - w.excess).abs() < 1e-9, "{again} vs {}", w.excess);
            let id = vec![(0..n).collect::<Vec<_>>(); 3];
            prop_assert_eq!(permuted_excess(&w.tuples, &id), 0.0);
        }
    }

    /// Tuples certified by the potentials `((N−1)q, …)` are monotone.
    #[test]
    fn diagonal_sets_are_monotone(xs in prop::collection::vec(-5.0..5.0f64, 1..8), n in 2usize..=3) {
        let ts: Vec<[f64; 3]> = xs.iter().map(|&x| [x, x, x]).collect();
        prop_assert!(check(&gamma(&ts), n).monotone);
    }
}

#[test]
fn identity_rearrangement_is_neutral() {
    let ts = [[1.0, -2.0, 0.5], [0.0, 3.0, -1.0], [2.0, 2.0, 2.0]];
    let g = gamma(&ts);
    let id = vec![vec![0, 1, 2]; 3];
    assert_eq!(permuted_excess(g.tuples(), &id), 0.0);
}
