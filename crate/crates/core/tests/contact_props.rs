use multiconj::contact::{contact_set, verify_partition_identities, SumSet};
use multiconj::descriptor::sample_analytic;
use multiconj::gallery::quadratic_tuple;
use multiconj::monotone::{is_n_c_monotone, MonotonicityQuery, DEFAULT_BUDGET};
use multiconj::multiconj::{involutivity_closure, is_c_conjugate_tuple, Trust};
use multiconj::random::{rng, PlConvex};
use multiconj::transforms::conj;
use multiconj::{Grid, GridFunction, Marginal, ToleranceConfig};
use proptest::prelude::*;
use rand::seq::index::sample;

fn line(lo: f64, hi: f64, h: f64) -> Grid {
    Grid::line(lo, hi, h).unwrap()
}

fn subsamples_are_monotone(gamma: &multiconj::contact::FiniteGamma, seed: u64) {
    let mut r = rng(seed);
    for _ in 0..30 {
        let k = 6.min(gamma.len());
        let idx = sample(&mut r, gamma.len(), k).into_vec();
        let sub = gamma.select(&idx);
        for n in 2..=3 {
            let v = is_n_c_monotone(&MonotonicityQuery::new(sub.clone(), n, DEFAULT_BUDGET).unwrap()).unwrap();
            assert!(v.monotone, "order {n}: {:?}", v.witness.map(|w| w.to_string()));
        }
    }
}

#[test]
fn contact_sets_of_closed_tuples_are_monotone() {
    let tol = ToleranceConfig::default();
    let h = 0.1;
    let g = line(-1.0, 1.0, h);
    let out = line(-3.0, 3.0, h);
    let mut checked = 0;
    for seed in 0..6u64 {
        let f2 = PlConvex::random(&mut rng(2 * seed), 3, 1.0, Some(h)).sample(&g).unwrap();
        let f3 = PlConvex::random(&mut rng(2 * seed + 1), 3, 1.0, Some(h)).sample(&g).unwrap();
        let c = involutivity_closure(&[f2, f3], &out, 1.0, &tol).unwrap();
        if !c.report.passed() {
            continue;
        }
        let fs: Vec<Marginal> = [c.f1, c.rebuilt[0].clone(), c.rebuilt[1].clone()].map(Marginal::from).to_vec();
        if !is_c_conjugate_tuple(&fs, &[Trust::Inset(1.0), Trust::All, Trust::All], &tol).unwrap().passed() {
            continue;
        }
        let gamma = contact_set(&fs, tol.eps_contact).unwrap();
        assert!(!gamma.is_empty());
        subsamples_are_monotone(&gamma, seed);
        checked += 1;
    }
    assert!(checked >= 3, "only {checked} tuples passed");
}

#[test]
fn contact_set_of_quadratic_tuple_is_diagonal_and_monotone() {
    let tol = ToleranceConfig::default();
    let g = Grid::square(-1.0, 1.0, 0.25).unwrap();
    let fs: Vec<Marginal> = quadratic_tuple(3)
        .unwrap()
        .iter()
        .map(|d| sample_analytic(d, &g).unwrap().into())
        .collect();
    let gamma = contact_set(&fs, tol.eps_contact).unwrap();
    assert_eq!(gamma.len(), g.len());
    assert!(gamma.tuples().iter().all(|t| t.point(0) == t.point(1) && t.point(1) == t.point(2)));
    subsamples_are_monotone(&gamma, 1);
}

/// Tuple check, envelope partition and prox partition agree on pass/fail.
#[test]
fn equivalent_batteries_agree() {
    let tol = ToleranceConfig::default();
    let h = 0.02;
    let g = line(-2.0, 2.0, h);
    let dual = line(-4.0, 4.0, h);
    let samples: Vec<Vec<f64>> = (0..41).map(|k| vec![-1.0 + 0.05 * k as f64]).collect();
    for n in 2..=4 {
        let quad: Vec<GridFunction> = quadratic_tuple(n).unwrap().iter().map(|d| sample_analytic(d, &g).unwrap()).collect();
        let mut bent = quad.clone();
        bent[0] = bent[0].map(|x, v| v + 0.3 * x[0].abs()).unwrap();
        let mut verdicts = Vec::new();
        for fs in [quad, bent] {
            let ms: Vec<Marginal> = fs.iter().cloned().map(Marginal::from).collect();
            let conjs: Vec<Marginal> = fs.iter().map(|f| conj(f, &dual).unwrap().into()).collect();
            let tuple = is_c_conjugate_tuple(&ms, &vec![Trust::Inset(0.5); n], &tol).unwrap();
            let part = verify_partition_identities(&ms, &conjs, &samples, &tol).unwrap();
            let all = [
                tuple.passed(),
                part.get("envelope-sum").unwrap().pass,
                part.get("prox-sum").unwrap().pass,
            ];
            assert!(all.iter().all(|&p| p == all[0]), "N={n}: {tuple}{part}");
            verdicts.push(all[0]);
        }
        assert_eq!(verdicts, vec![true, false]);
    }
}

proptest! {
    /// A gap of radius more than two coarse steps stays visible after refinement.
    #[test]
    fn holes_survive_probe_refinement(
        pts in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 50..400),
        center in (-1.0..1.0f64, -1.0..1.0f64),
    ) {
        let coarse = Grid::square(-2.0, 2.0, 0.2).unwrap();
        let fine = Grid::square(-2.0, 2.0, 0.1).unwrap();
        let r = 0.5;
        let kept: Vec<Vec<f64>> = pts
            .into_iter()
            .filter(|p| (p.0 - center.0).hypot(p.1 - center.1) > r)
            .map(|p| vec![p.0, p.1])
            .collect();
        let s: SumSet = SumSet::from_points(2, kept.clone());
        let c = s.coverage(&coarse).unwrap();
        let f = s.coverage(&fine).unwrap();
        for k in 0..coarse.len() {
            if c.is_covered(k) {
                continue;
            }
            let x = coarse.node(k);
            let far = kept.iter().all(|p| (p[0] - x[0]).hypot(p[1] - x[1]) > 2.0 * 0.2);
            if far {
                let j = fine.node_index(&x).unwrap();
                prop_assert!(!f.is_covered(j), "hole at {x:?} vanished");
            }
        }
    }
}
