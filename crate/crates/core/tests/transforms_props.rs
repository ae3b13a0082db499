use multiconj::random::{rng, PlConvex};
use multiconj::transforms::{biconjugate, conj, conjugate, moreau_envelope, prox, ConjugateRequest, Method};
use multiconj::{Axis, Grid, GridFunction};
use proptest::prelude::*;

fn line(lo: f64, hi: f64, h: f64) -> Grid {
    Grid::line(lo, hi, h).unwrap()
}

/// Random proper values: finite with occasional +∞, at least one finite.
fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![8 => -5.0..5.0f64, 1 => Just(f64::INFINITY)], n)
        .prop_map(|mut v| {
            if v.iter().all(|x| x.is_infinite()) {
                v[0] = 0.0;
            }
            v
        })
}

fn fn_1d() -> impl Strategy<Value = GridFunction> {
    (2usize..60, -2.0..0.0f64, 0.01..0.2f64)
        .prop_flat_map(|(n, o, h)| (values(n), Just(o), Just(h)))
        .prop_map(|(v, o, h)| {
            let g = Grid::new(vec![Axis::new(o, h, v.len()).unwrap()]).unwrap();
            GridFunction::new(g, v).unwrap()
        })
}

fn fn_2d() -> impl Strategy<Value = GridFunction> {
    (2usize..10, 2usize..10)
        .prop_flat_map(|(a, b)| (values(a * b), Just(a), Just(b)))
        .prop_map(|(v, a, b)| {
            let g = Grid::new(vec![Axis::new(-1.0, 0.2, a).unwrap(), Axis::new(-0.5, 0.15, b).unwrap()]).unwrap();
            GridFunction::new(g, v).unwrap()
        })
}

fn both(f: &GridFunction, dual: &Grid) -> (GridFunction, GridFunction) {
    let run = |method| {
        conjugate(&ConjugateRequest {
            input: f,
            dual_grid: dual,
            method,
        })
        .unwrap()
    };
    (run(Method::Fast), run(Method::Brute))
}

fn dual_for(f: &GridFunction) -> Grid {
    let axes = (0..f.dim()).map(|_| Axis::new(-3.0, 0.07, 60).unwrap()).collect();
    Grid::new(axes).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fast_and_brute_conjugates_agree_1d(f in fn_1d()) {
        let (a, b) = both(&f, &dual_for(&f));
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fast_and_brute_conjugates_agree_2d(f in fn_2d()) {
        let (a, b) = both(&f, &dual_for(&f));
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn order_reversal(f in prop_oneof![fn_1d(), fn_2d()], bumps in prop::collection::vec(0.0..3.0f64, 16)) {
        let g = GridFunction::new(
            f.grid().clone(),
            f.values().iter().enumerate().map(|(i, v)| v + bumps[i % 16]).collect(),
        )
        .unwrap();
        let dual = dual_for(&f);
        let (fs, gs) = (conj(&f, &dual).unwrap(), conj(&g, &dual).unwrap());
        for (a, b) in fs.values().iter().zip(gs.values()) {
            prop_assert!(a >= b, "{a} < {b}");
        }
    }

    #[test]
    fn fenchel_young(f in prop_oneof![fn_1d(), fn_2d()]) {
        let dual = dual_for(&f);
        let fs = conj(&f, &dual).unwrap();
        for i in 0..f.len() {
            let fx = f.values()[i];
            if !fx.is_finite() {
                continue;
            }
            let x = f.grid().node(i);
            for j in 0..dual.len() {
                let y = dual.node(j);
                let xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
                prop_assert!(fx + fs.values()[j] >= xy - 1e-12);
            }
        }
    }

    #[test]
    fn biconjugate_is_idempotent(f in prop_oneof![fn_1d(), fn_2d()]) {
        let dual = dual_for(&f);
        let once = biconjugate(&f, &dual).unwrap();
        let twice = biconjugate(&once, &dual).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            if a.is_finite() || b.is_finite() {
                prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn prox_is_nonexpansive(seed in any::<u64>(), xs in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 10)) {
        let h = 0.05;
        let g1 = line(-4.0, 4.0, h);
        let f1 = PlConvex::random(&mut rng(seed), 4, 3.0, None).sample(&g1).unwrap();
        let g2 = Grid::square(-2.0, 2.0, 0.1).unwrap();
        let f2 = multiconj::random::random_pl_2d(&mut rng(seed), &g2, 3, 2.0).unwrap();
        for w in xs.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (p, q) = (prox(&f1, &[a.0]).unwrap(), prox(&f1, &[b.0]).unwrap());
            prop_assert!((p[0] - q[0]).abs() <= (a.0 - b.0).abs() + 2.0 * h + 1e-12);
            let (x, y) = ([a.0 / 1.5, a.1 / 1.5], [b.0 / 1.5, b.1 / 1.5]);
            let (p, q) = (prox(&f2, &x).unwrap(), prox(&f2, &y).unwrap());
            let d = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(s, t)| (s - t).powi(2)).sum::<f64>().sqrt();
            prop_assert!(d(&p, &q) <= d(&x, &y) + 2.0 * 0.1 * 2f64.sqrt() + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Breakpoints on grid nodes and slopes on dual nodes: the discrete
    /// envelopes are exact on the trusted interior.
    #[test]
    fn moreau_decomposition_on_aligned_pl(seed in any::<u64>()) {
        let h = 1.0 / 64.0;
        let grid = line(-4.0, 4.0, h);
        let pl = PlConvex::aligned(&mut rng(seed), 5, 2.0, h, 2.0, h);
        let f = pl.sample(&grid).unwrap();
        let fs = conj(&f, &grid).unwrap();
        let ef = moreau_envelope(&f, &grid).unwrap();
        let efs = moreau_envelope(&fs, &grid).unwrap();
        for i in 0..grid.len() {
            let x = grid.node(i)[0];
            // slopes of f* are the knots, all in [−2, 2]
            if x.abs() > 2.0 {
                continue;
            }
            let dev = (ef.values()[i] + efs.values()[i] - 0.5 * x * x).abs();
            prop_assert!(dev <= 1e-6, "deviation {dev} at {x}");
        }
    }
}
