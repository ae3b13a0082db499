use multiconj::descriptor::{sample_analytic, Descriptor};
use multiconj::gallery::quadratic_tuple;
use multiconj::multiconj::{
    c_conjugate_brute, c_conjugate_fast, delta_convex_envelope, involutivity_closure, is_c_conjugate_tuple,
    joint_samples, lower_bound_sampled, sup_convolution, Trust,
};
use multiconj::random::{rng, PlConvex};
use multiconj::transforms::{check_strong_convexity, trusted_mask};
use multiconj::{Grid, GridFunction, Marginal, ToleranceConfig};
use proptest::prelude::*;

fn line(lo: f64, hi: f64, h: f64) -> Grid {
    Grid::line(lo, hi, h).unwrap()
}

fn pl(seed: u64, grid: &Grid, slope: f64, quantum: Option<f64>) -> GridFunction {
    PlConvex::random(&mut rng(seed), 4, slope, quantum).sample(grid).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn c_conjugates_are_convex(s1 in any::<u64>(), s2 in any::<u64>()) {
        let tol = ToleranceConfig::default();
        let g = line(-1.0, 1.0, 0.05);
        let (a, b) = (pl(s1, &g, 2.0, None), pl(s2, &g, 2.0, None));
        let brute = c_conjugate_brute(&[a.clone().into(), b.clone().into()], &g, &tol).unwrap().function;
        let v = check_strong_convexity(&brute, 0.0);
        prop_assert!(v.convex, "brute: {v:?}");
        let fast = c_conjugate_fast(&[a, b], &g).unwrap();
        let v = check_strong_convexity(&fast, 0.0);
        prop_assert!(v.convex, "fast: {v:?}");
    }

    #[test]
    fn fast_and_brute_c_conjugates_agree(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let tol = ToleranceConfig::default();
        let g = line(-1.0, 1.0, 0.04);
        let fs = [pl(s1, &g, 3.0, None), pl(s2, &g, 3.0, None)];
        let fast = c_conjugate_fast(&fs, &g).unwrap();
        let ms: Vec<Marginal> = fs.iter().cloned().map(Marginal::from).collect();
        let brute = c_conjugate_brute(&ms, &g, &tol).unwrap().function;
        for (a, b) in fast.values().iter().zip(brute.values()) {
            prop_assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
        // three inputs
        let fs3 = [pl(s1, &g, 3.0, None), pl(s2, &g, 3.0, None), pl(s3, &g, 3.0, None)];
        let fast = c_conjugate_fast(&fs3, &g).unwrap();
        let ms: Vec<Marginal> = fs3.iter().cloned().map(Marginal::from).collect();
        let brute = c_conjugate_brute(&ms, &g, &tol).unwrap().function;
        for (a, b) in fast.values().iter().zip(brute.values()) {
            prop_assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
        // 2-D, trusted interior
        let g2 = Grid::square(-0.6, 0.6, 0.1).unwrap();
        let f2: Vec<GridFunction> = [s1, s3]
            .iter()
            .map(|&s| multiconj::random::random_pl_2d(&mut rng(s), &g2, 2, 1.0).unwrap())
            .collect();
        let fast = c_conjugate_fast(&f2, &g2).unwrap();
        let ms: Vec<Marginal> = f2.iter().cloned().map(Marginal::from).collect();
        let brute = c_conjugate_brute(&ms, &g2, &tol).unwrap().function;
        let mask = trusted_mask(&g2, 0.2);
        for (k, (a, b)) in fast.values().iter().zip(brute.values()).enumerate() {
            if mask[k] {
                prop_assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn gallery_quadratic_fast_matches_brute(n in 2usize..=4) {
        let tol = ToleranceConfig::default();
        let g = line(-1.0, 1.0, 0.05);
        let fs: Vec<GridFunction> = quadratic_tuple(n).unwrap()[1..]
            .iter()
            .map(|d| sample_analytic(d, &g).unwrap())
            .collect();
        let out = line(-0.5, 0.5, 0.05);
        let fast = c_conjugate_fast(&fs, &out).unwrap();
        let ms: Vec<Marginal> = fs.into_iter().map(Marginal::from).collect();
        let brute = c_conjugate_brute(&ms, &out, &tol).unwrap().function;
        for (a, b) in fast.values().iter().zip(brute.values()) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }

    /// A sup of λ-strongly convex functions stays λ-strongly convex.
    #[test]
    fn strong_convexity_is_inherited(seed in any::<u64>(), lambda in 0.1..3.0f64) {
        let p = PlConvex::random(&mut rng(seed), 4, 2.0, None);
        let h = move |z: &[f64]| lambda * 0.5 * z[0] * z[0] + p.eval(z[0]);
        let g = GridFunction::from_fn(&line(-1.0, 1.0, 0.05), |x| {
            let t = x[0] * 7.3 + seed as f64 * 1e-9;
            t.sin() * 2.0
        })
        .unwrap();
        let out = line(-2.0, 2.0, 0.05);
        let s = sup_convolution(h, &g, &out).unwrap();
        let v = check_strong_convexity(&s, lambda);
        prop_assert!(v.convex, "{v:?}");
    }

    /// Δ-envelope maximality: no convex PL candidate with dual-node slopes
    /// lying below the joint function on the samples beats the envelope.
    #[test]
    fn delta_envelope_is_maximal(s1 in any::<u64>(), s2 in any::<u64>(), cand in any::<u64>()) {
        let tol = ToleranceConfig::default();
        let g = line(-1.0, 1.0, 0.1);
        let fs: Vec<Marginal> = vec![pl(s1, &g, 2.0, None).into(), pl(s2, &g, 2.0, None).into()];
        let samples = joint_samples(&fs).unwrap();
        let dual = line(-3.0, 3.0, 0.1);
        let out = line(-2.0, 2.0, 0.1);
        let env = delta_convex_envelope(&samples, &dual, &out, &tol).unwrap();
        let mut r = rng(cand);
        for _ in 0..100 {
            let c = PlConvex::random(&mut r, 3, 3.0, Some(0.1));
            let shift = samples
                .iter()
                .map(|(t, v)| c.eval(t.sum()[0]) - v)
                .fold(f64::NEG_INFINITY, f64::max);
            for i in 0..out.len() {
                let x = out.node(i)[0];
                prop_assert!(c.eval(x) - shift <= env.values()[i] + tol.eps_equal);
            }
        }
    }
}

/// Closed tuples that pass the tuple check dominate the cost.
#[test]
fn passing_tuples_bound_the_cost() {
    let tol = ToleranceConfig::default();
    let h = 0.05;
    let g = line(-2.0, 2.0, h);
    let out = line(-6.0, 6.0, h);
    let mut passing = 0;
    for seed in 0..12u64 {
        let f2 = pl(2 * seed, &g, 2.0, Some(h));
        let f3 = pl(2 * seed + 1, &g, 2.0, Some(h));
        let c = involutivity_closure(&[f2, f3], &out, 2.0, &tol).unwrap();
        if !c.report.passed() {
            continue;
        }
        let fs: Vec<Marginal> = [c.f1, c.rebuilt[0].clone(), c.rebuilt[1].clone()].map(Marginal::from).to_vec();
        let trust = [Trust::Inset(2.0), Trust::All, Trust::All];
        if !is_c_conjugate_tuple(&fs, &trust, &tol).unwrap().passed() {
            continue;
        }
        passing += 1;
        let (gap, w) = lower_bound_sampled(&fs, 10_000, seed).unwrap();
        assert!(gap >= -tol.eps_equal, "seed {seed}: gap {gap} at {w:?}");
    }
    assert!(passing >= 6, "only {passing} closures passed the tuple check");
}

#[test]
fn quadratic_tuple_passes_and_bounds_the_cost() {
    let tol = ToleranceConfig::default();
    let g = line(-2.0, 2.0, 0.02);
    for n in 2..=4 {
        let fs: Vec<Marginal> = quadratic_tuple(n)
            .unwrap()
            .iter()
            .map(|d: &Descriptor| sample_analytic(d, &g).unwrap().into())
            .collect();
        let rep = is_c_conjugate_tuple(&fs, &vec![Trust::Inset(0.5); n], &tol).unwrap();
        assert!(rep.passed(), "{rep}");
        let (gap, _) = lower_bound_sampled(&fs, 10_000, n as u64).unwrap();
        assert!(gap >= -tol.eps_equal);
    }
}
