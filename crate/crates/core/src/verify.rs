//! The acceptance battery: eleven end-to-end checks, each producing a
//! [`Report`]. Used by the `acceptance` test target and by `multiconj verify`.

use std::time::Instant;

use rand::Rng;

use crate::cloud::{Marginal, PointCloud};
use crate::contact::{contact_set, sum_set};
use crate::descriptor::{sample_analytic, Descriptor};
use crate::error::Result;
use crate::gallery::{
    gamma_oblique, h_star, improper_probe, k_epsilon, noninvolutive_triple, oblique_contact_gap,
    oblique_h, oblique_segments, perp_h_star, quadratic_prox, HexClass, HexHull, ObliqueParams, U, V,
};
use crate::grid::{half_sq, Grid, GridFunction};
use crate::mmot::{brute_force_optimal, concentration_check, weak_duality_check, Direction, DiscreteMarginal};
use crate::monotone::{conjecture_probe, is_n_c_monotone, MonotonicityQuery, DEFAULT_BUDGET};
use crate::multiconj::{
    c_conjugate_at, c_conjugate_brute, c_conjugate_fast, dual_maximality_check, involutivity_closure,
    slot_deviation, Trust,
};
use crate::random::{rng, PlConvex};
use crate::report::{CheckRecord, Report, ToleranceConfig};
use crate::transforms::{conj, moreau_envelope, prox};
use crate::tuple::PointTuple;

/// Number of criteria.
pub const COUNT: usize = 11;

/// Short title and wall-clock limit (seconds) per criterion.
pub const CRITERIA: [(&str, Option<f64>); COUNT] = [
    ("hexagon-hole", Some(10.0)),
    ("closed-form-h", None),
    ("moreau-decomposition", Some(30.0)),
    ("prox-partition", None),
    ("involutivity-1d", None),
    ("fast-vs-brute", Some(20.0)),
    ("non-involutivity", Some(60.0)),
    ("dual-characterization", None),
    ("monotone-extension", None),
    ("mmot-bridge", None),
    ("improper-detection", None),
];

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub title: &'static str,
    pub report: Report,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }

    /// `criterion=<id> name=<title> verdict=… seconds=…`.
    pub fn summary_line(&self) -> String {
        let failing: Vec<&str> = self
            .report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.check.as_str())
            .collect();
        let mut s = format!(
            "criterion={} name={} verdict={} seconds={:.2}",
            self.id,
            self.title,
            if self.passed() { "pass" } else { "fail" },
            self.seconds
        );
        if !failing.is_empty() {
            s.push_str(&format!(" failing={}", failing.join(",")));
        }
        s
    }
}

/// Runs criterion `id` (1-based). Errors inside a criterion become a failing
/// `error` row rather than aborting the battery.
pub fn run(id: usize) -> CriterionResult {
    let (title, limit) = CRITERIA[id - 1];
    let start = Instant::now();
    let out = match id {
        1 => hexagon_hole(),
        2 => closed_form_h(),
        3 => moreau_decomposition(),
        4 => prox_partition(),
        5 => involutivity_1d(),
        6 => fast_vs_brute(),
        7 => non_involutivity(),
        8 => dual_characterization(),
        9 => monotone_extension(),
        10 => mmot_bridge(),
        _ => improper_detection(),
    };
    let seconds = start.elapsed().as_secs_f64();
    let mut report = out.unwrap_or_else(|e| {
        let mut r = Report::new(title);
        r.push(CheckRecord::flag("error", false).with_witness(e.to_string()));
        r
    });
    report.name = format!("criterion-{id}-{title}");
    if let Some(l) = limit {
        report.push(CheckRecord::within("runtime-seconds", seconds, l));
    }
    CriterionResult {
        id,
        title,
        report,
        seconds,
    }
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=COUNT).map(run).collect()
}

fn p1() -> ObliqueParams {
    ObliqueParams::new(1.0).expect("λ = 1")
}

/// 1. Coverage of the oblique sum set is exactly the complement of the open
///    hexagon, away from its boundary.
pub fn hexagon_hole() -> Result<Report> {
    let p = p1();
    let gamma = gamma_oblique(p, 200, 400)?;
    let mut r = Report::new("hexagon-hole");
    let gap = gamma
        .tuples()
        .iter()
        .map(|t| oblique_contact_gap(t, p).abs())
        .fold(0.0, f64::max);
    r.push(CheckRecord::within("tuples-on-contact-set", gap, 1e-9));
    let probe = Grid::square(-4.0, 4.0, 0.1)?;
    let cov = sum_set(&gamma).coverage(&probe)?;
    let hex = HexHull::new(1.0);
    let (mut inside_bad, mut outside_bad) = (Vec::new(), Vec::new());
    for k in 0..probe.len() {
        let x = probe.node(k);
        if hex.margin(&x) < 0.1 {
            continue;
        }
        match hex.classify(&x) {
            HexClass::Inside if cov.is_covered(k) => inside_bad.push(x),
            HexClass::Outside if !cov.is_covered(k) => outside_bad.push(x),
            _ => {}
        }
    }
    let w = |v: &[Vec<f64>]| format!("{:?}", v.first());
    r.push(CheckRecord::within("inside-uncovered", inside_bad.len() as f64, 0.0).with_witness(w(&inside_bad)));
    r.push(CheckRecord::within("outside-covered", outside_bad.len() as f64, 0.0).with_witness(w(&outside_bad)));
    Ok(r)
}

/// 2. The four-vertex sup equals the max formula for `h`.
pub fn closed_form_h() -> Result<Report> {
    let p = p1();
    let mut g = rng(0);
    let zs: Vec<Vec<f64>> = (0..100)
        .map(|_| vec![g.gen_range(-3.0..=3.0), g.gen_range(-3.0..=3.0)])
        .collect();
    let mut worst: f64 = 0.0;
    for z in &zs {
        let mut best = f64::NEG_INFINITY;
        for a in [-1.0, 1.0] {
            for b in [-1.0, 1.0] {
                let x = [a * U[0], a * U[1]];
                let y = [b * V[0], b * V[1]];
                best = best.max(PointTuple::new(&[z, &x, &y])?.cost());
            }
        }
        worst = worst.max((best - oblique_h(z, 1.0)).abs());
    }
    let mut r = Report::new("closed-form-h");
    r.push(CheckRecord::within("vertex-sup-vs-formula", worst, 1e-12));
    let (f, gg) = oblique_segments(p, 64)?;
    let cc = c_conjugate_at(&[f.into(), gg.into()], &zs)?;
    let dev = zs
        .iter()
        .zip(&cc)
        .map(|(z, v)| (v - oblique_h(z, 1.0)).abs())
        .fold(0.0, f64::max);
    r.push(CheckRecord::within("segment-sup-vs-formula", dev, 1e-12));
    Ok(r)
}

/// 3. `e_f + e_{f*} = q` for random convex piecewise-linear `f`.
pub fn moreau_decomposition() -> Result<Report> {
    let grid = Grid::line(-10.0, 10.0, 1e-3)?;
    let mut g = rng(3);
    let mut worst: f64 = 0.0;
    let mut witness = None;
    for k in 0..50 {
        let pl = PlConvex::aligned(&mut g, 5, 4.0, 1e-3, 5.0, 1e-3);
        let f = pl.sample(&grid)?;
        let fs = conj(&f, &grid)?;
        let ef = moreau_envelope(&f, &grid)?;
        let efs = moreau_envelope(&fs, &grid)?;
        for i in 0..grid.len() {
            let x = grid.node(i);
            if x[0].abs() > 5.0 + 1e-9 {
                continue;
            }
            let dev = (ef.values()[i] + efs.values()[i] - half_sq(&x)).abs();
            if dev > worst {
                worst = dev;
                witness = Some((k, x[0]));
            }
        }
    }
    let mut r = Report::new("moreau-decomposition");
    r.push(CheckRecord::within("e_f-plus-e_fstar-minus-q", worst, 1e-6).with_witness(format!("{witness:?}")));
    Ok(r)
}

/// 4. `Σ prox = Id` for the quadratic tuple, analytically and on a grid.
pub fn prox_partition() -> Result<Report> {
    let mut g = rng(4);
    let xs: Vec<f64> = (0..100).map(|_| g.gen_range(-5.0..=5.0)).collect();
    let h = 1e-3;
    let grid = Grid::line(-6.0, 6.0, h)?;
    let mut r = Report::new("prox-partition");
    for n in 2..=5 {
        let mut analytic: f64 = 0.0;
        let (mut each, mut sum): (f64, f64) = (0.0, 0.0);
        let f = sample_analytic(&Descriptor::Quadratic { scale: (n - 1) as f64 }, &grid)?;
        for &x in &xs {
            let s: f64 = (0..n).map(|_| quadratic_prox(n, &[x])[0]).sum();
            analytic = analytic.max((s - x).abs());
            let p = prox(&f, &[x])?[0];
            each = each.max((p - x / n as f64).abs());
            sum = sum.max((n as f64 * p - x).abs());
        }
        r.push(CheckRecord::within(format!("N{n}-analytic"), analytic, 1e-12));
        r.push(CheckRecord::within(format!("N{n}-grid-each"), each, h));
        r.push(CheckRecord::within(format!("N{n}-grid-sum"), sum, n as f64 * h / 2.0 + 1e-12));
    }
    Ok(r)
}

/// 5. Closing random 1-D pairs by c-conjugation is consistent and the
///    contact set's sums cover `[−3, 3]`.
pub fn involutivity_1d() -> Result<Report> {
    let tol = ToleranceConfig::default();
    let h = 0.025;
    let g = Grid::line(-2.0, 2.0, h)?;
    let out = Grid::line(-6.0, 6.0, h)?;
    let probe = Grid::line(-3.0, 3.0, 0.05)?;
    let mut rg = rng(5);
    let (mut worst, mut holes, mut improper) = (0.0f64, Vec::new(), 0usize);
    for k in 0..20 {
        let f2 = PlConvex::random(&mut rg, 4, 2.0, Some(h)).sample(&g)?;
        let f3 = PlConvex::random(&mut rg, 4, 2.0, Some(h)).sample(&g)?;
        let c = involutivity_closure(&[f2, f3], &out, 2.0, &tol)?;
        if !c.report.passed() && c.report.get("consistency").is_none() {
            improper += 1;
            continue;
        }
        worst = worst.max(c.report.get("consistency").map_or(f64::INFINITY, |r| r.deviation));
        let fs = [c.f1, c.rebuilt[0].clone(), c.rebuilt[1].clone()].map(Marginal::Grid);
        let gamma = contact_set(&fs, tol.eps_contact)?;
        for x in sum_set(&gamma).coverage(&probe)?.holes() {
            holes.push((k, x[0]));
        }
    }
    let mut r = Report::new("involutivity-1d");
    r.push(CheckRecord::within("improper-closures", improper as f64, 0.0));
    r.push(CheckRecord::within("consistency", worst, tol.eps_equal));
    r.push(CheckRecord::within("sum-set-holes", holes.len() as f64, 0.0).with_witness(format!("{:?}", holes.first())));
    Ok(r)
}

/// 6. Fast and brute three-marginal c-conjugates agree.
pub fn fast_vs_brute() -> Result<Report> {
    let tol = ToleranceConfig::default();
    let g = Grid::line(-1.0, 1.0, 0.01)?;
    let mut rg = rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let f2 = PlConvex::random(&mut rg, 5, 3.0, None).sample(&g)?;
        let f3 = PlConvex::random(&mut rg, 5, 3.0, None).sample(&g)?;
        let fast = c_conjugate_fast(&[f2.clone(), f3.clone()], &g)?;
        let brute = c_conjugate_brute(&[f2.into(), f3.into()], &g, &tol)?.function;
        for (a, b) in fast.values().iter().zip(brute.values()) {
            worst = worst.max((a - b).abs());
        }
    }
    let mut r = Report::new("fast-vs-brute");
    r.push(CheckRecord::within("max-deviation", worst, 1e-6));
    Ok(r)
}

/// 7. The non-involutive triple: `m > 0`, the `K_ε` sandwich, and a tuple
///    check failing only at `h`.
pub fn non_involutivity() -> Result<Report> {
    let tol = ToleranceConfig::default();
    let grid = Grid::square(-4.0, 4.0, 0.05)?;
    let ni = noninvolutive_triple(&grid)?;
    let m = ni.m;
    let mut r = Report::new("non-involutivity");
    r.extend(ni.report.clone());
    r.push(CheckRecord::at_least("m-above-0.01", m, 0.01).with_witness(format!("m={m}")));
    match k_epsilon(&ni.big_h, m, m / 4.0) {
        Ok((_, kr)) => r.extend(kr),
        Err(e) => r.push(CheckRecord::flag("k-epsilon", false).with_witness(e.to_string())),
    }
    let fs = [ni.f, ni.g, ni.h].map(Marginal::Grid);
    for (i, name) in ["f", "g"].iter().enumerate() {
        let (dev, w) = slot_deviation(&fs, i, &Trust::All, &tol)?;
        r.push(CheckRecord::within(format!("slot-{name}-conjugate"), dev, tol.eps_equal).with_witness(format!("{w:?}")));
    }
    let (dev, w) = slot_deviation(&fs, 2, &Trust::All, &tol)?;
    r.push(CheckRecord::at_least("slot-h-deviation", dev, m / 2.0 - 5e-3).with_witness(format!("{w:?}")));
    Ok(r)
}

/// `h*` of the oblique triple on `grid`, `+∞` off the rhombus.
fn oblique_h_star_grid(p: ObliqueParams, grid: &Grid) -> Result<GridFunction> {
    GridFunction::from_fn(grid, |z| h_star(z, p))
}

/// 8. `W = U + V` fails at the origin for the oblique triple and holds for
///    the perpendicular one.
pub fn dual_characterization() -> Result<Report> {
    let tol = ToleranceConfig::default();
    let h = 0.05;
    let dual = Grid::square(-2.0, 2.0, h)?;
    let box1 = Grid::square(-1.0, 1.0, h)?;
    let mut r = Report::new("dual-characterization");

    let p = p1();
    let (f, g) = oblique_segments(p, 40)?;
    let hs = oblique_h_star_grid(p, &Grid::square(-2.0, 2.0, h / 2.0)?)?;
    let (_, ob) = dual_maximality_check(&f.into(), &g.into(), &hs.into(), &dual, 0.0, &tol)?;
    let gap = ob.get("gap-at-origin").map_or(f64::NEG_INFINITY, |c| c.deviation);
    r.push(CheckRecord::at_least("oblique-gap-at-origin", gap, 0.2));

    let f = PointCloud::segment(&[1.0, 0.0], 1.0, 40)?;
    let g = PointCloud::segment(&[0.0, 1.0], 1.0, 40)?;
    let hs = GridFunction::from_fn(&box1, |z| perp_h_star(z, 1.0))?;
    let (_, pr) = dual_maximality_check(&f.into(), &g.into(), &hs.into(), &dual, 0.0, &tol)?;
    let eq = pr.get("W-equals-U-plus-V").map_or(f64::INFINITY, |c| c.deviation);
    r.push(CheckRecord::within("perpendicular-W-equals-U-plus-V", eq, 1e-3));
    if let Some(c) = pr.get("q-minus-U-minus-V-convex") {
        let mut c = c.clone();
        c.check = "perpendicular-membership".into();
        r.push(c);
    }
    Ok(r)
}

/// 9. A contact-set sample plus the origin is 2-c-monotone; the order-3
///    probe finds no violation.
pub fn monotone_extension() -> Result<Report> {
    let p = p1();
    let full = gamma_oblique(p, 200, 400)?;
    let mut g = rng(9);
    let mut idx: Vec<usize> = (0..full.len()).collect();
    for i in 0..200.min(idx.len()) {
        let j = g.gen_range(i..idx.len());
        idx.swap(i, j);
    }
    idx.truncate(200);
    let origin = PointTuple::new(&[&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]])?;
    let sample = full.select(&idx).with_tuple(origin);
    let v = is_n_c_monotone(&MonotonicityQuery::new(sample.clone(), 2, DEFAULT_BUDGET)?)?;
    let mut r = Report::new("monotone-extension");
    let mut rec = CheckRecord::flag("sample-plus-origin-2-monotone", v.monotone)
        .with_witness(format!("tuples={} multisets={}", sample.len(), v.checked));
    if let Some(w) = v.witness {
        rec = rec.with_witness(w.to_string());
    }
    r.push(rec);
    let probe = conjecture_probe(1.0, 10_000, 3, 0)?;
    for c in probe.checks {
        let mut c = c;
        c.check = format!("probe-{}", c.check);
        r.push(c);
    }
    Ok(r)
}

/// 10. Optimal plan, weak duality and concentration on `{−1, 0, 1}`.
pub fn mmot_bridge() -> Result<Report> {
    let m = DiscreteMarginal::uniform(vec![vec![-1.0], vec![0.0], vec![1.0]])?;
    let ms = vec![m.clone(), m.clone(), m];
    let (plan, value) = brute_force_optimal(&ms, Direction::Maximize)?;
    let pots = crate::gallery::quadratic_tuple(3)?;
    let mut r = Report::new("mmot-bridge");
    let diagonal = plan
        .atoms
        .iter()
        .all(|(t, _)| t.point(0) == t.point(1) && t.point(1) == t.point(2));
    r.push(CheckRecord::flag("diagonal-plan", diagonal).with_witness(format!("value={value}")));
    let wd = weak_duality_check(&pots, &ms, &plan)?;
    let gap = wd.get("gap-nonnegative").map_or(f64::INFINITY, |c| c.deviation);
    r.extend(wd);
    r.push(CheckRecord::within("gap-at-most-1e-9", gap.max(0.0), 1e-9));
    r.extend(concentration_check(&plan, &pots, 1e-9)?);
    Ok(r)
}

/// 11. Quadratic growth of the probe values and the improper verdict.
pub fn improper_detection() -> Result<Report> {
    let v = improper_probe(0.5, &[2.0, 4.0, 8.0])?;
    let mut r = Report::new("improper-detection");
    let dev = v
        .values
        .iter()
        .map(|&(l, x)| (x - 0.5 * l * l).abs())
        .fold(0.0, f64::max);
    r.push(CheckRecord::within("values-equal-udotv-L2", dev, 1e-9));
    r.push(CheckRecord::flag("improper-verdict", v.improper));
    let rejected = improper_probe(0.0, &[2.0, 4.0, 8.0]).is_err();
    r.push(CheckRecord::flag("perpendicular-rejected", rejected));
    Ok(r)
}
