//! The N-marginal c-conjugate for the correlation cost
//! `c(x₁,…,x_N) = Σ_{i<j} ⟨xᵢ, xⱼ⟩`, and the checks built on it.
//!
//! `(f₂ ⊕ … ⊕ f_N)^c(x) = sup c(x, x₂,…,x_N) − Σfᵢ(xᵢ)`. The brute path
//! scans the product of the candidate sets. The fast path uses
//!
//! ```text
//! (⊕ fᵢ)^c = (Σ e_{fᵢ} − (N−2)q)* − q
//! ```
//!
//! which needs only Moreau envelopes and one conjugate. For node-restricted
//! inputs it is exact provided the output grid and the input grids share a
//! step and a lattice: the inner conjugate then runs over a sum grid on which
//! every `x + Σxᵢ` is a node.

use rayon::prelude::*;

use crate::cloud::{Marginal, PointCloud};
use crate::contact::min_gap;
use crate::error::{Error, Result};
use crate::grid::{dot, half_sq, Axis, Grid, GridFunction};
use crate::report::{CheckRecord, Report, ToleranceConfig};
use crate::transforms::{
    check_strong_convexity, conj, conjugate_cloud, moreau_envelope, trusted_mask,
};
use crate::tuple::PointTuple;

/// Number of marginals and their dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostSpec {
    pub n: usize,
    pub dim: usize,
}

impl CostSpec {
    pub fn new(n: usize, dim: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("N must be ≥ 2, got {n}")));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
        }
        Ok(CostSpec { n, dim })
    }

    pub fn eval(&self, t: &PointTuple) -> Result<f64> {
        if t.n() != self.n || t.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.n * self.dim,
                got: t.n() * t.dim(),
            });
        }
        Ok(t.cost())
    }
}

/// A c-conjugate together with its impropriety flag.
#[derive(Debug, Clone)]
pub struct CConjugate {
    pub function: GridFunction,
    /// Every output value exceeded the divergence cap.
    pub improper: bool,
}

fn check_inputs(fs: &[Marginal], dim: usize) -> Result<()> {
    if fs.is_empty() {
        return Err(Error::InvalidParameter("need at least one function".into()));
    }
    for (i, f) in fs.iter().enumerate() {
        if f.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: f.dim(),
            });
        }
        if !f.is_proper() {
            return Err(Error::Improper(format!("input {}", i + 1)));
        }
    }
    Ok(())
}

/// The pairs `(Σxᵢ, c(x₂,…,x_N) − Σfᵢ(xᵢ))` over the candidate product.
fn product_pairs(clouds: &[PointCloud]) -> PointCloud {
    let d = clouds[0].dim();
    let mut acc = PointCloud::from_points(d, [(vec![0.0; d], 0.0)]).expect("origin");
    for c in clouds {
        let mut pts = Vec::with_capacity(acc.len() * c.len());
        for (s, k) in acc.iter() {
            for (p, v) in c.iter() {
                let s2: Vec<f64> = s.iter().zip(p).map(|(a, b)| a + b).collect();
                // c(rest, p) = c(rest) + ⟨s, p⟩
                pts.push((s2, k - dot(s, p) + v));
            }
        }
        acc = PointCloud::from_points(d, pts).expect("finite products");
    }
    acc
}

/// Brute-force `(⊕ fᵢ)^c` on `out`, scanning the product of candidate sets.
///
/// Since `c(x, x₂,…) = ⟨x, Σxᵢ⟩ + c(x₂,…)`, this is the conjugate of the
/// cloud of pairs `(Σxᵢ, Σfᵢ − c(x₂,…))`.
pub fn c_conjugate_brute(fs: &[Marginal], out: &Grid, tol: &ToleranceConfig) -> Result<CConjugate> {
    check_inputs(fs, out.dim())?;
    let clouds: Vec<PointCloud> = fs.iter().map(Marginal::candidates).collect();
    let pairs = product_pairs(&clouds);
    let function = conjugate_cloud(&pairs, out)?;
    let improper = function.values().iter().all(|&v| v > tol.divergence_cap);
    Ok(CConjugate { function, improper })
}

/// Brute-force `(⊕ fᵢ)^c` evaluated at arbitrary points.
pub fn c_conjugate_at(fs: &[Marginal], points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = points.first().map_or(fs.first().map_or(1, Marginal::dim), Vec::len);
    check_inputs(fs, d)?;
    let clouds: Vec<PointCloud> = fs.iter().map(Marginal::candidates).collect();
    let pairs = product_pairs(&clouds);
    Ok(points
        .par_iter()
        .map(|x| {
            pairs
                .iter()
                .map(|(s, k)| dot(x, s) - k)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Grid on which the fast path's inner conjugate runs: step of the finest
/// input, covering `[out_lo + Σ loᵢ, out_hi + Σ hiᵢ]` per axis.
pub fn sum_grid(fs: &[GridFunction], out: &Grid) -> Result<Grid> {
    let mut axes = Vec::with_capacity(out.dim());
    for k in 0..out.dim() {
        let step = fs
            .iter()
            .map(|f| f.grid().axis(k).step)
            .chain([out.axis(k).step])
            .fold(f64::INFINITY, f64::min);
        let lo = out.axis(k).lo() + fs.iter().map(|f| f.grid().axis(k).lo()).sum::<f64>();
        let hi = out.axis(k).hi() + fs.iter().map(|f| f.grid().axis(k).hi()).sum::<f64>();
        let count = ((hi - lo) / step).ceil() as usize + 1;
        axes.push(Axis::new(lo, step, count.max(2))?);
    }
    Grid::new(axes)
}

/// Fast `(⊕ fᵢ)^c = (Σ e_{fᵢ} − (N−2)q)* − q` on `out`.
pub fn c_conjugate_fast(fs: &[GridFunction], out: &Grid) -> Result<GridFunction> {
    let ms: Vec<Marginal> = fs.iter().cloned().map(Marginal::Grid).collect();
    check_inputs(&ms, out.dim())?;
    if fs.len() == 1 {
        return conj(&fs[0], out);
    }
    let w = sum_grid(fs, out)?;
    let mut acc: Vec<f64> = vec![0.0; w.len()];
    for f in fs {
        let e = moreau_envelope(f, &w)?;
        for (a, v) in acc.iter_mut().zip(e.values()) {
            *a += v;
        }
    }
    let extra = (fs.len() - 1) as f64;
    let inner = GridFunction::new(w.clone(), acc)?.map(|x, v| v - extra * half_sq(x))?;
    conj(&inner, out)?.map(|x, v| v - half_sq(x))
}

/// `(⊕_{j≠i} fⱼ)^c` on `out`, using the fast path when every other slot is a
/// grid function and the brute scan otherwise.
pub fn c_conjugate_slot(fs: &[Marginal], i: usize, out: &Grid, tol: &ToleranceConfig) -> Result<GridFunction> {
    let others: Vec<Marginal> = fs
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, f)| f.clone())
        .collect();
    let grids: Option<Vec<GridFunction>> = others.iter().map(|f| f.as_grid().cloned()).collect();
    match grids {
        Some(gs) => c_conjugate_fast(&gs, out),
        None => Ok(c_conjugate_brute(&others, out, tol)?.function),
    }
}

/// Δ-convex envelope of a joint function given by samples `(x, f(x))`.
///
/// `g* (y) = max ⟨S(x), y⟩ − f(x)` over the samples, on `dual`; then
/// `g = (g*)*` on `out`. Values below `-divergence_cap` signal that no affine
/// minorant of the sum exists within the dual range.
pub fn delta_convex_envelope(
    samples: &[(PointTuple, f64)],
    dual: &Grid,
    out: &Grid,
    tol: &ToleranceConfig,
) -> Result<GridFunction> {
    let d = dual.dim();
    let pts = samples
        .iter()
        .filter(|(_, v)| v.is_finite())
        .map(|(t, v)| {
            if t.dim() != d {
                Err(Error::DimensionMismatch {
                    expected: d,
                    got: t.dim(),
                })
            } else {
                Ok((t.sum(), *v))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if pts.is_empty() {
        return Err(Error::Improper("joint function has no finite sample".into()));
    }
    let cloud = PointCloud::from_points(d, pts)?;
    let gstar = conjugate_cloud(&cloud, dual)?;
    let g = conj(&gstar, out)?;
    if let Some(v) = g.values().iter().find(|v| **v < -tol.divergence_cap) {
        return Err(Error::InvalidValue(format!(
            "envelope value {v} below -divergence_cap: joint function unbounded below"
        )));
    }
    Ok(g)
}

/// `(x, Σfᵢ(xᵢ))` over the finite product of the marginals' candidates.
pub fn joint_samples(fs: &[Marginal]) -> Result<Vec<(PointTuple, f64)>> {
    let clouds: Vec<PointCloud> = fs.iter().map(Marginal::candidates).collect();
    let d = clouds.first().map_or(1, PointCloud::dim);
    let mut out: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 0.0)];
    for c in &clouds {
        let mut next = Vec::with_capacity(out.len() * c.len());
        for (coords, v) in &out {
            for (p, w) in c.iter() {
                let mut cc = coords.clone();
                cc.extend_from_slice(p);
                next.push((cc, v + w));
            }
        }
        out = next;
    }
    out.into_iter()
        .map(|(c, v)| Ok((PointTuple::from_flat(d, c)?, v)))
        .collect()
}

/// Where slot `i` is compared in [`is_c_conjugate_tuple`].
#[derive(Debug, Clone, PartialEq)]
pub enum Trust {
    /// Every finite point of the slot.
    All,
    /// Grid nodes at distance ≥ radius from the slot grid's boundary.
    Inset(f64),
}

/// For each slot `i`, the largest `|fᵢ − (⊕_{j≠i} fⱼ)^c|` over the finite
/// points of `fᵢ` inside the trusted region. Cloud slots are compared at
/// their points; grid slots at their nodes.
pub fn is_c_conjugate_tuple(fs: &[Marginal], trust: &[Trust], tol: &ToleranceConfig) -> Result<Report> {
    if fs.len() < 2 {
        return Err(Error::InvalidParameter("need N ≥ 2 functions".into()));
    }
    if trust.len() != fs.len() {
        return Err(Error::InvalidParameter(format!(
            "{} trust regions for {} functions",
            trust.len(),
            fs.len()
        )));
    }
    let d = fs[0].dim();
    check_inputs(fs, d)?;
    let mut report = Report::new("c-conjugate-tuple");
    for i in 0..fs.len() {
        let (dev, witness) = slot_deviation(fs, i, &trust[i], tol)?;
        let mut rec = CheckRecord::within(format!("slot-{}", i + 1), dev, tol.eps_equal);
        if let Some(w) = witness {
            rec = rec.with_witness(format!("{w:?}"));
        }
        report.push(rec);
    }
    Ok(report)
}

/// Max deviation of slot `i` and the point where it occurs.
pub fn slot_deviation(
    fs: &[Marginal],
    i: usize,
    trust: &Trust,
    tol: &ToleranceConfig,
) -> Result<(f64, Option<Vec<f64>>)> {
    let mut worst = (0.0, None);
    match &fs[i] {
        Marginal::Grid(f) => {
            let cc = c_conjugate_slot(fs, i, f.grid(), tol)?;
            let mask = match trust {
                Trust::All => vec![true; f.len()],
                Trust::Inset(r) => trusted_mask(f.grid(), *r),
            };
            for (k, (&a, &b)) in f.values().iter().zip(cc.values()).enumerate() {
                if mask[k] && a.is_finite() {
                    let dev = (a - b).abs();
                    if dev > worst.0 {
                        worst = (dev, Some(k));
                    }
                }
            }
            Ok((worst.0, worst.1.map(|k| f.grid().node(k))))
        }
        Marginal::Cloud(c) => {
            let others: Vec<Marginal> = fs
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, f)| f.clone())
                .collect();
            let pts: Vec<Vec<f64>> = c.iter().map(|(p, _)| p.to_vec()).collect();
            let vals = c_conjugate_at(&others, &pts)?;
            for (k, v) in vals.iter().enumerate() {
                let dev = (c.value(k) - v).abs();
                if dev > worst.0 {
                    worst = (dev, Some(k));
                }
            }
            Ok((worst.0, worst.1.map(|k| pts[k].clone())))
        }
    }
}

/// Result of [`involutivity_closure`].
#[derive(Debug, Clone)]
pub struct Closure {
    /// `f₁ = (⊕_{j≠1} fⱼ)^c`.
    pub f1: GridFunction,
    /// The rebuilt `f₂',…,f_N'`.
    pub rebuilt: Vec<GridFunction>,
    pub report: Report,
}

/// Closes `(f₂,…,f_N)` by c-conjugation.
///
/// `f₁ = (⊕_{j≥2} fⱼ)^c` on `out`; then each `fᵢ' = (⊕_{j≠i})^c` is rebuilt
/// in turn on `fᵢ`'s grid, always using the newest slots (one sweep for
/// N = 3, repeated sweeps until the slots stop moving, at most 10, for
/// larger N). The report compares `f₁` with `(⊕ fᵢ')^c` on nodes at distance
/// ≥ `trust_radius` from `out`'s boundary. An improper `f₁` is reported, not
/// raised.
pub fn involutivity_closure(
    fs: &[GridFunction],
    out: &Grid,
    trust_radius: f64,
    tol: &ToleranceConfig,
) -> Result<Closure> {
    let mut report = Report::new("involutivity");
    let f1 = c_conjugate_fast(fs, out)?;
    let improper = f1.values().iter().all(|&v| v > tol.divergence_cap);
    report.push(CheckRecord::flag("f1-proper", !improper));
    if improper {
        return Ok(Closure {
            f1,
            rebuilt: fs.to_vec(),
            report,
        });
    }
    let mut slots: Vec<GridFunction> = fs.to_vec();
    let sweeps = if fs.len() <= 2 { 1 } else { 10 };
    for _ in 0..sweeps {
        let mut moved: f64 = 0.0;
        for i in 0..slots.len() {
            let others: Vec<GridFunction> = std::iter::once(f1.clone())
                .chain(slots.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, f)| f.clone()))
                .collect();
            let next = c_conjugate_fast(&others, slots[i].grid())?;
            moved = moved.max(max_finite_diff(&next, &slots[i]));
            slots[i] = next;
        }
        if fs.len() <= 2 || moved <= 1e-12 {
            break;
        }
    }
    let back = c_conjugate_fast(&slots, out)?;
    let mask = trusted_mask(out, trust_radius);
    let mut worst = (0.0, None);
    for (k, (&a, &b)) in f1.values().iter().zip(back.values()).enumerate() {
        if mask[k] {
            let dev = (a - b).abs();
            if dev > worst.0 {
                worst = (dev, Some(k));
            }
        }
    }
    let mut rec = CheckRecord::within("consistency", worst.0, tol.eps_equal);
    if let Some(k) = worst.1 {
        rec = rec.with_witness(format!("{:?}", out.node(k)));
    }
    report.push(rec);
    Ok(Closure {
        f1,
        rebuilt: slots,
        report,
    })
}

fn max_finite_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| {
            if x.is_finite() && y.is_finite() {
                (x - y).abs()
            } else if x.is_finite() != y.is_finite() {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// `(U, V, W)` for a triple `(f, g, h)`: `U = (f+q)*`, `V = (g+q)*`,
/// `W = (h*+q)*`, all on `dual`.
#[derive(Debug, Clone)]
pub struct DualTriple {
    pub u: GridFunction,
    pub v: GridFunction,
    pub w: GridFunction,
}

fn plus_q(f: &Marginal) -> Result<PointCloud> {
    let c = f.candidates();
    PointCloud::from_points(c.dim(), c.iter().map(|(p, v)| (p.to_vec(), v + half_sq(p))))
}

pub fn dual_triple(f: &Marginal, g: &Marginal, h_star: &Marginal, dual: &Grid) -> Result<DualTriple> {
    Ok(DualTriple {
        u: conjugate_cloud(&plus_q(f)?, dual)?,
        v: conjugate_cloud(&plus_q(g)?, dual)?,
        w: conjugate_cloud(&plus_q(h_star)?, dual)?,
    })
}

/// `W = U + V` and the discrete convexity of `q − (U + V)`.
///
/// Takes `h*` rather than `h` so that callers with a closed-form conjugate
/// avoid one discretization. Reports the value of `W(0) − U(0) − V(0)`
/// (`gap-at-origin`, informational), `max |W − (U+V)|` over nodes at
/// distance ≥ `trust_radius` from the boundary of `dual`, and membership.
pub fn dual_maximality_check(
    f: &Marginal,
    g: &Marginal,
    h_star: &Marginal,
    dual: &Grid,
    trust_radius: f64,
    tol: &ToleranceConfig,
) -> Result<(DualTriple, Report)> {
    for m in [f, g, h_star] {
        if m.dim() != dual.dim() {
            return Err(Error::DimensionMismatch {
                expected: dual.dim(),
                got: m.dim(),
            });
        }
    }
    let t = dual_triple(f, g, h_star, dual)?;
    let mut r = Report::new("dual-maximality");
    let origin = dual.node_index(&vec![0.0; dual.dim()]);
    if let Some(o) = origin {
        let gap = t.w.values()[o] - t.u.values()[o] - t.v.values()[o];
        r.push(CheckRecord::at_least("gap-at-origin", gap, f64::NEG_INFINITY).with_witness(format!("W(0)={}", t.w.values()[o])));
    }
    let mask = trusted_mask(dual, trust_radius);
    let mut worst = (0.0, None);
    for k in 0..dual.len() {
        if mask[k] {
            let dev = (t.w.values()[k] - t.u.values()[k] - t.v.values()[k]).abs();
            if dev > worst.0 {
                worst = (dev, Some(k));
            }
        }
    }
    let mut eq = CheckRecord::within("W-equals-U-plus-V", worst.0, tol.eps_equal);
    if let Some(k) = worst.1 {
        eq = eq.with_witness(format!("{:?}", dual.node(k)));
    }
    r.push(eq);
    let qmuv = GridFunction::new(
        dual.clone(),
        (0..dual.len())
            .map(|k| half_sq(&dual.node(k)) - t.u.values()[k] - t.v.values()[k])
            .collect(),
    )?;
    let sc = check_strong_convexity(&qmuv, 0.0);
    let mut mem = CheckRecord::flag("q-minus-U-minus-V-convex", sc.convex);
    mem.deviation = (-sc.worst).max(0.0);
    if let Some(w) = sc.witness {
        mem = mem.with_witness(format!("{w:?}"));
    }
    r.push(mem);
    Ok((t, r))
}

/// Verdict of [`impropriety_over_boxes`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrowth {
    /// `(L, min over the output of the c-conjugate)` per box.
    pub minima: Vec<(f64, f64)>,
    pub improper: bool,
}

/// Decides whether `(⊕ fᵢ)^c ≡ +∞` by recomputing it with the inputs
/// restricted to growing boxes `[−L, L]^d`. `make(L)` builds the restricted
/// inputs; the verdict is improper iff the minimum over `out` is at least
/// `0.1·L²` for every box.
pub fn impropriety_over_boxes(
    make: impl Fn(f64) -> Result<Vec<Marginal>>,
    boxes: &[f64],
    out: &Grid,
    tol: &ToleranceConfig,
) -> Result<BoxGrowth> {
    let mut minima = Vec::with_capacity(boxes.len());
    for &l in boxes {
        let fs = make(l)?;
        let cc = c_conjugate_brute(&fs, out, tol)?;
        let m = cc.function.values().iter().copied().fold(f64::INFINITY, f64::min);
        minima.push((l, m));
    }
    let improper = !minima.is_empty() && minima.iter().all(|&(l, m)| m >= 0.1 * l * l);
    Ok(BoxGrowth { minima, improper })
}

/// `Σfᵢ(xᵢ) ≥ c(x) − slack` on `count` random product tuples; returns the
/// smallest observed `Σfᵢ − c`.
pub fn lower_bound_sampled(fs: &[Marginal], count: usize, seed: u64) -> Result<(f64, Option<PointTuple>)> {
    use rand::Rng;
    let clouds: Vec<PointCloud> = fs.iter().map(Marginal::candidates).collect();
    if clouds.iter().any(PointCloud::is_empty) {
        return Err(Error::Improper("lower-bound input".into()));
    }
    let d = clouds[0].dim();
    let mut rng = crate::random::rng(seed);
    let mut worst = (f64::INFINITY, None);
    for _ in 0..count {
        let mut coords = Vec::with_capacity(d * clouds.len());
        let mut fsum = 0.0;
        for c in &clouds {
            let k = rng.gen_range(0..c.len());
            coords.extend_from_slice(c.point(k));
            fsum += c.value(k);
        }
        let t = PointTuple::from_flat(d, coords)?;
        let gap = fsum - t.cost();
        if gap < worst.0 {
            worst = (gap, Some(t));
        }
    }
    Ok(worst)
}

/// Exhaustive version of [`lower_bound_sampled`].
pub fn lower_bound_exhaustive(fs: &[Marginal]) -> Result<(f64, PointTuple)> {
    min_gap(fs)
}

/// `x ↦ max over nodes y of H(x + y) − G(y)`, with `H` analytic.
pub fn sup_convolution(h: impl Fn(&[f64]) -> f64 + Sync, g: &GridFunction, out: &Grid) -> Result<GridFunction> {
    if g.dim() != out.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: out.dim(),
        });
    }
    let cg = PointCloud::from_grid_function(g);
    let d = g.dim();
    let values: Vec<f64> = (0..out.len())
        .into_par_iter()
        .map(|k| {
            let x = out.node(k);
            let mut z = vec![0.0; d];
            cg.iter()
                .map(|(y, v)| {
                    for j in 0..d {
                        z[j] = x[j] + y[j];
                    }
                    h(&z) - v
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    GridFunction::new(out.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::{sample_analytic, Descriptor};
    use crate::gallery::{oblique_h, oblique_segments, ObliqueParams};

    fn line(lo: f64, hi: f64, h: f64) -> Grid {
        Grid::line(lo, hi, h).unwrap()
    }

    #[test]
    fn two_marginal_c_conjugate_is_the_conjugate() {
        let g = line(-2.0, 2.0, 0.25);
        let f = GridFunction::from_fn(&g, |x| (x[0] - 0.5).abs() + 0.1 * x[0] * x[0]).unwrap();
        let out = line(-3.0, 3.0, 0.25);
        let a = c_conjugate_brute(&[Marginal::Grid(f.clone())], &out, &ToleranceConfig::default())
            .unwrap()
            .function;
        let b = c_conjugate_fast(&[f.clone()], &out).unwrap();
        let c = conj(&f, &out).unwrap();
        for k in 0..out.len() {
            assert!((a.values()[k] - c.values()[k]).abs() < 1e-12);
            assert!((b.values()[k] - c.values()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn oblique_h_at_2_0_from_segments() {
        let p = ObliqueParams::new(1.0).unwrap();
        let (f, g) = oblique_segments(p, 8).unwrap();
        let v = c_conjugate_at(&[f.into(), g.into()], &[vec![2.0, 0.0]]).unwrap();
        assert!((v[0] - 3.5).abs() < 1e-12);
        assert!((oblique_h(&[2.0, 0.0], 1.0) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn quadratic_pair_gives_two_q() {
        let g = line(-4.0, 4.0, 0.01);
        let f = sample_analytic(&Descriptor::Quadratic { scale: 2.0 }, &g).unwrap();
        let out = line(-1.0, 1.0, 0.01);
        let fast = c_conjugate_fast(&[f.clone(), f.clone()], &out).unwrap();
        for k in 0..out.len() {
            let x = out.node(k)[0];
            assert!((fast.values()[k] - x * x).abs() < 5e-3);
        }
    }

    #[test]
    fn fast_matches_brute_on_aligned_grids() {
        let g = line(-1.0, 1.0, 0.05);
        let f2 = GridFunction::from_fn(&g, |x| (x[0] - 0.3).abs() + x[0]).unwrap();
        let f3 = GridFunction::from_fn(&g, |x| 2.0 * x[0].abs() - 0.5 * x[0]).unwrap();
        let out = line(-2.0, 2.0, 0.05);
        let fast = c_conjugate_fast(&[f2.clone(), f3.clone()], &out).unwrap();
        let brute = c_conjugate_brute(&[f2.into(), f3.into()], &out, &ToleranceConfig::default())
            .unwrap()
            .function;
        for k in 0..out.len() {
            assert!((fast.values()[k] - brute.values()[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn delta_envelope_of_separable_quadratic() {
        let g = line(-2.0, 2.0, 0.05);
        let q = sample_analytic(&Descriptor::Quadratic { scale: 1.0 }, &g).unwrap();
        let samples = joint_samples(&[q.clone().into(), q.into()]).unwrap();
        let env = delta_convex_envelope(
            &samples,
            &line(-2.0, 2.0, 0.01),
            &line(-2.0, 2.0, 0.05),
            &ToleranceConfig::default(),
        )
        .unwrap();
        for k in 0..env.len() {
            let s = env.grid().node(k)[0];
            assert!((env.values()[k] - s * s / 4.0).abs() < 5e-3, "s={s}");
        }
    }

    #[test]
    fn improper_input_is_an_error() {
        let g = line(-1.0, 1.0, 0.5);
        let bad = GridFunction::constant(&g, f64::INFINITY).unwrap();
        let ok = GridFunction::constant(&g, 0.0).unwrap();
        assert!(matches!(c_conjugate_fast(&[ok, bad], &g), Err(Error::Improper(_))));
    }

    #[test]
    fn closure_of_quadratic_pair() {
        let g = line(-3.0, 3.0, 0.02);
        let f = sample_analytic(&Descriptor::Quadratic { scale: 2.0 }, &g).unwrap();
        let out = line(-3.0, 3.0, 0.02);
        let c = involutivity_closure(&[f.clone(), f], &out, 1.0, &ToleranceConfig::default()).unwrap();
        assert!(c.report.passed(), "{}", c.report);
        for k in 0..out.len() {
            let x = out.node(k)[0];
            if x.abs() <= 1.0 {
                assert!((c.f1.values()[k] - x * x).abs() < 5e-3);
            }
        }
    }
}
