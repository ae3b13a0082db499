//! Contact sets, their sections and sum sets, and the identity batteries that
//! characterize maximality.
//!
//! The contact set of a tuple `(f₁,…,f_N)` is `Γ = {x : Σfᵢ(xᵢ) = c(x)}`.
//! Here it is always a finite sample ([`FiniteGamma`]), either read off a
//! grid product by brute force or emitted by a closed-form gallery
//! construction.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::cloud::{Marginal, PointCloud};
use crate::error::{Error, Result};
use crate::grid::{dot, half_sq, Grid, GridFunction};
use crate::report::{sci, CheckRecord, Report, ToleranceConfig};
use crate::transforms::prox_cloud_index;
use crate::tuple::{parse_tuple_line, PointTuple};

/// A finite set of tuples, stored sorted and without exact duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGamma {
    tuples: Vec<PointTuple>,
    eps: f64,
    source: String,
}

fn cmp_tuple(a: &PointTuple, b: &PointTuple) -> Ordering {
    a.flat()
        .iter()
        .zip(b.flat())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.flat().len().cmp(&b.flat().len()))
}

impl FiniteGamma {
    pub fn new(mut tuples: Vec<PointTuple>, eps: f64, source: impl Into<String>) -> Self {
        tuples.par_sort_unstable_by(cmp_tuple);
        tuples.dedup();
        FiniteGamma {
            tuples,
            eps,
            source: source.into(),
        }
    }

    pub fn empty(source: impl Into<String>) -> Self {
        FiniteGamma::new(Vec::new(), 0.0, source)
    }

    pub fn tuples(&self) -> &[PointTuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Number of points per tuple (0 when empty).
    pub fn n(&self) -> usize {
        self.tuples.first().map_or(0, PointTuple::n)
    }

    pub fn dim(&self) -> usize {
        self.tuples.first().map_or(0, PointTuple::dim)
    }

    /// A copy with `t` added.
    pub fn with_tuple(&self, t: PointTuple) -> Self {
        let mut v = self.tuples.clone();
        v.push(t);
        FiniteGamma::new(v, self.eps, self.source.clone())
    }

    /// A subsample of the tuples at the given indices.
    pub fn select(&self, idx: &[usize]) -> Self {
        FiniteGamma::new(
            idx.iter().map(|&i| self.tuples[i].clone()).collect(),
            self.eps,
            self.source.clone(),
        )
    }

    /// One line per tuple, `x1;x2;…;xN` with comma-separated coordinates.
    pub fn write_dump(&self, mut w: impl Write) -> Result<()> {
        for t in &self.tuples {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    pub fn to_dump_string(&self) -> String {
        let mut v = Vec::new();
        self.write_dump(&mut v).expect("writing to a Vec cannot fail");
        String::from_utf8(v).expect("dump is ASCII")
    }

    pub fn read_dump(r: impl BufRead, source: impl Into<String>) -> Result<Self> {
        let mut tuples = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let t = parse_tuple_line(&line).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if let Some(first) = tuples.first() {
                let f: &PointTuple = first;
                if f.n() != t.n() || f.dim() != t.dim() {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: "tuple shape differs from the first line".into(),
                    });
                }
            }
            tuples.push(t);
        }
        Ok(FiniteGamma::new(tuples, 0.0, source))
    }
}

/// `Σfᵢ(xᵢ) − c(x)` over the finite product of candidate sets, with callback
/// per tuple. Parallel over the first factor.
fn scan_product<T: Send>(
    clouds: &[PointCloud],
    visit: impl Fn(&[f64], f64, f64) -> Option<T> + Sync,
) -> Vec<T> {
    let d = clouds[0].dim();
    let first = &clouds[0];
    (0..first.len())
        .into_par_iter()
        .flat_map_iter(|i0| {
            let mut out = Vec::new();
            let mut coords = Vec::with_capacity(d * clouds.len());
            coords.extend_from_slice(first.point(i0));
            let sum = first.point(i0).to_vec();
            walk(
                &clouds[1..],
                &mut coords,
                sum,
                first.value(i0),
                0.0,
                &visit,
                &mut out,
            );
            out
        })
        .collect()
}

fn walk<T>(
    rest: &[PointCloud],
    coords: &mut Vec<f64>,
    sum: Vec<f64>,
    fsum: f64,
    cost: f64,
    visit: &impl Fn(&[f64], f64, f64) -> Option<T>,
    out: &mut Vec<T>,
) {
    match rest.split_first() {
        None => {
            if let Some(t) = visit(coords, fsum, cost) {
                out.push(t);
            }
        }
        Some((c, tail)) => {
            for (p, v) in c.iter() {
                let c2 = cost + dot(&sum, p);
                let s2: Vec<f64> = sum.iter().zip(p).map(|(a, b)| a + b).collect();
                let len = coords.len();
                coords.extend_from_slice(p);
                walk(tail, coords, s2, fsum + v, c2, visit, out);
                coords.truncate(len);
            }
        }
    }
}

/// All product tuples with `|Σfᵢ(xᵢ) − c(x)| ≤ eps·max(1, |c(x)|)`.
///
/// A tuple with `Σfᵢ(xᵢ) < c(x) − eps·max(1,|c(x)|)` means the functions do
/// not satisfy the lower bound; the most violated one is returned as a
/// [`Error::LowerBoundViolated`].
pub fn contact_set(fs: &[Marginal], eps: f64) -> Result<FiniteGamma> {
    if fs.len() < 2 {
        return Err(Error::InvalidParameter("need at least two functions".into()));
    }
    let d = fs[0].dim();
    if let Some(f) = fs.iter().find(|f| f.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: f.dim(),
        });
    }
    let clouds: Vec<PointCloud> = fs.iter().map(Marginal::candidates).collect();
    if clouds.iter().any(PointCloud::is_empty) {
        return Err(Error::Improper("contact-set input".into()));
    }
    enum Hit {
        Contact(Vec<f64>),
        Violation(Vec<f64>, f64),
    }
    let hits = scan_product(&clouds, |coords, fsum, cost| {
        let gap = fsum - cost;
        let slack = eps * cost.abs().max(1.0);
        if gap < -slack {
            Some(Hit::Violation(coords.to_vec(), gap))
        } else if gap <= slack {
            Some(Hit::Contact(coords.to_vec()))
        } else {
            None
        }
    });
    let mut tuples = Vec::new();
    let mut worst: Option<(Vec<f64>, f64)> = None;
    for h in hits {
        match h {
            Hit::Contact(c) => tuples.push(PointTuple::from_flat(d, c)?),
            Hit::Violation(c, g) => {
                if worst.as_ref().map_or(true, |w| g < w.1) {
                    worst = Some((c, g));
                }
            }
        }
    }
    if let Some((c, g)) = worst {
        return Err(Error::LowerBoundViolated {
            slack: g,
            witness: PointTuple::from_flat(d, c)?.to_string(),
        });
    }
    Ok(FiniteGamma::new(tuples, eps, "contact-set"))
}

/// Smallest value of `Σfᵢ(xᵢ) − c(x)` over the product, with its tuple.
pub fn min_gap(fs: &[Marginal]) -> Result<(f64, PointTuple)> {
    let clouds: Vec<PointCloud> = fs.iter().map(Marginal::candidates).collect();
    if clouds.iter().any(PointCloud::is_empty) {
        return Err(Error::Improper("lower-bound input".into()));
    }
    let d = clouds[0].dim();
    let all = scan_product(&clouds, |coords, fsum, cost| Some((fsum - cost, coords.to_vec())));
    let (g, c) = all
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("non-empty product");
    Ok((g, PointTuple::from_flat(d, c)?))
}

/// `{Σ_{i≠i0} xᵢ : x ∈ Γ, |x_{i0} − x| ≤ radius}`, sorted and deduplicated.
pub fn gamma_section(g: &FiniteGamma, i0: usize, x: &[f64], radius: f64) -> Result<Vec<Vec<f64>>> {
    if g.is_empty() {
        return Ok(Vec::new());
    }
    if i0 >= g.n() {
        return Err(Error::InvalidParameter(format!(
            "index {i0} out of range for N = {}",
            g.n()
        )));
    }
    let mut out: Vec<Vec<f64>> = g
        .tuples()
        .iter()
        .filter(|t| dist(t.point(i0), x) <= radius)
        .map(|t| t.sum_except(i0))
        .collect();
    out.sort_by(|a, b| cmp_points(a, b));
    out.dedup();
    Ok(out)
}

fn cmp_points(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// The sums `S(x) = Σxᵢ` of a finite Γ.
#[derive(Debug, Clone, PartialEq)]
pub struct SumSet {
    dim: usize,
    points: Vec<Vec<f64>>,
}

pub fn sum_set(g: &FiniteGamma) -> SumSet {
    let mut points: Vec<Vec<f64>> = g.tuples().par_iter().map(PointTuple::sum).collect();
    points.par_sort_unstable_by(|a, b| cmp_points(a, b));
    points.dedup();
    SumSet { dim: g.dim(), points }
}

impl SumSet {
    pub fn from_points(dim: usize, mut points: Vec<Vec<f64>>) -> Self {
        points.sort_by(|a, b| cmp_points(a, b));
        points.dedup();
        SumSet { dim, points }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Marks each probe node lying within `0.75·step` of some sum.
    pub fn coverage(&self, probe: &Grid) -> Result<Coverage> {
        if !self.points.is_empty() && self.dim != probe.dim() {
            return Err(Error::DimensionMismatch {
                expected: probe.dim(),
                got: self.dim,
            });
        }
        let radius = 0.75 * probe.max_step();
        let mut covered = vec![false; probe.len()];
        let d = probe.dim();
        for s in &self.points {
            let mut ranges = [(0usize, 0usize); 2];
            let mut empty = false;
            for (k, r) in ranges.iter_mut().enumerate().take(d) {
                let a = probe.axis(k);
                let lo = ((s[k] - radius - a.origin) / a.step).ceil().max(0.0);
                let hi = ((s[k] + radius - a.origin) / a.step).floor().min((a.count - 1) as f64);
                if hi < lo {
                    empty = true;
                    break;
                }
                *r = (lo as usize, hi as usize);
            }
            if empty {
                continue;
            }
            let (r1lo, r1hi) = if d == 2 { ranges[1] } else { (0, 0) };
            for i in ranges[0].0..=ranges[0].1 {
                for j in r1lo..=r1hi {
                    let idx = if d == 2 { probe.ravel([i, j]) } else { i };
                    if !covered[idx] && dist(&probe.node(idx), s) <= radius {
                        covered[idx] = true;
                    }
                }
            }
        }
        Ok(Coverage {
            probe: probe.clone(),
            covered,
        })
    }
}

/// Probe-grid coverage bitmap of a sum set.
#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub probe: Grid,
    pub covered: Vec<bool>,
}

impl Coverage {
    /// Uncovered probe nodes in row-major order.
    pub fn holes(&self) -> Vec<Vec<f64>> {
        self.covered
            .iter()
            .enumerate()
            .filter(|(_, c)| !**c)
            .map(|(i, _)| self.probe.node(i))
            .collect()
    }

    /// The bitmap as a 0/1 grid function (for the grid dump format).
    pub fn to_grid_function(&self) -> GridFunction {
        GridFunction::new(
            self.probe.clone(),
            self.covered.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect(),
        )
        .expect("finite bitmap")
    }

    pub fn is_covered(&self, idx: usize) -> bool {
        self.covered[idx]
    }
}

/// Uncovered probe nodes; empty means maximal at this probe resolution.
pub fn hole_report(s: &SumSet, probe: &Grid) -> Result<Vec<Vec<f64>>> {
    Ok(s.coverage(probe)?.holes())
}

/// Spacing of a marginal's candidate set: the grid step, or for clouds the
/// largest nearest-neighbour distance.
pub fn resolution(f: &Marginal) -> f64 {
    match f {
        Marginal::Grid(g) => g.grid().max_step(),
        Marginal::Cloud(c) => {
            if c.len() < 2 {
                return 0.0;
            }
            (0..c.len())
                .map(|i| {
                    (0..c.len())
                        .filter(|&j| j != i)
                        .map(|j| dist(c.point(i), c.point(j)))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        }
    }
}

/// `min over candidates y of g(y) + ½|x − y|²`.
pub fn envelope_at(g: &PointCloud, x: &[f64]) -> f64 {
    g.iter()
        .map(|(y, v)| v + 0.5 * y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Checks `Σ prox_{fᵢ}(x) = x` and `Σ e_{fᵢ*}(x) = q(x)` at each sample.
///
/// `conjugates[i]` must hold `fᵢ*` on a set covering the relevant slopes.
/// The prox tolerance is the sum of the marginals' resolutions (each grid
/// prox is exact up to one node spacing); the envelope tolerance is
/// `tol.eps_equal`.
pub fn verify_partition_identities(
    fs: &[Marginal],
    conjugates: &[Marginal],
    samples: &[Vec<f64>],
    tol: &ToleranceConfig,
) -> Result<Report> {
    if fs.len() != conjugates.len() {
        return Err(Error::InvalidParameter(format!(
            "{} functions but {} conjugates",
            fs.len(),
            conjugates.len()
        )));
    }
    let d = fs.first().map_or(0, Marginal::dim);
    for f in fs.iter().chain(conjugates) {
        if f.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: f.dim(),
            });
        }
    }
    let clouds: Vec<PointCloud> = fs.iter().map(Marginal::candidates).collect();
    let cclouds: Vec<PointCloud> = conjugates.iter().map(Marginal::candidates).collect();
    let prox_tol: f64 = fs.iter().map(resolution).sum();
    let mut prox_dev: (f64, Option<usize>) = (0.0, None);
    let mut env_dev: (f64, Option<usize>) = (0.0, None);
    for (k, x) in samples.iter().enumerate() {
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let mut s = vec![0.0; d];
        for c in &clouds {
            let (i, _) = prox_cloud_index(c, x)?;
            for (a, b) in s.iter_mut().zip(c.point(i)) {
                *a += b;
            }
        }
        let pd = s.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if pd > prox_dev.0 {
            prox_dev = (pd, Some(k));
        }
        let e: f64 = cclouds.iter().map(|c| envelope_at(c, x)).sum();
        let ed = (e - half_sq(x)).abs();
        if ed > env_dev.0 {
            env_dev = (ed, Some(k));
        }
    }
    let mut r = Report::new("partition-identities");
    let mut p = CheckRecord::within("prox-sum", prox_dev.0, prox_tol);
    if let Some(k) = prox_dev.1 {
        p = p.with_witness(format!("{:?}", samples[k]));
    }
    r.push(p);
    let mut e = CheckRecord::within("envelope-sum", env_dev.0, tol.eps_equal);
    if let Some(k) = env_dev.1 {
        e = e.with_witness(format!("{:?}", samples[k]));
    }
    r.push(e);
    Ok(r)
}

/// Checks `Γᵢ ⊆ ∂fᵢ` through Fenchel equality on every stored tuple, and the
/// reverse inclusion by sampling `∂fᵢ`: for each dual probe `s`, the argmax
/// `x` of `⟨x,s⟩ − fᵢ(x)` must appear in Γ with `xᵢ ≈ x` and `Σ_{j≠i}xⱼ ≈ s`
/// (within `radius`).
pub fn subdifferential_graph_check(
    fs: &[Marginal],
    g: &FiniteGamma,
    i: usize,
    dual_probes: &[Vec<f64>],
    radius: f64,
    tol: &ToleranceConfig,
) -> Result<Report> {
    if i >= fs.len() {
        return Err(Error::InvalidParameter(format!("slot {i} out of range")));
    }
    let cand = fs[i].candidates();
    if cand.is_empty() {
        return Err(Error::Improper(format!("slot {i}")));
    }
    let conj_at = |s: &[f64]| -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, (x, v)) in cand.iter().enumerate() {
            let val = dot(x, s) - v;
            if val > best.1 {
                best = (k, val);
            }
        }
        best
    };
    let devs: Vec<(f64, usize)> = g
        .tuples()
        .par_iter()
        .enumerate()
        .map(|(k, t)| {
            let x = t.point(i);
            let s = t.sum_except(i);
            let fx = fs[i].eval(x).raw();
            let (_, fs_star) = conj_at(&s);
            ((fx + fs_star - dot(x, &s)).abs(), k)
        })
        .collect();
    let (worst, wk) = devs
        .iter()
        .fold((0.0, None), |acc, &(d, k)| if d > acc.0 { (d, Some(k)) } else { acc });
    let mut r = Report::new(format!("subdifferential-{i}"));
    let mut inc = CheckRecord::within("gamma-in-subdifferential", worst, tol.eps_equal);
    if let Some(k) = wk {
        inc = inc.with_witness(g.tuples()[k].to_string());
    }
    r.push(inc);

    let missing: Vec<usize> = dual_probes
        .par_iter()
        .enumerate()
        .filter_map(|(k, s)| {
            let (xi, _) = conj_at(s);
            let x = cand.point(xi);
            let hit = g
                .tuples()
                .iter()
                .any(|t| dist(t.point(i), x) <= radius && dist(&t.sum_except(i), s) <= radius);
            (!hit).then_some(k)
        })
        .collect();
    let frac = if dual_probes.is_empty() {
        0.0
    } else {
        missing.len() as f64 / dual_probes.len() as f64
    };
    let mut sur = CheckRecord::within("subdifferential-in-gamma", frac, 0.0);
    if let Some(&k) = missing.first() {
        sur = sur.with_witness(format!("s={:?} missing={}", dual_probes[k], missing.len()));
    }
    r.push(sur);
    Ok(r)
}

/// Human-readable one-liner for a gap value.
pub fn describe_gap(g: f64) -> String {
    format!("gap={}", sci(g))
}
