//! Discrete Fenchel conjugation and the two-marginal toolbox built on it.
//!
//! All conjugates here are conjugates of the *node-restricted* input: values
//! between nodes are taken to be `+∞`, so `f*(y) = max_x ⟨x,y⟩ − f(x)` with
//! `x` ranging over the finite nodes. This is exact for piecewise-linear
//! convex functions whose breakpoints sit on nodes.
//!
//! The fast path computes a 1-D conjugate by building the lower convex hull
//! of the finite samples and walking it against the sorted dual nodes, which
//! costs `O(n + m)`. In two dimensions the transform factorizes: an inner
//! 1-D transform along the second axis for each fixed first coordinate, then
//! an outer 1-D transform along the first axis. The brute path scans every
//! node for every dual node and serves as the oracle.

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::grid::{dot, half_sq, Axis, Grid, GridFunction};
use crate::report::{CheckRecord, Report, ToleranceConfig};

/// Second differences above `-CONVEXITY_TOL` count as nonnegative.
pub const CONVEXITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Fast,
    Brute,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Method::Fast),
            "brute" => Ok(Method::Brute),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConjugateRequest<'a> {
    pub input: &'a GridFunction,
    pub dual_grid: &'a Grid,
    pub method: Method,
}

/// `f*(y) = max over finite nodes x of ⟨x,y⟩ − f(x)`, evaluated on the dual grid.
pub fn conjugate(req: &ConjugateRequest<'_>) -> Result<GridFunction> {
    let f = req.input;
    if f.dim() != req.dual_grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: req.dual_grid.dim(),
        });
    }
    if !f.is_proper() {
        return Err(Error::Improper("conjugate input".into()));
    }
    let values = match req.method {
        Method::Brute => conjugate_cloud_values(&PointCloud::from_grid_function(f), req.dual_grid),
        Method::Fast => match f.dim() {
            1 => {
                let a = f.grid().axis(0);
                let xs: Vec<f64> = (0..a.count).map(|i| a.coord(i)).collect();
                let mut out = vec![0.0; req.dual_grid.len()];
                conj_1d(&xs, f.values(), req.dual_grid.axis(0), &mut out);
                out
            }
            _ => conjugate_fast_2d(f, req.dual_grid),
        },
    };
    GridFunction::new(req.dual_grid.clone(), values)
}

/// Fast conjugate onto `dual`.
pub fn conj(f: &GridFunction, dual: &Grid) -> Result<GridFunction> {
    conjugate(&ConjugateRequest {
        input: f,
        dual_grid: dual,
        method: Method::Fast,
    })
}

/// Conjugate of an arbitrary finite cloud, by full scan.
pub fn conjugate_cloud(c: &PointCloud, dual: &Grid) -> Result<GridFunction> {
    if c.dim() != dual.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            got: dual.dim(),
        });
    }
    if c.is_empty() {
        return Err(Error::Improper("conjugate input cloud".into()));
    }
    GridFunction::new(dual.clone(), conjugate_cloud_values(c, dual))
}

fn conjugate_cloud_values(c: &PointCloud, dual: &Grid) -> Vec<f64> {
    let d = dual.dim();
    (0..dual.len())
        .into_par_iter()
        .map(|j| {
            let mut y = [0.0; 2];
            dual.node_into(j, &mut y[..d]);
            c.iter()
                .map(|(x, v)| dot(x, &y[..d]) - v)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Lower convex hull of the finite samples `(xs[i], fs[i])`, `xs` strictly
/// increasing. Returns hull vertex indices.
fn lower_hull(xs: &[f64], fs: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..xs.len() {
        if !fs[i].is_finite() {
            continue;
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Drop b unless it lies strictly below the chord a–i.
            let cross = (xs[b] - xs[a]) * (fs[i] - fs[a]) - (fs[b] - fs[a]) * (xs[i] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// 1-D conjugate of the samples onto the nodes of `dual`. Writes
/// `f64::NEG_INFINITY` everywhere when no sample is finite.
fn conj_1d(xs: &[f64], fs: &[f64], dual: &Axis, out: &mut [f64]) {
    let hull = lower_hull(xs, fs);
    if hull.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::NEG_INFINITY);
        return;
    }
    let mut k = 0;
    for (j, o) in out.iter_mut().enumerate() {
        let y = dual.coord(j);
        while k + 1 < hull.len() {
            let (a, b) = (hull[k], hull[k + 1]);
            let slope = (fs[b] - fs[a]) / (xs[b] - xs[a]);
            if y > slope {
                k += 1;
            } else {
                break;
            }
        }
        let i = hull[k];
        *o = xs[i] * y - fs[i];
    }
}

fn conjugate_fast_2d(f: &GridFunction, dual: &Grid) -> Vec<f64> {
    let (a0, a1) = (f.grid().axis(0), f.grid().axis(1));
    let (d0, d1) = (dual.axis(0), dual.axis(1));
    let xs1: Vec<f64> = (0..a1.count).map(|i| a1.coord(i)).collect();
    let xs0: Vec<f64> = (0..a0.count).map(|i| a0.coord(i)).collect();
    // inner[i][j] = max over x2 of x2·y2_j − f(x1_i, x2)
    let mut inner = vec![0.0; a0.count * d1.count];
    inner
        .par_chunks_mut(d1.count)
        .enumerate()
        .for_each(|(i, row)| {
            let fr = &f.values()[i * a1.count..(i + 1) * a1.count];
            conj_1d(&xs1, fr, d1, row);
        });
    // outer: for each y2_j, conjugate x1 ↦ −inner[·][j] along the first axis.
    let mut cols = vec![0.0; d1.count * d0.count];
    cols.par_chunks_mut(d0.count)
        .enumerate()
        .for_each(|(j, col)| {
            let g: Vec<f64> = (0..a0.count)
                .map(|i| {
                    let v = inner[i * d1.count + j];
                    if v == f64::NEG_INFINITY {
                        f64::INFINITY
                    } else {
                        -v
                    }
                })
                .collect();
            conj_1d(&xs0, &g, d0, col);
        });
    let mut out = vec![0.0; dual.len()];
    for j in 0..d1.count {
        for i in 0..d0.count {
            out[i * d1.count + j] = cols[j * d0.count + i];
        }
    }
    out
}

/// `f**`, conjugating onto `intermediate` and back onto `f`'s own grid.
pub fn biconjugate(f: &GridFunction, intermediate: &Grid) -> Result<GridFunction> {
    let fs = conj(f, intermediate)?;
    conj(&fs, f.grid())
}

/// `(f □ g)(x) = min over finite nodes y of f(y) + g(x − y)`, with `g`
/// interpolated and extended by `+∞` outside its box.
pub fn inf_convolution(f: &GridFunction, g: &GridFunction, out: &Grid) -> Result<GridFunction> {
    for d in [g.dim(), out.dim()] {
        if d != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: d,
            });
        }
    }
    let cf = PointCloud::from_grid_function(f);
    let d = f.dim();
    let values = (0..out.len())
        .into_par_iter()
        .map(|j| {
            let mut x = [0.0; 2];
            out.node_into(j, &mut x[..d]);
            let mut diff = [0.0; 2];
            cf.iter()
                .map(|(y, v)| {
                    for k in 0..d {
                        diff[k] = x[k] - y[k];
                    }
                    v + g.interp_raw(&diff[..d])
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    GridFunction::new(out.clone(), values)
}

/// Moreau envelope `e_f = f □ q` on `out`.
///
/// The kernel is the exact quadratic, not a sampled one, and the minimum is
/// computed through `e_f = q − (f + q)*`, which holds node-for-node for the
/// node-restricted `f`.
pub fn moreau_envelope(f: &GridFunction, out: &Grid) -> Result<GridFunction> {
    if f.dim() != out.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: out.dim(),
        });
    }
    if !f.is_proper() {
        return Err(Error::Improper("envelope input".into()));
    }
    let fq = f.add_quadratic(1.0)?;
    let c = conj(&fq, out)?;
    c.map(|x, v| half_sq(x) - v)
}

/// Moreau envelope of a finite cloud, by full scan.
pub fn moreau_envelope_cloud(c: &PointCloud, out: &Grid) -> Result<GridFunction> {
    let fq = PointCloud::from_points(
        c.dim(),
        c.iter().map(|(p, v)| (p.to_vec(), v + half_sq(p))),
    )?;
    conjugate_cloud(&fq, out)?.map(|x, v| half_sq(x) - v)
}

/// Node minimizing `f(y) + ½|y − x|²`; ties go to the smallest row-major index.
pub fn prox(f: &GridFunction, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: x.len(),
        });
    }
    prox_cloud(&PointCloud::from_grid_function(f), x)
}

/// Cloud point minimizing `f(y) + ½|y − x|²`, first index on ties.
pub fn prox_cloud(c: &PointCloud, x: &[f64]) -> Result<Vec<f64>> {
    let (i, _) = prox_cloud_index(c, x)?;
    Ok(c.point(i).to_vec())
}

pub(crate) fn prox_cloud_index(c: &PointCloud, x: &[f64]) -> Result<(usize, f64)> {
    if c.is_empty() {
        return Err(Error::Improper("prox input".into()));
    }
    let mut best = (0, f64::INFINITY);
    for (i, (y, v)) in c.iter().enumerate() {
        let val = v + 0.5 * y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        if val < best.1 {
            best = (i, val);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityVerdict {
    pub convex: bool,
    /// Most negative second difference found and its center node.
    pub worst: f64,
    pub witness: Option<Vec<f64>>,
}

/// Tests whether `f − λq` has nonnegative second differences along both axes
/// and both diagonals at every interior finite node.
pub fn check_strong_convexity(f: &GridFunction, lambda: f64) -> ConvexityVerdict {
    check_strong_convexity_tol(f, lambda, CONVEXITY_TOL)
}

pub fn check_strong_convexity_tol(f: &GridFunction, lambda: f64, tol: f64) -> ConvexityVerdict {
    let grid = f.grid();
    let g: Vec<f64> = {
        let mut p = vec![0.0; grid.dim()];
        f.values()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                grid.node_into(i, &mut p);
                v - lambda * half_sq(&p)
            })
            .collect()
    };
    let mut worst = f64::INFINITY;
    let mut witness = None;
    let mut consider = |center: usize, a: usize, b: usize| {
        let v = g[center];
        if !v.is_finite() {
            return;
        }
        let sd = g[a] - 2.0 * v + g[b];
        if sd < worst {
            worst = sd;
            witness = Some(center);
        }
    };
    match grid.dim() {
        1 => {
            for i in 1..grid.len().saturating_sub(1) {
                consider(i, i - 1, i + 1);
            }
        }
        _ => {
            let (n0, n1) = (grid.axis(0).count, grid.axis(1).count);
            let at = |i: usize, j: usize| i * n1 + j;
            for i in 0..n0 {
                for j in 0..n1 {
                    let c = at(i, j);
                    let inner0 = i > 0 && i + 1 < n0;
                    let inner1 = j > 0 && j + 1 < n1;
                    if inner0 {
                        consider(c, at(i - 1, j), at(i + 1, j));
                    }
                    if inner1 {
                        consider(c, at(i, j - 1), at(i, j + 1));
                    }
                    if inner0 && inner1 {
                        consider(c, at(i - 1, j - 1), at(i + 1, j + 1));
                        consider(c, at(i - 1, j + 1), at(i + 1, j - 1));
                    }
                }
            }
        }
    }
    let convex = !(worst < -tol);
    ConvexityVerdict {
        convex,
        worst: if worst.is_finite() { worst } else { 0.0 },
        witness: if convex { None } else { witness.map(|i| grid.node(i)) },
    }
}

/// Largest absolute difference quotient between neighbouring finite nodes.
pub fn max_abs_slope(f: &GridFunction) -> f64 {
    let grid = f.grid();
    let v = f.values();
    let mut best: f64 = 0.0;
    let mut upd = |a: f64, b: f64, h: f64| {
        if a.is_finite() && b.is_finite() {
            best = best.max(((b - a) / h).abs());
        }
    };
    match grid.dim() {
        1 => {
            let h = grid.axis(0).step;
            for i in 1..v.len() {
                upd(v[i - 1], v[i], h);
            }
        }
        _ => {
            let (n0, n1) = (grid.axis(0).count, grid.axis(1).count);
            let (h0, h1) = (grid.axis(0).step, grid.axis(1).step);
            for i in 0..n0 {
                for j in 0..n1 {
                    if i + 1 < n0 {
                        upd(v[i * n1 + j], v[(i + 1) * n1 + j], h0);
                    }
                    if j + 1 < n1 {
                        upd(v[i * n1 + j], v[i * n1 + j + 1], h1);
                    }
                }
            }
        }
    }
    best
}

/// True at nodes whose distance to the box boundary is at least `radius`.
pub fn trusted_mask(grid: &Grid, radius: f64) -> Vec<bool> {
    let mut p = vec![0.0; grid.dim()];
    (0..grid.len())
        .map(|i| {
            grid.node_into(i, &mut p);
            grid.distance_to_boundary(&p) >= radius - 1e-12
        })
        .collect()
}

/// Compares both sides of the nested-supremum identity
/// `sup_{xᵢ} g(x + Σxᵢ) − Σfᵢ(xᵢ) = (g* − Σfᵢ*)*(x)` at each probe.
///
/// The left side runs over the finite-node product of the `fᵢ` with `g`
/// interpolated; the right side conjugates everything onto `dual`. Values
/// above `tol.divergence_cap` count as divergent, and the two sides must
/// agree on divergence as well as on value.
pub fn nested_sup_identity_check(
    g: &GridFunction,
    fs: &[GridFunction],
    probes: &[Vec<f64>],
    dual: &Grid,
    tol: &ToleranceConfig,
) -> Result<Report> {
    let d = g.dim();
    for f in fs.iter().map(GridFunction::dim).chain([dual.dim()]) {
        if f != d {
            return Err(Error::DimensionMismatch { expected: d, got: f });
        }
    }
    if let Some(p) = probes.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.len(),
        });
    }
    let mut report = Report::new("nested-sup-identity");
    let all_convex = std::iter::once(g)
        .chain(fs)
        .all(|f| check_strong_convexity(f, 0.0).convex);
    report.push(CheckRecord::flag("inputs-convex", all_convex));

    let clouds: Vec<PointCloud> = fs.iter().map(PointCloud::from_grid_function).collect();
    let gs = conj(g, dual)?;
    let mut diff = gs.clone();
    for f in fs {
        let fstar = conj(f, dual)?;
        diff = GridFunction::new(
            dual.clone(),
            diff.values()
                .iter()
                .zip(fstar.values())
                .map(|(a, b)| if a.is_finite() { a - b } else { f64::INFINITY })
                .collect(),
        )?;
    }
    // diff may be negative and large; keep it as a raw slice.
    let diff_vals = diff.values().to_vec();

    let mut max_dev: f64 = 0.0;
    let mut worst = None;
    let mut mismatch = None;
    for (pi, x) in probes.iter().enumerate() {
        let lhs = nested_lhs(g, &clouds, x);
        let rhs = (0..dual.len())
            .map(|j| {
                let y = dual.node(j);
                dot(x, &y) - diff_vals[j]
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let (dl, dr) = (lhs > tol.divergence_cap, rhs > tol.divergence_cap);
        if dl != dr {
            mismatch.get_or_insert(pi);
            continue;
        }
        if !dl {
            let dev = (lhs - rhs).abs();
            if dev > max_dev {
                max_dev = dev;
                worst = Some(pi);
            }
        }
    }
    let mut rec = CheckRecord::within("identity", max_dev, tol.eps_equal);
    if let Some(pi) = worst {
        rec = rec.with_witness(format!("{:?}", probes[pi]));
    }
    report.push(rec);
    let mut div = CheckRecord::flag("divergence-consistent", mismatch.is_none());
    if let Some(pi) = mismatch {
        div = div.with_witness(format!("{:?}", probes[pi]));
    }
    report.push(div);
    Ok(report)
}

fn nested_lhs(g: &GridFunction, clouds: &[PointCloud], x: &[f64]) -> f64 {
    fn rec(g: &GridFunction, clouds: &[PointCloud], acc: &mut Vec<f64>, pen: f64) -> f64 {
        match clouds.split_first() {
            None => g.interp_raw(acc) - pen,
            Some((c, rest)) => {
                let mut best = f64::NEG_INFINITY;
                for (p, v) in c.iter() {
                    for (a, b) in acc.iter_mut().zip(p) {
                        *a += b;
                    }
                    best = best.max(rec(g, rest, acc, pen + v));
                    for (a, b) in acc.iter_mut().zip(p) {
                        *a -= b;
                    }
                }
                best
            }
        }
    }
    rec(g, clouds, &mut x.to_vec(), 0.0)
}
