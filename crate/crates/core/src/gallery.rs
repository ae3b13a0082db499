//! Closed-form reference constructions.
//!
//! * The oblique triple: indicators of two segments at 60° and the piecewise
//!   affine `h` that closes them into a c-conjugate triple whose sum set
//!   misses the open hexagon `int H_λ`.
//! * The perpendicular triple, whose sum set is the whole plane.
//! * The improper pair of full lines, whose c-conjugate is `+∞`.
//! * A non-involutive pipeline built from `H₁ = max(|x₁|,|x₂|) + q`.
//! * The quadratic tuple `fᵢ = (N−1)q`.
//!
//! Everything here is evaluated analytically; grids only enter when the
//! caller samples a descriptor.

use rand::Rng;
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::contact::FiniteGamma;
use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::grid::{dot, half_sq, Grid, GridFunction};
use crate::report::{CheckRecord, Report};
use crate::transforms::check_strong_convexity;
use crate::tuple::PointTuple;

const SQRT3: f64 = 1.732_050_807_568_877_2;
/// Tolerance for closed region and polygon tests.
const GEOM_TOL: f64 = 1e-9;

pub const U: [f64; 2] = [1.0, 0.0];
pub const V: [f64; 2] = [0.5, SQRT3 / 2.0];
pub const W: [f64; 2] = [-0.5, SQRT3 / 2.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObliqueParams {
    pub lambda: f64,
}

impl ObliqueParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
        }
        Ok(ObliqueParams { lambda })
    }

    pub fn u(&self) -> [f64; 2] {
        U
    }

    pub fn v(&self) -> [f64; 2] {
        V
    }

    pub fn w(&self) -> [f64; 2] {
        W
    }
}

fn scale(a: f64, p: [f64; 2]) -> [f64; 2] {
    [a * p[0], a * p[1]]
}

fn add2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

/// `(f, g, h)` of the oblique example as analytic descriptors.
pub fn oblique_triple(p: ObliqueParams) -> [Descriptor; 3] {
    [
        Descriptor::Segment {
            dir: U.to_vec(),
            lambda: p.lambda,
        },
        Descriptor::Segment {
            dir: V.to_vec(),
            lambda: p.lambda,
        },
        Descriptor::ObliqueH { lambda: p.lambda },
    ]
}

/// `h(z) = max(λ|u·z + λu·v| + λv·z, λ|u·z − λu·v| − λv·z)`.
pub fn oblique_h(z: &[f64], lambda: f64) -> f64 {
    let uz = dot(&U, z);
    let vz = dot(&V, z);
    let uv = 0.5;
    let a = lambda * (uz + lambda * uv).abs() + lambda * vz;
    let b = lambda * (uz - lambda * uv).abs() - lambda * vz;
    a.max(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    R1,
    R2,
    R3,
    R4,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::R1, Region::R2, Region::R3, Region::R4];

    /// The affine formula for `h` on this region.
    pub fn formula(self, z: &[f64], lambda: f64) -> f64 {
        let (l, h3) = (lambda, SQRT3 / 2.0);
        match self {
            Region::R1 => 0.5 * l * z[0] - h3 * l * z[1] - 0.5 * l * l,
            Region::R2 => -0.5 * l * z[0] + h3 * l * z[1] - 0.5 * l * l,
            Region::R3 => 1.5 * l * z[0] + h3 * l * z[1] + 0.5 * l * l,
            Region::R4 => -1.5 * l * z[0] - h3 * l * z[1] + 0.5 * l * l,
        }
    }
}

fn in_r1(z: &[f64], l: f64, tol: f64) -> bool {
    z[0] >= l / 2.0 - tol && z[1] <= -(z[0] + l) / SQRT3 + tol
}

fn in_r2(z: &[f64], l: f64, tol: f64) -> bool {
    z[0] <= -l / 2.0 + tol && z[1] >= (-z[0] + l) / SQRT3 - tol
}

/// Closed-region membership with tolerance `tol`; interiors use `-tol`.
pub fn region_contains(r: Region, z: &[f64], lambda: f64, tol: f64) -> bool {
    let l = lambda;
    let outside_interiors = !in_r1(z, l, -tol) && !in_r2(z, l, -tol);
    match r {
        Region::R1 => in_r1(z, l, tol),
        Region::R2 => in_r2(z, l, tol),
        Region::R3 => z[1] >= -SQRT3 * z[0] - tol && outside_interiors,
        Region::R4 => z[1] <= -SQRT3 * z[0] + tol && outside_interiors,
    }
}

/// Every region containing `z`, each with its formula value.
pub fn h_region(z: &[f64], p: ObliqueParams) -> Vec<(Region, f64)> {
    Region::ALL
        .iter()
        .filter(|&&r| region_contains(r, z, p.lambda, GEOM_TOL))
        .map(|&r| (r, r.formula(z, p.lambda)))
        .collect()
}

/// `(t, s)` with `z* = τλw + sλ(u+v)`, `t = |τ|`.
pub fn rhombus_coords(zs: &[f64], lambda: f64) -> (f64, f64) {
    let tau = dot(&W, zs) / lambda;
    let s = dot(&[1.5, SQRT3 / 2.0], zs) / (3.0 * lambda);
    (tau.abs(), s)
}

/// `h*(z*) = λ²(t − ½)` on `D_λ`, `+∞` outside.
pub fn h_star(zs: &[f64], p: ObliqueParams) -> f64 {
    let (t, _) = rhombus_coords(zs, p.lambda);
    if RhombusD::new(p.lambda).contains(zs) {
        p.lambda * p.lambda * (t.min(1.0) - 0.5)
    } else {
        f64::INFINITY
    }
}

/// The rhombus `D_λ` with vertices `±λw`, `±λ(u+v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhombusD {
    pub lambda: f64,
}

impl RhombusD {
    pub fn new(lambda: f64) -> Self {
        RhombusD { lambda }
    }

    pub fn vertices(&self) -> [[f64; 2]; 4] {
        let l = self.lambda;
        let uv = add2(U, V);
        [scale(l, W), scale(l, uv), scale(-l, W), scale(-l, uv)]
    }

    pub fn contains(&self, zs: &[f64]) -> bool {
        let (t, s) = rhombus_coords(zs, self.lambda);
        t <= 1.0 + GEOM_TOL && s.abs() <= 1.0 - t + GEOM_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HexClass {
    Inside,
    Boundary,
    Outside,
}

/// The hexagon `H_λ` with vertices `±2λu`, `±2λv`, `±2λw`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexHull {
    pub lambda: f64,
}

impl HexHull {
    pub fn new(lambda: f64) -> Self {
        HexHull { lambda }
    }

    /// Vertices in counter-clockwise order starting at `2λu`.
    pub fn vertices(&self) -> [[f64; 2]; 6] {
        let l2 = 2.0 * self.lambda;
        [
            scale(l2, U),
            scale(l2, V),
            scale(l2, W),
            scale(-l2, U),
            scale(-l2, V),
            scale(-l2, W),
        ]
    }

    /// Outward unit normals of the six edges, edge `k` joining vertex `k` to `k+1`.
    pub fn normals(&self) -> [[f64; 2]; 6] {
        let mut out = [[0.0; 2]; 6];
        for (k, n) in out.iter_mut().enumerate() {
            let ang = std::f64::consts::PI / 6.0 + k as f64 * std::f64::consts::PI / 3.0;
            *n = [ang.cos(), ang.sin()];
        }
        out
    }

    /// Largest signed half-plane violation `max_k n_k·x − √3λ` (negative inside).
    pub fn half_plane_value(&self, x: &[f64]) -> f64 {
        let r = SQRT3 * self.lambda;
        self.normals()
            .iter()
            .map(|n| dot(n, x) - r)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn classify(&self, x: &[f64]) -> HexClass {
        let v = self.half_plane_value(x);
        if v < -GEOM_TOL {
            HexClass::Inside
        } else if v <= GEOM_TOL {
            HexClass::Boundary
        } else {
            HexClass::Outside
        }
    }

    /// Euclidean distance from `x` to the hexagon's boundary.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let vs = self.vertices();
        (0..6)
            .map(|k| segment_distance(x, &vs[k], &vs[(k + 1) % 6]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn segment_distance(x: &[f64], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let t = ((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1]);
    let t = t.clamp(0.0, 1.0);
    let px = a[0] + t * d[0] - x[0];
    let py = a[1] + t * d[1] - x[1];
    (px * px + py * py).sqrt()
}

pub fn hex_membership(pt: &[f64], p: ObliqueParams) -> HexClass {
    HexHull::new(p.lambda).classify(pt)
}

/// Sampling density for [`gamma_oblique`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSampling {
    /// Points per axis of the `z` lattice for the four corner cases.
    pub region_samples: usize,
    /// Samples of `t` and of the ray parameter for the four edge cases.
    pub boundary_samples: usize,
    /// Half-width of the `z` window, in units of λ.
    pub window: f64,
}

impl GammaSampling {
    pub fn new(boundary_samples: usize, region_samples: usize) -> Self {
        GammaSampling {
            region_samples,
            boundary_samples,
            window: 7.0,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(1);
    (0..n).map(move |k| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    })
}

/// The four unbounded edges of the region decomposition of `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ray {
    /// `R₁ ∩ R₃`: `z₁ ≥ λ/2`, `z₂ = −(z₁+λ)/√3`, from `−λw`.
    L1,
    /// `R₂ ∩ R₄`: `z₁ ≤ −λ/2`, `z₂ = (−z₁+λ)/√3`, from `λw`.
    L2,
    /// `R₁ ∩ R₄`: `z₁ = λ/2`, `z₂ ≤ −√3λ/2`.
    L3,
    /// `R₂ ∩ R₃`: `z₁ = −λ/2`, `z₂ ≥ √3λ/2`.
    L4,
}

impl Ray {
    /// `(start, unit direction)`.
    pub fn param(self, l: f64) -> ([f64; 2], [f64; 2]) {
        match self {
            Ray::L1 => (scale(-l, W), [SQRT3 / 2.0, -0.5]),
            Ray::L2 => (scale(l, W), [-SQRT3 / 2.0, 0.5]),
            Ray::L3 => ([l / 2.0, -SQRT3 * l / 2.0], [0.0, -1.0]),
            Ray::L4 => ([-l / 2.0, SQRT3 * l / 2.0], [0.0, 1.0]),
        }
    }
}

/// A finite sample of the contact set of the oblique triple.
///
/// Corner cases pair `(±λu, ±λv)` with `z` on a square lattice restricted to
/// the matching region; edge cases pair `(tλu, ±λv)` or `(±λu, tλv)` with `z`
/// on the matching ray.
pub fn gamma_oblique(p: ObliqueParams, boundary_samples: usize, region_samples: usize) -> Result<FiniteGamma> {
    gamma_oblique_with(p, GammaSampling::new(boundary_samples, region_samples))
}

pub fn gamma_oblique_with(p: ObliqueParams, s: GammaSampling) -> Result<FiniteGamma> {
    if s.boundary_samples == 0 || s.region_samples == 0 {
        return Err(Error::InvalidParameter("sample counts must be ≥ 1".into()));
    }
    let l = p.lambda;
    let half = s.window * l;
    let (lu, lv) = (scale(l, U), scale(l, V));
    let (mu, mv) = (scale(-l, U), scale(-l, V));
    let corners = [
        (lu, lv, Region::R3),
        (mu, lv, Region::R2),
        (mu, mv, Region::R4),
        (lu, mv, Region::R1),
    ];
    let mut tuples = Vec::new();
    let lattice: Vec<f64> = linspace(-half, half, s.region_samples).collect();
    for (x, y, r) in corners {
        for &z1 in &lattice {
            for &z2 in &lattice {
                let z = [z1, z2];
                if region_contains(r, &z, l, 0.0) {
                    tuples.push(PointTuple::new(&[&x, &y, &z])?);
                }
            }
        }
    }
    // Edge cases: (free point, fixed point, ray).
    let ts: Vec<f64> = linspace(-1.0, 1.0, s.boundary_samples).collect();
    let rs: Vec<f64> = linspace(0.0, 2.0 * half, s.boundary_samples).collect();
    let edges: [(&dyn Fn(f64) -> ([f64; 2], [f64; 2]), Ray); 4] = [
        (&|t| (scale(t * l, U), lv), Ray::L4),
        (&|t| (mu, scale(t * l, V)), Ray::L2),
        (&|t| (scale(t * l, U), mv), Ray::L3),
        (&|t| (lu, scale(t * l, V)), Ray::L1),
    ];
    for (xy, r) in edges {
        let (start, dir) = r.param(l);
        for &t in &ts {
            let (x, y) = xy(t);
            for &a in &rs {
                let z = add2(start, scale(a, dir));
                tuples.push(PointTuple::new(&[&x, &y, &z])?);
            }
        }
    }
    Ok(FiniteGamma::new(tuples, 0.0, format!("oblique:lambda={l}")))
}

/// A random element of the oblique contact set: one of the eight cases,
/// uniform parameter on edges, `z` uniform in the region within `window·λ`.
pub fn random_gamma_tuple(p: ObliqueParams, window: f64, rng: &mut impl Rng) -> PointTuple {
    let l = p.lambda;
    let half = window * l;
    let (lu, lv) = (scale(l, U), scale(l, V));
    let (mu, mv) = (scale(-l, U), scale(-l, V));
    let case = rng.gen_range(0..8);
    let (x, y, z) = if case < 4 {
        let (x, y, r) = [
            (lu, lv, Region::R3),
            (mu, lv, Region::R2),
            (mu, mv, Region::R4),
            (lu, mv, Region::R1),
        ][case];
        let z = loop {
            let z = [rng.gen_range(-half..=half), rng.gen_range(-half..=half)];
            if region_contains(r, &z, l, 0.0) {
                break z;
            }
        };
        (x, y, z)
    } else {
        let t = rng.gen_range(-1.0..=1.0);
        let a = rng.gen_range(0.0..=2.0 * half);
        let (x, y, r) = match case {
            4 => (scale(t * l, U), lv, Ray::L4),
            5 => (mu, scale(t * l, V), Ray::L2),
            6 => (scale(t * l, U), mv, Ray::L3),
            _ => (lu, scale(t * l, V), Ray::L1),
        };
        let (start, dir) = r.param(l);
        (x, y, add2(start, scale(a, dir)))
    };
    PointTuple::new(&[&x, &y, &z]).expect("three planar points")
}

/// `f(x) + g(y) + h(z) − c(x,y,z)` for the oblique triple, analytically.
pub fn oblique_contact_gap(t: &PointTuple, p: ObliqueParams) -> f64 {
    let [f, g, h] = oblique_triple(p);
    f.eval(t.point(0)) + g.eval(t.point(1)) + h.eval(t.point(2)) - t.cost()
}

/// The λ-segment `{au : |a| ≤ λ}` (resp. `v`) as a sampled cloud; `samples`
/// intervals, endpoints included.
pub fn oblique_segments(p: ObliqueParams, samples: usize) -> Result<(PointCloud, PointCloud)> {
    Ok((
        PointCloud::segment(&U, p.lambda, samples)?,
        PointCloud::segment(&V, p.lambda, samples)?,
    ))
}

/// `h` sampled on `grid` plus the two vertices `±λw` where `h*` is attained,
/// so that conjugates of the cloud are exact on `D_λ`.
pub fn oblique_h_cloud(p: ObliqueParams, grid: &Grid) -> Result<PointCloud> {
    let hf = GridFunction::from_fn(grid, |z| oblique_h(z, p.lambda))?;
    let base = PointCloud::from_grid_function(&hf);
    let extra = [scale(p.lambda, W), scale(-p.lambda, W)];
    PointCloud::from_points(
        2,
        base.iter()
            .map(|(z, v)| (z.to_vec(), v))
            .chain(extra.iter().map(|z| (z.to_vec(), oblique_h(z, p.lambda)))),
    )
}

/// Perpendicular-example parameter: `λ ∈ [0, +∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerpLambda {
    Finite(f64),
    Infinite,
}

impl PerpLambda {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_nan() || lambda < 0.0 {
            return Err(Error::InvalidParameter(format!("lambda must be in [0, ∞], got {lambda}")));
        }
        Ok(if lambda.is_infinite() {
            PerpLambda::Infinite
        } else {
            PerpLambda::Finite(lambda)
        })
    }

    pub fn value(self) -> f64 {
        match self {
            PerpLambda::Finite(l) => l,
            PerpLambda::Infinite => f64::INFINITY,
        }
    }
}

/// `(f, g, h)` of the perpendicular example: indicators of `[−λ,λ]·e₁`,
/// `[−λ,λ]·e₂`, and `h = λ(|z₁| + |z₂|)` (`h = ι_{0}` for λ = ∞).
pub fn perpendicular_triple(lambda: PerpLambda) -> [Descriptor; 3] {
    let l = lambda.value();
    [
        Descriptor::Segment {
            dir: vec![1.0, 0.0],
            lambda: l,
        },
        Descriptor::Segment {
            dir: vec![0.0, 1.0],
            lambda: l,
        },
        Descriptor::PerpH { lambda: l },
    ]
}

pub fn perp_h(z: &[f64], lambda: f64) -> f64 {
    if lambda.is_infinite() {
        if z.iter().all(|c| c.abs() <= GEOM_TOL) {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lambda * (z[0].abs() + z[1].abs())
    }
}

/// `h*`: indicator of `[−λ,λ]²` (zero everywhere for λ = ∞).
pub fn perp_h_star(zs: &[f64], lambda: f64) -> f64 {
    if zs.iter().all(|c| c.abs() <= lambda + GEOM_TOL) {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Contact-set sample of the perpendicular triple for finite λ: `z` on an
/// odd-sized lattice (so the axes are hit), `x = a e₁` with `a ∈ λ·sign(z₁)`
/// (the whole `[−λ,λ]` when `z₁ = 0`), likewise `y`.
pub fn gamma_perp(lambda: f64, samples: usize, window: f64) -> Result<FiniteGamma> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("finite lambda ≥ 0 required, got {lambda}")));
    }
    let n = samples | 1;
    let lattice: Vec<f64> = linspace(-window, window, n).collect();
    let free: Vec<f64> = linspace(-lambda, lambda, n).collect();
    let choices = |c: f64| -> Vec<f64> {
        if c.abs() <= GEOM_TOL {
            free.clone()
        } else {
            vec![lambda * c.signum()]
        }
    };
    let mut tuples = Vec::new();
    for &z1 in &lattice {
        for &z2 in &lattice {
            for a in choices(z1) {
                for b in choices(z2) {
                    tuples.push(PointTuple::new(&[&[a, 0.0], &[0.0, b], &[z1, z2]])?);
                }
            }
        }
    }
    Ok(FiniteGamma::new(tuples, 0.0, format!("perp:lambda={lambda}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImproperVerdict {
    /// `(L, (f ⊕ g)^c(0))` per box.
    pub values: Vec<(f64, f64)>,
    pub improper: bool,
}

/// `(f ⊕ g)^c(0)` for the indicators of the lines `ℝu`, `ℝv` truncated to
/// `[−L, L]`, for each box `L`, with `u = (1,0)` and `v` at angle
/// `arccos(u·v)`.
///
/// The verdict is improper iff every value is at least `0.1·(u·v)·L²` and
/// the values grow strictly with `L`.
pub fn improper_probe(u_dot_v: f64, boxes: &[f64]) -> Result<ImproperVerdict> {
    improper_probe_sampled(u_dot_v, boxes, 64)
}

pub fn improper_probe_sampled(u_dot_v: f64, boxes: &[f64], samples: usize) -> Result<ImproperVerdict> {
    if !(u_dot_v > 0.0 && u_dot_v <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "u·v must lie in (0, 1], got {u_dot_v}"
        )));
    }
    if boxes.is_empty() || boxes.windows(2).any(|w| !(w[1] > w[0])) || boxes[0] <= 0.0 {
        return Err(Error::InvalidParameter("boxes must be positive and increasing".into()));
    }
    let u = [1.0, 0.0];
    let v = [u_dot_v, (1.0 - u_dot_v * u_dot_v).max(0.0).sqrt()];
    let mut values = Vec::with_capacity(boxes.len());
    for &l in boxes {
        let a = PointCloud::segment(&u, l, samples)?;
        let b = PointCloud::segment(&v, l, samples)?;
        let mut best = f64::NEG_INFINITY;
        for (x, _) in a.iter() {
            for (y, _) in b.iter() {
                // c(0, x, y) = ⟨x, y⟩
                best = best.max(dot(x, y));
            }
        }
        values.push((l, best));
    }
    let grows = values.windows(2).all(|w| w[1].1 > w[0].1);
    let big = values.iter().all(|&(l, v)| v >= 0.1 * u_dot_v * l * l);
    Ok(ImproperVerdict {
        values,
        improper: grows && big,
    })
}

/// `H₁(x) = max(|x₁|, |x₂|) + q(x)`.
pub fn h1(x: &[f64]) -> f64 {
    x[0].abs().max(x[1].abs()) + half_sq(x)
}

/// `F₁(x) = max(H₁(x + e₁), H₁(x − e₁)) − 3/2`.
pub fn f1_exact(x: &[f64]) -> f64 {
    let a = h1(&[x[0] + 1.0, x[1]]);
    let b = h1(&[x[0] - 1.0, x[1]]);
    a.max(b) - 1.5
}

/// Output of the non-involutive pipeline.
#[derive(Debug, Clone)]
pub struct NonInvolutive {
    pub h1: GridFunction,
    pub f1: GridFunction,
    pub g1: GridFunction,
    pub m: f64,
    /// `H = H₁ − m`, `F = F₁`, `G = G₁ − m`.
    pub big_h: GridFunction,
    pub big_f: GridFunction,
    pub big_g: GridFunction,
    /// `f = F − q`, `g = G − q`, `h = (H − q)* = m + ι_{‖z‖₁ ≤ 1}`.
    pub f: GridFunction,
    pub g: GridFunction,
    pub h: GridFunction,
    pub report: Report,
}

/// Builds the non-involutive triple on a square grid covering at least `[−3,3]²`
/// and containing the origin as a node.
///
/// `G₁(y) = max over grid x of H₁(x + y) − F₁(x)` is the only discretized
/// step; `H₁` and `F₁` are exact. `h` is the analytic conjugate
/// `(H − q)* = (‖·‖∞ − m)* = m + ι_{ℓ¹ ball}`.
pub fn noninvolutive_triple(grid: &Grid) -> Result<NonInvolutive> {
    if grid.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: grid.dim(),
        });
    }
    for a in grid.axes() {
        if a.lo() > -3.0 + 1e-9 || a.hi() < 3.0 - 1e-9 {
            return Err(Error::InvalidGrid("grid must cover [-3, 3]^2".into()));
        }
    }
    let origin = grid
        .node_index(&[0.0, 0.0])
        .ok_or_else(|| Error::InvalidGrid("origin must be a grid node".into()))?;
    let h1g = GridFunction::from_fn(grid, h1)?;
    let f1g = GridFunction::from_fn(grid, f1_exact)?;
    let nodes: Vec<[f64; 2]> = (0..grid.len())
        .map(|i| {
            let p = grid.node(i);
            [p[0], p[1]]
        })
        .collect();
    let fv = f1g.values();
    let g1_vals: Vec<f64> = nodes
        .par_iter()
        .map(|y| {
            nodes
                .iter()
                .zip(fv)
                .map(|(x, fx)| h1(&[x[0] + y[0], x[1] + y[1]]) - fx)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let g1g = GridFunction::new(grid.clone(), g1_vals)?;
    let m = g1g.values()[origin];
    if !(m > 1e-6) {
        return Err(Error::ConstructionFailed(format!(
            "G₁(0) = {m} is not positive; grid too coarse"
        )));
    }

    let big_h = h1g.map(|_, v| v - m)?;
    let big_f = f1g.clone();
    let big_g = g1g.map(|_, v| v - m)?;
    let f = big_f.map(|x, v| v - half_sq(x))?;
    let g = big_g.map(|x, v| v - half_sq(x))?;
    let h = GridFunction::from_fn(grid, |z| l1_ball(z, 1.0, m))?;

    let mut report = Report::new("noninvolutive");
    report.push(CheckRecord::at_least("m-positive", m, 0.0).with_witness(format!("m={m}")));
    let f0 = fv[origin];
    report.push(CheckRecord::within("F1-zero-at-origin", f0.abs(), 1e-12));
    let sym = (0..grid.len())
        .filter_map(|i| {
            let p = &nodes[i];
            grid.node_index(&[p[0], -p[1]]).map(|j| (fv[i] - fv[j]).abs())
        })
        .fold(0.0, f64::max);
    report.push(CheckRecord::within("F1-symmetric-x2", sym, 1e-12));
    for e in [[1.0, 0.0], [-1.0, 0.0]] {
        if let Some(i) = grid.node_index(&e) {
            report.push(CheckRecord::within(
                format!("G1-at-{}e1", if e[0] > 0.0 { "+" } else { "-" }),
                (g1g.values()[i] - 1.5).abs(),
                1e-12,
            ));
        }
    }
    Ok(NonInvolutive {
        h1: h1g,
        f1: f1g,
        g1: g1g,
        m,
        big_h,
        big_f,
        big_g,
        f,
        g,
        h,
        report,
    })
}

/// `offset + ι_{‖z‖₁ ≤ radius}`.
pub fn l1_ball(z: &[f64], radius: f64, offset: f64) -> f64 {
    if z.iter().map(|c| c.abs()).sum::<f64>() <= radius + GEOM_TOL {
        offset
    } else {
        f64::INFINITY
    }
}

/// `K = max(H, q − m + ε)` and its three checks: the sandwich
/// `H ≤ K ≤ max(H, 0)`, 1-strong convexity, and `K(0) = −m + ε > H(0)`.
/// Any failing check is an error carrying the report text.
pub fn k_epsilon(h: &GridFunction, m: f64, eps: f64) -> Result<(GridFunction, Report)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be > 0, got {eps}")));
    }
    let k = h.map(|x, v| v.max(half_sq(x) - m + eps))?;
    let mut report = Report::new("k-epsilon");
    let mut worst: f64 = 0.0;
    let mut witness = None;
    for (i, (&hv, &kv)) in h.values().iter().zip(k.values()).enumerate() {
        let upper = hv.max(0.0);
        let viol = (hv - kv).max(kv - upper);
        if viol > worst {
            worst = viol;
            witness = Some(i);
        }
    }
    let mut sandwich = CheckRecord::within("sandwich", worst, 1e-12);
    if let Some(i) = witness {
        sandwich = sandwich.with_witness(format!("{:?}", h.grid().node(i)));
    }
    report.push(sandwich);
    let sc = check_strong_convexity(&k, 1.0);
    let mut rec = CheckRecord::flag("strongly-convex", sc.convex);
    rec.deviation = (-sc.worst).max(0.0);
    if let Some(w) = sc.witness {
        rec = rec.with_witness(format!("{w:?}"));
    }
    report.push(rec);
    let origin = h
        .grid()
        .node_index(&vec![0.0; h.dim()])
        .ok_or_else(|| Error::InvalidGrid("origin must be a grid node".into()))?;
    let (k0, h0) = (k.values()[origin], h.values()[origin]);
    let mut r0 = CheckRecord::within("K0", (k0 - (-m + eps)).abs(), 1e-12);
    r0.pass &= k0 > h0;
    report.push(r0.with_witness(format!("K(0)-H(0)={}", k0 - h0)));
    if !report.passed() {
        return Err(Error::ConstructionFailed(report.to_string()));
    }
    Ok((k, report))
}

/// `fᵢ = (N−1)q` for `i = 1..N`.
pub fn quadratic_tuple(n: usize) -> Result<Vec<Descriptor>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("N must be ≥ 2, got {n}")));
    }
    Ok(vec![Descriptor::Quadratic { scale: (n - 1) as f64 }; n])
}

/// Analytic prox of `(N−1)q`: `x / N`.
pub fn quadratic_prox(n: usize, x: &[f64]) -> Vec<f64> {
    x.iter().map(|c| c / n as f64).collect()
}

/// Diagonal `(x,…,x)` tuples over the given points.
pub fn diagonal_gamma(n: usize, points: &[Vec<f64>]) -> Result<FiniteGamma> {
    let tuples = points
        .iter()
        .map(|p| {
            let refs: Vec<&[f64]> = (0..n).map(|_| p.as_slice()).collect();
            PointTuple::new(&refs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FiniteGamma::new(tuples, 0.0, format!("quad:N={n}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> ObliqueParams {
        ObliqueParams::new(1.0).unwrap()
    }

    #[test]
    fn h_examples() {
        assert!((oblique_h(&[0.0, 0.0], 1.0) - 0.5).abs() < 1e-15);
        assert!((oblique_h(&[2.0, 0.0], 1.0) - 3.5).abs() < 1e-12);
        let z = [0.0, 10.0];
        let regs = h_region(&z, p1());
        assert_eq!(regs.len(), 1);
        assert_eq!(regs[0].0, Region::R3);
        assert!((regs[0].1 - (SQRT3 / 2.0 * 10.0 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn h_on_l1_ray() {
        let z = [0.5, -SQRT3 / 2.0];
        let regs: Vec<Region> = h_region(&z, p1()).into_iter().map(|r| r.0).collect();
        assert!(regs.contains(&Region::R1) && regs.contains(&Region::R3));
        for (_, v) in h_region(&z, p1()) {
            assert!((v - 0.5).abs() < 1e-12);
        }
        assert!((oblique_h(&z, 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn origin_is_in_r3_and_r4() {
        let regs: Vec<Region> = h_region(&[0.0, 0.0], p1()).into_iter().map(|r| r.0).collect();
        assert_eq!(regs, vec![Region::R3, Region::R4]);
    }

    #[test]
    fn h_star_examples() {
        assert_eq!(h_star(&[0.0, 0.0], p1()), -0.5);
        assert!((h_star(&W, p1()) - 0.5).abs() < 1e-12);
        assert!(h_star(&[2.0, 0.0], p1()).is_infinite());
        let l = 2.0;
        let p = ObliqueParams::new(l).unwrap();
        assert!((h_star(&scale(-l, W), p) - l * l / 2.0).abs() < 1e-12);
    }

    #[test]
    fn hexagon_classes() {
        assert_eq!(hex_membership(&[0.0, 0.0], p1()), HexClass::Inside);
        assert_eq!(hex_membership(&[2.0, 0.0], p1()), HexClass::Boundary);
        assert_eq!(hex_membership(&[3.0, 0.0], p1()), HexClass::Outside);
        let hex = HexHull::new(1.0);
        assert!((hex.margin(&[0.0, 0.0]) - SQRT3).abs() < 1e-12);
        assert!((hex.margin(&[3.0, 0.0]) - 1.0).abs() < 1e-12);
        for v in hex.vertices() {
            assert_eq!(hex.classify(&v), HexClass::Boundary);
        }
    }

    #[test]
    fn rhombus_vertices_are_on_boundary() {
        let d = RhombusD::new(1.0);
        for v in d.vertices() {
            assert!(d.contains(&v));
            assert!(!d.contains(&scale(1.01, v)));
        }
    }

    #[test]
    fn gamma_oblique_tuples_are_contacts() {
        let g = gamma_oblique(p1(), 11, 21).unwrap();
        assert!(!g.is_empty());
        for t in g.tuples() {
            let gap = oblique_contact_gap(t, p1());
            assert!(gap.abs() <= 1e-9 * t.cost().abs().max(1.0), "{t} gap {gap}");
        }
    }

    #[test]
    fn perp_examples() {
        assert_eq!(perp_h(&[2.0, 3.0], 1.0), 5.0);
        assert_eq!(perp_h_star(&[0.5, -1.0], 1.0), 0.0);
        assert!(perp_h_star(&[1.5, 0.0], 1.0).is_infinite());
        let g = gamma_perp(1.0, 9, 2.0).unwrap();
        for t in g.tuples() {
            let [f, gg, h] = perpendicular_triple(PerpLambda::Finite(1.0));
            let gap = f.eval(t.point(0)) + gg.eval(t.point(1)) + h.eval(t.point(2)) - t.cost();
            assert!(gap.abs() < 1e-12);
        }
    }

    #[test]
    fn improper_probe_values() {
        let v = improper_probe(0.5, &[2.0, 4.0, 8.0]).unwrap();
        assert!(v.improper);
        for (l, val) in v.values {
            assert!((val - 0.5 * l * l).abs() < 1e-9);
        }
        assert!(improper_probe(0.0, &[2.0]).is_err());
        assert!(improper_probe(0.5, &[4.0, 2.0]).is_err());
    }

    #[test]
    fn quadratic_tuple_prox_partitions() {
        for n in 2..=5 {
            let x = [0.3, -1.7];
            let s: Vec<f64> = (0..n)
                .map(|_| quadratic_prox(n, &x))
                .fold(vec![0.0; 2], |a, p| vec![a[0] + p[0], a[1] + p[1]]);
            assert!((s[0] - x[0]).abs() <= 1e-12 && (s[1] - x[1]).abs() <= 1e-12);
        }
        assert!(quadratic_tuple(1).is_err());
    }
}
