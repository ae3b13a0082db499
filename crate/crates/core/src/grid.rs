//! Uniform box grids in one or two dimensions and functions sampled on them.
//!
//! Nodes are stored row-major: in two dimensions the first axis varies
//! slowest, so node `(i, j)` has flat index `i * count[1] + j`.
//!
//! # Dump format
//!
//! ```text
//! d=2;count=3,2;origin=-1,0;step=1,0.5
//! 0.0000000000000000e0
//! inf
//! ...
//! ```
//!
//! One header line followed by one value per node. Finite values are written
//! with 17 significant digits so that a dump/parse cycle is bit-exact.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::extended::ExtReal;

/// Fractional offsets closer than this to an integer are snapped onto the node.
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub origin: f64,
    pub step: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(origin: f64, step: f64, count: usize) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::InvalidGrid(format!("origin {origin} is not finite")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidGrid(format!("step {step} must be positive")));
        }
        if count < 2 {
            return Err(Error::InvalidGrid(format!("count {count} must be at least 2")));
        }
        Ok(Axis { origin, step, count })
    }

    /// Axis covering `[lo, hi]` with the given step; `hi` is rounded to the
    /// nearest whole number of steps.
    pub fn from_range(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidGrid(format!("empty range [{lo}, {hi}]")));
        }
        let count = ((hi - lo) / step).round() as usize + 1;
        Axis::new(lo, step, count)
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn lo(&self) -> f64 {
        self.origin
    }

    pub fn hi(&self) -> f64 {
        self.coord(self.count - 1)
    }

    /// Nearest node index when `x` lies on a node (up to snapping), else `None`.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let t = (x - self.origin) / self.step;
        let r = t.round();
        if (t - r).abs() <= SNAP && r >= 0.0 && (r as usize) < self.count {
            Some(r as usize)
        } else {
            None
        }
    }

    /// Interpolation stencil along this axis: up to two `(index, weight)` pairs.
    fn stencil(&self, x: f64) -> Option<[(usize, f64); 2]> {
        let t = (x - self.origin) / self.step;
        let r = t.round();
        if (t - r).abs() <= SNAP {
            if r < 0.0 || r as usize >= self.count {
                return None;
            }
            return Some([(r as usize, 1.0), (r as usize, 0.0)]);
        }
        if t < 0.0 || t > (self.count - 1) as f64 {
            return None;
        }
        let i = t.floor() as usize;
        let frac = t - i as f64;
        Some([(i, 1.0 - frac), (i + 1, frac)])
    }
}

/// A uniform grid on a box in `ℝ^d`, `d ∈ {1, 2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension {} not supported (1 or 2)",
                axes.len()
            )));
        }
        Ok(Grid { axes })
    }

    pub fn line(lo: f64, hi: f64, step: f64) -> Result<Self> {
        Grid::new(vec![Axis::from_range(lo, hi, step)?])
    }

    pub fn square(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let a = Axis::from_range(lo, hi, step)?;
        Grid::new(vec![a, a])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest step over all axes.
    pub fn max_step(&self) -> f64 {
        self.axes.iter().map(|a| a.step).fold(0.0, f64::max)
    }

    /// Multi-index of a flat node index.
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        match self.axes.len() {
            1 => [idx, 0],
            _ => [idx / self.axes[1].count, idx % self.axes[1].count],
        }
    }

    pub fn ravel(&self, ij: [usize; 2]) -> usize {
        match self.axes.len() {
            1 => ij[0],
            _ => ij[0] * self.axes[1].count + ij[1],
        }
    }

    /// Coordinates of node `idx`, written into `out` (length `d`).
    pub fn node_into(&self, idx: usize, out: &mut [f64]) {
        let ij = self.unravel(idx);
        for (k, a) in self.axes.iter().enumerate() {
            out[k] = a.coord(ij[k]);
        }
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        self.node_into(idx, &mut p);
        p
    }

    /// Flat index of the node at `x`, if `x` is a node.
    pub fn node_index(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut ij = [0usize; 2];
        for (k, a) in self.axes.iter().enumerate() {
            ij[k] = a.node_index(x[k])?;
        }
        Some(self.ravel(ij))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .axes
                .iter()
                .zip(x)
                .all(|(a, &v)| v >= a.lo() - SNAP * a.step && v <= a.hi() + SNAP * a.step)
    }

    /// Distance from `x` to the nearest face of the box (negative outside).
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        self.axes
            .iter()
            .zip(x)
            .map(|(a, &v)| (v - a.lo()).min(a.hi() - v))
            .fold(f64::INFINITY, f64::min)
    }

    /// Header line of the dump format.
    pub fn header(&self) -> String {
        let join = |f: &dyn Fn(&Axis) -> String| {
            self.axes.iter().map(f).collect::<Vec<_>>().join(",")
        };
        format!(
            "d={};count={};origin={};step={}",
            self.dim(),
            join(&|a| a.count.to_string()),
            join(&|a| format!("{}", a.origin)),
            join(&|a| format!("{}", a.step)),
        )
    }

    fn parse_header(line: &str) -> Result<Grid> {
        let bad = |msg: &str| Error::Parse {
            line: 1,
            msg: msg.to_string(),
        };
        let mut d = None;
        let mut count = None;
        let mut origin = None;
        let mut step = None;
        for field in line.trim().split(';') {
            let (key, val) = field.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let nums = |v: &str| -> Result<Vec<f64>> {
                v.split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| bad("bad number")))
                    .collect()
            };
            match key.trim() {
                "d" => d = Some(val.trim().parse::<usize>().map_err(|_| bad("bad d"))?),
                "count" => {
                    count = Some(
                        val.split(',')
                            .map(|t| t.trim().parse::<usize>().map_err(|_| bad("bad count")))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "origin" => origin = Some(nums(val)?),
                "step" => step = Some(nums(val)?),
                _ => return Err(bad("unknown header key")),
            }
        }
        let (d, count, origin, step) = match (d, count, origin, step) {
            (Some(d), Some(c), Some(o), Some(s)) => (d, c, o, s),
            _ => return Err(bad("incomplete header")),
        };
        if count.len() != d || origin.len() != d || step.len() != d {
            return Err(bad("header arity does not match d"));
        }
        let axes = (0..d)
            .map(|k| Axis::new(origin[k], step[k], count[k]))
            .collect::<Result<Vec<_>>>()?;
        Grid::new(axes)
    }
}

/// A function `ℝ^d → ℝ ∪ {+∞}` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    /// Values must be finite or `+∞`.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidValue(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        for &v in &values {
            ExtReal::new(v)?;
        }
        Ok(GridFunction { grid, values })
    }

    /// Samples `f` at every node. `f` must not return NaN or `-∞`.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let mut p = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.node_into(i, &mut p);
                f(&p)
            })
            .collect();
        GridFunction::new(grid.clone(), values)
    }

    pub fn constant(grid: &Grid, v: f64) -> Result<Self> {
        GridFunction::new(grid.clone(), vec![v; grid.len()])
    }

    /// Indicator of the single node nearest to `x`: `0` there, `+∞` elsewhere.
    pub fn point_indicator(grid: &Grid, x: &[f64]) -> Result<Self> {
        let idx = grid
            .node_index(x)
            .ok_or_else(|| Error::InvalidValue(format!("{x:?} is not a grid node")))?;
        let mut values = vec![f64::INFINITY; grid.len()];
        values[idx] = 0.0;
        GridFunction::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Raw values with `+∞` encoded as `f64::INFINITY`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> ExtReal {
        ExtReal::new(self.values[idx]).expect("validated at construction")
    }

    /// True iff some node value is finite.
    pub fn is_proper(&self) -> bool {
        self.values.iter().any(|v| v.is_finite())
    }

    pub fn finite_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_finite()).count()
    }

    /// Minimum finite value and its node index (smallest index on ties).
    pub fn argmin(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if v.is_finite() && best.map_or(true, |(_, b)| v < b) {
                best = Some((i, v));
            }
        }
        best
    }

    /// Node-wise map; `f` receives the node and the raw value.
    pub fn map(&self, mut f: impl FnMut(&[f64], f64) -> f64) -> Result<Self> {
        let mut p = vec![0.0; self.dim()];
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                self.grid.node_into(i, &mut p);
                f(&p, v)
            })
            .collect();
        GridFunction::new(self.grid.clone(), values)
    }

    /// `f + λ·q` node-wise, with `q(x) = ½|x|²`.
    pub fn add_quadratic(&self, lambda: f64) -> Result<Self> {
        self.map(|x, v| v + lambda * half_sq(x))
    }

    /// Node-wise sum with a function on the same grid.
    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        GridFunction::new(self.grid.clone(), values)
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("functions live on different grids".into()));
        }
        Ok(())
    }

    /// Multilinear interpolation. Outside the box, or when any node of the
    /// interpolation stencil is `+∞`, the result is `+∞`. At a node the stored
    /// value is returned exactly.
    pub fn eval_interp(&self, x: &[f64]) -> Result<ExtReal> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(ExtReal::new(self.interp_raw(x)).expect("interpolation of valid values"))
    }

    /// Raw-valued interpolation used in inner loops; the caller guarantees
    /// `x.len() == d`.
    pub fn interp_raw(&self, x: &[f64]) -> f64 {
        let axes = self.grid.axes();
        let s0 = match axes[0].stencil(x[0]) {
            Some(s) => s,
            None => return f64::INFINITY,
        };
        if axes.len() == 1 {
            return combine(s0.iter().map(|&(i, w)| (w, self.values[i])));
        }
        let s1 = match axes[1].stencil(x[1]) {
            Some(s) => s,
            None => return f64::INFINITY,
        };
        let n1 = axes[1].count;
        combine(s0.iter().flat_map(|&(i, wi)| {
            s1.iter()
                .map(move |&(j, wj)| (wi * wj, self.values[i * n1 + j]))
        }))
    }

    /// Writes the grid dump format.
    pub fn write_dump(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", self.grid.header())?;
        let mut buf = String::new();
        for &v in &self.values {
            buf.clear();
            format_value(&mut buf, v);
            writeln!(w, "{buf}")?;
        }
        Ok(())
    }

    pub fn to_dump_string(&self) -> String {
        let mut out = Vec::new();
        self.write_dump(&mut out).expect("writing to a Vec cannot fail");
        String::from_utf8(out).expect("dump is ASCII")
    }

    pub fn read_dump(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })??;
        let grid = Grid::parse_header(&header)?;
        let mut values = Vec::with_capacity(grid.len());
        for (k, line) in lines.enumerate() {
            let line = line?;
            let tok = line.trim();
            if tok.is_empty() {
                continue;
            }
            let v = if tok == "inf" {
                f64::INFINITY
            } else {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: k + 2,
                    msg: format!("bad value `{tok}`"),
                })?
            };
            values.push(v);
        }
        GridFunction::new(grid, values)
    }
}

fn combine(terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut acc = 0.0;
    for (w, v) in terms {
        if w == 0.0 {
            continue;
        }
        if !v.is_finite() {
            return f64::INFINITY;
        }
        acc += w * v;
    }
    acc
}

/// Writes `+∞` as `inf`, finite values with 17 significant digits.
pub fn format_value(buf: &mut String, v: f64) {
    if v.is_finite() {
        write!(buf, "{v:.16e}").expect("writing to a String cannot fail");
    } else {
        buf.push_str("inf");
    }
}

/// `q(x) = ½|x|²`.
pub fn half_sq(x: &[f64]) -> f64 {
    0.5 * x.iter().map(|v| v * v).sum::<f64>()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
