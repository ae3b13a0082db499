//! Finite candidate sets.
//!
//! Every supremum in this crate runs over finitely many points. A
//! [`PointCloud`] is that finite set together with the (finite) function
//! values on it; everything off the cloud is `+∞`. Grid functions convert to
//! clouds by dropping their infinite nodes, and analytic segment indicators by
//! sampling the segment.

use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::grid::{GridFunction, Grid};

/// Points closer than this (max-norm) are considered equal by [`PointCloud::eval_exact`].
const MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    values: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() != dim * values.len() {
            return Err(Error::InvalidValue(format!(
                "{} coordinates for {} values of dimension {dim}",
                coords.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!("cloud values must be finite, got {v}")));
        }
        Ok(PointCloud { dim, coords, values })
    }

    pub fn from_points(dim: usize, points: impl IntoIterator<Item = (Vec<f64>, f64)>) -> Result<Self> {
        let mut coords = Vec::new();
        let mut values = Vec::new();
        for (p, v) in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend(p);
            values.push(v);
        }
        PointCloud::new(dim, coords, values)
    }

    /// Finite nodes of a grid function, in row-major order.
    pub fn from_grid_function(f: &GridFunction) -> Self {
        let grid = f.grid();
        let dim = grid.dim();
        let mut coords = Vec::with_capacity(dim * f.finite_count());
        let mut values = Vec::with_capacity(f.finite_count());
        let mut p = vec![0.0; dim];
        for (i, &v) in f.values().iter().enumerate() {
            if v.is_finite() {
                grid.node_into(i, &mut p);
                coords.extend_from_slice(&p);
                values.push(v);
            }
        }
        PointCloud { dim, coords, values }
    }

    /// Indicator of the segment `{a·dir : |a| ≤ λ}` sampled at `samples + 1`
    /// equally spaced parameters, endpoints included.
    pub fn segment(dir: &[f64], lambda: f64, samples: usize) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidParameter("segment needs at least one interval".into()));
        }
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("segment half-length {lambda} < 0")));
        }
        let dim = dir.len();
        let mut coords = Vec::with_capacity(dim * (samples + 1));
        for k in 0..=samples {
            let a = -lambda + 2.0 * lambda * k as f64 / samples as f64;
            coords.extend(dir.iter().map(|d| a * d));
        }
        PointCloud::new(dim, coords, vec![0.0; samples + 1])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.coords.chunks_exact(self.dim).zip(self.values.iter().copied())
    }

    /// Value at `x` if `x` is (up to 1e-12) a cloud point, else `+∞`.
    pub fn eval_exact(&self, x: &[f64]) -> ExtReal {
        self.iter()
            .find(|(p, _)| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= MATCH_TOL))
            .map_or(ExtReal::INFINITY, |(_, v)| ExtReal::finite(v))
    }
}

/// A marginal function: either a grid sample (evaluated by interpolation) or
/// an explicit finite cloud.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    Grid(GridFunction),
    Cloud(PointCloud),
}

impl Marginal {
    pub fn dim(&self) -> usize {
        match self {
            Marginal::Grid(f) => f.dim(),
            Marginal::Cloud(c) => c.dim(),
        }
    }

    pub fn is_proper(&self) -> bool {
        match self {
            Marginal::Grid(f) => f.is_proper(),
            Marginal::Cloud(c) => !c.is_empty(),
        }
    }

    /// The finite candidate set over which suprema run.
    pub fn candidates(&self) -> PointCloud {
        match self {
            Marginal::Grid(f) => PointCloud::from_grid_function(f),
            Marginal::Cloud(c) => c.clone(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> ExtReal {
        match self {
            Marginal::Grid(f) => ExtReal::new(f.interp_raw(x)).expect("valid interpolation"),
            Marginal::Cloud(c) => c.eval_exact(x),
        }
    }

    pub fn as_grid(&self) -> Option<&GridFunction> {
        match self {
            Marginal::Grid(f) => Some(f),
            Marginal::Cloud(_) => None,
        }
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.as_grid().map(GridFunction::grid)
    }
}

impl From<GridFunction> for Marginal {
    fn from(f: GridFunction) -> Self {
        Marginal::Grid(f)
    }
}

impl From<PointCloud> for Marginal {
    fn from(c: PointCloud) -> Self {
        Marginal::Cloud(c)
    }
}
