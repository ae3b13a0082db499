//! Point tuples `x = (x₁,…,x_N) ∈ (ℝ^d)^N` and the correlation cost.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::dot;

/// One element of `(ℝ^d)^N`, stored flat: point `i` occupies
/// `coords[i*d .. (i+1)*d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTuple {
    dim: usize,
    coords: Vec<f64>,
}

impl PointTuple {
    pub fn new(points: &[&[f64]]) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.len());
        if points.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a tuple needs N ≥ 2 points, got {}",
                points.len()
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("points must have dimension ≥ 1".into()));
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Ok(PointTuple { dim, coords })
    }

    /// From flat coordinates; `coords.len()` must be a multiple of `dim`.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 || coords.len() / dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not form ≥ 2 points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(PointTuple { dim, coords })
    }

    /// Scalar tuple (`d = 1`).
    pub fn scalars(xs: &[f64]) -> Result<Self> {
        PointTuple::from_flat(1, xs.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    /// `S(x) = Σ xᵢ`.
    pub fn sum(&self) -> Vec<f64> {
        sum_points(&self.coords, self.dim)
    }

    /// `Σ_{j≠i} x_j`.
    pub fn sum_except(&self, i: usize) -> Vec<f64> {
        let mut s = self.sum();
        for (sk, xk) in s.iter_mut().zip(self.point(i)) {
            *sk -= xk;
        }
        s
    }

    pub fn cost(&self) -> f64 {
        cost_flat(&self.coords, self.dim)
    }
}

impl fmt::Display for PointTuple {
    /// FiniteGamma line format: points separated by `;`, coordinates by `,`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.points().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            for (k, v) in p.iter().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{v}")?;
            }
        }
        Ok(())
    }
}

/// `c(x) = Σ_{i<j} ⟨xᵢ, xⱼ⟩`.
pub fn cost_c(t: &PointTuple) -> f64 {
    t.cost()
}

/// Cost of a flat tuple of points of dimension `dim`.
pub fn cost_flat(coords: &[f64], dim: usize) -> f64 {
    let n = coords.len() / dim;
    let mut acc = 0.0;
    for i in 0..n {
        let xi = &coords[i * dim..(i + 1) * dim];
        for j in i + 1..n {
            acc += dot(xi, &coords[j * dim..(j + 1) * dim]);
        }
    }
    acc
}

pub fn sum_points(coords: &[f64], dim: usize) -> Vec<f64> {
    let mut s = vec![0.0; dim];
    for p in coords.chunks_exact(dim) {
        for (sk, v) in s.iter_mut().zip(p) {
            *sk += v;
        }
    }
    s
}

/// Parses one FiniteGamma line (`x1;x2;...;xN`, coordinates comma-separated).
pub fn parse_tuple_line(line: &str) -> Result<PointTuple> {
    let mut dim = None;
    let mut coords = Vec::new();
    for part in line.trim().split(';') {
        let p: Vec<f64> = part
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidValue(format!("bad coordinate `{t}`")))
            })
            .collect::<Result<_>>()?;
        match dim {
            None => dim = Some(p.len()),
            Some(d) if d != p.len() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                })
            }
            _ => {}
        }
        coords.extend(p);
    }
    PointTuple::from_flat(dim.unwrap_or(0), coords)
}
