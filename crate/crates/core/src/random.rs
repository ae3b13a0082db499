//! Seeded generators for random test inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{Grid, GridFunction};

/// The crate-wide deterministic RNG.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Convex piecewise-linear `x ↦ max_k a_k·x + b_k` on the line.
#[derive(Debug, Clone, PartialEq)]
pub struct PlConvex {
    pub slopes: Vec<f64>,
    pub intercepts: Vec<f64>,
}

impl PlConvex {
    /// `pieces` affine pieces with slopes in `[-max_slope, max_slope]` and
    /// intercepts in `[-1, 1]`. With `quantum = Some(h)` slopes are rounded to
    /// multiples of `h`, which keeps conjugates exact on dual grids of step `h`.
    pub fn random(rng: &mut impl Rng, pieces: usize, max_slope: f64, quantum: Option<f64>) -> Self {
        let mut slopes = Vec::with_capacity(pieces.max(1));
        let mut intercepts = Vec::with_capacity(pieces.max(1));
        for _ in 0..pieces.max(1) {
            let mut a = rng.gen_range(-max_slope..=max_slope);
            if let Some(h) = quantum {
                a = (a / h).round() * h;
            }
            slopes.push(a);
            intercepts.push(rng.gen_range(-1.0..=1.0));
        }
        PlConvex { slopes, intercepts }
    }

    /// `pieces` pieces whose breakpoints are multiples of `knot_step` inside
    /// `[-knot_range, knot_range]` and whose slopes are multiples of
    /// `slope_step` in `[-max_slope, max_slope]`. Node-restricted transforms
    /// of such functions are exact on grids with those steps.
    pub fn aligned(
        rng: &mut impl Rng,
        pieces: usize,
        max_slope: f64,
        slope_step: f64,
        knot_range: f64,
        knot_step: f64,
    ) -> Self {
        let pieces = pieces.max(1);
        let smax = (max_slope / slope_step).floor() as i64;
        let kmax = (knot_range / knot_step).floor() as i64;
        let mut slopes: Vec<i64> = (0..pieces).map(|_| rng.gen_range(-smax..=smax)).collect();
        let mut knots: Vec<i64> = (1..pieces).map(|_| rng.gen_range(-kmax..=kmax)).collect();
        slopes.sort_unstable();
        slopes.dedup();
        knots.sort_unstable();
        knots.dedup();
        let k = slopes.len().min(knots.len() + 1);
        slopes.truncate(k);
        knots.truncate(k - 1);
        let slopes: Vec<f64> = slopes.iter().map(|&a| a as f64 * slope_step).collect();
        let mut intercepts = vec![rng.gen_range(-1.0..=1.0)];
        for i in 1..k {
            // continuity at the knot between pieces i−1 and i
            let x = knots[i - 1] as f64 * knot_step;
            intercepts.push(intercepts[i - 1] + (slopes[i - 1] - slopes[i]) * x);
        }
        PlConvex { slopes, intercepts }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.slopes
            .iter()
            .zip(&self.intercepts)
            .map(|(a, b)| a * x + b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.slopes.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Samples on a 1-D grid (`+∞` outside the grid box by convention).
    pub fn sample(&self, grid: &Grid) -> Result<GridFunction> {
        GridFunction::from_fn(grid, |x| self.eval(x[0]))
    }
}

/// Sum of `pieces` random 1-D convex PL functions, one per axis, sampled on a 2-D grid.
pub fn random_pl_2d(rng: &mut impl Rng, grid: &Grid, pieces: usize, max_slope: f64) -> Result<GridFunction> {
    let a = PlConvex::random(rng, pieces, max_slope, None);
    let b = PlConvex::random(rng, pieces, max_slope, None);
    let (c1, c2) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
    GridFunction::from_fn(grid, |x| a.eval(x[0]) + b.eval(x[1]) + (c1 * x[0] + c2 * x[1]).abs())
}
