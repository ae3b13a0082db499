//! A desk-scale multi-marginal transport oracle.
//!
//! Marginals are uniform on `k ≤ 6` points and `N ≤ 3`; optimal plans are
//! found among the `(k!)^{N−1}` deterministic (Monge) couplings, which for
//! uniform equal-size marginals contain an optimum by Birkhoff's theorem.
//! The canonical direction maximizes `∫c dπ`, matching `Σfᵢ ≥ c`; the
//! minimizing problem is available through [`Direction::Minimize`].

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use itertools::Itertools;
use rayon::prelude::*;

use crate::cloud::Marginal;
use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::grid::format_value;
use crate::report::{sci, CheckRecord, Report};
use crate::tuple::PointTuple;

/// A probability measure on finitely many points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMarginal {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMarginal {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("marginal needs at least one point".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidParameter("zero-dimensional support point".into()));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidValue(format!("non-finite support point {p:?}")));
            }
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidValue(format!("weight {w} must be positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidValue(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMarginal { dim, points, weights })
    }

    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let k = points.len().max(1);
        DiscreteMarginal::new(points, vec![1.0 / k as f64; k])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|x| (x - w).abs() <= 1e-12)
    }

    /// Lines `x1[,x2];weight`; blank lines and `#` comments are skipped.
    pub fn read(r: impl BufRead) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: i + 1, msg };
            let (p, w) = t
                .split_once(';')
                .ok_or_else(|| perr("expected `x1[,x2];weight`".into()))?;
            let coords = p
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| perr(format!("{c:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let w = w.trim().parse::<f64>().map_err(|e| perr(format!("{w:?}: {e}")))?;
            points.push(coords);
            weights.push(w);
        }
        DiscreteMarginal::new(points, weights)
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        for (p, m) in self.points.iter().zip(&self.weights) {
            let mut line = String::new();
            for (k, c) in p.iter().enumerate() {
                if k > 0 {
                    line.push(',');
                }
                format_value(&mut line, *c);
            }
            line.push(';');
            format_value(&mut line, *m);
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

impl FromStr for DiscreteMarginal {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DiscreteMarginal::read(s.as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" | "maximize" => Ok(Direction::Maximize),
            "min" | "minimize" => Ok(Direction::Minimize),
            _ => Err(Error::InvalidParameter(format!("unknown direction {s:?} (max|min)"))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Maximize => "maximize",
            Direction::Minimize => "minimize",
        })
    }
}

/// Atoms `(tuple, mass)` of a coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub atoms: Vec<(PointTuple, f64)>,
}

impl TransportPlan {
    pub fn new(atoms: Vec<(PointTuple, f64)>) -> Self {
        TransportPlan { atoms }
    }

    /// `∫ cost dπ`.
    pub fn value_with(&self, cost: impl Fn(&PointTuple) -> f64) -> f64 {
        self.atoms.iter().map(|(t, m)| m * cost(t)).sum()
    }

    pub fn value(&self) -> f64 {
        self.value_with(PointTuple::cost)
    }

    /// Per marginal, the largest `|πᵢ(x) − μᵢ(x)|` over support points, with
    /// mass at points outside the support counted in full.
    pub fn marginal_residuals(&self, marginals: &[DiscreteMarginal]) -> Vec<f64> {
        marginals
            .iter()
            .enumerate()
            .map(|(i, mu)| {
                let mut pushed = vec![0.0; mu.len()];
                let mut stray = 0.0;
                for (t, m) in &self.atoms {
                    match mu.points().iter().position(|p| p.as_slice() == t.point(i)) {
                        Some(k) => pushed[k] += m,
                        None => stray += m,
                    }
                }
                pushed
                    .iter()
                    .zip(mu.weights())
                    .map(|(a, b)| (a - b).abs())
                    .fold(stray, f64::max)
            })
            .collect()
    }

    /// One line per atom: the tuple as in a gamma dump, then `;mass`.
    pub fn write(&self, mut w: impl Write) -> Result<()> {
        for (t, m) in &self.atoms {
            let mut s = String::new();
            format_value(&mut s, *m);
            writeln!(w, "{t};{s}")?;
        }
        Ok(())
    }

    pub fn to_dump_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii")
    }
}

/// A function usable as a dual potential.
pub trait Potential: Sync {
    fn value(&self, x: &[f64]) -> f64;
}

impl Potential for Descriptor {
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

impl Potential for Marginal {
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x).raw()
    }
}

/// Largest supported `k` and `N`.
pub const MAX_SUPPORT: usize = 6;
pub const MAX_MARGINALS: usize = 3;

fn check_marginals(marginals: &[DiscreteMarginal]) -> Result<usize> {
    if marginals.len() < 2 || marginals.len() > MAX_MARGINALS {
        return Err(Error::Unsupported(format!(
            "N = {} marginals; the oracle handles 2..={MAX_MARGINALS}",
            marginals.len()
        )));
    }
    let k = marginals[0].len();
    let d = marginals[0].dim();
    for m in marginals {
        if m.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: m.dim() });
        }
        if m.len() != k {
            return Err(Error::Unsupported("marginals of unequal cardinality need an LP solver".into()));
        }
        if !m.is_uniform() {
            return Err(Error::Unsupported("non-uniform marginals need an LP solver".into()));
        }
    }
    if k > MAX_SUPPORT {
        return Err(Error::Unsupported(format!("support size {k} > {MAX_SUPPORT}")));
    }
    Ok(k)
}

/// Optimal Monge plan for the correlation cost.
pub fn brute_force_optimal(marginals: &[DiscreteMarginal], dir: Direction) -> Result<(TransportPlan, f64)> {
    brute_force_optimal_with(marginals, dir, PointTuple::cost)
}

/// Optimal Monge plan for an arbitrary cost. Ties go to the
/// lexicographically first permutation tuple.
pub fn brute_force_optimal_with(
    marginals: &[DiscreteMarginal],
    dir: Direction,
    cost: impl Fn(&PointTuple) -> f64 + Sync,
) -> Result<(TransportPlan, f64)> {
    let k = check_marginals(marginals)?;
    let perms: Vec<Vec<usize>> = (0..k).permutations(k).collect();
    let rest = marginals.len() - 1;
    let total = perms.len().pow(rest as u32);
    let sign = match dir {
        Direction::Maximize => 1.0,
        Direction::Minimize => -1.0,
    };
    let build = |code: usize| -> Vec<(PointTuple, f64)> {
        let mut choice = Vec::with_capacity(rest);
        let mut c = code;
        for _ in 0..rest {
            choice.push(c % perms.len());
            c /= perms.len();
        }
        choice.reverse();
        (0..k)
            .map(|j| {
                let mut pts: Vec<&[f64]> = vec![marginals[0].points()[j].as_slice()];
                for (i, &ch) in choice.iter().enumerate() {
                    pts.push(marginals[i + 1].points()[perms[ch][j]].as_slice());
                }
                (PointTuple::new(&pts).expect("equal dimensions"), 1.0 / k as f64)
            })
            .collect()
    };
    let best = (0..total)
        .into_par_iter()
        .map(|code| {
            let v: f64 = build(code).iter().map(|(t, m)| m * cost(t)).sum();
            (sign * v, code)
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    let plan = TransportPlan::new(build(best.1));
    let value = plan.value_with(&cost);
    Ok((plan, value))
}

fn all_support_tuples(marginals: &[DiscreteMarginal]) -> Vec<PointTuple> {
    marginals
        .iter()
        .map(|m| m.points().iter())
        .multi_cartesian_product()
        .map(|ps| {
            let refs: Vec<&[f64]> = ps.iter().map(|p| p.as_slice()).collect();
            PointTuple::new(&refs).expect("equal dimensions")
        })
        .collect()
}

/// `Σᵢ ∫fᵢ dμᵢ − ∫c dπ ≥ −1e−9` for potentials with `Σfᵢ ≥ c` on every
/// support tuple. Infeasible potentials are an error with the worst tuple.
pub fn weak_duality_check<P: Potential>(
    potentials: &[P],
    marginals: &[DiscreteMarginal],
    plan: &TransportPlan,
) -> Result<Report> {
    if potentials.len() != marginals.len() {
        return Err(Error::InvalidParameter(format!(
            "{} potentials for {} marginals",
            potentials.len(),
            marginals.len()
        )));
    }
    let mut worst: Option<(f64, PointTuple)> = None;
    for t in all_support_tuples(marginals) {
        let s: f64 = potentials.iter().enumerate().map(|(i, f)| f.value(t.point(i))).sum();
        let gap = s - t.cost();
        if gap < -1e-9 && worst.as_ref().map_or(true, |w| gap < w.0) {
            worst = Some((gap, t));
        }
    }
    if let Some((g, t)) = worst {
        return Err(Error::LowerBoundViolated {
            slack: g,
            witness: t.to_string(),
        });
    }
    let dual: f64 = potentials
        .iter()
        .zip(marginals)
        .map(|(f, mu)| mu.points().iter().zip(mu.weights()).map(|(p, w)| w * f.value(p)).sum::<f64>())
        .sum();
    let primal = plan.value();
    let gap = dual - primal;
    let mut r = Report::new("weak-duality");
    r.push(
        CheckRecord::at_least("gap-nonnegative", gap, -1e-9)
            .with_witness(format!("dual={} primal={}", sci(dual), sci(primal))),
    );
    let res = plan.marginal_residuals(marginals).into_iter().fold(0.0, f64::max);
    r.push(CheckRecord::within("plan-marginals", res, 1e-9));
    Ok(r)
}

/// `|Σfᵢ(xᵢ) − c(x)| ≤ eps` on every atom of positive mass; each violating
/// atom gets its own row.
pub fn concentration_check<P: Potential>(plan: &TransportPlan, potentials: &[P], eps: f64) -> Result<Report> {
    let mut r = Report::new("concentration");
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for (k, (t, m)) in plan.atoms.iter().enumerate() {
        if *m <= 0.0 {
            continue;
        }
        if t.n() != potentials.len() {
            return Err(Error::InvalidParameter(format!(
                "{} potentials for {}-tuples",
                potentials.len(),
                t.n()
            )));
        }
        let s: f64 = potentials.iter().enumerate().map(|(i, f)| f.value(t.point(i))).sum();
        let slack = (s - t.cost()).abs();
        worst = worst.max(slack);
        if !(slack <= eps) {
            rows.push(CheckRecord::within(format!("atom-{k}"), slack, eps).with_witness(t.to_string()));
        }
    }
    r.push(CheckRecord::within("all-atoms-on-contact-set", worst, eps));
    for row in rows {
        r.push(row);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::quadratic_tuple;

    fn uni(xs: &[f64]) -> DiscreteMarginal {
        DiscreteMarginal::uniform(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn two_point_identity_coupling() {
        let m = uni(&[0.0, 1.0]);
        let (plan, v) = brute_force_optimal(&[m.clone(), m], Direction::Maximize).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert!(plan.atoms.iter().all(|(t, _)| t.point(0) == t.point(1)));
    }

    #[test]
    fn three_marginal_diagonal() {
        let m = uni(&[-1.0, 0.0, 1.0]);
        let ms = vec![m.clone(), m.clone(), m];
        let (plan, v) = brute_force_optimal(&ms, Direction::Maximize).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
        for (t, _) in &plan.atoms {
            assert!(t.point(0) == t.point(1) && t.point(1) == t.point(2));
        }
        assert!(plan.marginal_residuals(&ms).iter().all(|r| *r < 1e-12));
    }

    #[test]
    fn single_point() {
        let m = uni(&[3.0]);
        let (plan, v) = brute_force_optimal(&[m.clone(), m.clone(), m], Direction::Minimize).unwrap();
        assert_eq!(plan.atoms.len(), 1);
        assert!((v - 27.0).abs() < 1e-12);
    }

    #[test]
    fn unsupported_inputs() {
        let a = DiscreteMarginal::new(vec![vec![0.0], vec![1.0]], vec![0.25, 0.75]).unwrap();
        assert!(matches!(
            brute_force_optimal(&[a.clone(), a], Direction::Maximize),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            brute_force_optimal(&[uni(&[0.0]), uni(&[0.0, 1.0])], Direction::Maximize),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn duality_and_concentration_with_quadratic_tuple() {
        let m = uni(&[-1.0, 0.0, 1.0]);
        let ms = vec![m.clone(), m.clone(), m];
        let pots = quadratic_tuple(3).unwrap();
        let (plan, _) = brute_force_optimal(&ms, Direction::Maximize).unwrap();
        let r = weak_duality_check(&pots, &ms, &plan).unwrap();
        assert!(r.passed());
        assert!(r.get("gap-nonnegative").unwrap().deviation.abs() < 1e-12);
        assert!(concentration_check(&plan, &pots, 1e-9).unwrap().passed());

        let anti = TransportPlan::new(
            [(-1.0, 1.0), (0.0, 0.0), (1.0, -1.0)]
                .iter()
                .map(|&(a, b)| (PointTuple::scalars(&[a, a, b]).unwrap(), 1.0 / 3.0))
                .collect(),
        );
        let r = weak_duality_check(&pots, &ms, &anti).unwrap();
        assert!(r.get("gap-nonnegative").unwrap().deviation > 0.5);
        let c = concentration_check(&anti, &pots, 1e-9).unwrap();
        assert!(!c.passed());
        assert_eq!(c.checks.len(), 3);
    }

    #[test]
    fn infeasible_potentials() {
        let m = uni(&[1.0, 2.0]);
        let zero = vec![Descriptor::Constant { value: 0.0 }; 2];
        let (plan, _) = brute_force_optimal(&[m.clone(), m.clone()], Direction::Maximize).unwrap();
        assert!(matches!(
            weak_duality_check(&zero, &[m.clone(), m], &plan),
            Err(Error::LowerBoundViolated { .. })
        ));
    }

    #[test]
    fn empty_plan_is_vacuous() {
        let pots = quadratic_tuple(3).unwrap();
        assert!(concentration_check(&TransportPlan::new(vec![]), &pots, 1e-9).unwrap().passed());
    }

    #[test]
    fn minimize_is_negated_maximize() {
        let a = uni(&[-1.0, 0.5, 2.0]);
        let b = uni(&[0.0, 1.0, -2.0]);
        let ms = [a, b];
        let (_, vmin) = brute_force_optimal(&ms, Direction::Minimize).unwrap();
        let (_, vmax) = brute_force_optimal_with(&ms, Direction::Maximize, |t| -t.cost()).unwrap();
        assert!((vmin + vmax).abs() < 1e-12);
    }

    #[test]
    fn marginal_file_round_trip() {
        let m: DiscreteMarginal = "# comment\n1,2;0.5\n-1,0.25;0.5\n".parse().unwrap();
        assert_eq!(m.dim(), 2);
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let back = DiscreteMarginal::read(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert!(matches!("1;0.5\n2;0.4\n".parse::<DiscreteMarginal>(), Err(Error::InvalidValue(_))));
        assert!(matches!("1 0.5\n".parse::<DiscreteMarginal>(), Err(Error::Parse { line: 1, .. })));
    }
}
