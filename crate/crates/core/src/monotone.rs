//! c-cyclical monotonicity of finite tuple sets.
//!
//! A set Γ is n-c-monotone if for every n tuples `x¹,…,xⁿ ∈ Γ` (repeats
//! allowed) and all permutations `σ₁,…,σ_N` of `{1..n}`,
//!
//! ```text
//! Σⱼ c(x₁^{σ₁(j)}, …, x_N^{σ_N(j)}) ≤ Σⱼ c(xʲ).
//! ```
//!
//! Relabelling `j` shows `σ₁ = id` loses nothing, so only `(n!)^{N−1}`
//! permutation tuples are enumerated per multiset.

use itertools::Itertools;
use rayon::prelude::*;

use crate::contact::FiniteGamma;
use crate::error::{Error, Result};
use crate::gallery::{random_gamma_tuple, ObliqueParams, GammaSampling};
use crate::grid::dot;
use crate::report::{sci, CheckRecord, Report};
use crate::tuple::PointTuple;

/// Slack on the cyclical inequality.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Default cap on multisets × permutation tuples.
pub const DEFAULT_BUDGET: u128 = 1_000_000_000;

#[derive(Debug, Clone)]
pub struct MonotonicityQuery {
    pub gamma: FiniteGamma,
    pub order: usize,
    /// Upper bound on `C(|Γ|+n−1, n)·(n!)^{N−1}`.
    pub budget: u128,
}

impl MonotonicityQuery {
    pub fn new(gamma: FiniteGamma, order: usize, budget: u128) -> Result<Self> {
        if !(2..=4).contains(&order) {
            return Err(Error::InvalidParameter(format!("order n must be in 2..=4, got {order}")));
        }
        if !gamma.is_empty() && !(2..=4).contains(&gamma.n()) {
            return Err(Error::InvalidParameter(format!(
                "number of marginals must be in 2..=4, got {}",
                gamma.n()
            )));
        }
        Ok(MonotonicityQuery { gamma, order, budget })
    }

    /// `C(|Γ|+n−1, n)·(n!)^{N−1}`.
    pub fn work(&self) -> u128 {
        if self.gamma.is_empty() {
            return 0;
        }
        multiset_count(self.gamma.len(), self.order).saturating_mul(perm_count(self.order, self.gamma.n()))
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

fn multiset_count(len: usize, n: usize) -> u128 {
    binomial((len + n - 1) as u128, n as u128)
}

fn perm_count(n: usize, marginals: usize) -> u128 {
    let f: u128 = (1..=n as u128).product();
    f.saturating_pow((marginals - 1) as u32)
}

/// A violating multiset with its permutation tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Indices into Γ, nondecreasing.
    pub multiset: Vec<usize>,
    pub tuples: Vec<PointTuple>,
    /// `σ₁,…,σ_N` (σ₁ is the identity).
    pub perms: Vec<Vec<usize>>,
    /// Permuted minus original cost sum.
    pub excess: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let ts: Vec<String> = self.tuples.iter().map(|t| format!("({t})")).collect();
        let ps: Vec<String> = self.perms.iter().map(|p| p.iter().join("")).collect();
        write!(f, "tuples={} perms={} excess={}", ts.join(" "), ps.join("/"), sci(self.excess))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneVerdict {
    pub monotone: bool,
    pub witness: Option<Violation>,
    /// Multisets examined.
    pub checked: u64,
}

/// Checks one multiset (given by its tuples) over all `(n!)^{N−1}`
/// permutation tuples; returns the largest excess and its permutations.
fn worst_permutation(tuples: &[&PointTuple], perms: &[Vec<usize>]) -> (f64, Vec<usize>) {
    let n = tuples.len();
    let nm = tuples[0].n();
    // gram[i][k][a*n+b] = ⟨x_i^a, x_k^b⟩ for i < k
    let mut gram = vec![vec![Vec::new(); nm]; nm];
    for i in 0..nm {
        for k in i + 1..nm {
            let mut m = vec![0.0; n * n];
            for a in 0..n {
                for b in 0..n {
                    m[a * n + b] = dot(tuples[a].point(i), tuples[b].point(k));
                }
            }
            gram[i][k] = m;
        }
    }
    let base: f64 = tuples.iter().map(|t| t.cost()).sum();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut choice = vec![0usize; nm - 1];
    let total = perms.len().pow((nm - 1) as u32);
    for code in 0..total {
        let mut c = code;
        for slot in choice.iter_mut() {
            *slot = c % perms.len();
            c /= perms.len();
        }
        // σ for marginal i: identity for i = 0
        let sigma = |i: usize, j: usize| if i == 0 { j } else { perms[choice[i - 1]][j] };
        let mut s = 0.0;
        for i in 0..nm {
            for k in i + 1..nm {
                let g = &gram[i][k];
                for j in 0..n {
                    s += g[sigma(i, j) * n + sigma(k, j)];
                }
            }
        }
        let excess = s - base;
        if excess > best.0 {
            best = (excess, choice.clone());
        }
    }
    (best.0, best.1)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    (0..n).permutations(n).collect()
}

/// Lexicographic successor of a nondecreasing index vector over `0..len`.
fn next_multiset(m: &mut [usize], len: usize) -> bool {
    let n = m.len();
    let mut i = n;
    while i > 0 {
        i -= 1;
        if m[i] + 1 < len {
            let v = m[i] + 1;
            for x in m[i..].iter_mut() {
                *x = v;
            }
            return true;
        }
    }
    false
}

const CHUNK: usize = 1 << 14;

/// Scans multisets in lexicographic order; `filter` selects which multisets
/// are examined. The first violation in that order is returned.
fn scan(
    gamma: &FiniteGamma,
    order: usize,
    filter: impl Fn(&[usize]) -> bool + Sync,
) -> MonotoneVerdict {
    let tuples = gamma.tuples();
    if tuples.is_empty() {
        return MonotoneVerdict {
            monotone: true,
            witness: None,
            checked: 0,
        };
    }
    let perms = permutations(order);
    let mut cur = vec![0usize; order];
    let mut more = true;
    let mut checked = 0u64;
    while more {
        let mut chunk = Vec::with_capacity(CHUNK);
        while more && chunk.len() < CHUNK {
            // all-identical multisets admit only equality
            if cur.iter().any(|&i| i != cur[0]) && filter(&cur) {
                chunk.push(cur.clone());
            }
            more = next_multiset(&mut cur, tuples.len());
        }
        checked += chunk.len() as u64;
        let hit = chunk.par_iter().find_map_first(|ms| {
            let ts: Vec<&PointTuple> = ms.iter().map(|&i| &tuples[i]).collect();
            let (excess, choice) = worst_permutation(&ts, &perms);
            (excess > MONOTONE_SLACK).then(|| {
                let mut ps = vec![(0..order).collect::<Vec<_>>()];
                ps.extend(choice.iter().map(|&c| perms[c].clone()));
                Violation {
                    multiset: ms.clone(),
                    tuples: ts.into_iter().cloned().collect(),
                    perms: ps,
                    excess,
                }
            })
        });
        if let Some(v) = hit {
            let pos = chunk.iter().position(|m| *m == v.multiset).unwrap_or(0);
            checked -= (chunk.len() - pos - 1) as u64;
            return MonotoneVerdict {
                monotone: false,
                witness: Some(v),
                checked,
            };
        }
    }
    MonotoneVerdict {
        monotone: true,
        witness: None,
        checked,
    }
}

/// Exhaustive n-c-monotonicity check with a deterministic witness (the
/// lexicographically first violating multiset).
pub fn is_n_c_monotone(q: &MonotonicityQuery) -> Result<MonotoneVerdict> {
    let work = q.work();
    if work > q.budget {
        return Err(Error::BudgetExceeded {
            required: work,
            cap: q.budget,
        });
    }
    Ok(scan(&q.gamma, q.order, |_| true))
}

/// Whether `gamma ∪ {candidate}` stays n-c-monotone for every `2 ≤ n ≤ n_max`.
///
/// `true` means the extension is admissible: unless the candidate was
/// already present, `gamma` is then not maximal. `gamma` itself must be
/// n-c-monotone for all such n, otherwise the probe is an error.
pub fn maximality_probe(gamma: &FiniteGamma, candidate: &PointTuple, n_max: usize, budget: u128) -> Result<bool> {
    if !gamma.is_empty() && (candidate.n() != gamma.n() || candidate.dim() != gamma.dim()) {
        return Err(Error::DimensionMismatch {
            expected: gamma.n() * gamma.dim(),
            got: candidate.n() * candidate.dim(),
        });
    }
    for n in 2..=n_max {
        let v = is_n_c_monotone(&MonotonicityQuery::new(gamma.clone(), n, budget)?)?;
        if !v.monotone {
            return Err(Error::InvalidParameter(format!(
                "base set is not {n}-c-monotone: {}",
                v.witness.map(|w| w.to_string()).unwrap_or_default()
            )));
        }
    }
    let ext = gamma.with_tuple(candidate.clone());
    let Some(ci) = ext.tuples().iter().position(|t| t == candidate) else {
        return Ok(true);
    };
    for n in 2..=n_max {
        let q = MonotonicityQuery::new(ext.clone(), n, budget)?;
        let work = q.work();
        if work > budget {
            return Err(Error::BudgetExceeded { required: work, cap: budget });
        }
        // multisets avoiding the candidate were already checked on gamma
        if !scan(&ext, n, |m| m.contains(&ci)).monotone {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Evidence for the open question of whether the oblique contact set stays
/// c-cyclically monotone after adding `(0,0,0)`.
///
/// For each order `n = 2..=n_max`, `sample_size` random n-tuples are drawn,
/// each made of the origin tuple plus `n − 1` random contact tuples, and
/// checked exhaustively. A report row per order lists the largest excess
/// seen; the verdict fails only on an actual violation.
pub fn conjecture_probe(lambda: f64, sample_size: usize, n_max: usize, seed: u64) -> Result<Report> {
    let p = ObliqueParams::new(lambda)?;
    if !(2..=4).contains(&n_max) {
        return Err(Error::InvalidParameter(format!("n_max must be in 2..=4, got {n_max}")));
    }
    let window = GammaSampling::new(1, 1).window * lambda;
    let origin = PointTuple::new(&[&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]])?;
    let mut report = Report::new("conjecture-probe");
    let mut rng = crate::random::rng(seed);
    for n in 2..=n_max {
        let samples: Vec<Vec<PointTuple>> = (0..sample_size)
            .map(|_| {
                std::iter::once(origin.clone())
                    .chain((1..n).map(|_| random_gamma_tuple(p, window, &mut rng)))
                    .collect()
            })
            .collect();
        let perms = permutations(n);
        let results: Vec<(f64, Option<Violation>)> = samples
            .par_iter()
            .map(|ts| {
                let g = FiniteGamma::new(ts.clone(), 0.0, "probe");
                let v = scan(&g, n, |_| true);
                let worst = if v.monotone {
                    // largest (non-violating) excess among the multisets
                    all_multisets(g.len(), n)
                        .filter(|m| m.iter().any(|&i| i != m[0]))
                        .map(|m| {
                            let r: Vec<&PointTuple> = m.iter().map(|&i| &g.tuples()[i]).collect();
                            worst_permutation(&r, &perms).0
                        })
                        .fold(f64::NEG_INFINITY, f64::max)
                } else {
                    v.witness.as_ref().map_or(0.0, |w| w.excess)
                };
                (worst, v.witness)
            })
            .collect();
        let worst = results.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
        let first = results.into_iter().find_map(|r| r.1);
        let mut rec = CheckRecord::flag(format!("order-{n}"), first.is_none());
        rec.deviation = worst.max(0.0);
        rec.tol = MONOTONE_SLACK;
        rec = match first {
            Some(v) => rec.with_witness(format!("sampled={sample_size} {v}")),
            None => rec.with_witness(format!("sampled={sample_size} none-found-in-budget")),
        };
        report.push(rec);
    }
    Ok(report)
}

fn all_multisets(len: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur = Some(vec![0usize; n]);
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let mut next = out.clone();
        cur = next_multiset(&mut next, len).then_some(next);
        Some(out)
    })
}

/// Draws `count` tuples of the oblique contact set.
pub fn sample_oblique_gamma(lambda: f64, count: usize, seed: u64) -> Result<FiniteGamma> {
    let p = ObliqueParams::new(lambda)?;
    let window = GammaSampling::new(1, 1).window * lambda;
    let mut rng = crate::random::rng(seed);
    let mut tuples = Vec::with_capacity(count);
    while tuples.len() < count {
        tuples.push(random_gamma_tuple(p, window, &mut rng));
    }
    Ok(FiniteGamma::new(tuples, 0.0, format!("oblique:lambda={lambda}")))
}
