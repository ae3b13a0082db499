//! Analytic function families addressable by name.
//!
//! Text syntax is `name[:key=value,key=value]`, for example `quad:scale=2`,
//! `abs`, `ind0`, `seg:lambda=1,dir=1/0`, `oblique-h:lambda=1`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gallery;
use crate::grid::{half_sq, Grid, GridFunction};
use crate::random::{rng, PlConvex};

/// Tolerance for point and segment indicator membership.
const MEMBER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Descriptor {
    /// `scale · q`.
    Quadratic { scale: f64 },
    /// `Σ|x_k|`.
    Abs,
    /// Indicator of `{0}`.
    ZeroIndicator,
    /// Indicator of `{a·dir : |a| ≤ λ}`; `λ = ∞` gives the whole line.
    Segment { dir: Vec<f64>, lambda: f64 },
    ObliqueH { lambda: f64 },
    ObliqueHStar { lambda: f64 },
    PerpH { lambda: f64 },
    PerpHStar { lambda: f64 },
    /// `max(|x₁|, |x₂|) + q`.
    MaxNormPlusQ,
    /// `offset + ι_{‖x‖₁ ≤ radius}`.
    L1Ball { radius: f64, offset: f64 },
    Constant { value: f64 },
    /// Seeded random convex piecewise-linear function of the first coordinate.
    RandomPl { seed: u64, pieces: usize, slope: f64 },
}

impl Descriptor {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Descriptor::Quadratic { scale } => scale * half_sq(x),
            Descriptor::Abs => x.iter().map(|c| c.abs()).sum(),
            Descriptor::ZeroIndicator => {
                if x.iter().all(|c| c.abs() <= MEMBER_TOL) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Descriptor::Segment { dir, lambda } => segment_indicator(x, dir, *lambda),
            Descriptor::ObliqueH { lambda } => gallery::oblique_h(x, *lambda),
            Descriptor::ObliqueHStar { lambda } => {
                gallery::h_star(x, gallery::ObliqueParams { lambda: *lambda })
            }
            Descriptor::PerpH { lambda } => gallery::perp_h(x, *lambda),
            Descriptor::PerpHStar { lambda } => gallery::perp_h_star(x, *lambda),
            Descriptor::MaxNormPlusQ => gallery::h1(x),
            Descriptor::L1Ball { radius, offset } => gallery::l1_ball(x, *radius, *offset),
            Descriptor::Constant { value } => *value,
            Descriptor::RandomPl { seed, pieces, slope } => {
                PlConvex::random(&mut rng(*seed), *pieces, *slope, None).eval(x[0])
            }
        }
    }

    /// Dimension the family requires, if fixed.
    pub fn required_dim(&self) -> Option<usize> {
        match self {
            Descriptor::Segment { dir, .. } => Some(dir.len()),
            Descriptor::ObliqueH { .. }
            | Descriptor::ObliqueHStar { .. }
            | Descriptor::PerpH { .. }
            | Descriptor::PerpHStar { .. }
            | Descriptor::MaxNormPlusQ => Some(2),
            Descriptor::RandomPl { .. } => Some(1),
            _ => None,
        }
    }
}

fn segment_indicator(x: &[f64], dir: &[f64], lambda: f64) -> f64 {
    let dd: f64 = dir.iter().map(|d| d * d).sum();
    let a = x.iter().zip(dir).map(|(p, d)| p * d).sum::<f64>() / dd;
    let off = x
        .iter()
        .zip(dir)
        .map(|(p, d)| (p - a * d).abs())
        .fold(0.0, f64::max);
    if off <= MEMBER_TOL && a.abs() <= lambda + MEMBER_TOL {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `desc` evaluated exactly at every node of `grid`.
pub fn sample_analytic(desc: &Descriptor, grid: &Grid) -> Result<GridFunction> {
    if let Some(d) = desc.required_dim() {
        if d != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: grid.dim(),
            });
        }
    }
    if let Descriptor::RandomPl { seed, pieces, slope } = desc {
        return PlConvex::random(&mut rng(*seed), *pieces, *slope, None).sample(grid);
    }
    GridFunction::from_fn(grid, |x| desc.eval(x))
}

struct Params<'a> {
    name: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Params<'a> {
    fn parse(s: &'a str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut pairs = Vec::new();
        for kv in rest.split(',').filter(|t| !t.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::UnknownDescriptor(format!("`{s}`: expected key=value, got `{kv}`")))?;
            pairs.push((k.trim(), v.trim()));
        }
        Ok(Params {
            name: name.trim(),
            pairs,
        })
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_f64(v).map_err(|_| {
                Error::UnknownDescriptor(format!("{}: bad value `{v}` for `{key}`", self.name))
            }),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.pairs.iter().find(|(k, _)| !allowed.contains(k)) {
            Some((k, _)) => Err(Error::UnknownDescriptor(format!(
                "{}: unknown parameter `{k}`",
                self.name
            ))),
            None => Ok(()),
        }
    }
}

fn parse_f64(v: &str) -> std::result::Result<f64, ()> {
    match v {
        "inf" | "+inf" => Ok(f64::INFINITY),
        _ => v.parse::<f64>().map_err(|_| ()).and_then(|x| if x.is_nan() { Err(()) } else { Ok(x) }),
    }
}

impl FromStr for Descriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let p = Params::parse(s)?;
        let lambda = |p: &Params| -> Result<f64> {
            p.check_keys(&["lambda"])?;
            p.f64_or("lambda", 1.0)
        };
        let d = match p.name {
            "quad" | "q" => {
                p.check_keys(&["scale"])?;
                Descriptor::Quadratic {
                    scale: p.f64_or("scale", 1.0)?,
                }
            }
            "abs" => {
                p.check_keys(&[])?;
                Descriptor::Abs
            }
            "ind0" => {
                p.check_keys(&[])?;
                Descriptor::ZeroIndicator
            }
            "seg" => {
                p.check_keys(&["lambda", "dir"])?;
                let dir = match p.raw("dir") {
                    None => vec![1.0],
                    Some(v) => v
                        .split('/')
                        .map(|t| parse_f64(t.trim()))
                        .collect::<std::result::Result<Vec<f64>, ()>>()
                        .map_err(|_| Error::UnknownDescriptor(format!("seg: bad dir `{v}`")))?,
                };
                if dir.iter().all(|d| *d == 0.0) || dir.len() > 2 {
                    return Err(Error::UnknownDescriptor(format!("seg: bad dir {dir:?}")));
                }
                Descriptor::Segment {
                    dir,
                    lambda: p.f64_or("lambda", 1.0)?,
                }
            }
            "oblique-h" => Descriptor::ObliqueH { lambda: lambda(&p)? },
            "oblique-hstar" => Descriptor::ObliqueHStar { lambda: lambda(&p)? },
            "perp-h" => Descriptor::PerpH { lambda: lambda(&p)? },
            "perp-hstar" => Descriptor::PerpHStar { lambda: lambda(&p)? },
            "maxq" => {
                p.check_keys(&[])?;
                Descriptor::MaxNormPlusQ
            }
            "l1ball" => {
                p.check_keys(&["radius", "offset"])?;
                Descriptor::L1Ball {
                    radius: p.f64_or("radius", 1.0)?,
                    offset: p.f64_or("offset", 0.0)?,
                }
            }
            "const" => {
                p.check_keys(&["value"])?;
                let value = p.f64_or("value", 0.0)?;
                if value.is_infinite() {
                    return Err(Error::UnknownDescriptor("const: value must be finite".into()));
                }
                Descriptor::Constant { value }
            }
            "pl" => {
                p.check_keys(&["seed", "pieces", "slope"])?;
                let int = |k: &str, d: u64| -> Result<u64> {
                    p.raw(k).map_or(Ok(d), |v| {
                        v.parse()
                            .map_err(|_| Error::UnknownDescriptor(format!("pl: bad `{k}` `{v}`")))
                    })
                };
                Descriptor::RandomPl {
                    seed: int("seed", 0)?,
                    pieces: int("pieces", 4)? as usize,
                    slope: p.f64_or("slope", 2.0)?,
                }
            }
            other => return Err(Error::UnknownDescriptor(other.to_string())),
        };
        Ok(d)
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Descriptor::Quadratic { scale } => write!(f, "quad:scale={scale}"),
            Descriptor::Abs => f.write_str("abs"),
            Descriptor::ZeroIndicator => f.write_str("ind0"),
            Descriptor::Segment { dir, lambda } => {
                let d: Vec<String> = dir.iter().map(|x| x.to_string()).collect();
                write!(f, "seg:lambda={lambda},dir={}", d.join("/"))
            }
            Descriptor::ObliqueH { lambda } => write!(f, "oblique-h:lambda={lambda}"),
            Descriptor::ObliqueHStar { lambda } => write!(f, "oblique-hstar:lambda={lambda}"),
            Descriptor::PerpH { lambda } => write!(f, "perp-h:lambda={lambda}"),
            Descriptor::PerpHStar { lambda } => write!(f, "perp-hstar:lambda={lambda}"),
            Descriptor::MaxNormPlusQ => f.write_str("maxq"),
            Descriptor::L1Ball { radius, offset } => write!(f, "l1ball:radius={radius},offset={offset}"),
            Descriptor::Constant { value } => write!(f, "const:value={value}"),
            Descriptor::RandomPl { seed, pieces, slope } => {
                write!(f, "pl:seed={seed},pieces={pieces},slope={slope}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_on_three_nodes() {
        let g = Grid::line(-1.0, 1.0, 1.0).unwrap();
        let f = sample_analytic(&"quad".parse().unwrap(), &g).unwrap();
        assert_eq!(f.values(), &[0.5, 0.0, 0.5]);
        let a = sample_analytic(&Descriptor::Abs, &g).unwrap();
        assert_eq!(a.values(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn segment_indicator_on_square() {
        let g = Grid::square(-2.0, 2.0, 0.5).unwrap();
        let f = sample_analytic(&"seg:lambda=1,dir=1/0".parse().unwrap(), &g).unwrap();
        for i in 0..g.len() {
            let p = g.node(i);
            let on = p[1] == 0.0 && p[0].abs() <= 1.0;
            assert_eq!(f.values()[i] == 0.0, on, "{p:?}");
            assert_eq!(f.values()[i].is_infinite(), !on);
        }
    }

    #[test]
    fn unknown_names_are_errors() {
        assert!(matches!("sinc".parse::<Descriptor>(), Err(Error::UnknownDescriptor(_))));
        assert!(matches!("quad:width=2".parse::<Descriptor>(), Err(Error::UnknownDescriptor(_))));
        assert!("quad:scale=x".parse::<Descriptor>().is_err());
    }

    #[test]
    fn display_roundtrip() {
        for s in [
            "quad:scale=2",
            "abs",
            "ind0",
            "seg:lambda=1,dir=0.5/2",
            "oblique-h:lambda=1",
            "perp-hstar:lambda=2",
            "maxq",
            "l1ball:radius=1,offset=0.5",
            "const:value=-1",
            "pl:seed=3,pieces=5,slope=1.5",
        ] {
            let d: Descriptor = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
            assert_eq!(d.to_string().parse::<Descriptor>().unwrap(), d);
        }
    }

    #[test]
    fn dimension_is_checked() {
        let g = Grid::line(-1.0, 1.0, 0.5).unwrap();
        assert!(sample_analytic(&Descriptor::ObliqueH { lambda: 1.0 }, &g).is_err());
    }
}
