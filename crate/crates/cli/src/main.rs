//! `multiconj` command-line front end.
//!
//! Every subcommand prints a flat key=value run report on stdout:
//! `subcommand=…`, the echoed inputs as `input.<key>=…`, the check rows, and
//! a final `exit=pass|fail`. Data artifacts (grid dumps, Γ files, plans) go
//! to `--emit`. Exit status: 0 pass, 1 check failure, 2 usage or input error.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use multiconj::contact::{contact_set, sum_set, FiniteGamma};
use multiconj::descriptor::{sample_analytic, Descriptor};
use multiconj::gallery::{self, HexClass, ObliqueParams, PerpLambda};
use multiconj::mmot::{self, DiscreteMarginal, Direction};
use multiconj::monotone::{self, MonotonicityQuery, DEFAULT_BUDGET};
use multiconj::multiconj::{c_conjugate_brute, c_conjugate_fast, is_c_conjugate_tuple, Trust};
use multiconj::transforms::{conjugate, moreau_envelope, prox, ConjugateRequest, Method};
use multiconj::tuple::parse_tuple_line;
use multiconj::{verify, Axis, CheckRecord, Error, Grid, GridFunction, Marginal, Report, Result, ToleranceConfig};

#[derive(Parser)]
#[command(name = "multiconj", version, about = "Multi-marginal convex analysis on grids")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Function-value equality tolerance.
    #[arg(long, global = true)]
    tol_equal: Option<f64>,
    /// Contact-set slack.
    #[arg(long, global = true)]
    tol_contact: Option<f64>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on combinatorial work.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    /// Where to write the data artifact (grid dump, Γ file, plan).
    #[arg(long, global = true)]
    emit: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Discrete Fenchel conjugate of one function.
    Conjugate {
        #[arg(short = 'f', long = "function")]
        function: String,
        /// Input grid, `a,b,step[;a,b,step]`.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Dual grid (defaults to the input grid).
        #[arg(long, allow_hyphen_values = true)]
        dual: Option<String>,
        #[arg(long, default_value = "fast")]
        method: String,
    },
    /// Moreau envelope `e_f = inf_y f(y) + ½|x−y|²`.
    Envelope {
        #[arg(short = 'f', long = "function")]
        function: String,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Output grid (defaults to the input grid).
        #[arg(long, allow_hyphen_values = true)]
        out: Option<String>,
    },
    /// Proximal point of `f` at one point.
    Prox {
        #[arg(short = 'f', long = "function")]
        function: String,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// The point, `x1[,x2]`.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
    /// c-conjugate `(f₁ ⊕ … ⊕ f_M)^c` of M functions.
    Cconj {
        #[arg(short = 'f', long = "function", required = true)]
        functions: Vec<String>,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        out: Option<String>,
        #[arg(long, default_value = "fast")]
        method: String,
    },
    /// Checks `fᵢ = (⊕_{j≠i} fⱼ)^c` for every slot.
    TupleCheck {
        #[arg(short = 'f', long = "function", required = true)]
        functions: Vec<String>,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Compare only nodes at least this far from the grid boundary.
        #[arg(long)]
        trust: Option<f64>,
    },
    /// Contact set `{Σfᵢ(xᵢ) = c(x)}` over grid nodes.
    Contact {
        #[arg(short = 'f', long = "function", required = true)]
        functions: Vec<String>,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },
    /// Probe-grid nodes not covered by the sum set of Γ.
    Holes {
        /// Γ file (one tuple per line).
        #[arg(long)]
        gamma: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        probe: String,
    },
    /// Exhaustive n-c-monotonicity of a finite Γ.
    Monotone {
        #[arg(long)]
        gamma: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Also test whether this tuple (`x1;x2;…`) extends Γ monotonically.
        #[arg(long, allow_hyphen_values = true)]
        candidate: Option<String>,
    },
    /// Random search for a monotonicity violation of the oblique Γ plus the origin.
    ProbeConjecture {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        max_order: usize,
    },
    /// Reference examples: oblique, perp, improper, noninv, quad.
    Gallery {
        /// Name, optionally with parameters, e.g. `oblique:lambda=2`.
        name: String,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        udotv: Option<f64>,
        #[arg(long = "n")]
        n: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long)]
        emit_gamma: Option<PathBuf>,
        #[arg(long, default_value_t = 60)]
        boundary_samples: usize,
        #[arg(long, default_value_t = 60)]
        region_samples: usize,
    },
    /// Brute-force multi-marginal transport for tiny uniform marginals.
    Mmot {
        #[arg(long = "marginal", required = true)]
        marginals: Vec<PathBuf>,
        #[arg(long, default_value = "max")]
        direction: String,
        /// Dual potentials (descriptors), one per marginal.
        #[arg(long = "potential")]
        potentials: Vec<String>,
    },
    /// The acceptance battery.
    Verify {
        /// Run a single criterion (1-based).
        #[arg(long)]
        criterion: Option<usize>,
        /// Include wall-clock rows (makes output run-dependent).
        #[arg(long)]
        timings: bool,
    },
}

struct Run {
    name: &'static str,
    inputs: Vec<(String, String)>,
    reports: Vec<Report>,
    artifact: Option<String>,
    /// Extra lines printed after the reports.
    tail: Vec<String>,
}

impl Run {
    fn new(name: &'static str) -> Self {
        Run {
            name,
            inputs: Vec::new(),
            reports: Vec::new(),
            artifact: None,
            tail: Vec::new(),
        }
    }

    fn input(&mut self, k: &str, v: impl ToString) {
        self.inputs.push((k.to_string(), v.to_string()));
    }

    fn passed(&self) -> bool {
        self.reports.iter().all(Report::passed)
    }

    fn render(&self) -> String {
        let mut s = format!("subcommand={}\n", self.name);
        for (k, v) in &self.inputs {
            let _ = writeln!(s, "input.{k}={v}");
        }
        for r in &self.reports {
            s.push_str(&r.to_string());
        }
        for t in &self.tail {
            let _ = writeln!(s, "{t}");
        }
        let _ = writeln!(s, "exit={}", if self.passed() { "pass" } else { "fail" });
        s
    }
}

fn parse_grid(s: &str) -> Result<Grid> {
    let axes = s
        .split(';')
        .map(|a| {
            let v: Vec<f64> = a
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidGrid(format!("bad axis `{a}`, expected a,b,step")))?;
            match v.as_slice() {
                [lo, hi, step] => Axis::from_range(*lo, *hi, *step),
                _ => Err(Error::InvalidGrid(format!("bad axis `{a}`, expected a,b,step"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Grid::new(axes)
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidValue(format!("bad point `{s}`")))
}

fn required_grid(g: Option<&str>) -> Result<Grid> {
    parse_grid(g.ok_or_else(|| Error::InvalidParameter("--grid is required".into()))?)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidParameter(format!("cannot open {}: {e}", path.display())))
}

/// A grid dump file if `spec` names an existing file, otherwise an analytic
/// descriptor sampled on `grid`.
fn load_function(spec: &str, grid: Option<&str>) -> Result<GridFunction> {
    let path = Path::new(spec);
    if path.is_file() {
        return GridFunction::read_dump(open(path)?);
    }
    let d = Descriptor::from_str(spec)?;
    sample_analytic(&d, &required_grid(grid)?)
}

fn load_proper(specs: &[String], grid: Option<&str>) -> Result<Vec<GridFunction>> {
    specs
        .iter()
        .map(|s| {
            let f = load_function(s, grid)?;
            if f.is_proper() {
                Ok(f)
            } else {
                Err(Error::Improper(s.clone()))
            }
        })
        .collect()
}

fn tolerances(c: &Common) -> Result<ToleranceConfig> {
    let d = ToleranceConfig::default();
    ToleranceConfig::new(
        c.tol_equal.unwrap_or(d.eps_equal),
        c.tol_contact.unwrap_or(d.eps_contact),
        d.divergence_cap,
    )
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(",")
}

fn dispatch(cmd: &Cmd, common: &Common) -> Result<Run> {
    let tol = tolerances(common)?;
    match cmd {
        Cmd::Conjugate {
            function,
            grid,
            dual,
            method,
        } => {
            let mut run = Run::new("conjugate");
            run.input("function", function);
            run.input("method", method);
            let f = load_proper(std::slice::from_ref(function), grid.as_deref())?.remove(0);
            let dual = match dual {
                Some(d) => parse_grid(d)?,
                None => f.grid().clone(),
            };
            run.input("dual", dual.header());
            let method = Method::from_str(method)?;
            let fs = conjugate(&ConjugateRequest {
                input: &f,
                dual_grid: &dual,
                method,
            })?;
            let mut r = Report::new("conjugate");
            r.push(
                CheckRecord::flag("output-finite", fs.finite_count() == fs.len())
                    .with_witness(format!("nodes={} finite={}", fs.len(), fs.finite_count())),
            );
            run.reports.push(r);
            run.artifact = Some(fs.to_dump_string());
            Ok(run)
        }
        Cmd::Envelope { function, grid, out } => {
            let mut run = Run::new("envelope");
            run.input("function", function);
            let f = load_proper(std::slice::from_ref(function), grid.as_deref())?.remove(0);
            let out = match out {
                Some(o) => parse_grid(o)?,
                None => f.grid().clone(),
            };
            run.input("out", out.header());
            let e = moreau_envelope(&f, &out)?;
            let mut r = Report::new("envelope");
            r.push(
                CheckRecord::flag("output-finite", e.finite_count() == e.len())
                    .with_witness(format!("nodes={} finite={}", e.len(), e.finite_count())),
            );
            run.reports.push(r);
            run.artifact = Some(e.to_dump_string());
            Ok(run)
        }
        Cmd::Prox { function, grid, at } => {
            let mut run = Run::new("prox");
            run.input("function", function);
            run.input("at", at);
            let f = load_proper(std::slice::from_ref(function), grid.as_deref())?.remove(0);
            let x = parse_point(at)?;
            if x.len() != f.dim() {
                return Err(Error::DimensionMismatch {
                    expected: f.dim(),
                    got: x.len(),
                });
            }
            let p = prox(&f, &x)?;
            let mut r = Report::new("prox");
            r.push(CheckRecord::flag("prox-point", true).with_witness(fmt_point(&p)));
            run.reports.push(r);
            run.artifact = Some(format!("{}\n", fmt_point(&p)));
            Ok(run)
        }
        Cmd::Cconj {
            functions,
            grid,
            out,
            method,
        } => {
            let mut run = Run::new("cconj");
            for (i, f) in functions.iter().enumerate() {
                run.input(&format!("f{}", i + 1), f);
            }
            run.input("method", method);
            let method = Method::from_str(method)?;
            let fs = load_proper(functions, grid.as_deref())?;
            let out = match out {
                Some(o) => parse_grid(o)?,
                None => fs[0].grid().clone(),
            };
            run.input("out", out.header());
            let (h, improper) = match method {
                Method::Fast => {
                    let h = c_conjugate_fast(&fs, &out)?;
                    let improper = h.values().iter().all(|&v| v > tol.divergence_cap);
                    (h, improper)
                }
                Method::Brute => {
                    let ms: Vec<Marginal> = fs.into_iter().map(Marginal::Grid).collect();
                    let c = c_conjugate_brute(&ms, &out, &tol)?;
                    (c.function, c.improper)
                }
            };
            let mut r = Report::new("c-conjugate");
            let min = h.values().iter().copied().fold(f64::INFINITY, f64::min);
            r.push(
                CheckRecord::flag("output-proper", !improper)
                    .with_witness(format!("min={min} cap={}", tol.divergence_cap)),
            );
            run.reports.push(r);
            run.artifact = Some(h.to_dump_string());
            Ok(run)
        }
        Cmd::TupleCheck { functions, grid, trust } => {
            let mut run = Run::new("tuple-check");
            for (i, f) in functions.iter().enumerate() {
                run.input(&format!("f{}", i + 1), f);
            }
            run.input("tol-equal", tol.eps_equal);
            let ms: Vec<Marginal> = load_proper(functions, grid.as_deref())?
                .into_iter()
                .map(Marginal::Grid)
                .collect();
            let t = match trust {
                Some(r) => {
                    run.input("trust", r);
                    Trust::Inset(*r)
                }
                None => Trust::All,
            };
            let trusts = vec![t; ms.len()];
            run.reports.push(is_c_conjugate_tuple(&ms, &trusts, &tol)?);
            Ok(run)
        }
        Cmd::Contact { functions, grid } => {
            let mut run = Run::new("contact");
            for (i, f) in functions.iter().enumerate() {
                run.input(&format!("f{}", i + 1), f);
            }
            run.input("tol-contact", tol.eps_contact);
            let ms: Vec<Marginal> = load_proper(functions, grid.as_deref())?
                .into_iter()
                .map(Marginal::Grid)
                .collect();
            let g = contact_set(&ms, tol.eps_contact)?;
            let mut r = Report::new("contact");
            r.push(CheckRecord::flag("contact-nonempty", !g.is_empty()).with_witness(format!("tuples={}", g.len())));
            run.reports.push(r);
            run.artifact = Some(g.to_dump_string());
            Ok(run)
        }
        Cmd::Holes { gamma, probe } => {
            let mut run = Run::new("holes");
            run.input("gamma", gamma.display());
            let g = FiniteGamma::read_dump(open(gamma)?, gamma.display().to_string())?;
            let probe = parse_grid(probe)?;
            run.input("probe", probe.header());
            let cov = sum_set(&g).coverage(&probe)?;
            let holes = cov.holes();
            let mut rec = CheckRecord::flag("no-holes", holes.is_empty());
            rec.deviation = holes.len() as f64;
            if let Some(h) = holes.first() {
                rec = rec.with_witness(format!("count={} first={}", holes.len(), fmt_point(h)));
            }
            let mut r = Report::new("holes");
            r.push(rec);
            run.reports.push(r);
            run.artifact = Some(cov.to_grid_function().to_dump_string());
            Ok(run)
        }
        Cmd::Monotone {
            gamma,
            order,
            candidate,
        } => {
            let mut run = Run::new("monotone");
            run.input("gamma", gamma.display());
            run.input("order", order);
            run.input("budget", common.budget);
            let g = FiniteGamma::read_dump(open(gamma)?, gamma.display().to_string())?;
            let mut r = Report::new("monotone");
            match candidate {
                None => {
                    let v = monotone::is_n_c_monotone(&MonotonicityQuery::new(g, *order, common.budget)?)?;
                    let mut rec = CheckRecord::flag(format!("order-{order}"), v.monotone);
                    rec = match v.witness {
                        Some(w) => {
                            rec.deviation = w.excess;
                            rec.tol = monotone::MONOTONE_SLACK;
                            rec.with_witness(format!("checked={} {w}", v.checked))
                        }
                        None => rec.with_witness(format!("checked={}", v.checked)),
                    };
                    r.push(rec);
                }
                Some(c) => {
                    run.input("candidate", c);
                    let t = parse_tuple_line(c)?;
                    let ok = monotone::maximality_probe(&g, &t, *order, common.budget)?;
                    r.push(CheckRecord::flag("candidate-admissible", ok));
                }
            }
            run.reports.push(r);
            Ok(run)
        }
        Cmd::ProbeConjecture {
            lambda,
            samples,
            max_order,
        } => {
            let mut run = Run::new("probe-conjecture");
            run.input("lambda", lambda);
            run.input("samples", samples);
            run.input("max-order", max_order);
            run.input("seed", common.seed);
            run.input("budget", common.budget);
            let work: u128 = (2..=(*max_order).min(4))
                .map(|n| {
                    let perms: u128 = (1..=n as u128).product::<u128>().pow(2);
                    let multisets: u128 = (1..=n as u128).map(|i| n as u128 - 1 + i).product::<u128>()
                        / (1..=n as u128).product::<u128>();
                    *samples as u128 * multisets * perms
                })
                .sum();
            if work > common.budget {
                return Err(Error::BudgetExceeded {
                    required: work,
                    cap: common.budget,
                });
            }
            run.reports
                .push(monotone::conjecture_probe(*lambda, *samples, *max_order, common.seed)?);
            Ok(run)
        }
        Cmd::Gallery {
            name,
            lambda,
            udotv,
            n,
            grid,
            emit_gamma,
            boundary_samples,
            region_samples,
        } => gallery_cmd(
            name,
            GalleryOpts {
                lambda: *lambda,
                udotv: *udotv,
                n: *n,
                grid: grid.as_deref(),
                emit_gamma: emit_gamma.as_deref(),
                boundary_samples: *boundary_samples,
                region_samples: *region_samples,
            },
            &tol,
        ),
        Cmd::Mmot {
            marginals,
            direction,
            potentials,
        } => {
            let mut run = Run::new("mmot");
            for (i, m) in marginals.iter().enumerate() {
                run.input(&format!("marginal{}", i + 1), m.display());
            }
            run.input("direction", direction);
            let dir = Direction::from_str(direction)?;
            let ms = marginals
                .iter()
                .map(|p| DiscreteMarginal::read(open(p)?))
                .collect::<Result<Vec<_>>>()?;
            let (plan, value) = mmot::brute_force_optimal(&ms, dir)?;
            let res = plan.marginal_residuals(&ms).into_iter().fold(0.0, f64::max);
            let mut r = Report::new("mmot");
            r.push(CheckRecord::within("plan-marginals", res, 1e-9).with_witness(format!("value={value}")));
            run.reports.push(r);
            if !potentials.is_empty() {
                for (i, p) in potentials.iter().enumerate() {
                    run.input(&format!("potential{}", i + 1), p);
                }
                let ds = potentials
                    .iter()
                    .map(|p| Descriptor::from_str(p))
                    .collect::<Result<Vec<_>>>()?;
                run.reports.push(mmot::weak_duality_check(&ds, &ms, &plan)?);
                run.reports.push(mmot::concentration_check(&plan, &ds, tol.eps_contact.max(1e-9))?);
            }
            run.artifact = Some(plan.to_dump_string());
            Ok(run)
        }
        Cmd::Verify { criterion, timings } => {
            let mut run = Run::new("verify");
            let ids: Vec<usize> = match criterion {
                Some(c) if (1..=verify::COUNT).contains(c) => vec![*c],
                Some(c) => {
                    return Err(Error::InvalidParameter(format!(
                        "criterion must be in 1..={}, got {c}",
                        verify::COUNT
                    )))
                }
                None => (1..=verify::COUNT).collect(),
            };
            for id in ids {
                let mut res = verify::run(id);
                if !timings {
                    res.report.checks.retain(|c| c.check != "runtime-seconds");
                }
                let line = if *timings {
                    res.summary_line()
                } else {
                    // seconds dropped so output is reproducible
                    let s = res.summary_line();
                    let mut parts: Vec<&str> = s.split(' ').filter(|p| !p.starts_with("seconds=")).collect();
                    parts.retain(|p| !p.is_empty());
                    parts.join(" ")
                };
                run.tail.push(line);
                run.reports.push(res.report);
            }
            Ok(run)
        }
    }
}

struct GalleryOpts<'a> {
    lambda: Option<f64>,
    udotv: Option<f64>,
    n: Option<usize>,
    grid: Option<&'a str>,
    emit_gamma: Option<&'a Path>,
    boundary_samples: usize,
    region_samples: usize,
}

/// `name` or `name:key=value,…`; inline parameters override flags.
fn gallery_cmd(spec: &str, mut o: GalleryOpts<'_>, tol: &ToleranceConfig) -> Result<Run> {
    let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
    for kv in params.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::UnknownDescriptor(format!("`{spec}`: expected key=value")))?;
        let num = || -> Result<f64> {
            match v {
                "inf" => Ok(f64::INFINITY),
                _ => v
                    .parse()
                    .map_err(|_| Error::UnknownDescriptor(format!("`{spec}`: bad value `{v}`"))),
            }
        };
        match k.to_ascii_lowercase().as_str() {
            "lambda" => o.lambda = Some(num()?),
            "udotv" => o.udotv = Some(num()?),
            "n" => o.n = Some(num()? as usize),
            _ => return Err(Error::UnknownDescriptor(format!("`{spec}`: unknown parameter `{k}`"))),
        }
    }
    let mut run = Run::new("gallery");
    run.input("name", name);
    let emit_gamma = |g: &FiniteGamma| -> Result<()> {
        if let Some(p) = o.emit_gamma {
            let mut f = File::create(p)?;
            g.write_dump(&mut f)?;
        }
        Ok(())
    };
    let gap_row = |g: &FiniteGamma, triple: &[Descriptor]| -> CheckRecord {
        let mut worst = (0.0, None);
        for t in g.tuples() {
            let s: f64 = triple.iter().enumerate().map(|(i, d)| d.eval(t.point(i))).sum();
            let gap = (s - t.cost()).abs();
            if !(gap <= worst.0) {
                worst = (gap, Some(t.to_string()));
            }
        }
        let rec = CheckRecord::within("gamma-on-contact-set", worst.0, 1e-9);
        match worst.1 {
            Some(w) => rec.with_witness(w),
            None => rec.with_witness(format!("tuples={}", g.len())),
        }
    };
    let mut r = Report::new(format!("gallery-{name}"));
    match name {
        "oblique" => {
            let lambda = o.lambda.unwrap_or(1.0);
            run.input("lambda", lambda);
            run.input("boundary-samples", o.boundary_samples);
            run.input("region-samples", o.region_samples);
            let p = ObliqueParams::new(lambda)?;
            let g = gallery::gamma_oblique(p, o.boundary_samples, o.region_samples)?;
            r.push(gap_row(&g, &gallery::oblique_triple(p)));
            let inside: Vec<Vec<f64>> = sum_set(&g)
                .points()
                .iter()
                .filter(|s| gallery::hex_membership(s, p) == HexClass::Inside)
                .cloned()
                .collect();
            let mut rec = CheckRecord::flag("sums-avoid-open-hexagon", inside.is_empty());
            if let Some(s) = inside.first() {
                rec = rec.with_witness(fmt_point(s));
            }
            r.push(rec);
            emit_gamma(&g)?;
            let grid = match o.grid {
                Some(s) => parse_grid(s)?,
                None => Grid::square(-3.0, 3.0, 0.05)?,
            };
            run.artifact = Some(sample_analytic(&Descriptor::ObliqueH { lambda }, &grid)?.to_dump_string());
        }
        "perp" => {
            let lambda = o.lambda.unwrap_or(1.0);
            run.input("lambda", lambda);
            let pl = PerpLambda::new(lambda)?;
            let triple = gallery::perpendicular_triple(pl);
            if lambda.is_finite() {
                let g = gallery::gamma_perp(lambda, o.boundary_samples, 3.0 * lambda.max(1.0))?;
                r.push(gap_row(&g, &triple));
                emit_gamma(&g)?;
            } else {
                r.push(CheckRecord::flag("gamma-on-contact-set", true).with_witness("lambda=inf: h is the origin indicator"));
            }
            let grid = match o.grid {
                Some(s) => parse_grid(s)?,
                None => Grid::square(-2.0, 2.0, 0.05)?,
            };
            run.artifact = Some(sample_analytic(&triple[2], &grid)?.to_dump_string());
        }
        "improper" => {
            let udotv = o.udotv.unwrap_or(0.5);
            run.input("udotv", udotv);
            let boxes = [1.0, 2.0, 4.0, 8.0];
            let v = gallery::improper_probe(udotv, &boxes)?;
            // lines at a non-right angle always give +∞ at the origin
            let expected = true;
            let values: Vec<String> = v.values.iter().map(|(l, x)| format!("{l}:{x}")).collect();
            r.push(
                CheckRecord::flag("matches-closed-form", v.improper == expected).with_witness(format!(
                    "improper={} values={}",
                    v.improper,
                    values.join("/")
                )),
            );
        }
        "noninv" => {
            let grid = match o.grid {
                Some(s) => parse_grid(s)?,
                None => Grid::square(-4.0, 4.0, 0.05)?,
            };
            run.input("grid", grid.header());
            let nv = gallery::noninvolutive_triple(&grid)?;
            r.extend(nv.report.clone());
            r.push(CheckRecord::at_least("m-positive", nv.m, 1e-9));
            run.artifact = Some(nv.h.to_dump_string());
        }
        "quad" => {
            let n = o.n.unwrap_or(3);
            run.input("n", n);
            let grid = match o.grid {
                Some(s) => parse_grid(s)?,
                None => Grid::line(-2.0, 2.0, 0.01)?,
            };
            run.input("grid", grid.header());
            let ds = gallery::quadratic_tuple(n)?;
            let ms = ds
                .iter()
                .map(|d| sample_analytic(d, &grid).map(Marginal::Grid))
                .collect::<Result<Vec<_>>>()?;
            let trust = vec![Trust::Inset(0.5); n];
            r.extend(is_c_conjugate_tuple(&ms, &trust, tol)?);
            let nodes: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.node(i)).collect();
            emit_gamma(&gallery::diagonal_gamma(n, &nodes)?)?;
        }
        other => {
            return Err(Error::UnknownDescriptor(format!(
                "gallery `{other}` (expected oblique, perp, improper, noninv, quad)"
            )))
        }
    }
    run.reports.push(r);
    Ok(run)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let run = match dispatch(&cli.cmd, &cli.common) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let (Some(path), Some(data)) = (&cli.common.emit, &run.artifact) {
        if let Err(e) = std::fs::write(path, data) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    let mut out = std::io::stdout().lock();
    if out.write_all(run.render().as_bytes()).is_err() {
        return ExitCode::from(2);
    }
    if run.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
