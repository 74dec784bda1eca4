//! Subcommands. Each returns a [`Report`]; errors are split into input
//! errors (exit 2) and mathematical failures (exit 1).

use std::sync::Arc;

use serde_json::{json, Value};

use dgs::algebra::{tensor_product, Algebra, Morphism};
use dgs::cohomology::{
    amplitude, default_window, der_top, factor_through_free, h0_ring, h_theta, hn_module, is_etale,
    is_open_immersion, obstruction_data, FreeExtension,
};
use dgs::descent::{cech, descent_morphisms_check, glue_algebras, nonfree_certificate};
use dgs::homotopy::pi_module;
use dgs::DgaError;
use dgs_commalg::module::{self, ModulePresentation};

use crate::dsl::{self, LookupError, Manifest, ParseError};

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Math(String),
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Failure {
        Failure::Input(e.to_string())
    }
}

impl From<LookupError> for Failure {
    fn from(e: LookupError) -> Failure {
        Failure::Input(e.0)
    }
}

fn classify(e: DgaError) -> Failure {
    match e {
        DgaError::Arity { .. }
        | DgaError::MismatchedAlgebras
        | DgaError::NotFreeExtension
        | DgaError::NotDegreeZero(_)
        | DgaError::PositiveDegree(_)
        | DgaError::DuplicateName(_) => Failure::Input(e.to_string()),
        other => Failure::Math(other.to_string()),
    }
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<String>,
    pub window: Option<(i32, i32)>,
    pub result: Value,
    pub certificates: Vec<Certificate>,
    pub lines: Vec<String>,
    pub pass: bool,
}

impl Report {
    fn new(command: &str, inputs: &[&str]) -> Report {
        Report {
            command: command.into(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            window: None,
            result: Value::Null,
            certificates: vec![],
            lines: vec![],
            pass: true,
        }
    }

    fn cert(&mut self, name: impl Into<String>, holds: bool, detail: impl Into<String>) {
        let (name, detail) = (name.into(), detail.into());
        self.lines.push(format!("certificate {}: {}{}", name, if holds { "holds" } else { "fails" }, if detail.is_empty() { String::new() } else { format!(" ({})", detail) }));
        self.certificates.push(Certificate { name, holds, detail });
        self.pass &= holds;
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "inputs": self.inputs,
            "window": self.window.map(|(a, b)| json!([a, b])),
            "result": self.result,
            "certificates": self.certificates.iter().map(|c| json!({"name": c.name, "holds": c.holds, "detail": c.detail})).collect::<Vec<_>>(),
            "pass": self.pass,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = self.lines.join("\n");
        if !s.is_empty() {
            s.push('\n');
        }
        s.push_str(if self.pass { "PASS\n" } else { "FAIL\n" });
        s
    }
}

/// Error document with the same top-level keys as a report.
pub fn error_json(command: &str, inputs: &[String], f: &Failure) -> Value {
    let (kind, msg) = match f {
        Failure::Input(m) => ("input", m),
        Failure::Math(m) => ("mathematical", m),
    };
    json!({
        "command": command,
        "inputs": inputs,
        "window": Value::Null,
        "result": {"error": kind, "message": msg},
        "certificates": [],
        "pass": false,
    })
}

/// Worker count from `DGS_THREADS` (default: available parallelism).
pub fn threads() -> Result<usize, Failure> {
    match std::env::var("DGS_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Failure::Input(format!("DGS_THREADS must be a positive integer, got '{}'", v))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Order-preserving parallel map over at most `threads` workers.
pub fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub fn parse_window(s: &str) -> Result<(i32, i32), Failure> {
    let bad = || Failure::Input(format!("window must look like lo..hi, got '{}'", s));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let lo: i32 = a.trim().parse().map_err(|_| bad())?;
    let hi: i32 = b.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn module_json(m: &ModulePresentation) -> Value {
    let (s, _, _) = module::simplify(m);
    let rels: Vec<Vec<String>> =
        s.relations().iter().map(|r| r.iter().map(|p| s.ring().fmt_poly(p)).collect()).collect();
    json!({"generators": s.ngens(), "relations": rels, "zero": s.is_zero()})
}

fn module_text(m: &ModulePresentation) -> String {
    let (s, _, _) = module::simplify(m);
    if s.is_zero() {
        "0".into()
    } else if s.relations().is_empty() {
        format!("free of rank {}", s.ngens())
    } else {
        s.describe()
    }
}

/// `C->B` as a free extension. A map out of a polynomial ring that is not
/// free is replaced by its free factorization; the original map is returned
/// alongside so that maps out of `B` can be extended.
fn extension(m: &Manifest, spec: &str) -> Result<(FreeExtension, Option<Morphism>), Failure> {
    let map = m.arrow(spec)?;
    match FreeExtension::new(map.clone()) {
        Ok(e) => Ok((e, None)),
        Err(_) => {
            let (ext, _) = factor_through_free(&map).map_err(|_| {
                Failure::Input(format!("{} is not a free extension and its source is not a polynomial ring", spec))
            })?;
            Ok((ext, Some(map)))
        }
    }
}

/// Extends `f : B → A` over the factorization `B[c, η]`: `c_i ↦ f(image of c_i)`, `η_i ↦ 0`.
fn along(ext: &FreeExtension, orig: &Option<Morphism>, f: Morphism) -> Morphism {
    let Some(orig) = orig else { return f };
    if f.source.gens() != orig.target.gens() {
        return f;
    }
    let a = f.target.clone();
    let mut images = f.images.clone();
    for img in &orig.images {
        images.push(f.apply(img));
    }
    images.resize(ext.target().ngens(), a.zero());
    Morphism { source: ext.target().clone(), target: a, images }
}

pub fn run(m: &Manifest, cmd: &Command) -> Result<Report, Failure> {
    let threads = threads()?;
    match cmd {
        Command::Check => check(m),
        Command::Cohomology { algebra, window } => {
            let a = m.algebra(algebra)?.alg.clone();
            let w = match window {
                Some(s) => parse_window(s)?,
                None => default_window(&a),
            };
            let mut r = Report::new("cohomology", &[algebra]);
            r.window = Some(w);
            let degs: Vec<i32> = (w.0..=w.1).collect();
            let mods = par_map(&degs, threads, |&n| hn_module(&a, n));
            let mut res = Vec::new();
            for (n, h) in degs.iter().zip(&mods) {
                r.lines.push(format!("h^{} = {}", n, module_text(h)));
                let mut j = module_json(h);
                j["degree"] = json!(n);
                res.push(j);
            }
            r.result = json!(res);
            Ok(r)
        }
        Command::Truncate { algebra } => {
            let a = m.algebra(algebra)?.alg.clone();
            let ring = h0_ring(&a);
            let rels: Vec<String> = ring.relations().iter().map(|p| ring.fmt_poly(p)).collect();
            let mut r = Report::new("truncate", &[algebra]);
            r.lines.push(format!("variables: [{}]", ring.names().join(", ")));
            r.lines.push(format!("relations: [{}]", rels.join(", ")));
            r.result = json!({"variables": ring.names(), "relations": rels});
            Ok(r)
        }
        Command::Tangent { arrow, at, level } => {
            let (ext, back) = extension(m, arrow)?;
            let f = match at {
                Some(name) => {
                    along(&ext, &back, m.morphism(name)?.map.clone())
                }
                None => match &back {
                    Some(orig) => along(&ext, &back, Morphism::identity(&orig.target)),
                    None => Morphism::identity(ext.target()),
                },
            };
            if f.source.gens() != ext.target().gens() {
                return Err(Failure::Input(format!("morphism does not start at the target of {}", arrow)));
            }
            let levels: Vec<i32> = match level {
                Some(l) => vec![*l],
                None => (-1..=der_top(&ext).max(0)).collect(),
            };
            let mut r = Report::new("tangent", &[arrow]);
            r.window = Some((*levels.first().unwrap(), *levels.last().unwrap()));
            let mods = par_map(&levels, threads, |&l| h_theta(&ext, &f, l));
            let mut res = Vec::new();
            for (l, h) in levels.iter().zip(mods) {
                let h = h.map_err(classify)?;
                r.lines.push(format!("h_{} = {}", l, module_text(&h)));
                let mut j = module_json(&h);
                j["level"] = json!(l);
                res.push(j);
            }
            r.result = json!(res);
            Ok(r)
        }
        Command::Pi { arrow, at, level } => {
            let (ext, back) = extension(m, arrow)?;
            let p = along(&ext, &back, m.morphism(at)?.map.clone());
            if p.source.gens() != ext.target().gens() {
                return Err(Failure::Input(format!("{} does not start at the target of {}", at, arrow)));
            }
            if *level < 1 {
                return Err(Failure::Input("--level must be at least 1".into()));
            }
            let pm = pi_module(&ext, &p, *level).map_err(classify)?;
            let mut r = Report::new("pi", &[arrow, at]);
            r.lines.push(format!("pi_{} = {}", level, module_text(&pm.module)));
            let mut j = module_json(&pm.module);
            j["level"] = json!(level);
            r.result = j;
            Ok(r)
        }
        Command::Etale { arrow } => {
            let (ext, _) = extension(m, arrow)?;
            let e = is_etale(&ext);
            let mut r = Report::new("etale", &[arrow]);
            r.result = json!({"etale": e});
            r.cert("etale", e, if e { "reduced cotangent complex acyclic" } else { "reduced cotangent complex has cohomology" });
            Ok(r)
        }
        Command::OpenImmersion { arrow, witness } => {
            let (ext, _) = extension(m, arrow)?;
            let c = ext.source().clone();
            let w = dsl::parse_element(witness, &c)?;
            let g = c
                .element_to_poly(&w)
                .ok_or_else(|| Failure::Input(format!("witness '{}' is not of degree 0", witness)))?;
            let ok = is_open_immersion(&ext, &g).map_err(classify)?;
            let mut r = Report::new("open-immersion", &[arrow, witness]);
            r.result = json!({"open_immersion": ok});
            r.cert("open immersion", ok, format!("witness {}", witness));
            Ok(r)
        }
        Command::Tensor { left, right, over } => {
            let f = m.arrow(&format!("{}->{}", over, left))?;
            let g = m.arrow(&format!("{}->{}", over, right))?;
            let t = tensor_product(&f, &g).map_err(classify)?;
            let mut r = Report::new("tensor", &[left, right, over]);
            let name = format!("{}_{}_{}", left, over, right);
            let text = print_algebra(&name, &t.algebra);
            r.lines.push(text.trim_end().to_string());
            r.result = json!({"name": name, "generators": t.algebra.ngens(), "manifest": text});
            Ok(r)
        }
        Command::Koszul { algebra } => {
            let a = m.algebra(algebra)?.alg.clone();
            if a.gens().iter().any(|g| g.degree < -1) {
                return Err(Failure::Input(format!("{} has generators below degree −1", algebra)));
            }
            let r_len = a.gens().iter().filter(|g| g.degree == -1).count() as i32;
            let degs: Vec<i32> = (-r_len..=-1).collect();
            let mods = par_map(&degs, threads, |&n| hn_module(&a, n));
            let mut r = Report::new("koszul", &[algebra]);
            r.window = Some((-r_len, 0));
            let mut res = Vec::new();
            for (n, h) in degs.iter().zip(&mods) {
                r.lines.push(format!("h^{} = {}", n, module_text(h)));
                res.push(json!({"degree": n, "zero": h.is_zero()}));
            }
            let acyclic = mods.iter().all(|h| h.is_zero());
            r.result = json!({"length": r_len, "degrees": res});
            let detail = match degs.iter().zip(&mods).find(|(_, h)| !h.is_zero()) {
                Some((n, _)) => format!("h^{} is nonzero", n),
                None => "h^n = 0 for n < 0".to_string(),
            };
            r.cert("regular sequence", acyclic, detail);
            Ok(r)
        }
        Command::Cech { cover, module: mname, p } => {
            let cd = m.cover(cover)?;
            let md = m.module(mname)?;
            if md.base != cd.base {
                return Err(Failure::Input(format!("{} lives on {}, the cover on {}", mname, md.base, cd.base)));
            }
            let ps = p.to_string();
            let h = cech(&cd.cover, &md.module, *p);
            let mut r = Report::new("cech", &[cover, mname, &ps]);
            r.lines.push(format!("H^{} = {}", p, module_text(&h)));
            let mut j = module_json(&h);
            j["p"] = json!(p);
            r.result = j;
            Ok(r)
        }
        Command::DescentCheck { arrow, cover, at, level } => {
            let cd = m.cover(cover)?;
            let (ext, back) = extension(m, arrow)?;
            let bname = arrow.split_once("->").map(|x| x.1.trim().to_string());
            let f = match at {
                Some(n) => m.morphism(n)?.map.clone(),
                None => {
                    let b = bname.ok_or_else(|| Failure::Input("--at is required with a named morphism".into()))?;
                    m.arrow(&format!("{}->{}", b, cd.base))?
                }
            };
            let f = along(&ext, &back, f);
            if f.source.gens() != ext.target().gens() || f.target.gens() != cd.cover.base.gens() {
                return Err(Failure::Input("the morphism must go from the target of the extension to the cover's base".into()));
            }
            let levels: Vec<i32> = match level {
                Some(l) => vec![*l],
                None => vec![0, 1, 2],
            };
            let res = descent_morphisms_check(&ext, &f, &cd.cover, &levels).map_err(classify)?;
            let mut r = Report::new("descent-check", &[arrow, cover]);
            let mut out = Vec::new();
            for l in &res {
                r.cert(format!("level {} base change", l.level), l.charts.iter().all(|c| c.1), "charts and overlaps");
                r.cert(format!("level {} H^0", l.level), l.h0_iso, "augmentation is an isomorphism onto H^0");
                r.cert(format!("level {} H^1", l.level), l.h1_zero, "H^1 vanishes");
                out.push(json!({"level": l.level, "h0_iso": l.h0_iso, "h1_zero": l.h1_zero}));
            }
            r.result = json!(out);
            Ok(r)
        }
        Command::Glue { cover, gluing, budget, nonfree } => {
            let gd = m.gluing(gluing)?;
            if gd.cover != *cover {
                return Err(Failure::Input(format!("{} is defined on {}, not {}", gluing, gd.cover, cover)));
            }
            if *budget < 1 {
                return Err(Failure::Input("--budget must be at least 1".into()));
            }
            let bs = budget.to_string();
            let mut r = Report::new("glue", &[cover, gluing, &bs]);
            r.window = Some((-budget, 0));
            let res = glue_algebras(&gd.data, *budget).map_err(classify)?;
            let mut stages = Vec::new();
            for s in &res.stages {
                r.lines.push(format!(
                    "stage {}: killed {}, added {}, Čech corrections {}, repaired {}",
                    s.stage, s.killed, s.added, s.cech_corrections, s.repaired
                ));
                stages.push(json!({
                    "stage": s.stage, "killed": s.killed, "added": s.added,
                    "cech_corrections": s.cech_corrections, "repaired": s.repaired,
                    "iso": s.iso, "surjective": s.surjective,
                }));
            }
            for c in &res.certificates {
                r.cert(format!("h^{} {}", c.degree, c.kind), c.holds, "");
            }
            if let Some(n) = nonfree {
                let g = gd.data.glued(*n).map_err(classify)?;
                let c = nonfree_certificate(&g.module).map_err(classify)?;
                r.cert(
                    format!("h^{} not free", n),
                    c.certified,
                    format!("norm {} of degree {}", h0_ring(&gd.data.cover.base).fmt_poly(&c.norm), c.norm_degree),
                );
            }
            let b = res.algebra();
            r.result = json!({
                "generators": b.ngens(),
                "stages": stages,
                "algebra": print_algebra("glued", b),
            });
            Ok(r)
        }
        Command::Amplitude { arrow } => {
            let (ext, _) = extension(m, arrow)?;
            let a = amplitude(&ext);
            let mut r = Report::new("amplitude", &[arrow]);
            r.lines.push(format!("amplitude = {}", a));
            r.result = json!({"amplitude": a});
            Ok(r)
        }
        Command::Obstruction { arrow } => {
            let (ext, _) = extension(m, arrow)?;
            let od = obstruction_data(&ext).map_err(classify)?;
            let mut r = Report::new("obstruction", &[arrow]);
            let matrix: Vec<Vec<String>> =
                od.matrix.iter().map(|c| c.iter().map(|p| od.ring.fmt_poly(p)).collect()).collect();
            r.lines.push(format!("ranks: {} -> {}", od.ranks.0, od.ranks.1));
            for c in &matrix {
                r.lines.push(format!("  column [{}]", c.join(", ")));
            }
            r.lines.push(format!("virtual dimension = {}", od.virtual_dimension));
            r.result = json!({"ranks": [od.ranks.0, od.ranks.1], "matrix": matrix, "virtual_dimension": od.virtual_dimension});
            Ok(r)
        }
    }
}

fn check(m: &Manifest) -> Result<Report, Failure> {
    let mut r = Report::new("check", &[]);
    let mut items = Vec::new();
    for item in &m.items {
        match item {
            dsl::Item::Algebra(d) => {
                r.lines.push(format!("algebra {}: {} generators, d² = 0", d.name, d.alg.ngens()));
            }
            dsl::Item::Morphism(d) => r.lines.push(format!("morphism {} : {} -> {}: valid", d.name, d.source, d.target)),
            dsl::Item::Cover(d) => {
                r.lines.push(format!("cover {} on {}: {} elements generating the unit ideal", d.name, d.base, d.cover.len()))
            }
            dsl::Item::Module(d) => r.lines.push(format!("module {} on {}: {}", d.name, d.base, d.module.describe())),
            dsl::Item::Gluing(d) => {
                let lo = -(d.data.locals.iter().map(|b| b.ngens()).max().unwrap_or(0) as i32) - 1;
                let rep = d.data.validate(lo.max(-3), 0);
                for v in rep.strictness.iter().chain(&rep.cartesian) {
                    r.lines.push(format!("gluing {}: {}", d.name, v));
                }
                r.cert(format!("gluing {} strict", d.name), rep.strictness.is_empty(), "cocycle identity on triple overlaps");
                r.cert(format!("gluing {} cartesian", d.name), rep.cartesian.is_empty(), "transitions preserve cohomology");
            }
        }
        items.push(json!({"kind": item.kind(), "name": item.name()}));
    }
    r.result = json!({"items": items});
    Ok(r)
}

fn print_algebra(name: &str, a: &Arc<Algebra>) -> String {
    let decl = dsl::AlgebraDecl { name: name.into(), over: None, alg: a.clone() };
    dsl::print(&Manifest { items: vec![dsl::Item::Algebra(decl)] })
}

#[derive(Clone, Debug)]
pub enum Command {
    Check,
    Cohomology { algebra: String, window: Option<String> },
    Truncate { algebra: String },
    Tangent { arrow: String, at: Option<String>, level: Option<i32> },
    Pi { arrow: String, at: String, level: i32 },
    Etale { arrow: String },
    OpenImmersion { arrow: String, witness: String },
    Tensor { left: String, right: String, over: String },
    Koszul { algebra: String },
    Cech { cover: String, module: String, p: i32 },
    DescentCheck { arrow: String, cover: String, at: Option<String>, level: Option<i32> },
    Glue { cover: String, gluing: String, budget: i32, nonfree: Option<i32> },
    Amplitude { arrow: String },
    Obstruction { arrow: String },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Cohomology { .. } => "cohomology",
            Command::Truncate { .. } => "truncate",
            Command::Tangent { .. } => "tangent",
            Command::Pi { .. } => "pi",
            Command::Etale { .. } => "etale",
            Command::OpenImmersion { .. } => "open-immersion",
            Command::Tensor { .. } => "tensor",
            Command::Koszul { .. } => "koszul",
            Command::Cech { .. } => "cech",
            Command::DescentCheck { .. } => "descent-check",
            Command::Glue { .. } => "glue",
            Command::Amplitude { .. } => "amplitude",
            Command::Obstruction { .. } => "obstruction",
        }
    }
}
