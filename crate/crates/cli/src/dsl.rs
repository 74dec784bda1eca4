//! Manifest language: algebras, morphisms, covers, modules and gluing data.
//!
//! ```text
//! algebra A { gens x:0, y:0, xi:-1; d xi = y^2 - 4*(x^3 - x); }
//! algebra B over A { gens eta:-1; d eta = x; }
//! morphism f : A -> B { }
//! cover U on A { x; x^2 - 1; }
//! module M on A { rank 2; rel x, y; }
//! gluing G on U {
//!   chart 1 { gens e:-1; d e = 0; }
//!   chart 2 { gens e:-1; d e = 0; }
//!   transition 1 2 { e = x*y*u*e; }
//! }
//! ```
//!
//! Generators missing from a morphism block go to the generator of the same
//! name in the target. `#` starts a comment. Chart algebras contain the generators of the base,
//! then `u` and `eps` (`d eps = u*g - 1`), then the listed ones. Transition
//! `i j` sends each new generator of chart `j` to an element of chart `i`
//! restricted to the overlap.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use dgs::algebra::{Algebra, Element, Generator, Morphism};
use dgs::cohomology::h0_ring;
use dgs::descent::{restrict_local, Cover, GluingData};
use dgs::DgaError;
use dgs_commalg::module::ModulePresentation;
use dgs_commalg::{Poly, Q};
use num_bigint::BigInt;
use num_traits::{One, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

fn err<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line: pos.line, col: pos.col, msg: msg.into() })
}

// ---------------------------------------------------------------------------
// lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(char),
    Arrow,
    Eof,
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            let s: String = chars[start..i].iter().collect();
            out.push((Tok::Int(s.parse().unwrap()), pos));
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push((Tok::Arrow, pos));
            i += 2;
            col += 2;
            continue;
        }
        if "{}();:,=+-*/^.".contains(c) {
            out.push((Tok::Sym(c), pos));
            i += 1;
            col += 1;
            continue;
        }
        return err(pos, format!("unexpected character '{}'", c));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

// ---------------------------------------------------------------------------
// expressions

#[derive(Clone, Debug)]
enum Expr {
    Num(Q),
    Var(String, Pos),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, BigInt, Pos),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
}

fn eval(e: &Expr, a: &Algebra) -> Result<Element, ParseError> {
    Ok(match e {
        Expr::Num(q) => a.constant(q.clone()),
        Expr::Var(name, pos) => match a.gen_named(name) {
            Some(g) => g,
            None => return err(*pos, format!("unknown identifier '{}'", name)),
        },
        Expr::Add(x, y) => eval(x, a)?.add(&eval(y, a)?),
        Expr::Sub(x, y) => eval(x, a)?.sub(&eval(y, a)?),
        Expr::Mul(x, y) => a.mul(&eval(x, a)?, &eval(y, a)?),
        Expr::Div(x, d, pos) => {
            if d.is_zero() {
                return err(*pos, "division by zero");
            }
            eval(x, a)?.scale(&Q::new(BigInt::one(), d.clone()))
        }
        Expr::Neg(x) => eval(x, a)?.neg(),
        Expr::Pow(x, k) => a.pow(&eval(x, a)?, *k),
    })
}

// ---------------------------------------------------------------------------
// manifest

#[derive(Clone, Debug)]
pub struct AlgebraDecl {
    pub name: String,
    pub over: Option<String>,
    pub alg: Arc<Algebra>,
}

#[derive(Clone, Debug)]
pub struct MorphismDecl {
    pub name: String,
    pub source: String,
    pub target: String,
    pub map: Morphism,
}

#[derive(Clone, Debug)]
pub struct CoverDecl {
    pub name: String,
    pub base: String,
    pub cover: Arc<Cover>,
}

#[derive(Clone, Debug)]
pub struct ModuleDecl {
    pub name: String,
    pub base: String,
    pub module: ModulePresentation,
}

#[derive(Clone)]
pub struct GluingDecl {
    pub name: String,
    pub cover: String,
    pub data: Arc<GluingData>,
}

#[derive(Clone)]
pub enum Item {
    Algebra(AlgebraDecl),
    Morphism(MorphismDecl),
    Cover(CoverDecl),
    Module(ModuleDecl),
    Gluing(GluingDecl),
}

impl Item {
    pub fn name(&self) -> &str {
        match self {
            Item::Algebra(d) => &d.name,
            Item::Morphism(d) => &d.name,
            Item::Cover(d) => &d.name,
            Item::Module(d) => &d.name,
            Item::Gluing(d) => &d.name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Item::Algebra(_) => "algebra",
            Item::Morphism(_) => "morphism",
            Item::Cover(_) => "cover",
            Item::Module(_) => "module",
            Item::Gluing(_) => "gluing",
        }
    }
}

#[derive(Clone, Default)]
pub struct Manifest {
    pub items: Vec<Item>,
}

impl fmt::Debug for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

/// A reference to something missing or of the wrong kind.
#[derive(Clone, Debug)]
pub struct LookupError(pub String);

impl fmt::Display for LookupError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Manifest {
    fn find(&self, name: &str) -> Option<&Item> {
        self.items.iter().find(|i| i.name() == name)
    }

    pub fn algebra(&self, name: &str) -> Result<&AlgebraDecl, LookupError> {
        match self.find(name) {
            Some(Item::Algebra(d)) => Ok(d),
            Some(i) => Err(LookupError(format!("'{}' is a {}, not an algebra", name, i.kind()))),
            None => Err(LookupError(format!("unknown algebra '{}'", name))),
        }
    }

    pub fn morphism(&self, name: &str) -> Result<&MorphismDecl, LookupError> {
        match self.find(name) {
            Some(Item::Morphism(d)) => Ok(d),
            Some(i) => Err(LookupError(format!("'{}' is a {}, not a morphism", name, i.kind()))),
            None => Err(LookupError(format!("unknown morphism '{}'", name))),
        }
    }

    pub fn cover(&self, name: &str) -> Result<&CoverDecl, LookupError> {
        match self.find(name) {
            Some(Item::Cover(d)) => Ok(d),
            Some(i) => Err(LookupError(format!("'{}' is a {}, not a cover", name, i.kind()))),
            None => Err(LookupError(format!("unknown cover '{}'", name))),
        }
    }

    pub fn module(&self, name: &str) -> Result<&ModuleDecl, LookupError> {
        match self.find(name) {
            Some(Item::Module(d)) => Ok(d),
            Some(i) => Err(LookupError(format!("'{}' is a {}, not a module", name, i.kind()))),
            None => Err(LookupError(format!("unknown module '{}'", name))),
        }
    }

    pub fn gluing(&self, name: &str) -> Result<&GluingDecl, LookupError> {
        match self.find(name) {
            Some(Item::Gluing(d)) => Ok(d),
            Some(i) => Err(LookupError(format!("'{}' is a {}, not gluing data", name, i.kind()))),
            None => Err(LookupError(format!("unknown gluing data '{}'", name))),
        }
    }

    /// `C->B`: a morphism declared from `C` to `B`, or the inclusion when `B` is declared over `C`.
    pub fn arrow(&self, spec: &str) -> Result<Morphism, LookupError> {
        if let Ok(m) = self.morphism(spec) {
            return Ok(m.map.clone());
        }
        let Some((c, b)) = spec.split_once("->") else {
            return Err(LookupError(format!("expected C->B or a morphism name, got '{}'", spec)));
        };
        let (c, b) = (c.trim(), b.trim());
        let cd = self.algebra(c)?;
        let bd = self.algebra(b)?;
        let declared: Vec<&MorphismDecl> = self
            .items
            .iter()
            .filter_map(|i| match i {
                Item::Morphism(m) if m.source == c && m.target == b => Some(m),
                _ => None,
            })
            .collect();
        if declared.len() == 1 {
            return Ok(declared[0].map.clone());
        }
        if declared.len() > 1 {
            return Err(LookupError(format!("several morphisms {}->{}; name one", c, b)));
        }
        // walk the `over` chain
        let mut cur = bd;
        while let Some(p) = &cur.over {
            if p == c {
                return Ok(Morphism::inclusion(&cd.alg, &bd.alg));
            }
            cur = self.algebra(p)?;
        }
        if c == b {
            return Ok(Morphism::identity(&bd.alg));
        }
        if cd.alg.ngens() == 0 {
            return Ok(Morphism { source: cd.alg.clone(), target: bd.alg.clone(), images: vec![] });
        }
        Err(LookupError(format!("no morphism {}->{} and {} is not declared over {}", c, b, b, c)))
    }
}

// ---------------------------------------------------------------------------
// parser

struct Parser {
    toks: Vec<(Tok, Pos)>,
    k: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.k].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.k].1
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.k].clone();
        if self.k + 1 < self.toks.len() {
            self.k += 1;
        }
        t
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("'{}'", s),
            Tok::Int(n) => format!("'{}'", n),
            Tok::Sym(c) => format!("'{}'", c),
            Tok::Arrow => "'->'".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn sym(&mut self, c: char) -> Result<Pos, ParseError> {
        let (t, p) = self.next();
        if t == Tok::Sym(c) {
            Ok(p)
        } else {
            err(p, format!("expected '{}', found {}", c, Self::describe(&t)))
        }
    }

    fn is_sym(&self, c: char) -> bool {
        *self.peek() == Tok::Sym(c)
    }

    fn ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.next() {
            (Tok::Ident(s), p) => Ok((s, p)),
            (t, p) => err(p, format!("expected identifier, found {}", Self::describe(&t))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        match self.next() {
            (Tok::Ident(s), p) if s == kw => Ok(p),
            (t, p) => err(p, format!("expected '{}', found {}", kw, Self::describe(&t))),
        }
    }

    fn int(&mut self) -> Result<(i64, Pos), ParseError> {
        let neg = if self.is_sym('-') {
            self.next();
            true
        } else {
            false
        };
        match self.next() {
            (Tok::Int(n), p) => {
                let v: i64 = n.try_into().map_err(|_| ParseError { line: p.line, col: p.col, msg: "integer too large".into() })?;
                Ok((if neg { -v } else { v }, p))
            }
            (t, p) => err(p, format!("expected integer, found {}", Self::describe(&t))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.is_sym('+') {
                self.next();
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.is_sym('-') {
                self.next();
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        if self.is_sym('-') {
            self.next();
            return Ok(Expr::Neg(Box::new(self.term()?)));
        }
        let mut lhs = self.power()?;
        loop {
            if self.is_sym('*') {
                self.next();
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
            } else if self.is_sym('/') {
                self.next();
                match self.next() {
                    (Tok::Int(n), p) => lhs = Expr::Div(Box::new(lhs), n, p),
                    (t, p) => return err(p, format!("expected integer denominator, found {}", Self::describe(&t))),
                }
            } else {
                return Ok(lhs);
            }
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.is_sym('^') {
            self.next();
            match self.next() {
                (Tok::Int(n), p) => {
                    let k: u32 = n.try_into().map_err(|_| ParseError { line: p.line, col: p.col, msg: "exponent too large".into() })?;
                    return Ok(Expr::Pow(Box::new(base), k));
                }
                (t, p) => return err(p, format!("expected exponent, found {}", Self::describe(&t))),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.next() {
            (Tok::Int(n), _) => Ok(Expr::Num(Q::from_integer(n))),
            (Tok::Ident(s), p) => Ok(Expr::Var(s, p)),
            (Tok::Sym('('), _) => {
                let e = self.expr()?;
                self.sym(')')?;
                Ok(e)
            }
            (t, p) => err(p, format!("expected expression, found {}", Self::describe(&t))),
        }
    }
}

/// Body of an algebra block: generators and differentials.
struct AlgebraBody {
    gens: Vec<(Generator, Pos)>,
    diffs: Vec<(String, Pos, Expr)>,
}

fn algebra_body(p: &mut Parser) -> Result<AlgebraBody, ParseError> {
    p.sym('{')?;
    let mut body = AlgebraBody { gens: vec![], diffs: vec![] };
    while !p.is_sym('}') {
        let (kw, kp) = p.ident()?;
        match kw.as_str() {
            "gens" => {
                if p.is_sym(';') {
                    p.next();
                    continue;
                }
                loop {
                    let (name, np) = p.ident()?;
                    p.sym(':')?;
                    let (deg, _) = p.int()?;
                    body.gens.push((Generator::new(name, deg as i32), np));
                    if p.is_sym(',') {
                        p.next();
                    } else {
                        break;
                    }
                }
                p.sym(';')?;
            }
            "d" => {
                let (name, np) = p.ident()?;
                p.sym('=')?;
                let e = p.expr()?;
                p.sym(';')?;
                body.diffs.push((name, np, e));
            }
            _ => return err(kp, format!("expected 'gens' or 'd', found '{}'", kw)),
        }
    }
    p.sym('}')?;
    Ok(body)
}

fn map_dga_error(e: DgaError, body: &AlgebraBody, fallback: Pos) -> ParseError {
    let name = match &e {
        DgaError::PositiveDegree(n)
        | DgaError::DuplicateName(n)
        | DgaError::OddSquare(n)
        | DgaError::DSquared(n)
        | DgaError::NotHomogeneous(n) => Some(n.clone()),
        DgaError::DegreeMismatch { gen, .. } => Some(gen.clone()),
        _ => None,
    };
    let pos = name
        .and_then(|n| {
            body.diffs
                .iter()
                .find(|(g, _, _)| *g == n)
                .map(|d| d.1)
                .or_else(|| body.gens.iter().find(|(g, _)| g.name == n).map(|g| g.1))
        })
        .unwrap_or(fallback);
    let msg = match e {
        DgaError::DegreeMismatch { gen, expected, got } => {
            format!("degree mismatch: d {} has degree {}, but {} has degree {} so d {} must have degree {}", gen, got, gen, expected - 1, gen, expected)
        }
        DgaError::DSquared(g) => format!("d² ≠ 0: d(d {}) is not zero", g),
        other => other.to_string(),
    };
    ParseError { line: pos.line, col: pos.col, msg }
}

/// Builds `base` extended by the body's generators.
fn build_extension(base: Option<&Arc<Algebra>>, body: &AlgebraBody, at: Pos) -> Result<Arc<Algebra>, ParseError> {
    let mut gens: Vec<Generator> = base.map(|b| b.gens().to_vec()).unwrap_or_default();
    let nb = gens.len();
    for (g, gp) in &body.gens {
        if gens.iter().any(|h| h.name == g.name) {
            return err(*gp, format!("duplicate generator name {}", g.name));
        }
        gens.push(g.clone());
    }
    let sk = Algebra::skeleton(gens.clone());
    let n = gens.len();
    let mut diff: Vec<Element> = match base {
        Some(b) => (0..nb).map(|i| b.diff_of(i).embed(n)).collect(),
        None => vec![],
    };
    diff.resize(n, Element::zero(n));
    let mut seen = vec![false; n];
    for (name, np, e) in &body.diffs {
        let Some(i) = gens.iter().position(|g| g.name == *name) else {
            return err(*np, format!("unknown identifier '{}'", name));
        };
        if i < nb {
            return err(*np, format!("{} belongs to the base; its differential is fixed", name));
        }
        if seen[i] {
            return err(*np, format!("second differential for {}", name));
        }
        seen[i] = true;
        diff[i] = eval(e, &sk)?;
    }
    Algebra::new(gens, diff).map_err(|e| map_dga_error(e, body, at))
}

fn parse_algebra(p: &mut Parser, m: &Manifest) -> Result<AlgebraDecl, ParseError> {
    let (name, np) = p.ident()?;
    let over = if matches!(p.peek(), Tok::Ident(s) if s == "over") {
        p.next();
        let (o, op) = p.ident()?;
        m.algebra(&o).map_err(|e| ParseError { line: op.line, col: op.col, msg: e.0 })?;
        Some(o)
    } else {
        None
    };
    let body = algebra_body(p)?;
    let base = over.as_ref().map(|o| m.algebra(o).unwrap().alg.clone());
    let alg = build_extension(base.as_ref(), &body, np)?;
    Ok(AlgebraDecl { name, over, alg })
}

fn lookup<T>(r: Result<T, LookupError>, pos: Pos) -> Result<T, ParseError> {
    r.map_err(|e| ParseError { line: pos.line, col: pos.col, msg: e.0 })
}

fn parse_morphism(p: &mut Parser, m: &Manifest) -> Result<MorphismDecl, ParseError> {
    let (name, np) = p.ident()?;
    p.sym(':')?;
    let (src, sp) = p.ident()?;
    match p.next() {
        (Tok::Arrow, _) => {}
        (t, tp) => return err(tp, format!("expected '->', found {}", Parser::describe(&t))),
    }
    let (tgt, tp) = p.ident()?;
    let a = lookup(m.algebra(&src), sp)?.alg.clone();
    let b = lookup(m.algebra(&tgt), tp)?.alg.clone();
    let images = parse_assignments(p, &a, &b, |g| b.gen_named(&g.name), np)?;
    let map = Morphism::new(a.clone(), b.clone(), images).map_err(|e| ParseError { line: np.line, col: np.col, msg: e.to_string() })?;
    let rep = map.check();
    if !rep.valid {
        return err(np, format!("morphism {} is not a map of dg algebras: {}", name, rep.violations[0]));
    }
    Ok(MorphismDecl { name, source: src, target: tgt, map })
}

/// `{ g = expr; ... }` for the generators of `src` evaluated in `tgt`; missing
/// ones fall back to `default`.
fn parse_assignments(
    p: &mut Parser,
    src: &Algebra,
    tgt: &Algebra,
    default: impl Fn(&Generator) -> Option<Element>,
    at: Pos,
) -> Result<Vec<Element>, ParseError> {
    p.sym('{')?;
    let mut images: Vec<Option<Element>> = vec![None; src.ngens()];
    while !p.is_sym('}') {
        let (g, gp) = p.ident()?;
        let Some(i) = src.index_of(&g) else {
            return err(gp, format!("unknown identifier '{}'", g));
        };
        if images[i].is_some() {
            return err(gp, format!("second image for {}", g));
        }
        p.sym('=')?;
        let e = p.expr()?;
        images[i] = Some(eval(&e, tgt)?);
        if p.is_sym(',') || p.is_sym(';') {
            p.next();
        } else if !p.is_sym('}') {
            let (t, tp) = p.next();
            return err(tp, format!("expected ';', found {}", Parser::describe(&t)));
        }
    }
    p.sym('}')?;
    let mut out = Vec::new();
    for (i, img) in images.into_iter().enumerate() {
        match img.or_else(|| default(src.generator(i))) {
            Some(e) => out.push(e),
            None => return err(at, format!("no image given for {}", src.generator(i).name)),
        }
    }
    Ok(out)
}

fn degree_zero(e: &Element, a: &Algebra, pos: Pos) -> Result<Poly, ParseError> {
    match a.element_to_poly(e) {
        Some(p) => Ok(p),
        None => err(pos, "expected an element of degree 0"),
    }
}

fn parse_cover(p: &mut Parser, m: &Manifest) -> Result<CoverDecl, ParseError> {
    let (name, np) = p.ident()?;
    p.keyword("on")?;
    let (base, bp) = p.ident()?;
    let a = lookup(m.algebra(&base), bp)?.alg.clone();
    p.sym('{')?;
    let mut els = Vec::new();
    while !p.is_sym('}') {
        let ep = p.pos();
        let e = eval(&p.expr()?, &a)?;
        els.push(degree_zero(&e, &a, ep)?);
        p.sym(';')?;
    }
    p.sym('}')?;
    let cover = Cover::new(&a, els).map_err(|e| ParseError { line: np.line, col: np.col, msg: e.to_string() })?;
    Ok(CoverDecl { name, base, cover })
}

fn parse_module(p: &mut Parser, m: &Manifest) -> Result<ModuleDecl, ParseError> {
    let (name, _) = p.ident()?;
    p.keyword("on")?;
    let (base, bp) = p.ident()?;
    let a = lookup(m.algebra(&base), bp)?.alg.clone();
    p.sym('{')?;
    let rp = p.keyword("rank")?;
    let (rank, _) = p.int()?;
    if rank < 0 {
        return err(rp, "rank must be nonnegative");
    }
    p.sym(';')?;
    let ring = h0_ring(&a);
    let mut rels = Vec::new();
    while !p.is_sym('}') {
        let kp = p.keyword("rel")?;
        let mut v = Vec::new();
        loop {
            let ep = p.pos();
            let e = eval(&p.expr()?, &a)?;
            v.push(ring.reduce(&degree_zero(&e, &a, ep)?));
            if p.is_sym(',') {
                p.next();
            } else {
                break;
            }
        }
        p.sym(';')?;
        if v.len() != rank as usize {
            return err(kp, format!("relation has {} entries, rank is {}", v.len(), rank));
        }
        rels.push(v);
    }
    p.sym('}')?;
    Ok(ModuleDecl { name, base, module: ModulePresentation::new(ring, rank as usize, rels) })
}

fn parse_gluing(p: &mut Parser, m: &Manifest) -> Result<GluingDecl, ParseError> {
    let (name, np) = p.ident()?;
    p.keyword("on")?;
    let (cname, cp) = p.ident()?;
    let cover = lookup(m.cover(&cname), cp)?.cover.clone();
    let k = cover.len();
    p.sym('{')?;
    let mut locals: Vec<Option<Arc<Algebra>>> = vec![None; k];
    let mut pending: Vec<(usize, usize, Pos, Parser)> = Vec::new();
    while !p.is_sym('}') {
        let (kw, kp) = p.ident()?;
        match kw.as_str() {
            "chart" => {
                let (i, ip) = p.int()?;
                if i < 1 || i as usize > k {
                    return err(ip, format!("chart index {} outside 1..{}", i, k));
                }
                let i = i as usize - 1;
                if locals[i].is_some() {
                    return err(ip, format!("chart {} given twice", i + 1));
                }
                let body = algebra_body(p)?;
                if let Some((g, gp)) = body.gens.iter().find(|(g, _)| g.degree >= 0) {
                    return err(*gp, format!("chart generator {} must have negative degree", g.name));
                }
                locals[i] = Some(build_extension(Some(&cover.chart(&[i]).alg), &body, ip)?);
            }
            "transition" => {
                let (i, ip) = p.int()?;
                let (j, jp) = p.int()?;
                if i < 1 || i as usize > k {
                    return err(ip, format!("chart index {} outside 1..{}", i, k));
                }
                if j <= i || j as usize > k {
                    return err(jp, format!("transition needs {} < j ≤ {}", i, k));
                }
                // defer evaluation until all charts are known
                let start = p.k;
                let mut depth = 0;
                loop {
                    match p.next() {
                        (Tok::Sym('{'), _) => depth += 1,
                        (Tok::Sym('}'), _) => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        (Tok::Eof, ep) => return err(ep, "unterminated transition block"),
                        _ => {}
                    }
                }
                let sub = Parser { toks: p.toks[start..p.k].iter().cloned().chain([(Tok::Eof, p.pos())]).collect(), k: 0 };
                pending.push((i as usize - 1, j as usize - 1, kp, sub));
            }
            _ => return err(kp, format!("expected 'chart' or 'transition', found '{}'", kw)),
        }
    }
    p.sym('}')?;
    let locals: Vec<Arc<Algebra>> =
        locals.into_iter().enumerate().map(|(i, b)| b.unwrap_or_else(|| cover.chart(&[i]).alg.clone())).collect();
    let nb = cover.chart_ngens();
    let mut transitions = BTreeMap::new();
    for (i, j, kp, mut sub) in pending {
        if transitions.contains_key(&(i, j)) {
            return err(kp, format!("transition {} {} given twice", i + 1, j + 1));
        }
        let bj = &locals[j];
        let tgt = restrict_local(&cover, &locals[i], i, &[i, j]);
        let src = Algebra::skeleton(bj.gens()[nb..].to_vec());
        let imgs = parse_assignments(&mut sub, &src, &tgt, |g| tgt.gen_named(&g.name), kp)?;
        transitions.insert((i, j), imgs);
    }
    for idx in cover.indices(1) {
        let (i, j) = (idx[0], idx[1]);
        if let std::collections::btree_map::Entry::Vacant(e) = transitions.entry((i, j)) {
            let tgt = restrict_local(&cover, &locals[i], i, &[i, j]);
            let mut imgs = Vec::new();
            for g in &locals[j].gens()[nb..] {
                match tgt.gen_named(&g.name) {
                    Some(x) => imgs.push(x),
                    None => return err(np, format!("no transition {} {} and chart {} lacks {}", i + 1, j + 1, i + 1, g.name)),
                }
            }
            e.insert(imgs);
        }
    }
    let data = GluingData::new(&cover, locals, transitions).map_err(|e| ParseError { line: np.line, col: np.col, msg: e.to_string() })?;
    Ok(GluingDecl { name, cover: cname, data: Arc::new(data) })
}

/// A single expression evaluated in `a`.
pub fn parse_element(src: &str, a: &Algebra) -> Result<Element, ParseError> {
    let mut p = Parser { toks: lex(src)?, k: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        let (t, tp) = p.next();
        return err(tp, format!("unexpected {}", Parser::describe(&t)));
    }
    eval(&e, a)
}

pub fn parse(src: &str) -> Result<Manifest, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, k: 0 };
    let mut m = Manifest::default();
    while *p.peek() != Tok::Eof {
        let (kw, kp) = p.ident()?;
        let name_pos = p.pos();
        let item = match kw.as_str() {
            "algebra" => Item::Algebra(parse_algebra(&mut p, &m)?),
            "morphism" => Item::Morphism(parse_morphism(&mut p, &m)?),
            "cover" => Item::Cover(parse_cover(&mut p, &m)?),
            "module" => Item::Module(parse_module(&mut p, &m)?),
            "gluing" => Item::Gluing(parse_gluing(&mut p, &m)?),
            _ => return err(kp, format!("expected a declaration, found '{}'", kw)),
        };
        if m.find(item.name()).is_some() {
            return err(name_pos, format!("'{}' is already defined", item.name()));
        }
        m.items.push(item);
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// printer

fn gens_line(gens: &[Generator]) -> String {
    let g: Vec<String> = gens.iter().map(|g| format!("{}:{}", g.name, g.degree)).collect();
    format!("  gens {};", g.join(", "))
}

fn body_lines(a: &Algebra, from: usize, indent: &str) -> Vec<String> {
    let mut out = vec![format!("{}{}", indent, gens_line(&a.gens()[from..]).trim_start())];
    for i in from..a.ngens() {
        let d = a.diff_of(i);
        if !d.is_zero() {
            out.push(format!("{}d {} = {};", indent, a.generator(i).name, a.fmt(d)));
        }
    }
    out
}

pub fn print(m: &Manifest) -> String {
    let mut out = String::new();
    for item in &m.items {
        match item {
            Item::Algebra(d) => {
                let from = match &d.over {
                    Some(o) => m.algebra(o).map(|p| p.alg.ngens()).unwrap_or(0),
                    None => 0,
                };
                match &d.over {
                    Some(o) => out.push_str(&format!("algebra {} over {} {{\n", d.name, o)),
                    None => out.push_str(&format!("algebra {} {{\n", d.name)),
                }
                if d.alg.ngens() > from {
                    for l in body_lines(&d.alg, from, "  ") {
                        out.push_str(&l);
                        out.push('\n');
                    }
                }
                out.push_str("}\n\n");
            }
            Item::Morphism(d) => {
                out.push_str(&format!("morphism {} : {} -> {} {{\n", d.name, d.source, d.target));
                for (i, img) in d.map.images.iter().enumerate() {
                    out.push_str(&format!("  {} = {};\n", d.map.source.generator(i).name, d.map.target.fmt(img)));
                }
                out.push_str("}\n\n");
            }
            Item::Cover(d) => {
                out.push_str(&format!("cover {} on {} {{\n", d.name, d.base));
                for g in &d.cover.elements {
                    out.push_str(&format!("  {};\n", d.cover.ring.fmt_poly(g)));
                }
                out.push_str("}\n\n");
            }
            Item::Module(d) => {
                out.push_str(&format!("module {} on {} {{\n  rank {};\n", d.name, d.base, d.module.ngens()));
                for r in d.module.relations() {
                    let parts: Vec<String> = r.iter().map(|p| d.module.ring().fmt_poly(p)).collect();
                    out.push_str(&format!("  rel {};\n", parts.join(", ")));
                }
                out.push_str("}\n\n");
            }
            Item::Gluing(d) => {
                let gd = &d.data;
                let nb = gd.cover.chart_ngens();
                out.push_str(&format!("gluing {} on {} {{\n", d.name, d.cover));
                for (i, b) in gd.locals.iter().enumerate() {
                    if b.ngens() == nb {
                        continue;
                    }
                    out.push_str(&format!("  chart {} {{\n", i + 1));
                    for l in body_lines(b, nb, "    ") {
                        out.push_str(&l);
                        out.push('\n');
                    }
                    out.push_str("  }\n");
                }
                for ((i, j), imgs) in &gd.transitions {
                    if imgs.is_empty() {
                        continue;
                    }
                    let tgt = gd.local(*i, &[*i, *j]);
                    out.push_str(&format!("  transition {} {} {{\n", i + 1, j + 1));
                    for (k, img) in imgs.iter().enumerate() {
                        let g = gd.locals[*j].generator(nb + k);
                        out.push_str(&format!("    {} = {};\n", g.name, tgt.fmt(img)));
                    }
                    out.push_str("  }\n");
                }
                out.push_str("}\n\n");
            }
        }
    }
    out
}

fn same_algebra(a: &Algebra, b: &Algebra) -> bool {
    a.gens() == b.gens() && (0..a.ngens()).all(|i| a.diff_of(i) == b.diff_of(i))
}

/// Structural equality of two manifests.
pub fn same(a: &Manifest, b: &Manifest) -> bool {
    if a.items.len() != b.items.len() {
        return false;
    }
    a.items.iter().zip(&b.items).all(|(x, y)| {
        x.name() == y.name()
            && match (x, y) {
                (Item::Algebra(p), Item::Algebra(q)) => p.over == q.over && same_algebra(&p.alg, &q.alg),
                (Item::Morphism(p), Item::Morphism(q)) => {
                    p.source == q.source && p.target == q.target && p.map.images == q.map.images
                }
                (Item::Cover(p), Item::Cover(q)) => p.base == q.base && p.cover.elements == q.cover.elements,
                (Item::Module(p), Item::Module(q)) => {
                    p.base == q.base
                        && p.module.ngens() == q.module.ngens()
                        && p.module.relations() == q.module.relations()
                }
                (Item::Gluing(p), Item::Gluing(q)) => {
                    p.cover == q.cover
                        && p.data.locals.len() == q.data.locals.len()
                        && p.data.locals.iter().zip(&q.data.locals).all(|(s, t)| same_algebra(s, t))
                        && p.data.transitions == q.data.transitions
                }
                _ => false,
            }
    })
}
