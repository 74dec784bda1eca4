//! Homotopies between morphisms `B → A`, realized as maps `B → A ⊗ Ω₁`,
//! together with the edge and triangle filling steps used to build them.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use dgs_commalg::module::ModulePresentation;
use dgs_commalg::{q, Poly, Span, Q};
use num_traits::{One, Zero};

use crate::algebra::{Algebra, Element, Exp, Morphism};
use crate::cohomology::{h_theta, strand_complex, strand_vector, FreeExtension};
use crate::forms::{Edge, Forms};
use crate::DgaError;

/// `θ : B → A ⊗ Ω₁`; its endpoints are `θ(0)` and `θ(1)`.
#[derive(Clone, Debug)]
pub struct Homotopy {
    pub forms: Arc<Forms>,
    pub body: Morphism,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomotopyReport {
    pub valid: bool,
    pub violations: Vec<String>,
}

/// A cocycle of `A` of degree `degree` that is not a coboundary, met while
/// lifting generator `generator`.
#[derive(Clone, Debug)]
pub struct Obstruction {
    pub generator: String,
    pub degree: i32,
    pub cocycle: Element,
    pub text: String,
}

#[derive(Clone, Debug)]
pub enum HomotopyOutcome {
    Found(Homotopy),
    Obstructed(Obstruction),
}

/// `B → A ⊗ Ω₂` restricting to three prescribed edges.
#[derive(Clone, Debug)]
pub struct Triangle {
    pub forms: Arc<Forms>,
    pub body: Morphism,
}

/// Generators sorted by `(|degree|, index)`; differentials only involve earlier ones.
pub fn lifting_order(b: &Algebra) -> Vec<usize> {
    let mut v: Vec<usize> = (0..b.ngens()).collect();
    v.sort_by_key(|&i| (-b.generator(i).degree, i));
    v
}

/// Finds `c` with `dc = z` for cocycles of `A`, caching the strand spans.
pub struct Exactness {
    alg: Arc<Algebra>,
    cache: HashMap<i32, (Span, Vec<Exp>)>,
}

impl Exactness {
    pub fn new(alg: &Arc<Algebra>) -> Exactness {
        Exactness { alg: alg.clone(), cache: HashMap::new() }
    }

    pub fn preimage(&mut self, z: &Element, k: i32) -> Option<Element> {
        if z.is_zero() {
            return Some(self.alg.zero());
        }
        let a = self.alg.clone();
        let (span, basis) = self.cache.entry(k).or_insert_with(|| {
            let c = strand_complex(&a, k, k);
            let d = c.diff(k - 1);
            let span = Span::new(a.zero_gens().len(), c.rank(k), d.columns.clone());
            (span, a.graded_basis(k - 1))
        });
        if span.rank() == 0 {
            return None;
        }
        let coef = span.lift(&strand_vector(&a, k, z))?;
        let mut out = a.zero();
        for (e, p) in basis.iter().zip(&coef) {
            out = out.add(&a.join(e, p));
        }
        Some(out)
    }
}

fn map_forms(src: &Forms, tgt: &Arc<Algebra>, extra: Vec<Element>) -> Morphism {
    let n = src.base.ngens();
    let mut images: Vec<Element> = (0..n).map(|i| tgt.gen(i)).collect();
    images.extend(extra);
    Morphism { source: src.alg.clone(), target: tgt.clone(), images }
}

/// `Ω₁ → Ω₂` with `t ↦ image`, `dt ↦ d(image)`.
fn one_to_two(f1: &Forms, f2: &Forms, image: Element) -> Morphism {
    let d = f2.alg.d(&image);
    map_forms(f1, &f2.alg, vec![image, d])
}

impl Homotopy {
    pub fn base(&self) -> &Arc<Algebra> {
        &self.forms.base
    }

    pub fn source_algebra(&self) -> &Arc<Algebra> {
        &self.body.source
    }

    pub fn endpoint(&self, at: i64) -> Morphism {
        self.body.compose(&self.forms.eval_at(&[q(at)]))
    }

    pub fn start(&self) -> Morphism {
        self.endpoint(0)
    }

    pub fn end(&self) -> Morphism {
        self.endpoint(1)
    }

    pub fn constant(f: &Morphism) -> Homotopy {
        let forms = Forms::omega1(&f.target);
        let body = f.compose(&forms.include());
        Homotopy { forms, body }
    }

    /// Reversed path: `t ↦ 1 − t`.
    pub fn inverse(&self) -> Homotopy {
        let fm = &self.forms;
        let al = &fm.alg;
        let rev = map_forms(fm, al, vec![al.one().sub(&fm.t()), fm.dt().neg()]);
        Homotopy { forms: fm.clone(), body: self.body.compose(&rev) }
    }

    pub fn verify(&self, f: &Morphism, g: &Morphism) -> HomotopyReport {
        let mut violations = self.body.check().violations;
        for (name, end, want) in [("start", self.start(), f), ("end", self.end(), g)] {
            for i in 0..want.source.ngens() {
                if end.images[i] != want.images[i] {
                    let b = &want.source;
                    violations.push(format!(
                        "{} differs on {}: {} vs {}",
                        name,
                        b.generator(i).name,
                        want.target.fmt(&end.images[i]),
                        want.target.fmt(&want.images[i])
                    ));
                }
            }
        }
        HomotopyReport { valid: violations.is_empty(), violations }
    }
}

pub fn verify_homotopy(h: &Homotopy, f: &Morphism, g: &Morphism) -> HomotopyReport {
    h.verify(f, g)
}

fn same_maps(f: &Morphism, g: &Morphism) -> Result<(), DgaError> {
    if f.source.gens() != g.source.gens() || f.target.gens() != g.target.gens() {
        return Err(DgaError::MismatchedAlgebras);
    }
    Ok(())
}

fn obstruction(b: &Algebra, x: usize, a: &Algebra, z: Element, degree: i32) -> Obstruction {
    let g = b.generator(x);
    Obstruction {
        generator: g.name.clone(),
        degree,
        text: format!("class of {} in h^{}", a.fmt(&z), degree),
        cocycle: z,
    }
}

/// Solves one edge: returns `θ(x)` with `dθ(x) = rhs` and endpoints `fx`, `gx`,
/// or the cocycle `β(1)` when it is not exact.
pub(crate) fn fill_edge(
    fm: &Forms,
    rhs: &Element,
    fx: &Element,
    gx: &Element,
    k: i32,
    ex: &mut Exactness,
) -> Result<Element, Element> {
    let al = &fm.alg;
    let t = fm.t();
    let psi0 = al.mul(&al.one().sub(&t), &fm.lift(fx)).add(&al.mul(&t, &fm.lift(gx)));
    let w = rhs.sub(&al.d(&psi0));
    let b0 = fm.k_t(&w);
    let c1 = fm.eval(&b0, &[Q::one()]);
    if c1.is_zero() {
        return Ok(psi0.add(&b0));
    }
    match ex.preimage(&c1, k) {
        Some(c) => Ok(psi0.add(&b0).sub(&al.d(&al.mul(&t, &fm.lift(&c))))),
        None => Err(c1),
    }
}

/// Lifts generator by generator, stopping at the first non-exact cocycle.
/// `budget` bounds `|degree|` of the generators processed.
pub fn try_build_homotopy(f: &Morphism, g: &Morphism, budget: i32) -> Result<HomotopyOutcome, DgaError> {
    same_maps(f, g)?;
    let b = f.source.clone();
    let a = f.target.clone();
    let fm = Forms::omega1(&a);
    let mut body = Morphism { source: b.clone(), target: fm.alg.clone(), images: vec![fm.alg.zero(); b.ngens()] };
    let mut ex = Exactness::new(&a);
    for x in lifting_order(&b) {
        let k = b.generator(x).degree;
        if -k > budget {
            return Err(DgaError::BudgetExhausted(budget));
        }
        let rhs = body.apply(b.diff_of(x));
        match fill_edge(&fm, &rhs, &f.images[x], &g.images[x], k, &mut ex) {
            Ok(v) => body.images[x] = v,
            Err(z) => return Ok(HomotopyOutcome::Obstructed(obstruction(&b, x, &a, z, k))),
        }
    }
    Ok(HomotopyOutcome::Found(Homotopy { forms: fm, body }))
}

/// `θ₁ : f ⇒ g`, `θ₂ : g ⇒ h` to a homotopy `f ⇒ h` by filling a horn in `A ⊗ Ω₂`.
pub fn compose_homotopies(h1: &Homotopy, h2: &Homotopy) -> Result<Homotopy, DgaError> {
    if h1.forms.alg.gens() != h2.forms.alg.gens() || h1.body.source.gens() != h2.body.source.gens() {
        return Err(DgaError::MismatchedAlgebras);
    }
    let mid1 = h1.end();
    let mid2 = h2.start();
    if !mid1.equals(&mid2) {
        return Err(DgaError::Precondition("homotopies do not share the middle endpoint".into()));
    }
    let f1 = &h1.forms;
    let a = f1.base.clone();
    let f2 = Forms::omega2(&a);
    let al = f2.alg.clone();
    let (s, t) = (f2.s(), f2.t());
    let m_st = one_to_two(f1, &f2, s.add(&t));
    let m_t = one_to_two(f1, &f2, t.clone());
    // (a, b) = (t, 1 − s − t) stored in the s and t slots
    let one = al.one();
    let to_ab = map_forms(&f2, &al, vec![one.sub(&s).sub(&t), s.clone(), f2.ds().neg().sub(&f2.dt()), f2.ds()]);
    let from_ab = map_forms(&f2, &al, vec![t.clone(), one.sub(&s).sub(&t), f2.dt(), f2.ds().neg().sub(&f2.dt())]);
    let b = h1.body.source.clone();
    let mut body = Morphism { source: b.clone(), target: al.clone(), images: vec![al.zero(); b.ngens()] };
    for x in lifting_order(&b) {
        let psi = m_st
            .apply(&h1.body.images[x])
            .add(&m_t.apply(&h2.body.images[x]))
            .sub(&f2.lift(&mid1.images[x]));
        let w = body.apply(b.diff_of(x)).sub(&al.d(&psi));
        let corr = from_ab.apply(&f2.k_s(&to_ab.apply(&w)));
        body.images[x] = psi.add(&corr);
    }
    let back = f2.edge_map(Edge::Second, f1);
    Ok(Homotopy { forms: f1.clone(), body: body.compose(&back) })
}

/// `w = a + dt·b` for a level-1 form.
fn split_dt(fm: &Forms, w: &Element) -> (Element, Element) {
    let al = &fm.alg;
    let order = al.canonical_order();
    let rank_dt = order.iter().position(|&i| i == fm.dt).unwrap();
    let mut a = al.zero();
    let mut b = al.zero();
    for (e, c) in w.terms() {
        if e[fm.dt] == 0 {
            a.add_term(e.clone(), c.clone());
            continue;
        }
        let before = order[..rank_dt].iter().filter(|&&i| e[i] > 0 && al.is_odd(i)).count();
        let mut e2 = e.clone();
        e2[fm.dt] = 0;
        b.add_term(e2, if before % 2 == 1 { -c.clone() } else { c.clone() });
    }
    (a, b)
}

/// `a / (t(1 − t))` for an element without `dt` vanishing at both endpoints.
fn divide_t_one_minus_t(fm: &Forms, a: &Element) -> Option<Element> {
    let mut groups: BTreeMap<Exp, Vec<Q>> = BTreeMap::new();
    for (e, c) in a.terms() {
        let mut key = e.clone();
        let k = key[fm.t] as usize;
        key[fm.t] = 0;
        let v = groups.entry(key).or_default();
        if v.len() <= k {
            v.resize(k + 1, Q::zero());
        }
        v[k] += c;
    }
    let mut out = fm.alg.zero();
    for (key, coeffs) in groups {
        if !coeffs[0].is_zero() {
            return None;
        }
        let p = &coeffs[1..];
        let mut quo = Vec::with_capacity(p.len());
        let mut acc = Q::zero();
        for c in p {
            acc += c;
            quo.push(acc.clone());
        }
        if !quo.pop().map_or(true, |last| last.is_zero()) {
            return None;
        }
        for (j, c) in quo.into_iter().enumerate() {
            let mut e = key.clone();
            e[fm.t] = j as u32;
            out.add_term(e, c);
        }
    }
    Some(out)
}

/// Fills a triangle in `A ⊗ Ω₂` with edges `first : v0 ⇒ v1`, `second : v0 ⇒ v2`,
/// `third : v1 ⇒ v2`. On failure returns the first obstruction.
pub fn fill_triangle(first: &Homotopy, second: &Homotopy, third: &Homotopy) -> Result<Triangle, Obstruction> {
    let f1 = first.forms.clone();
    let a = f1.base.clone();
    let f2 = Forms::omega2(&a);
    let al = f2.alg.clone();
    let b = first.body.source.clone();
    let (s, t) = (f2.s(), f2.t());
    let m_s = one_to_two(&f1, &f2, s.clone());
    let m_t = one_to_two(&f1, &f2, t.clone());
    let third_edge = f2.edge_map(Edge::Third, &f1);
    let v0 = first.start();
    let mut ex = Exactness::new(&a);
    let mut body = Morphism { source: b.clone(), target: al.clone(), images: vec![al.zero(); b.ngens()] };
    let a1 = &f1.alg;
    for x in lifting_order(&b) {
        let k = b.generator(x).degree;
        let psi_a =
            m_s.apply(&first.body.images[x]).add(&m_t.apply(&second.body.images[x])).sub(&f2.lift(&v0.images[x]));
        let w = body.apply(b.diff_of(x)).sub(&al.d(&psi_a));
        let psi1 = psi_a.add(&f2.k_s(&w));
        let e = third.body.images[x].sub(&third_edge.apply(&psi1));
        let eps0 = f1.k_t(&e);
        let c1 = f1.eval(&eps0, &[Q::one()]);
        let eps = if c1.is_zero() {
            eps0
        } else {
            match ex.preimage(&c1, k - 1) {
                Some(c) => eps0.sub(&a1.d(&a1.mul(&f1.t(), &f1.lift(&c)))),
                None => return Err(obstruction(&b, x, &a, c1, k - 1)),
            }
        };
        let (ea, eb) = split_dt(&f1, &eps);
        let ea2 = divide_t_one_minus_t(&f1, &ea).expect("edge correction vanishes at the endpoints");
        let big = al
            .mul(&al.mul(&s, &t), &m_t.apply(&ea2))
            .sub(&al.mul(&f2.ds(), &al.mul(&t, &m_t.apply(&eb))))
            .add(&al.mul(&f2.dt(), &al.mul(&s, &m_t.apply(&eb))));
        body.images[x] = psi1.add(&al.d(&big));
    }
    Ok(Triangle { forms: f2, body })
}

impl Triangle {
    pub fn edge(&self, edge: Edge, one: &Arc<Forms>) -> Homotopy {
        Homotopy { forms: one.clone(), body: self.body.compose(&self.forms.edge_map(edge, one)) }
    }
}

/// Whether two homotopies `f ⇒ g` are homotopic relative to the endpoints,
/// decided by filling the triangle `(θ, θ', const g)`. `None` means zero class.
pub fn difference_class(h: &Homotopy, h2: &Homotopy) -> Result<Option<Obstruction>, DgaError> {
    if !h.start().equals(&h2.start()) || !h.end().equals(&h2.end()) {
        return Err(DgaError::Precondition("homotopies have different endpoints".into()));
    }
    let c = Homotopy { forms: h.forms.clone(), body: h.end().compose(&h.forms.include()) };
    Ok(fill_triangle(h, h2, &c).err())
}

/// `π_ℓ(Map_C(B, A), p) ≅ h_ℓ(Der_C(B, A))` for `ℓ ≥ 1`.
#[derive(Clone, Debug)]
pub struct PiModule {
    pub level: i32,
    pub module: ModulePresentation,
}

pub fn pi_module(ext: &FreeExtension, p: &Morphism, level: i32) -> Result<PiModule, DgaError> {
    if level < 1 {
        return Err(DgaError::Precondition("homotopy groups are defined for level ≥ 1".into()));
    }
    Ok(PiModule { level, module: h_theta(ext, p, level)? })
}

/// Polynomial `p` as a constant in the degree-0 part of `A`.
pub fn poly_element(a: &Algebra, p: &Poly) -> Element {
    a.poly_to_element(p)
}
