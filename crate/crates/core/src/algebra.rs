//! Free graded-commutative algebras over ℚ with a differential.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use dgs_commalg::poly::fmt_q;
use dgs_commalg::{Mono, Poly, Q};
use num_traits::{One, Signed, Zero};

use crate::DgaError;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    pub name: String,
    pub degree: i32,
}

impl Generator {
    pub fn new(name: impl Into<String>, degree: i32) -> Generator {
        Generator { name: name.into(), degree }
    }

    pub fn is_odd(&self) -> bool {
        self.degree.rem_euclid(2) == 1
    }
}

/// Exponent vector over the generators of one algebra.
pub type Exp = Vec<u32>;

/// Linear combination of monomials. Monomial `e` stands for the product of
/// generators taken in the algebra's canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Element {
    n: usize,
    terms: BTreeMap<Exp, Q>,
}

impl Element {
    pub fn zero(n: usize) -> Element {
        Element { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Q) -> Element {
        let mut e = Element::zero(n);
        e.add_term(vec![0; n], c);
        e
    }

    pub fn one(n: usize) -> Element {
        Element::constant(n, Q::one())
    }

    pub fn monomial(e: Exp, c: Q) -> Element {
        let mut r = Element::zero(e.len());
        r.add_term(e, c);
        r
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exp, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &Exp) -> Q {
        self.terms.get(e).cloned().unwrap_or_else(Q::zero)
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&x| x == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, e: Exp, c: Q) {
        if c.is_zero() {
            return;
        }
        debug_assert_eq!(e.len(), self.n);
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, o: &Element) -> Element {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Element) -> Element {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), -c);
        }
        r
    }

    pub fn neg(&self) -> Element {
        Element { n: self.n, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    pub fn scale(&self, c: &Q) -> Element {
        if c.is_zero() {
            return Element::zero(self.n);
        }
        Element { n: self.n, terms: self.terms.iter().map(|(e, a)| (e.clone(), a * c)).collect() }
    }

    /// Pads exponent vectors with zeros (generators appended at the end).
    pub fn embed(&self, n: usize) -> Element {
        let mut r = Element::zero(n);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2.resize(n, 0);
            r.terms.insert(e2, c.clone());
        }
        r
    }

    /// Drops trailing generators; panics if any dropped exponent is nonzero.
    pub fn restrict(&self, n: usize) -> Element {
        let mut r = Element::zero(n);
        for (e, c) in &self.terms {
            assert!(e[n..].iter().all(|&x| x == 0), "element involves dropped generators");
            r.terms.insert(e[..n].to_vec(), c.clone());
        }
        r
    }

    pub fn involves(&self, g: usize) -> bool {
        self.terms.keys().any(|e| e[g] > 0)
    }
}

/// A semi-free graded-commutative DG algebra on finitely many generators.
#[derive(Debug)]
pub struct Algebra {
    gens: Vec<Generator>,
    diff: Vec<Element>,
    order: Vec<usize>,
    rank: Vec<usize>,
}

impl Algebra {
    /// Validating constructor: degrees ≤ 0, unique names, homogeneous
    /// differentials of the right degree, `d² = 0`.
    pub fn new(gens: Vec<Generator>, diff: Vec<Element>) -> Result<Arc<Algebra>, DgaError> {
        if let Some(g) = gens.iter().find(|g| g.degree > 0) {
            return Err(DgaError::PositiveDegree(g.name.clone()));
        }
        Algebra::build(gens, diff)
    }

    pub(crate) fn build(gens: Vec<Generator>, diff: Vec<Element>) -> Result<Arc<Algebra>, DgaError> {
        for (i, g) in gens.iter().enumerate() {
            if gens[..i].iter().any(|h| h.name == g.name) {
                return Err(DgaError::DuplicateName(g.name.clone()));
            }
        }
        if diff.len() != gens.len() {
            return Err(DgaError::Arity { expected: gens.len(), got: diff.len() });
        }
        let alg = Algebra::skeleton_raw(gens, diff);
        for (i, g) in alg.gens.iter().enumerate() {
            let dx = &alg.diff[i];
            if dx.nvars() != alg.ngens() {
                return Err(DgaError::Arity { expected: alg.ngens(), got: dx.nvars() });
            }
            if dx.terms().any(|(e, _)| !alg.valid_exp(e)) {
                return Err(DgaError::OddSquare(g.name.clone()));
            }
            match alg.degree(dx) {
                Ok(Some(k)) if k != g.degree + 1 => {
                    return Err(DgaError::DegreeMismatch { gen: g.name.clone(), expected: g.degree + 1, got: k })
                }
                Err(_) => return Err(DgaError::NotHomogeneous(g.name.clone())),
                _ => {}
            }
        }
        for (i, g) in alg.gens.iter().enumerate() {
            if !alg.d(&alg.diff[i]).is_zero() {
                return Err(DgaError::DSquared(g.name.clone()));
            }
        }
        Ok(Arc::new(alg))
    }

    fn skeleton_raw(gens: Vec<Generator>, diff: Vec<Element>) -> Algebra {
        let mut order: Vec<usize> = (0..gens.len()).collect();
        order.sort_by_key(|&i| (-gens[i].degree, i));
        let mut rank = vec![0; gens.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        Algebra { gens, diff, order, rank }
    }

    /// Generators only, zero differential; used to build elements before the
    /// differential is known.
    pub fn skeleton(gens: Vec<Generator>) -> Algebra {
        let n = gens.len();
        Algebra::skeleton_raw(gens, vec![Element::zero(n); n])
    }

    /// Appends generators. `diffs` receives the skeleton of the new algebra
    /// (old generators keep their differential) and returns the differentials
    /// of the new generators.
    pub fn extend(
        &self,
        new: Vec<Generator>,
        diffs: impl FnOnce(&Algebra) -> Vec<Element>,
    ) -> Result<Arc<Algebra>, DgaError> {
        let mut gens = self.gens.clone();
        gens.extend(new);
        let n = gens.len();
        let mut diff: Vec<Element> = self.diff.iter().map(|e| e.embed(n)).collect();
        diff.resize(n, Element::zero(n));
        let sk = Algebra::skeleton_raw(gens.clone(), diff.clone());
        let extra = diffs(&sk);
        diff.truncate(self.ngens());
        diff.extend(extra);
        Algebra::build(gens, diff)
    }

    pub fn ngens(&self) -> usize {
        self.gens.len()
    }

    pub fn gens(&self) -> &[Generator] {
        &self.gens
    }

    pub fn generator(&self, i: usize) -> &Generator {
        &self.gens[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }

    pub fn diff_of(&self, i: usize) -> &Element {
        &self.diff[i]
    }

    pub fn canonical_order(&self) -> &[usize] {
        &self.order
    }

    pub fn is_odd(&self, i: usize) -> bool {
        self.gens[i].is_odd()
    }

    /// Fresh generator name based on `base`.
    pub fn fresh_name(&self, base: &str) -> String {
        if self.index_of(base).is_none() {
            return base.to_string();
        }
        (1..).map(|k| format!("{}{}", base, k)).find(|n| self.index_of(n).is_none()).unwrap()
    }

    fn valid_exp(&self, e: &Exp) -> bool {
        e.iter().enumerate().all(|(i, &x)| x <= 1 || !self.is_odd(i))
    }

    pub fn zero(&self) -> Element {
        Element::zero(self.ngens())
    }

    pub fn one(&self) -> Element {
        Element::one(self.ngens())
    }

    pub fn constant(&self, c: Q) -> Element {
        Element::constant(self.ngens(), c)
    }

    pub fn gen(&self, i: usize) -> Element {
        let mut e = vec![0; self.ngens()];
        e[i] = 1;
        Element::monomial(e, Q::one())
    }

    pub fn gen_named(&self, name: &str) -> Option<Element> {
        self.index_of(name).map(|i| self.gen(i))
    }

    pub fn mono_degree(&self, e: &Exp) -> i32 {
        e.iter().zip(&self.gens).map(|(&x, g)| x as i32 * g.degree).sum()
    }

    /// `Ok(None)` for zero, error if not homogeneous.
    pub fn degree(&self, a: &Element) -> Result<Option<i32>, DgaError> {
        let mut deg = None;
        for (e, _) in a.terms() {
            let k = self.mono_degree(e);
            match deg {
                None => deg = Some(k),
                Some(d) if d != k => return Err(DgaError::NotHomogeneous(self.fmt(a))),
                _ => {}
            }
        }
        Ok(deg)
    }

    /// Sign and product of two monomials, `None` if an odd generator repeats.
    pub fn mono_mul(&self, a: &Exp, b: &Exp) -> Option<(bool, Exp)> {
        let mut neg = false;
        let mut odd_a_after: usize = 0;
        // count pairs (odd g in a, odd h in b) with rank(h) < rank(g)
        for &i in self.order.iter().rev() {
            if !self.is_odd(i) {
                continue;
            }
            if b[i] > 0 {
                if a[i] > 0 {
                    return None;
                }
                if odd_a_after % 2 == 1 {
                    neg = !neg;
                }
            }
            if a[i] > 0 {
                odd_a_after += 1;
            }
        }
        Some((neg, a.iter().zip(b).map(|(x, y)| x + y).collect()))
    }

    pub fn mul(&self, a: &Element, b: &Element) -> Element {
        assert_eq!(a.nvars(), b.nvars(), "elements of different algebras");
        let mut r = Element::zero(self.ngens());
        if a.is_zero() || b.is_zero() {
            return r;
        }
        for (ea, ca) in a.terms() {
            for (eb, cb) in b.terms() {
                if let Some((neg, e)) = self.mono_mul(ea, eb) {
                    let c = ca * cb;
                    r.add_term(e, if neg { -c } else { c });
                }
            }
        }
        r
    }

    /// Checked product (errors on mismatched algebras).
    pub fn multiply(&self, a: &Element, b: &Element) -> Result<Element, DgaError> {
        if a.nvars() != self.ngens() || b.nvars() != self.ngens() {
            return Err(DgaError::MismatchedAlgebras);
        }
        Ok(self.mul(a, b))
    }

    pub fn pow(&self, a: &Element, k: u32) -> Element {
        let mut r = self.one();
        for _ in 0..k {
            r = self.mul(&r, a);
        }
        r
    }

    /// Differential of a single monomial, expanding factors in canonical order.
    fn d_mono(&self, e: &Exp) -> Element {
        let mut out = self.zero();
        let mut prefix_deg: i32 = 0;
        let mut prefix = vec![0u32; self.ngens()];
        for &i in &self.order {
            let k = e[i];
            if k == 0 {
                continue;
            }
            let dg = &self.diff[i];
            if !dg.is_zero() {
                // d(g^k) = k g^{k-1} dg for even g, dg for odd g (k = 1)
                let mut left = prefix.clone();
                left[i] += k - 1;
                let mut rest = vec![0u32; self.ngens()];
                for &j in &self.order {
                    if self.rank[j] > self.rank[i] {
                        rest[j] = e[j];
                    }
                }
                let l = Element::monomial(left, Q::from_integer((k as i64).into()));
                let r = Element::monomial(rest, Q::one());
                let t = self.mul(&self.mul(&l, dg), &r);
                let t = if prefix_deg.rem_euclid(2) == 1 { t.neg() } else { t };
                out = out.add(&t);
            }
            prefix[i] = k;
            prefix_deg += k as i32 * self.gens[i].degree;
        }
        out
    }

    pub fn d(&self, a: &Element) -> Element {
        let mut out = self.zero();
        for (e, c) in a.terms() {
            out = out.add(&self.d_mono(e).scale(c));
        }
        out
    }

    pub fn differentiate(&self, a: &Element) -> Result<Element, DgaError> {
        if a.nvars() != self.ngens() {
            return Err(DgaError::MismatchedAlgebras);
        }
        Ok(self.d(a))
    }

    pub fn fmt_mono(&self, e: &Exp) -> String {
        let mut parts = Vec::new();
        for &i in &self.order {
            match e[i] {
                0 => {}
                1 => parts.push(self.gens[i].name.clone()),
                k => parts.push(format!("{}^{}", self.gens[i].name, k)),
            }
        }
        parts.join("*")
    }

    pub fn fmt(&self, a: &Element) -> String {
        if a.is_zero() {
            return "0".into();
        }
        let mut terms: Vec<(&Exp, &Q)> = a.terms().collect();
        // highest degree-0 weight first, for readability
        terms.sort_by(|x, y| {
            let kx: u32 = x.0.iter().sum();
            let ky: u32 = y.0.iter().sum();
            ky.cmp(&kx).then_with(|| y.0.cmp(x.0))
        });
        let mut out = String::new();
        for (k, (e, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let m = self.fmt_mono(e);
            if m.is_empty() {
                out.push_str(&fmt_q(&a));
            } else if a.is_one() {
                out.push_str(&m);
            } else {
                let _ = write!(out, "{}*{}", fmt_q(&a), m);
            }
        }
        out
    }

    // ---- the degree-0 polynomial subring ----

    /// Indices of generators of degree 0.
    pub fn zero_gens(&self) -> Vec<usize> {
        (0..self.ngens()).filter(|&i| self.gens[i].degree == 0).collect()
    }

    pub fn zero_gen_names(&self) -> Vec<String> {
        self.zero_gens().into_iter().map(|i| self.gens[i].name.clone()).collect()
    }

    /// Indices of generators of nonzero degree.
    pub fn graded_gens(&self) -> Vec<usize> {
        (0..self.ngens()).filter(|&i| self.gens[i].degree != 0).collect()
    }

    /// Splits an element into `graded monomial ↦ polynomial in degree-0 generators`.
    pub fn split(&self, a: &Element) -> BTreeMap<Exp, Poly> {
        let z = self.zero_gens();
        let mut out: BTreeMap<Exp, Poly> = BTreeMap::new();
        for (e, c) in a.terms() {
            let mut key = e.clone();
            let mut pe = Vec::with_capacity(z.len());
            for &i in &z {
                pe.push(e[i]);
                key[i] = 0;
            }
            out.entry(key).or_insert_with(|| Poly::zero(z.len())).add_term(Mono(pe), c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// Inverse of [`Algebra::split`] for a single graded monomial.
    pub fn join(&self, key: &Exp, p: &Poly) -> Element {
        let z = self.zero_gens();
        let mut r = self.zero();
        for (m, c) in p.terms() {
            let mut e = key.clone();
            for (k, &i) in z.iter().enumerate() {
                e[i] += m.0[k];
            }
            r.add_term(e, c.clone());
        }
        r
    }

    pub fn poly_to_element(&self, p: &Poly) -> Element {
        self.join(&vec![0; self.ngens()], p)
    }

    /// The element as a polynomial in degree-0 generators, if it lies there.
    pub fn element_to_poly(&self, a: &Element) -> Option<Poly> {
        let s = self.split(a);
        let zero_key = vec![0; self.ngens()];
        match s.len() {
            0 => Some(Poly::zero(self.zero_gens().len())),
            1 => s.get(&zero_key).cloned(),
            _ => None,
        }
    }

    /// Monomials in the graded generators of total degree `n`.
    pub fn graded_basis(&self, n: i32) -> Vec<Exp> {
        let gs: Vec<usize> = self.graded_gens();
        let mut out = Vec::new();
        let mut cur = vec![0u32; self.ngens()];
        fn rec(alg: &Algebra, gs: &[usize], k: usize, left: i32, cur: &mut Exp, out: &mut Vec<Exp>) {
            if k == gs.len() {
                if left == 0 {
                    out.push(cur.clone());
                }
                return;
            }
            let i = gs[k];
            let d = alg.gens[i].degree;
            let maxe = if alg.is_odd(i) { 1 } else { u32::MAX };
            let mut e = 0u32;
            loop {
                let rem = left - e as i32 * d;
                // all graded generators are negative for ordinary algebras
                if d < 0 && rem > 0 {
                    break;
                }
                cur[i] = e;
                rec(alg, gs, k + 1, rem, cur, out);
                cur[i] = 0;
                if e >= maxe || d > 0 {
                    break;
                }
                e += 1;
            }
        }
        if n <= 0 {
            rec(self, &gs, 0, n, &mut cur, &mut out);
        }
        out.sort();
        out
    }
}

/// Degree-0 map of algebras given by generator images.
#[derive(Clone, Debug)]
pub struct Morphism {
    pub source: Arc<Algebra>,
    pub target: Arc<Algebra>,
    pub images: Vec<Element>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorphismReport {
    pub valid: bool,
    pub violations: Vec<String>,
}

impl Morphism {
    pub fn new(source: Arc<Algebra>, target: Arc<Algebra>, images: Vec<Element>) -> Result<Morphism, DgaError> {
        if images.len() != source.ngens() {
            return Err(DgaError::Arity { expected: source.ngens(), got: images.len() });
        }
        if images.iter().any(|e| e.nvars() != target.ngens()) {
            return Err(DgaError::MismatchedAlgebras);
        }
        Ok(Morphism { source, target, images })
    }

    /// Validating constructor.
    pub fn checked(source: Arc<Algebra>, target: Arc<Algebra>, images: Vec<Element>) -> Result<Morphism, DgaError> {
        let m = Morphism::new(source, target, images)?;
        let rep = m.check();
        if !rep.valid {
            return Err(DgaError::InvalidMorphism(rep.violations[0].clone()));
        }
        Ok(m)
    }

    pub fn identity(a: &Arc<Algebra>) -> Morphism {
        let images = (0..a.ngens()).map(|i| a.gen(i)).collect();
        Morphism { source: a.clone(), target: a.clone(), images }
    }

    /// Inclusion of `a` into an algebra obtained from it by appending generators.
    pub fn inclusion(a: &Arc<Algebra>, b: &Arc<Algebra>) -> Morphism {
        let images = (0..a.ngens()).map(|i| b.gen(i)).collect();
        Morphism { source: a.clone(), target: b.clone(), images }
    }

    pub fn apply(&self, a: &Element) -> Element {
        let t = &self.target;
        let mut cache: HashMap<(usize, u32), Element> = HashMap::new();
        let mut out = t.zero();
        for (e, c) in a.terms() {
            let mut acc = t.constant(c.clone());
            for &i in self.source.canonical_order() {
                let k = e[i];
                if k == 0 {
                    continue;
                }
                let p = cache.entry((i, k)).or_insert_with(|| t.pow(&self.images[i], k)).clone();
                acc = t.mul(&acc, &p);
                if acc.is_zero() {
                    break;
                }
            }
            out = out.add(&acc);
        }
        out
    }

    pub fn compose(&self, then: &Morphism) -> Morphism {
        let images = self.images.iter().map(|e| then.apply(e)).collect();
        Morphism { source: self.source.clone(), target: then.target.clone(), images }
    }

    /// Degree and differential compatibility on every generator.
    pub fn check(&self) -> MorphismReport {
        let mut violations = Vec::new();
        for i in 0..self.source.ngens() {
            let g = self.source.generator(i);
            let img = &self.images[i];
            match self.target.degree(img) {
                Ok(Some(k)) if k != g.degree => {
                    violations.push(format!("{}: image has degree {} instead of {}", g.name, k, g.degree))
                }
                Err(_) => violations.push(format!("{}: image is not homogeneous", g.name)),
                _ => {}
            }
            let lhs = self.apply(self.source.diff_of(i));
            let rhs = self.target.d(img);
            if lhs != rhs {
                violations.push(format!(
                    "{}: f(d x) = {} but d f(x) = {}",
                    g.name,
                    self.target.fmt(&lhs),
                    self.target.fmt(&rhs)
                ));
            }
        }
        MorphismReport { valid: violations.is_empty(), violations }
    }

    pub fn equals(&self, other: &Morphism) -> bool {
        self.images == other.images
    }
}

pub fn check_morphism(f: &Morphism) -> MorphismReport {
    f.check()
}

/// `ℚ[vars]{ξ_1..ξ_r}` with `dξ_i = f_i`.
pub fn koszul(vars: &[&str], seq: &[Poly]) -> Result<Arc<Algebra>, DgaError> {
    koszul_named(vars, seq, "xi")
}

pub fn koszul_named(vars: &[&str], seq: &[Poly], odd: &str) -> Result<Arc<Algebra>, DgaError> {
    let mut gens: Vec<Generator> = vars.iter().map(|v| Generator::new(*v, 0)).collect();
    for k in 0..seq.len() {
        let name = if seq.len() == 1 { odd.to_string() } else { format!("{}{}", odd, k + 1) };
        gens.push(Generator::new(name, -1));
    }
    let n = gens.len();
    let sk = Algebra::skeleton(gens.clone());
    let mut diff = vec![Element::zero(n); vars.len()];
    for p in seq {
        if p.nvars() != vars.len() {
            return Err(DgaError::Arity { expected: vars.len(), got: p.nvars() });
        }
        diff.push(sk.poly_to_element(p));
    }
    Algebra::new(gens, diff)
}

/// Adjoins `u` (degree 0) and `ε` (degree −1) with `dε = u·g − 1`.
pub fn localize(b: &Arc<Algebra>, g: &Element) -> Result<(Arc<Algebra>, Morphism), DgaError> {
    let u = b.fresh_name("u");
    let e = b.fresh_name("eps");
    localize_named(b, g, &u, &e)
}

pub fn localize_named(b: &Arc<Algebra>, g: &Element, u: &str, eps: &str) -> Result<(Arc<Algebra>, Morphism), DgaError> {
    match b.degree(g)? {
        Some(0) => {}
        None => {}
        Some(k) => return Err(DgaError::NotDegreeZero(k)),
    }
    let n = b.ngens();
    let bg = b.extend(vec![Generator::new(u, 0), Generator::new(eps, -1)], |sk| {
        let ge = g.embed(n + 2);
        let de = sk.mul(&sk.gen(n), &ge).sub(&sk.one());
        vec![Element::zero(n + 2), de]
    })?;
    let inc = Morphism::inclusion(b, &bg);
    Ok((bg, inc))
}

/// Result of [`tensor_product`].
pub struct Tensor {
    pub algebra: Arc<Algebra>,
    pub from_b: Morphism,
    pub from_c: Morphism,
}

/// `B ⊗_A C` where `A → B` is a free extension (generators of `A` map to
/// distinct generators of `B`, differentials compatible). If only `A → C`
/// is free the legs are swapped.
pub fn tensor_product(a_to_b: &Morphism, a_to_c: &Morphism) -> Result<Tensor, DgaError> {
    if let Some(emb) = free_embedding(a_to_b) {
        return tensor_free(a_to_b, &emb, a_to_c);
    }
    if let Some(emb) = free_embedding(a_to_c) {
        let t = tensor_free(a_to_c, &emb, a_to_b)?;
        return Ok(Tensor { algebra: t.algebra, from_b: t.from_c, from_c: t.from_b });
    }
    Err(DgaError::NotFreeExtension)
}

/// Generator indices in the target hit by the source generators, if the map
/// is a free extension.
pub fn free_embedding(f: &Morphism) -> Option<Vec<usize>> {
    let mut emb = Vec::new();
    for img in &f.images {
        if img.len() != 1 {
            return None;
        }
        let (e, c) = img.terms().next().unwrap();
        if !c.is_one() || e.iter().sum::<u32>() != 1 {
            return None;
        }
        let j = e.iter().position(|&x| x == 1).unwrap();
        if emb.contains(&j) {
            return None;
        }
        emb.push(j);
    }
    if !f.check().valid {
        return None;
    }
    Some(emb)
}

fn tensor_free(a_to_b: &Morphism, emb: &[usize], a_to_c: &Morphism) -> Result<Tensor, DgaError> {
    let b = &a_to_b.target;
    let c = &a_to_c.target;
    let extra: Vec<usize> = (0..b.ngens()).filter(|j| !emb.contains(j)).collect();
    let mut new_gens = Vec::new();
    for &j in &extra {
        let g = b.generator(j);
        let name = if c.index_of(&g.name).is_some() || new_gens.iter().any(|h: &Generator| h.name == g.name) {
            let mut k = 1;
            loop {
                let cand = format!("{}_{}", g.name, k);
                if c.index_of(&cand).is_none() && !new_gens.iter().any(|h: &Generator| h.name == cand) {
                    break cand;
                }
                k += 1;
            }
        } else {
            g.name.clone()
        };
        new_gens.push(Generator::new(name, g.degree));
    }
    let nc = c.ngens();
    let mut images_b: Vec<Option<Element>> = vec![None; b.ngens()];
    let mut err = None;
    let t = c.extend(new_gens, |sk| {
        let n = sk.ngens();
        for (i, &j) in emb.iter().enumerate() {
            images_b[j] = Some(a_to_c.images[i].embed(n));
        }
        for (k, &j) in extra.iter().enumerate() {
            images_b[j] = Some(sk.gen(nc + k));
        }
        let tmp = Morphism {
            source: b.clone(),
            target: Arc::new(Algebra::skeleton_raw(sk.gens.clone(), sk.diff.clone())),
            images: images_b.iter().map(|e| e.clone().unwrap()).collect(),
        };
        let mut out = Vec::new();
        for &j in &extra {
            out.push(tmp.apply(b.diff_of(j)));
        }
        if out.len() != extra.len() {
            err = Some(DgaError::NotFreeExtension);
        }
        out
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let from_b = Morphism::new(b.clone(), t.clone(), images_b.into_iter().map(|e| e.unwrap()).collect())?;
    let from_c = Morphism::inclusion(c, &t);
    Ok(Tensor { algebra: t, from_b, from_c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dgs_commalg::q;

    fn two_odd() -> Arc<Algebra> {
        // ℚ[x,y]{ξ1, ξ2}, dξ1 = x, dξ2 = y
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        koszul(&["x", "y"], &[x, y]).unwrap()
    }

    #[test]
    fn odd_generators_anticommute() {
        let a = two_odd();
        let x1 = a.gen(2);
        let x2 = a.gen(3);
        assert!(a.mul(&x1, &x1).is_zero());
        assert_eq!(a.mul(&x1, &x2), a.mul(&x2, &x1).neg());
        let x = a.gen(0);
        let y = a.gen(1);
        assert_eq!(a.mul(&x, &y), a.mul(&y, &x));
    }

    #[test]
    fn leibniz_on_product_of_odd() {
        let a = two_odd();
        let p = a.mul(&a.gen(2), &a.gen(3));
        let expect = a.mul(&a.gen(0), &a.gen(3)).sub(&a.mul(&a.gen(2), &a.gen(1)));
        assert_eq!(a.d(&p), expect);
        assert!(a.d(&a.constant(q(7))).is_zero());
    }

    #[test]
    fn rejects_bad_degree() {
        let gens = vec![Generator::new("x", 0), Generator::new("y", 0), Generator::new("xi", -2)];
        let sk = Algebra::skeleton(gens.clone());
        let d = sk.mul(&sk.gen(0), &sk.gen(1));
        let r = Algebra::new(gens, vec![sk.zero(), sk.zero(), d]);
        assert!(matches!(r, Err(DgaError::DegreeMismatch { .. })));
    }

    #[test]
    fn rejects_nonzero_square() {
        // dη = ξ with dξ = x: d²η = x ≠ 0
        let gens = vec![Generator::new("x", 0), Generator::new("xi", -1), Generator::new("eta", -2)];
        let sk = Algebra::skeleton(gens.clone());
        let r = Algebra::new(gens, vec![sk.zero(), sk.gen(0), sk.gen(1)]);
        assert!(matches!(r, Err(DgaError::DSquared(_))));
    }

    #[test]
    fn koszul_morphism_checks() {
        let x = Poly::var(1, 0);
        let k = koszul(&["x"], &[x]).unwrap();
        let r = Algebra::new(vec![Generator::new("x", 0)], vec![Element::zero(1)]).unwrap();
        let bad = Morphism::new(k.clone(), r.clone(), vec![r.gen(0), r.zero()]).unwrap();
        assert!(!bad.check().valid);
        assert!(Morphism::identity(&k).check().valid);
        let (kg, inc) = localize(&k, &k.gen(0)).unwrap();
        assert!(inc.check().valid);
        assert_eq!(kg.ngens(), 4);
    }

    #[test]
    fn graded_basis_counts() {
        let a = two_odd();
        assert_eq!(a.graded_basis(0).len(), 1);
        assert_eq!(a.graded_basis(-1).len(), 2);
        assert_eq!(a.graded_basis(-2).len(), 1);
        assert_eq!(a.graded_basis(-3).len(), 0);
    }
}
