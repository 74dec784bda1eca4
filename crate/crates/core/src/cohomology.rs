//! Degreewise strands, `h^n`, derivation complexes, the reduced cotangent
//! complex and the predicates built on them.

use std::collections::HashMap;
use std::sync::Arc;

use dgs_commalg::module::{self, ModuleMap, ModulePresentation};
use dgs_commalg::span::{vzero, Vector};
use dgs_commalg::{Poly, PresentedRing, RingMap, Q};
use num_traits::One;

use crate::algebra::{free_embedding, Algebra, Element, Exp, Generator, Morphism};
use crate::complex::{exact_at, induced_map, ChainComplexF, Cohomology};
use crate::DgaError;

/// `ℚ[degree-0 generators]`.
pub fn poly_ring(a: &Algebra) -> Arc<PresentedRing> {
    PresentedRing::polynomial(a.zero_gen_names())
}

/// `h⁰(A) = ℚ[degree-0 generators] / (d of degree −1 generators)`.
pub fn h0_ring(a: &Algebra) -> Arc<PresentedRing> {
    let rel: Vec<Poly> = (0..a.ngens())
        .filter(|&i| a.generator(i).degree == -1)
        .map(|i| a.element_to_poly(a.diff_of(i)).expect("d of a degree −1 generator has degree 0"))
        .collect();
    PresentedRing::new(a.zero_gen_names(), rel)
}

/// Default cohomology window `[−(number of negative generators) − 1, 0]`.
pub fn default_window(a: &Algebra) -> (i32, i32) {
    let neg = a.gens().iter().filter(|g| g.degree < 0).count() as i32;
    (-neg - 1, 0)
}

fn coords(a: &Algebra, x: &Element, index: &HashMap<Exp, usize>, rank: usize) -> Vector {
    let mut v = vzero(rank, a.zero_gens().len());
    for (key, p) in a.split(x) {
        let k = *index.get(&key).expect("term outside the expected degree");
        v[k] = p;
    }
    v
}

/// The degreewise pieces `A^n` as free modules over the degree-0 polynomial ring.
pub fn strand_complex(a: &Algebra, lo: i32, hi: i32) -> ChainComplexF {
    let bases: Vec<Vec<Exp>> = ((lo - 1)..=(hi + 1)).map(|n| a.graded_basis(n)).collect();
    let labels = bases.iter().map(|b| b.iter().map(|e| label_mono(a, e)).collect()).collect();
    let index: Vec<HashMap<Exp, usize>> =
        bases.iter().map(|b| b.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect()).collect();
    ChainComplexF::from_fn(poly_ring(a), lo, hi, labels, |n, j| {
        let k = (n - lo + 1) as usize;
        let e = &bases[k][j];
        let dx = a.d(&Element::monomial(e.clone(), Q::one()));
        coords(a, &dx, &index[k + 1], bases[k + 1].len())
    })
}

fn label_mono(a: &Algebra, e: &Exp) -> String {
    let s = a.fmt_mono(e);
    if s.is_empty() {
        "1".into()
    } else {
        s
    }
}

/// `h^n(A)` over `h⁰(A)` with representing cocycles in the strand of degree `n`.
pub fn hn(a: &Algebra, n: i32) -> Cohomology {
    let r = h0_ring(a);
    if n > 0 {
        return Cohomology { degree: n, module: ModulePresentation::zero(r), cocycles: vec![] };
    }
    let c = strand_complex(a, n, n);
    let h = c.cohomology(n);
    Cohomology { degree: n, module: module::reinterpret(&h.module, &r), cocycles: h.cocycles }
}

pub fn hn_module(a: &Algebra, n: i32) -> ModulePresentation {
    hn(a, n).module
}

/// A cocycle vector of the strand in degree `n` as an element of `A`.
pub fn strand_element(a: &Algebra, n: i32, v: &[Poly]) -> Element {
    let basis = a.graded_basis(n);
    let mut out = a.zero();
    for (e, p) in basis.iter().zip(v) {
        out = out.add(&a.join(e, p));
    }
    out
}

pub fn strand_vector(a: &Algebra, n: i32, x: &Element) -> Vector {
    let basis = a.graded_basis(n);
    let index: HashMap<Exp, usize> = basis.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
    coords(a, x, &index, basis.len())
}

/// Map `h^n(S) ⊗ h⁰(T) → h^n(T)` induced by `f : S → T`, given both cohomologies.
pub fn induced_cohomology_map(f: &Morphism, n: i32, hs: &Cohomology, ht: &Cohomology) -> Result<ModuleMap, DgaError> {
    let phi = h0_map(f);
    let src = module::base_change(&hs.module, &phi)?;
    let tgt_alg = &f.target;
    let rank = tgt_alg.graded_basis(n).len();
    let span = dgs_commalg::Span::new(tgt_alg.zero_gens().len(), rank, ht.cocycles.clone());
    let mut cols = Vec::new();
    for z in &hs.cocycles {
        let img = f.apply(&strand_element(&f.source, n, z));
        let v = strand_vector(tgt_alg, n, &img);
        let c = span.lift(&v).ok_or_else(|| DgaError::Precondition("image of a cocycle is not a cocycle".into()))?;
        cols.push(c);
    }
    let tgt = module::reinterpret(&ht.module, &phi.target);
    Ok(ModuleMap::new_unchecked(src, tgt, cols))
}

/// Comparison `h^n(B)_g → h^n(B_g)` for the localization `B → B_g`.
pub fn localization_report(b: &Arc<Algebra>, g: &Element, n: i32) -> Result<module::IsoReport, DgaError> {
    let (bg, inc) = crate::algebra::localize(b, g)?;
    let f = induced_cohomology_map(&inc, n, &hn(b, n), &hn(&bg, n))?;
    Ok(module::isomorphism_report(&f))
}

/// Whether `h^n Der_C(B, B)` vanishes for every `n` in `[lo, hi]`.
pub fn theta_acyclic(ext: &FreeExtension, lo: i32, hi: i32) -> Result<bool, DgaError> {
    if ext.rel.is_empty() {
        return Ok(true);
    }
    let id = Morphism::identity(ext.target());
    let dc = DerComplex::new(ext, &id, lo, hi)?;
    Ok((lo..=hi).all(|n| dc.cohomology(n).module.is_zero()))
}

/// `C → B` where `B` is obtained from `C` by freely adjoining generators.
#[derive(Clone, Debug)]
pub struct FreeExtension {
    pub map: Morphism,
    /// Generator of `B` hit by each generator of `C`.
    pub emb: Vec<usize>,
    /// Generators of `B` not coming from `C`.
    pub rel: Vec<usize>,
}

impl FreeExtension {
    pub fn new(map: Morphism) -> Result<FreeExtension, DgaError> {
        let emb = free_embedding(&map).ok_or(DgaError::NotFreeExtension)?;
        let rel = (0..map.target.ngens()).filter(|j| !emb.contains(j)).collect();
        Ok(FreeExtension { map, emb, rel })
    }

    /// `ℚ → B`.
    pub fn over_field(b: &Arc<Algebra>) -> FreeExtension {
        let k = Algebra::new(vec![], vec![]).unwrap();
        FreeExtension::new(Morphism::new(k, b.clone(), vec![]).unwrap()).unwrap()
    }

    pub fn source(&self) -> &Arc<Algebra> {
        &self.map.source
    }

    pub fn target(&self) -> &Arc<Algebra> {
        &self.map.target
    }

    pub fn compose(&self, then: &FreeExtension) -> Result<FreeExtension, DgaError> {
        FreeExtension::new(self.map.compose(&then.map))
    }
}

/// Replaces `f : C → B` (with `C` a polynomial ring, zero differential) by the
/// free extension `C → B[c, η]`, `dη_i = c_i − f(c_i)`, which is
/// quasi-isomorphic to `B` over `C`.
pub fn factor_through_free(f: &Morphism) -> Result<(FreeExtension, Morphism), DgaError> {
    let c = &f.source;
    if c.gens().iter().any(|g| g.degree != 0) {
        return Err(DgaError::Precondition("automatic factorization needs a polynomial source".into()));
    }
    let b = &f.target;
    let nb = b.ngens();
    let m = c.ngens();
    let mut new = Vec::new();
    for i in 0..m {
        new.push(Generator::new(b.fresh_name(&format!("{}_c", c.generator(i).name)), 0));
    }
    for i in 0..m {
        new.push(Generator::new(b.fresh_name(&format!("eta_{}", c.generator(i).name)), -1));
    }
    let big = b.extend(new, |sk| {
        let mut d = vec![sk.zero(); m];
        for i in 0..m {
            d.push(sk.gen(nb + i).sub(&f.images[i].embed(sk.ngens())));
        }
        d
    })?;
    let images = (0..m).map(|i| big.gen(nb + i)).collect();
    let ext = FreeExtension::new(Morphism::new(c.clone(), big.clone(), images)?)?;
    let back = Morphism::inclusion(b, &big);
    Ok((ext, back))
}

/// `D(b)` for the degree-`n` derivation along `f` with `D(x_i) = values[i]`.
pub fn apply_derivation(n: i32, f: &Morphism, values: &[Element], b: &Element) -> Element {
    let src = &f.source;
    let tgt = &f.target;
    let mut out = tgt.zero();
    for (e, c) in b.terms() {
        let seq: Vec<usize> = src.canonical_order().iter().copied().filter(|&i| e[i] > 0).collect();
        for (pos, &i) in seq.iter().enumerate() {
            if values[i].is_zero() {
                continue;
            }
            let mut prefix = tgt.one();
            let mut prefix_deg = 0;
            for &j in &seq[..pos] {
                prefix = tgt.mul(&prefix, &tgt.pow(&f.images[j], e[j]));
                prefix_deg += e[j] as i32 * src.generator(j).degree;
            }
            let k = e[i];
            let mid = tgt.mul(&tgt.pow(&f.images[i], k - 1), &values[i]).scale(&Q::from_integer((k as i64).into()));
            let mut suffix = tgt.one();
            for &j in &seq[pos + 1..] {
                suffix = tgt.mul(&suffix, &tgt.pow(&f.images[j], e[j]));
            }
            let mut t = tgt.mul(&tgt.mul(&prefix, &mid), &suffix).scale(c);
            if (n * prefix_deg).rem_euclid(2) == 1 {
                t = t.neg();
            }
            out = out.add(&t);
        }
    }
    out
}

/// `Der_C(B, A)` along `f : B → A` on a window.
#[derive(Clone, Debug)]
pub struct DerComplex {
    pub ext: FreeExtension,
    pub f: Morphism,
    pub complex: ChainComplexF,
    bases: Vec<Vec<(usize, Exp)>>,
}

impl DerComplex {
    pub fn new(ext: &FreeExtension, f: &Morphism, lo: i32, hi: i32) -> Result<DerComplex, DgaError> {
        if !Arc::ptr_eq(&f.source, ext.target()) && f.source.gens() != ext.target().gens() {
            return Err(DgaError::MismatchedAlgebras);
        }
        let b = ext.target().clone();
        let a = f.target.clone();
        let bases: Vec<Vec<(usize, Exp)>> = ((lo - 1)..=(hi + 1))
            .map(|n| {
                let mut v = Vec::new();
                for &x in &ext.rel {
                    for mu in a.graded_basis(n + b.generator(x).degree) {
                        v.push((x, mu));
                    }
                }
                v
            })
            .collect();
        let labels = bases
            .iter()
            .map(|bs| bs.iter().map(|(x, mu)| format!("{}->{}", b.generator(*x).name, label_mono(&a, mu))).collect())
            .collect();
        let index: Vec<HashMap<(usize, Exp), usize>> =
            bases.iter().map(|bs| bs.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect()).collect();
        let complex = ChainComplexF::from_fn(poly_ring(&a), lo, hi, labels, |n, j| {
            let k = (n - lo + 1) as usize;
            let (x, mu) = &bases[k][j];
            let mut values = vec![a.zero(); b.ngens()];
            values[*x] = Element::monomial(mu.clone(), Q::one());
            let dd = der_differential(n, f, &ext.rel, &values);
            let mut v = vzero(bases[k + 1].len(), a.zero_gens().len());
            for &y in &ext.rel {
                for (key, p) in a.split(&dd[y]) {
                    let i = index[k + 1][&(y, key)];
                    v[i] = p;
                }
            }
            v
        });
        Ok(DerComplex { ext: ext.clone(), f: f.clone(), complex, bases })
    }

    pub fn basis(&self, n: i32) -> &[(usize, Exp)] {
        &self.bases[(n - self.complex.lo + 1) as usize]
    }

    /// Derivation values on the generators of `B` for a coordinate vector.
    pub fn values(&self, n: i32, v: &[Poly]) -> Vec<Element> {
        let a = &self.f.target;
        let mut vals = vec![a.zero(); self.f.source.ngens()];
        for ((x, mu), p) in self.basis(n).iter().zip(v) {
            vals[*x] = vals[*x].add(&a.join(mu, p));
        }
        vals
    }

    pub fn vector(&self, n: i32, values: &[Element]) -> Vector {
        let a = &self.f.target;
        let basis = self.basis(n);
        let index: HashMap<(usize, Exp), usize> = basis.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        let mut v = vzero(basis.len(), a.zero_gens().len());
        for &x in &self.ext.rel {
            for (key, p) in a.split(&values[x]) {
                v[index[&(x, key)]] = p;
            }
        }
        v
    }

    /// `h^n` as a module over `h⁰(A)`.
    pub fn cohomology(&self, n: i32) -> Cohomology {
        let h = self.complex.cohomology(n);
        let r = h0_ring(&self.f.target);
        Cohomology { degree: n, module: module::reinterpret(&h.module, &r), cocycles: h.cocycles }
    }
}

/// `(dD)(x) = d_A D(x) − (−1)^n D(d_B x)` on the generators in `rel`.
pub fn der_differential(n: i32, f: &Morphism, rel: &[usize], values: &[Element]) -> Vec<Element> {
    let a = &f.target;
    let b = &f.source;
    let mut out = vec![a.zero(); b.ngens()];
    for &x in rel {
        let t1 = a.d(&values[x]);
        let t2 = apply_derivation(n, f, values, b.diff_of(x));
        out[x] = if n.rem_euclid(2) == 0 { t1.sub(&t2) } else { t1.add(&t2) };
    }
    out
}

pub fn der_complex(ext: &FreeExtension, f: &Morphism, lo: i32, hi: i32) -> Result<DerComplex, DgaError> {
    DerComplex::new(ext, f, lo, hi)
}

/// Upper end of the derivation complex: `max(−deg x)` over new generators.
pub fn der_top(ext: &FreeExtension) -> i32 {
    ext.rel.iter().map(|&x| -ext.target().generator(x).degree).max().unwrap_or(0)
}

/// `h_ℓ Der_C(B, A) = h^{−ℓ}`.
pub fn h_theta(ext: &FreeExtension, f: &Morphism, l: i32) -> Result<ModulePresentation, DgaError> {
    let n = -l;
    if ext.rel.is_empty() || n > der_top(ext) {
        return Ok(ModulePresentation::zero(h0_ring(&f.target)));
    }
    Ok(DerComplex::new(ext, f, n, n)?.cohomology(n).module)
}

/// Reduced cotangent complex `Ω̄_{B/C}` over `h⁰(B)`.
#[derive(Clone, Debug)]
pub struct CotangentData {
    pub complex: ChainComplexF,
    /// `(degree, generator names)` for each nonzero degree.
    pub labels: Vec<(i32, Vec<String>)>,
    pub lo: i32,
}

impl CotangentData {
    pub fn rank(&self, n: i32) -> usize {
        self.complex.rank(n)
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `Θ̄ = Hom(Ω̄, h⁰(B))`, in degrees `[0, N]`.
    pub fn dual(&self) -> ChainComplexF {
        self.complex.dual()
    }
}

/// Coefficient of `dy` in `d(dx)`: the left partial derivative of `d x` in `y`,
/// with every generator of nonzero degree sent to zero.
fn jacobian_entry(b: &Algebra, dx: &Element, y: usize) -> Poly {
    let z = b.zero_gens();
    let mut p = Poly::zero(z.len());
    for (e, c) in dx.terms() {
        if e[y] == 0 {
            continue;
        }
        let mut rest = e.clone();
        rest[y] -= 1;
        let coef = c * Q::from_integer((e[y] as i64).into());
        // only terms whose remaining factor has degree 0 survive; then no odd
        // generator precedes y and the left partial carries no sign
        if b.graded_gens().iter().any(|&g| rest[g] > 0) {
            continue;
        }
        let pe: Vec<u32> = z.iter().map(|&i| rest[i]).collect();
        p.add_term(dgs_commalg::Mono(pe), coef);
    }
    p
}

pub fn cotangent_bar(ext: &FreeExtension) -> CotangentData {
    let b = ext.target();
    let r = h0_ring(b);
    let mut degs: Vec<i32> = ext.rel.iter().map(|&x| b.generator(x).degree).collect();
    degs.sort();
    degs.dedup();
    let lo = degs.first().copied().unwrap_or(0).min(0);
    let by_deg = |n: i32| -> Vec<usize> { ext.rel.iter().copied().filter(|&x| b.generator(x).degree == n).collect() };
    let labels_all: Vec<Vec<String>> =
        ((lo - 1)..=1).map(|n| by_deg(n).iter().map(|&x| format!("d{}", b.generator(x).name)).collect()).collect();
    let complex = ChainComplexF::from_fn(r.clone(), lo, 0, labels_all, |n, j| {
        let x = by_deg(n)[j];
        let dx = b.diff_of(x);
        by_deg(n + 1).iter().map(|&y| r.reduce(&jacobian_entry(b, dx, y))).collect()
    });
    let labels = degs.iter().map(|&n| (n, by_deg(n).iter().map(|&x| b.generator(x).name.clone()).collect())).collect();
    CotangentData { complex, labels, lo }
}

/// Étale iff `Ω̄_{B/C}` is acyclic.
pub fn is_etale(ext: &FreeExtension) -> bool {
    if ext.rel.is_empty() {
        return true;
    }
    cotangent_bar(ext).complex.is_acyclic()
}

/// `h⁰(C)_g`, presented by an extra variable `u` with `u g = 1`.
pub fn localized_ring(r: &PresentedRing, g: &Poly) -> Arc<PresentedRing> {
    let n = r.nvars();
    let mut names = r.names().to_vec();
    let mut u = "u".to_string();
    while names.contains(&u) {
        u.push('_');
    }
    names.push(u);
    let map: Vec<usize> = (0..n).collect();
    let mut rels: Vec<Poly> = r.relations().iter().map(|p| p.embed(n + 1, &map)).collect();
    rels.push(&(&Poly::var(n + 1, n) * &g.embed(n + 1, &map)) - &Poly::one(n + 1));
    PresentedRing::new(names, rels)
}

/// Ring map `h⁰(C) → h⁰(B)` induced by a morphism.
pub fn h0_map(f: &Morphism) -> RingMap {
    let s = h0_ring(&f.source);
    let t = h0_ring(&f.target);
    let images = f
        .source
        .zero_gens()
        .into_iter()
        .map(|i| t.reduce(&f.target.element_to_poly(&f.images[i]).expect("degree-0 image")))
        .collect();
    RingMap { source: s, target: t, images }
}

/// Étale and `h⁰(C)_g → h⁰(B)` an isomorphism.
pub fn is_open_immersion(ext: &FreeExtension, witness: &Poly) -> Result<bool, DgaError> {
    if !is_etale(ext) {
        return Ok(false);
    }
    let phi = h0_map(&ext.map);
    let rc = &phi.source;
    if witness.nvars() != rc.nvars() {
        return Err(DgaError::Arity { expected: rc.nvars(), got: witness.nvars() });
    }
    let Some(inv) = phi.target.inverse(&phi.apply(witness)) else { return Ok(false) };
    let loc = localized_ring(rc, witness);
    let mut images = phi.images.clone();
    images.push(inv);
    let psi = RingMap::new(loc, phi.target.clone(), images)?;
    Ok(psi.is_isomorphism())
}

/// Ranks of `Ω̄` in each degree.
pub fn ranks(ext: &FreeExtension) -> Vec<(i32, usize)> {
    let b = ext.target();
    let mut out: Vec<(i32, usize)> = Vec::new();
    for &x in &ext.rel {
        let d = b.generator(x).degree;
        match out.iter_mut().find(|(k, _)| *k == d) {
            Some(e) => e.1 += 1,
            None => out.push((d, 1)),
        }
    }
    out.sort();
    out
}

pub fn relative_dimension(ext: &FreeExtension) -> i64 {
    ranks(ext).iter().map(|&(n, r)| if n.rem_euclid(2) == 0 { r as i64 } else { -(r as i64) }).sum()
}

/// Largest `m` with `h^{−m}(Ω̄) ≠ 0`, or 0 when there is none.
pub fn amplitude(ext: &FreeExtension) -> i32 {
    if ext.rel.is_empty() {
        return 0;
    }
    let cd = cotangent_bar(ext);
    let mut n = cd.lo;
    while n < 0 {
        if !cd.complex.cohomology(n).module.is_zero() {
            return -n;
        }
        n += 1;
    }
    0
}

/// Two-term obstruction complex and virtual dimension.
#[derive(Clone, Debug)]
pub struct ObstructionData {
    pub ranks: (usize, usize),
    pub matrix: Vec<Vec<Poly>>,
    pub ring: Arc<PresentedRing>,
    pub virtual_dimension: i64,
}

pub fn obstruction_data(ext: &FreeExtension) -> Result<ObstructionData, DgaError> {
    let amp = amplitude(ext);
    if amp > 1 {
        return Err(DgaError::Precondition(format!("amplitude {} exceeds 1", amp)));
    }
    let cd = cotangent_bar(ext);
    if cd.lo < -1 {
        return Err(DgaError::Precondition("Ω̄ has terms below degree −1".into()));
    }
    let (r1, r0) = (cd.rank(-1), cd.rank(0));
    let matrix = if cd.lo <= -1 { cd.complex.diff(-1).columns.clone() } else { vec![] };
    Ok(ObstructionData { ranks: (r1, r0), matrix, ring: cd.complex.ring.clone(), virtual_dimension: relative_dimension(ext) })
}

/// One exactness check in the long exact sequence.
#[derive(Clone, Debug)]
pub struct LesPosition {
    pub label: String,
    pub exact: bool,
}

#[derive(Clone, Debug)]
pub struct LesReport {
    pub positions: Vec<LesPosition>,
}

impl LesReport {
    pub fn all_exact(&self) -> bool {
        self.positions.iter().all(|p| p.exact)
    }
}

/// Long exact sequence of `Der_{B}(B'', A) → Der_C(B'', A) → Der_C(B, A)`
/// with its connecting map, checked at every interior position of `[lo, hi]`.
pub fn les_theta(c_to_b: &FreeExtension, b_to_b2: &FreeExtension, f: &Morphism, lo: i32, hi: i32) -> Result<LesReport, DgaError> {
    let c_to_b2 = c_to_b.compose(b_to_b2)?;
    let f_b = b_to_b2.map.compose(f);
    let x = DerComplex::new(b_to_b2, f, lo, hi + 1)?;
    let y = DerComplex::new(&c_to_b2, f, lo, hi + 1)?;
    let z = DerComplex::new(c_to_b, &f_b, lo, hi + 1)?;
    let ring = x.complex.ring.clone();
    let embed_b = &b_to_b2.emb;
    let index = |dc: &DerComplex, n: i32| -> HashMap<(usize, Exp), usize> {
        dc.basis(n).iter().cloned().enumerate().map(|(i, k)| (k, i)).collect()
    };
    // chain maps as matrices between free modules
    let incl = |n: i32| -> ModuleMap {
        let iy = index(&y, n);
        let cols = x
            .basis(n)
            .iter()
            .map(|k| {
                let mut v = vzero(y.basis(n).len(), ring.nvars());
                v[iy[k]] = Poly::one(ring.nvars());
                v
            })
            .collect();
        ModuleMap::new_unchecked(x.complex.free(n), y.complex.free(n), cols)
    };
    let restr = |n: i32| -> ModuleMap {
        let iz = index(&z, n);
        let cols = y
            .basis(n)
            .iter()
            .map(|(g, mu)| {
                let mut v = vzero(z.basis(n).len(), ring.nvars());
                if let Some(src) = embed_b.iter().position(|e| e == g) {
                    if let Some(&i) = iz.get(&(src, mu.clone())) {
                        v[i] = Poly::one(ring.nvars());
                    }
                }
                v
            })
            .collect();
        ModuleMap::new_unchecked(y.complex.free(n), z.complex.free(n), cols)
    };
    let delta = |n: i32| -> ModuleMap {
        let iy = index(&y, n);
        let ix = index(&x, n + 1);
        let dy = y.complex.diff(n);
        let cols = z
            .basis(n)
            .iter()
            .map(|(g, mu)| {
                let col = &dy.columns[iy[&(embed_b[*g], mu.clone())]];
                let mut v = vzero(x.basis(n + 1).len(), ring.nvars());
                for (k, key) in y.basis(n + 1).iter().enumerate() {
                    if let Some(&i) = ix.get(key) {
                        v[i] = col[k].clone();
                    }
                }
                v
            })
            .collect();
        ModuleMap::new_unchecked(z.complex.free(n), x.complex.free(n + 1), cols)
    };
    let mut positions = Vec::new();
    for n in lo..=hi {
        let (hx, hy, hz) = (x.complex.cohomology(n), y.complex.cohomology(n), z.complex.cohomology(n));
        let hx1 = x.complex.cohomology(n + 1);
        let hy1 = y.complex.cohomology(n + 1);
        let a1 = induced_map(&hx, &hy, &incl(n));
        let a2 = induced_map(&hy, &hz, &restr(n));
        let a3 = induced_map(&hz, &hx1, &delta(n));
        let a4 = induced_map(&hx1, &hy1, &incl(n + 1));
        if n > lo {
            positions.push(LesPosition { label: format!("h^{} Der_C(B'')", n), exact: exact_at(&a1, &a2) });
        }
        positions.push(LesPosition { label: format!("h^{} Der_C(B)", n), exact: exact_at(&a2, &a3) });
        positions.push(LesPosition { label: format!("h^{} Der_B(B'')", n + 1), exact: exact_at(&a3, &a4) });
    }
    Ok(LesReport { positions })
}

/// Chain-level connecting map for a one-generator extension `B' ⊂ B'[x]`:
/// `(dD̃)(x)` where `D̃` extends `D` by `D̃(x) = 0`; equals `−(−1)^n D(dx)`.
pub fn connecting_value(f: &Morphism, x: usize, n: i32, values: &[Element]) -> Element {
    let mut v = values.to_vec();
    v[x] = f.target.zero();
    der_differential(n, f, &[x], &v)[x].clone()
}

/// `E₂^{p,q} = h^q(A) ⊗ h^p(Θ̄_{B/C} ⊗ h⁰(A))` on `0 ≤ p ≤ N`, `qlo ≤ q ≤ 0`.
pub fn spectral_e2(ext: &FreeExtension, f: &Morphism, qlo: i32) -> Vec<((i32, i32), ModulePresentation)> {
    let a = &f.target;
    let ra = h0_ring(a);
    let cd = cotangent_bar(ext);
    let theta = cd.dual();
    let phi = h0_map(f);
    let theta_a = theta.base_change(&phi);
    let mut out = Vec::new();
    if ext.rel.is_empty() {
        return out;
    }
    for p in theta_a.lo..=theta_a.hi {
        let hp = theta_a.cohomology(p).module;
        for q in qlo..=0 {
            let hq = hn_module(a, q);
            out.push(((p, q), module::tensor(&module::reinterpret(&hq, &ra), &hp)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::koszul;
    use dgs_commalg::q;

    fn elliptic() -> Arc<Algebra> {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let f = &(&y.pow(2) - &x.pow(3).scale(&q(4))) + &x.scale(&q(4));
        koszul(&["x", "y"], &[f]).unwrap()
    }

    #[test]
    fn elliptic_strand_and_h0() {
        let a = elliptic();
        let c = strand_complex(&a, -1, 0);
        assert_eq!(c.rank(-1), 1);
        assert_eq!(c.rank(0), 1);
        let r = h0_ring(&a);
        assert_eq!(r.gb().len(), 1);
        assert!(hn_module(&a, -1).is_zero());
    }

    #[test]
    fn nonregular_koszul_has_h_minus_one() {
        let x = Poly::var(1, 0);
        let a = koszul(&["x"], &[x.clone(), x.clone()]).unwrap();
        let h = hn(&a, -1);
        assert!(!h.module.is_zero());
    }

    #[test]
    fn elliptic_cotangent() {
        let a = elliptic();
        let ext = FreeExtension::over_field(&a);
        let cd = cotangent_bar(&ext);
        assert_eq!(cd.rank(-1), 1);
        assert_eq!(cd.rank(0), 2);
        assert_eq!(relative_dimension(&ext), 1);
        let col = &cd.complex.diff(-1).columns[0];
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        assert_eq!(col[0], &x.pow(2).scale(&q(-12)) + &Poly::constant(2, q(4)));
        assert_eq!(col[1], y.scale(&q(2)));
    }

    #[test]
    fn localization_is_etale_and_open() {
        let a = elliptic();
        let (ag, inc) = crate::algebra::localize(&a, &a.gen(0)).unwrap();
        let ext = FreeExtension::new(inc).unwrap();
        assert!(is_etale(&ext));
        assert!(is_open_immersion(&ext, &Poly::var(2, 0)).unwrap());
        assert!(!is_open_immersion(&ext, &Poly::var(2, 1)).unwrap());
        let _ = ag;
    }

    #[test]
    fn square_map_not_etale() {
        let c = koszul(&["x"], &[]).unwrap();
        let sq = Morphism::checked(c.clone(), c.clone(), vec![c.pow(&c.gen(0), 2)]).unwrap();
        let (ext, _) = factor_through_free(&sq).unwrap();
        assert!(!is_etale(&ext));
    }
}
