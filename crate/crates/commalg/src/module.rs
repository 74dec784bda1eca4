use std::sync::{Arc, OnceLock};

use crate::engine::EVec;
use crate::poly::Poly;
use crate::ring::{PresentedRing, RingMap};
use crate::span::{self, vcombine, vis_zero, vunit, vzero, Span, Vector};
use crate::AlgError;

/// `R^n / (relations)` over a presented ring `R`.
#[derive(Clone, Debug)]
pub struct ModulePresentation {
    ring: Arc<PresentedRing>,
    ngens: usize,
    relations: Vec<Vector>,
    gb: Arc<OnceLock<Vec<EVec>>>,
}

impl ModulePresentation {
    pub fn new(ring: Arc<PresentedRing>, ngens: usize, relations: Vec<Vector>) -> ModulePresentation {
        let relations = relations
            .into_iter()
            .map(|r| r.iter().map(|p| ring.reduce(p)).collect::<Vector>())
            .filter(|r: &Vector| !vis_zero(r))
            .collect();
        ModulePresentation { ring, ngens, relations, gb: Arc::new(OnceLock::new()) }
    }

    pub fn free(ring: Arc<PresentedRing>, n: usize) -> ModulePresentation {
        ModulePresentation::new(ring, n, Vec::new())
    }

    pub fn zero(ring: Arc<PresentedRing>) -> ModulePresentation {
        ModulePresentation::new(ring, 0, Vec::new())
    }

    /// `R / (ideal)`.
    pub fn cyclic(ring: Arc<PresentedRing>, ideal: &[Poly]) -> ModulePresentation {
        let rel = ideal.iter().map(|p| vec![p.clone()]).collect();
        ModulePresentation::new(ring, 1, rel)
    }

    pub fn ring(&self) -> &Arc<PresentedRing> {
        &self.ring
    }

    pub fn ngens(&self) -> usize {
        self.ngens
    }

    pub fn relations(&self) -> &[Vector] {
        &self.relations
    }

    pub fn nvars(&self) -> usize {
        self.ring.nvars()
    }

    /// Relations together with `g·e_k` for every ring relation `g`.
    pub fn effective_relations(&self) -> Vec<Vector> {
        let n = self.nvars();
        let mut out = self.relations.clone();
        for k in 0..self.ngens {
            for g in self.ring.gb() {
                let mut v = vzero(self.ngens, n);
                v[k] = g.clone();
                out.push(v);
            }
        }
        out
    }

    pub fn gb(&self) -> &Vec<EVec> {
        self.gb.get_or_init(|| span::module_groebner(&self.effective_relations()))
    }

    pub fn gb_size(&self) -> usize {
        self.gb().len()
    }

    /// Normal form of an element of `R^n` modulo the relations.
    pub fn reduce(&self, v: &[Poly]) -> Vector {
        if self.ngens == 0 {
            return Vec::new();
        }
        span::module_reduce(v, self.gb(), self.nvars())
    }

    pub fn is_zero_element(&self, v: &[Poly]) -> bool {
        vis_zero(&self.reduce(v))
    }

    pub fn equal_elements(&self, a: &[Poly], b: &[Poly]) -> bool {
        self.is_zero_element(&span::vsub(a, b))
    }

    pub fn unit(&self, k: usize) -> Vector {
        vunit(self.ngens, self.nvars(), k)
    }

    pub fn zero_vector(&self) -> Vector {
        vzero(self.ngens, self.nvars())
    }

    /// Zero-module test: every generator reduces to zero.
    pub fn is_zero(&self) -> bool {
        (0..self.ngens).all(|k| self.is_zero_element(&self.unit(k)))
    }

    pub fn fmt_vector(&self, v: &[Poly]) -> String {
        let parts: Vec<String> = v.iter().map(|p| self.ring.fmt_poly(p)).collect();
        format!("({})", parts.join(", "))
    }

    pub fn describe(&self) -> String {
        let rels: Vec<String> = self.relations.iter().map(|r| self.fmt_vector(r)).collect();
        format!("R^{} / <{}>", self.ngens, rels.join(", "))
    }
}

/// `R`-linear map; `columns[k]` is the image of the `k`-th source generator.
#[derive(Clone, Debug)]
pub struct ModuleMap {
    pub source: ModulePresentation,
    pub target: ModulePresentation,
    pub columns: Vec<Vector>,
}

impl ModuleMap {
    pub fn new(source: ModulePresentation, target: ModulePresentation, columns: Vec<Vector>) -> Result<ModuleMap, AlgError> {
        if columns.len() != source.ngens() || columns.iter().any(|c| c.len() != target.ngens()) {
            return Err(AlgError::Shape);
        }
        let m = ModuleMap { source, target, columns };
        for r in m.source.relations() {
            if !m.target.is_zero_element(&m.apply_raw(r)) {
                return Err(AlgError::NotWellDefined);
            }
        }
        Ok(m)
    }

    pub fn new_unchecked(source: ModulePresentation, target: ModulePresentation, columns: Vec<Vector>) -> ModuleMap {
        ModuleMap { source, target, columns }
    }

    pub fn identity(m: &ModulePresentation) -> ModuleMap {
        let cols = (0..m.ngens()).map(|k| m.unit(k)).collect();
        ModuleMap { source: m.clone(), target: m.clone(), columns: cols }
    }

    pub fn zero_map(source: &ModulePresentation, target: &ModulePresentation) -> ModuleMap {
        let cols = (0..source.ngens()).map(|_| target.zero_vector()).collect();
        ModuleMap { source: source.clone(), target: target.clone(), columns: cols }
    }

    fn apply_raw(&self, v: &[Poly]) -> Vector {
        vcombine(self.target.ngens(), self.target.nvars(), v, &self.columns)
    }

    pub fn apply(&self, v: &[Poly]) -> Vector {
        self.target.reduce(&self.apply_raw(v))
    }

    pub fn compose(&self, then: &ModuleMap) -> ModuleMap {
        let cols = self.columns.iter().map(|c| then.apply(c)).collect();
        ModuleMap { source: self.source.clone(), target: then.target.clone(), columns: cols }
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(|c| self.target.is_zero_element(c))
    }

    pub fn equals(&self, other: &ModuleMap) -> bool {
        self.columns.iter().zip(&other.columns).all(|(a, b)| self.target.equal_elements(a, b))
    }
}

/// Module generated by `sub` inside `R^rank / (rels)`, presented on those generators.
pub fn subquotient(ring: &Arc<PresentedRing>, rank: usize, sub: &[Vector], rels: &[Vector]) -> ModulePresentation {
    let amb = ModulePresentation::new(ring.clone(), rank, rels.to_vec());
    let mut cols: Vec<Vector> = sub.to_vec();
    cols.extend(amb.effective_relations());
    let syz = Span::new(ring.nvars(), rank, cols).syzygies();
    let m = sub.len();
    let rel = syz.into_iter().map(|s| s[..m].to_vec()).collect();
    ModulePresentation::new(ring.clone(), m, rel)
}

/// Kernel of `f`, with its inclusion into the source.
pub fn kernel(f: &ModuleMap) -> (ModulePresentation, ModuleMap) {
    let ring = f.source.ring().clone();
    let m = f.source.ngens();
    let n = f.target.ngens();
    if m == 0 {
        let z = ModulePresentation::zero(ring);
        let inc = ModuleMap::zero_map(&z, &f.source);
        return (z, inc);
    }
    let pre: Vec<Vector> = if n == 0 {
        (0..m).map(|k| f.source.unit(k)).collect()
    } else {
        let mut cols = f.columns.clone();
        cols.extend(f.target.effective_relations());
        Span::new(ring.nvars(), n, cols).syzygies().into_iter().map(|s| s[..m].to_vec()).collect()
    };
    let mut gens: Vec<Vector> = Vec::new();
    for p in pre {
        let r = f.source.reduce(&p);
        if vis_zero(&r) || gens.contains(&r) {
            continue;
        }
        gens.push(r);
    }
    let k = subquotient(&ring, m, &gens, f.source.relations());
    let inc = ModuleMap::new_unchecked(k.clone(), f.source.clone(), gens);
    (k, inc)
}

/// `M / (sub)`, with the projection.
pub fn quotient(m: &ModulePresentation, sub: &[Vector]) -> (ModulePresentation, ModuleMap) {
    let mut rels = m.relations().to_vec();
    rels.extend(sub.iter().cloned());
    let q = ModulePresentation::new(m.ring().clone(), m.ngens(), rels);
    let cols = (0..m.ngens()).map(|k| q.unit(k)).collect();
    let proj = ModuleMap::new_unchecked(m.clone(), q.clone(), cols);
    (q, proj)
}

pub fn cokernel(f: &ModuleMap) -> (ModulePresentation, ModuleMap) {
    quotient(&f.target, &f.columns)
}

/// Image of `f` presented as a submodule of the target.
pub fn image(f: &ModuleMap) -> ModulePresentation {
    subquotient(f.target.ring(), f.target.ngens(), &f.columns, f.target.relations())
}

/// Witness for the isomorphism test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoReport {
    pub injective: bool,
    pub surjective: bool,
    pub kernel_gens: usize,
    pub cokernel_gens: usize,
}

impl IsoReport {
    pub fn is_iso(&self) -> bool {
        self.injective && self.surjective
    }
}

pub fn is_surjective(f: &ModuleMap) -> bool {
    cokernel(f).0.is_zero()
}

pub fn is_injective(f: &ModuleMap) -> bool {
    kernel(f).0.is_zero()
}

pub fn isomorphism_report(f: &ModuleMap) -> IsoReport {
    let (k, _) = kernel(f);
    let (c, _) = cokernel(f);
    let kg = (0..k.ngens()).filter(|&i| !k.is_zero_element(&k.unit(i))).count();
    let cg = (0..c.ngens()).filter(|&i| !c.is_zero_element(&c.unit(i))).count();
    IsoReport { injective: kg == 0, surjective: cg == 0, kernel_gens: kg, cokernel_gens: cg }
}

pub fn is_isomorphism(f: &ModuleMap) -> bool {
    isomorphism_report(f).is_iso()
}

/// Whether `v` lies in the submodule of `m` spanned by `sub`; returns coefficients.
pub fn express(m: &ModulePresentation, sub: &[Vector], v: &[Poly]) -> Option<Vec<Poly>> {
    let mut cols: Vec<Vector> = sub.to_vec();
    cols.extend(m.effective_relations());
    let c = Span::new(m.nvars(), m.ngens(), cols).lift(v)?;
    Some(c[..sub.len()].iter().map(|p| m.ring().reduce(p)).collect())
}

/// `M ⊗_R R'` along a ring map.
pub fn base_change(m: &ModulePresentation, phi: &RingMap) -> Result<ModulePresentation, AlgError> {
    if !Arc::ptr_eq(m.ring(), &phi.source) && !m.ring().same_ideal(&phi.source) {
        return Err(AlgError::RingMismatch);
    }
    let rel = m.relations().iter().map(|r| r.iter().map(|p| phi.apply(p)).collect()).collect();
    Ok(ModulePresentation::new(phi.target.clone(), m.ngens(), rel))
}

pub fn base_change_map(f: &ModuleMap, phi: &RingMap) -> Result<ModuleMap, AlgError> {
    let s = base_change(&f.source, phi)?;
    let t = base_change(&f.target, phi)?;
    let cols = f.columns.iter().map(|c| c.iter().map(|p| phi.apply(p)).collect()).collect();
    Ok(ModuleMap::new_unchecked(s, t, cols))
}

/// `{v ∈ R^rank : g v ∈ span(k)}`, the ring relations included.
pub fn colon(ring: &Arc<PresentedRing>, rank: usize, k: &[Vector], g: &Poly) -> Vec<Vector> {
    let amb = ModulePresentation::new(ring.clone(), rank, k.to_vec());
    let mut cols: Vec<Vector> = (0..rank)
        .map(|i| {
            let mut v = vzero(rank, ring.nvars());
            v[i] = g.clone();
            v
        })
        .collect();
    cols.extend(amb.effective_relations());
    Span::new(ring.nvars(), rank, cols).syzygies().into_iter().map(|s| s[..rank].to_vec()).collect()
}

/// Saturation `span(k) : g^∞`.
pub fn saturate(ring: &Arc<PresentedRing>, rank: usize, k: &[Vector], g: &Poly) -> Vec<Vector> {
    let mut cur: Vec<Vector> = k.to_vec();
    loop {
        let next = colon(ring, rank, &cur, g);
        let a = ModulePresentation::new(ring.clone(), rank, cur.clone());
        if next.iter().all(|v| a.is_zero_element(v)) {
            return cur;
        }
        cur = next;
    }
}

/// `Hom_R(M, R)` as a submodule of `R^n`; returns the presentation and the functionals.
pub fn hom_to_ring(m: &ModulePresentation) -> (ModulePresentation, Vec<Vector>) {
    let ring = m.ring().clone();
    let n = m.ngens();
    let s = m.relations().len();
    let src = ModulePresentation::free(ring.clone(), n);
    let tgt = ModulePresentation::free(ring.clone(), s);
    let cols: Vec<Vector> = (0..n).map(|k| m.relations().iter().map(|r| r[k].clone()).collect()).collect();
    let f = ModuleMap::new_unchecked(src, tgt, cols);
    let (k, inc) = kernel(&f);
    (k, inc.columns)
}

/// `M ⊗_R N`, generators `e_i ⊗ f_j` at index `i * n + j`.
pub fn tensor(m: &ModulePresentation, n: &ModulePresentation) -> ModulePresentation {
    let ring = m.ring().clone();
    let nv = ring.nvars();
    let (a, b) = (m.ngens(), n.ngens());
    let mut rels = Vec::new();
    for r in m.relations() {
        for j in 0..b {
            let mut v = vzero(a * b, nv);
            for i in 0..a {
                v[i * b + j] = r[i].clone();
            }
            rels.push(v);
        }
    }
    for r in n.relations() {
        for i in 0..a {
            let mut v = vzero(a * b, nv);
            for j in 0..b {
                v[i * b + j] = r[j].clone();
            }
            rels.push(v);
        }
    }
    ModulePresentation::new(ring, a * b, rels)
}

/// The same generators and relations read over another presentation of the
/// ambient polynomial ring (typically a quotient annihilating the module).
pub fn reinterpret(m: &ModulePresentation, ring: &Arc<PresentedRing>) -> ModulePresentation {
    assert_eq!(m.nvars(), ring.nvars());
    ModulePresentation::new(ring.clone(), m.ngens(), m.relations().to_vec())
}

pub fn direct_sum(parts: &[ModulePresentation]) -> ModulePresentation {
    let ring = parts[0].ring().clone();
    let n: usize = parts.iter().map(|p| p.ngens()).sum();
    let mut rels = Vec::new();
    let mut off = 0;
    for p in parts {
        for r in p.relations() {
            let mut v = vzero(n, ring.nvars());
            v[off..off + p.ngens()].clone_from_slice(r);
            rels.push(v);
        }
        off += p.ngens();
    }
    ModulePresentation::new(ring, n, rels)
}

/// Removes generators that a relation expresses through the others with a unit
/// coefficient. Returns the smaller module with maps `M → M'` and `M' → M`.
pub fn simplify(m: &ModulePresentation) -> (ModulePresentation, ModuleMap, ModuleMap) {
    let ring = m.ring().clone();
    let nv = ring.nvars();
    let mut rels: Vec<Vector> = m.relations().to_vec();
    // images of the original generators in terms of the surviving ones
    let mut images: Vec<Vector> = (0..m.ngens()).map(|k| vunit(m.ngens(), nv, k)).collect();
    let mut alive: Vec<bool> = vec![true; m.ngens()];
    loop {
        let mut found = None;
        'search: for (ri, r) in rels.iter().enumerate() {
            for (k, p) in r.iter().enumerate() {
                if let Some(c) = p.as_constant() {
                    if alive[k] && !num_traits::Zero::is_zero(&c) {
                        found = Some((ri, k, c));
                        break 'search;
                    }
                }
            }
        }
        let Some((ri, k, c)) = found else { break };
        let r = rels.remove(ri);
        // e_k = -(1/c) Σ_{j≠k} r_j e_j
        let inv = Poly::constant(nv, -c.recip());
        let mut sub = vzero(m.ngens(), nv);
        for (j, p) in r.iter().enumerate() {
            if j != k {
                sub[j] = &inv * p;
            }
        }
        let replace = |v: &Vector| -> Vector {
            let a = v[k].clone();
            let mut out = v.clone();
            out[k] = Poly::zero(nv);
            for (o, s) in out.iter_mut().zip(&sub) {
                *o = ring.reduce(&(&*o + &(&a * s)));
            }
            out
        };
        rels = rels.iter().map(replace).collect();
        images = images.iter().map(replace).collect();
        alive[k] = false;
    }
    let keep: Vec<usize> = (0..m.ngens()).filter(|&k| alive[k]).collect();
    let shrink = |v: &Vector| -> Vector { keep.iter().map(|&k| v[k].clone()).collect() };
    let small = ModulePresentation::new(ring.clone(), keep.len(), rels.iter().map(shrink).collect());
    let to = ModuleMap::new_unchecked(m.clone(), small.clone(), images.iter().map(shrink).collect());
    let from = ModuleMap::new_unchecked(small.clone(), m.clone(), keep.iter().map(|&k| m.unit(k)).collect());
    (small, to, from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::q;

    fn qx() -> Arc<PresentedRing> {
        PresentedRing::polynomial(vec!["x".into()])
    }

    #[test]
    fn kernel_of_x_on_dual_numbers() {
        let r = PresentedRing::new(vec!["x".into()], vec![Poly::var(1, 0).pow(2)]);
        let m = ModulePresentation::free(r.clone(), 1);
        let f = ModuleMap::new(m.clone(), m.clone(), vec![vec![Poly::var(1, 0)]]).unwrap();
        let (k, inc) = kernel(&f);
        assert!(!k.is_zero());
        // kernel generated by x, annihilated by x
        assert_eq!(inc.columns.len(), 1);
        assert_eq!(inc.columns[0], vec![Poly::var(1, 0)]);
        assert!(k.is_zero_element(&[Poly::var(1, 0)]));
        assert!(!k.is_zero_element(&[Poly::one(1)]));
    }

    #[test]
    fn multiplication_by_x_is_not_iso() {
        let m = ModulePresentation::free(qx(), 1);
        let f = ModuleMap::new(m.clone(), m.clone(), vec![vec![Poly::var(1, 0)]]).unwrap();
        let rep = isomorphism_report(&f);
        assert!(rep.injective && !rep.surjective);
        assert!(is_isomorphism(&ModuleMap::identity(&m)));
    }

    #[test]
    fn base_change_to_residue_field() {
        let r = qx();
        let k = PresentedRing::new(vec!["x".into()], vec![Poly::var(1, 0)]);
        let phi = RingMap::new(r.clone(), k.clone(), vec![Poly::var(1, 0)]).unwrap();
        let m = ModulePresentation::free(r, 1);
        let b = base_change(&m, &phi).unwrap();
        assert!(!b.is_zero());
        assert!(b.is_zero_element(&[Poly::var(1, 0)]));
    }

    #[test]
    fn simplify_prunes_units() {
        let r = qx();
        let x = Poly::var(1, 0);
        let m = ModulePresentation::new(r.clone(), 2, vec![vec![Poly::constant(1, q(2)), x.clone()]]);
        let (s, to, from) = simplify(&m);
        assert_eq!(s.ngens(), 1);
        assert!(is_isomorphism(&to));
        assert!(is_isomorphism(&from));
    }

    #[test]
    fn saturation_removes_torsion() {
        let r = PresentedRing::polynomial(vec!["x".into(), "y".into()]);
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let k = vec![vec![&x * &y]];
        let s = saturate(&r, 1, &k, &x);
        let sp = ModulePresentation::new(r.clone(), 1, s);
        assert!(sp.is_zero_element(&[y.clone()]));
    }
}
