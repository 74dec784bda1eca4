use std::sync::Arc;

use crate::engine::{self, EVec};
use crate::mono::MonoOrder;
use crate::poly::{Poly, Q};
use crate::span::Span;
use crate::AlgError;

const G: MonoOrder = MonoOrder::Grevlex;

/// `ℚ[vars] / (relations)` with a cached reduced Gröbner basis.
#[derive(Debug)]
pub struct PresentedRing {
    names: Vec<String>,
    relations: Vec<Poly>,
    gb: Vec<Poly>,
}

pub fn ideal_groebner(ord: MonoOrder, nvars: usize, gens: &[Poly]) -> Vec<Poly> {
    let ev: Vec<EVec> = gens.iter().map(|p| EVec::from_polys(ord, std::slice::from_ref(p))).collect();
    engine::groebner(ord, &ev).into_iter().map(|e| e.to_polys(1, nvars).pop().unwrap()).collect()
}

pub fn ideal_reduce(ord: MonoOrder, p: &Poly, gb: &[Poly]) -> Poly {
    let n = p.nvars();
    let ev: Vec<EVec> = gb.iter().map(|g| EVec::from_polys(ord, std::slice::from_ref(g))).collect();
    engine::reduce(ord, &EVec::from_polys(ord, std::slice::from_ref(p)), &ev).to_polys(1, n).pop().unwrap()
}

impl PresentedRing {
    pub fn new(names: Vec<String>, relations: Vec<Poly>) -> Arc<PresentedRing> {
        let n = names.len();
        let rel: Vec<Poly> = relations.into_iter().filter(|p| !p.is_zero()).collect();
        let gb = ideal_groebner(G, n, &rel);
        Arc::new(PresentedRing { names, relations: rel, gb })
    }

    pub fn polynomial(names: Vec<String>) -> Arc<PresentedRing> {
        PresentedRing::new(names, Vec::new())
    }

    pub fn nvars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn relations(&self) -> &[Poly] {
        &self.relations
    }

    pub fn gb(&self) -> &[Poly] {
        &self.gb
    }

    pub fn zero(&self) -> Poly {
        Poly::zero(self.nvars())
    }

    pub fn one(&self) -> Poly {
        Poly::one(self.nvars())
    }

    pub fn var(&self, i: usize) -> Poly {
        Poly::var(self.nvars(), i)
    }

    pub fn constant(&self, c: Q) -> Poly {
        Poly::constant(self.nvars(), c)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Normal form modulo the relations.
    pub fn reduce(&self, p: &Poly) -> Poly {
        if self.gb.is_empty() {
            return p.clone();
        }
        ideal_reduce(G, p, &self.gb)
    }

    pub fn is_zero(&self, p: &Poly) -> bool {
        self.reduce(p).is_zero()
    }

    pub fn equal(&self, a: &Poly, b: &Poly) -> bool {
        self.is_zero(&(a - b))
    }

    /// True when the ring is the zero ring.
    pub fn is_trivial(&self) -> bool {
        self.is_zero(&self.one())
    }

    pub fn same_ideal(&self, other: &PresentedRing) -> bool {
        self.names == other.names && self.gb == other.gb
    }

    /// Writes `target = Σ c_i gens_i` modulo the relations, if possible.
    pub fn lift(&self, gens: &[Poly], target: &Poly) -> Option<Vec<Poly>> {
        let n = self.nvars();
        let mut all: Vec<Vec<Poly>> = gens.iter().map(|g| vec![g.clone()]).collect();
        all.extend(self.gb.iter().map(|g| vec![g.clone()]));
        let span = Span::new(n, 1, all);
        let c = span.lift(&[target.clone()])?;
        Some(c[..gens.len()].iter().map(|p| self.reduce(p)).collect())
    }

    /// A certificate `1 = Σ c_i gens_i` modulo the relations.
    pub fn unit_ideal_certificate(&self, gens: &[Poly]) -> Option<Vec<Poly>> {
        self.lift(gens, &self.one())
    }

    pub fn inverse(&self, p: &Poly) -> Option<Poly> {
        self.lift(std::slice::from_ref(p), &self.one()).map(|mut v| v.pop().unwrap())
    }

    pub fn fmt_poly(&self, p: &Poly) -> String {
        p.fmt_with(&self.names)
    }
}

/// Ring homomorphism given by images of the source variables.
#[derive(Clone, Debug)]
pub struct RingMap {
    pub source: Arc<PresentedRing>,
    pub target: Arc<PresentedRing>,
    pub images: Vec<Poly>,
}

impl RingMap {
    pub fn new(source: Arc<PresentedRing>, target: Arc<PresentedRing>, images: Vec<Poly>) -> Result<RingMap, AlgError> {
        if images.len() != source.nvars() {
            return Err(AlgError::Arity { expected: source.nvars(), got: images.len() });
        }
        let m = RingMap { source, target, images };
        for r in m.source.relations() {
            if !m.target.is_zero(&m.apply_raw(r)) {
                return Err(AlgError::RelationNotRespected(m.source.fmt_poly(r)));
            }
        }
        Ok(m)
    }

    pub fn identity(r: &Arc<PresentedRing>) -> RingMap {
        let images = (0..r.nvars()).map(|i| r.var(i)).collect();
        RingMap { source: r.clone(), target: r.clone(), images }
    }

    fn apply_raw(&self, p: &Poly) -> Poly {
        if self.source.nvars() == 0 {
            return Poly::constant(self.target.nvars(), p.as_constant().unwrap());
        }
        p.substitute(&self.images)
    }

    pub fn apply(&self, p: &Poly) -> Poly {
        self.target.reduce(&self.apply_raw(p))
    }

    pub fn compose(&self, then: &RingMap) -> RingMap {
        let images = self.images.iter().map(|p| then.apply(p)).collect();
        RingMap { source: self.source.clone(), target: then.target.clone(), images }
    }

    fn graph_basis(&self) -> (usize, usize, Vec<Poly>) {
        let nt = self.target.nvars();
        let ns = self.source.nvars();
        let n = nt + ns;
        let tmap: Vec<usize> = (0..nt).collect();
        let mut gens: Vec<Poly> = self.target.relations().iter().map(|p| p.embed(n, &tmap)).collect();
        for (i, img) in self.images.iter().enumerate() {
            let a = Poly::var(n, nt + i);
            let b = if nt == 0 { Poly::constant(n, img.as_constant().unwrap()) } else { img.embed(n, &tmap) };
            gens.push(&a - &b);
        }
        (nt, ns, ideal_groebner(MonoOrder::Elim(nt), n, &gens))
    }

    /// Generators of the kernel, as polynomials in the source variables.
    pub fn kernel(&self) -> Vec<Poly> {
        let (nt, ns, gb) = self.graph_basis();
        let mut out = Vec::new();
        for g in gb {
            if g.terms().all(|(m, _)| m.0[..nt].iter().all(|&e| e == 0)) {
                let mut p = Poly::zero(ns);
                for (m, c) in g.terms() {
                    p.add_term(crate::mono::Mono(m.0[nt..].to_vec()), c.clone());
                }
                out.push(p);
            }
        }
        out
    }

    pub fn is_injective(&self) -> bool {
        self.kernel().iter().all(|p| self.source.is_zero(p))
    }

    pub fn is_surjective(&self) -> bool {
        let (nt, _ns, gb) = self.graph_basis();
        let n = nt + self.source.nvars();
        (0..nt).all(|k| {
            let r = ideal_reduce(MonoOrder::Elim(nt), &Poly::var(n, k), &gb);
            let ok = r.terms().all(|(m, _)| m.0[..nt].iter().all(|&e| e == 0));
            ok
        })
    }

    pub fn is_isomorphism(&self) -> bool {
        self.is_injective() && self.is_surjective()
    }
}
