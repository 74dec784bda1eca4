//! Buchberger engine for submodules of free modules `P^r`.
//!
//! Elements are sparse lists of `(position, monomial, coefficient)` kept in
//! descending position-over-term order: a smaller position always dominates,
//! ties are broken by the monomial order. Ideals are the case `r = 1`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};

use num_traits::{One, Zero};

use crate::mono::{Mono, MonoOrder};
use crate::poly::{Poly, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub pos: usize,
    pub mono: Mono,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EVec {
    pub terms: Vec<(Term, Q)>,
}

fn cmp_term(ord: MonoOrder, a: &Term, b: &Term) -> Ordering {
    b.pos.cmp(&a.pos).then_with(|| ord.cmp(&a.mono, &b.mono))
}

impl EVec {
    pub fn zero() -> EVec {
        EVec { terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn lead(&self) -> Option<&(Term, Q)> {
        self.terms.first()
    }

    pub fn from_polys(ord: MonoOrder, comps: &[Poly]) -> EVec {
        let mut terms = Vec::new();
        for (pos, p) in comps.iter().enumerate() {
            for (m, c) in p.terms() {
                terms.push((Term { pos, mono: m.clone() }, c.clone()));
            }
        }
        terms.sort_by(|a, b| cmp_term(ord, &b.0, &a.0));
        EVec { terms }
    }

    pub fn to_polys(&self, rank: usize, nvars: usize) -> Vec<Poly> {
        let mut out = vec![Poly::zero(nvars); rank];
        for (t, c) in &self.terms {
            out[t.pos].add_term(t.mono.clone(), c.clone());
        }
        out
    }

    fn scale(&mut self, c: &Q) {
        for t in &mut self.terms {
            t.1 = &t.1 * c;
        }
    }

    fn make_monic(&mut self) {
        if let Some((_, c)) = self.terms.first() {
            if !c.is_one() {
                let inv = c.recip();
                self.scale(&inv);
            }
        }
    }

    /// `self - c * m * other`, merged in order.
    fn sub_mul(&self, ord: MonoOrder, c: &Q, m: &Mono, other: &EVec) -> EVec {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let mut i = 0;
        let mut j = 0;
        let shifted: Vec<(Term, Q)> = other
            .terms
            .iter()
            .map(|(t, a)| (Term { pos: t.pos, mono: t.mono.mul(m) }, a * c))
            .collect();
        while i < self.terms.len() && j < shifted.len() {
            match cmp_term(ord, &self.terms[i].0, &shifted[j].0) {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push((shifted[j].0.clone(), -shifted[j].1.clone()));
                    j += 1;
                }
                Ordering::Equal => {
                    let s = &self.terms[i].1 - &shifted[j].1;
                    if !s.is_zero() {
                        out.push((self.terms[i].0.clone(), s));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        for t in &shifted[j..] {
            out.push((t.0.clone(), -t.1.clone()));
        }
        EVec { terms: out }
    }
}

/// Full reduction of `f` modulo `basis` (need not be a Gröbner basis).
pub fn reduce(ord: MonoOrder, f: &EVec, basis: &[EVec]) -> EVec {
    let mut rem: Vec<(Term, Q)> = Vec::new();
    let mut cur = f.clone();
    'outer: while let Some((t, c)) = cur.terms.first().cloned() {
        for g in basis {
            let (gt, gc) = match g.lead() {
                Some(l) => l,
                None => continue,
            };
            if gt.pos == t.pos && gt.mono.divides(&t.mono) {
                let m = gt.mono.quotient_of(&t.mono);
                let coef = &c / gc;
                cur = cur.sub_mul(ord, &coef, &m, g);
                continue 'outer;
            }
        }
        rem.push((t, c));
        cur.terms.remove(0);
    }
    EVec { terms: rem }
}

fn spoly(ord: MonoOrder, f: &EVec, g: &EVec) -> EVec {
    let (ft, fc) = f.lead().unwrap();
    let (gt, gc) = g.lead().unwrap();
    let l = ft.mono.lcm(&gt.mono);
    let mf = ft.mono.quotient_of(&l);
    let mg = gt.mono.quotient_of(&l);
    let a = EVec::zero().sub_mul(ord, &fc.recip(), &mf, f);
    // a = -(1/fc) mf f ; result = (1/gc) mg g - (1/fc) mf f
    a.sub_mul(ord, &(-gc.recip()), &mg, g)
}

/// Reduced Gröbner basis. Output is sorted by descending leading term and monic.
pub fn groebner(ord: MonoOrder, gens: &[EVec]) -> Vec<EVec> {
    let mut basis: Vec<EVec> = Vec::new();
    for g in gens {
        let mut r = reduce(ord, g, &basis);
        if !r.is_zero() {
            r.make_monic();
            basis.push(r);
        }
    }
    let mut pairs: BTreeSet<(u32, usize, usize)> = BTreeSet::new();
    let lcm_deg = |b: &Vec<EVec>, i: usize, j: usize| -> u32 {
        b[i].lead().unwrap().0.mono.lcm(&b[j].lead().unwrap().0.mono).degree()
    };
    for j in 0..basis.len() {
        for i in 0..j {
            if basis[i].lead().unwrap().0.pos == basis[j].lead().unwrap().0.pos {
                pairs.insert((lcm_deg(&basis, i, j), i, j));
            }
        }
    }
    let mut pending: HashSet<(usize, usize)> = pairs.iter().map(|&(_, i, j)| (i, j)).collect();
    while let Some(&p) = pairs.iter().next() {
        pairs.remove(&p);
        let (_, i, j) = p;
        pending.remove(&(i, j));
        let li = &basis[i].lead().unwrap().0;
        let lj = &basis[j].lead().unwrap().0;
        if li.mono.coprime(&lj.mono) && is_monomial_like(&basis[i]) && is_monomial_like(&basis[j]) {
            continue;
        }
        if chain_criterion(&basis, &pending, i, j) {
            continue;
        }
        let s = spoly(ord, &basis[i], &basis[j]);
        let mut r = reduce(ord, &s, &basis);
        if r.is_zero() {
            continue;
        }
        r.make_monic();
        let k = basis.len();
        let pos = r.lead().unwrap().0.pos;
        basis.push(r);
        for i2 in 0..k {
            if basis[i2].lead().unwrap().0.pos == pos {
                pairs.insert((lcm_deg(&basis, i2, k), i2, k));
                pending.insert((i2, k));
            }
        }
    }
    interreduce(ord, basis)
}

// The product criterion is only applied to single-position elements
// (ideal case); for genuine module elements it is unsound.
fn is_monomial_like(f: &EVec) -> bool {
    let p = f.lead().unwrap().0.pos;
    f.terms.iter().all(|(t, _)| t.pos == p)
}

fn chain_criterion(basis: &[EVec], pending: &HashSet<(usize, usize)>, i: usize, j: usize) -> bool {
    let li = &basis[i].lead().unwrap().0;
    let lj = &basis[j].lead().unwrap().0;
    let l = li.mono.lcm(&lj.mono);
    let in_pending = |a: usize, b: usize| -> bool {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        pending.contains(&(a, b))
    };
    for (k, g) in basis.iter().enumerate() {
        if k == i || k == j {
            continue;
        }
        let lk = &g.lead().unwrap().0;
        if lk.pos == li.pos && lk.mono.divides(&l) && !in_pending(i, k) && !in_pending(j, k) {
            return true;
        }
    }
    false
}

fn interreduce(ord: MonoOrder, basis: Vec<EVec>) -> Vec<EVec> {
    // drop elements whose leading term is divisible by another leading term
    let mut keep: Vec<EVec> = Vec::new();
    for (i, f) in basis.iter().enumerate() {
        let ft = &f.lead().unwrap().0;
        let redundant = basis.iter().enumerate().any(|(j, g)| {
            if i == j {
                return false;
            }
            let gt = &g.lead().unwrap().0;
            gt.pos == ft.pos && gt.mono.divides(&ft.mono) && (gt.mono != ft.mono || j < i)
        });
        if !redundant {
            keep.push(f.clone());
        }
    }
    let mut out = Vec::with_capacity(keep.len());
    for i in 0..keep.len() {
        let others: Vec<EVec> = keep.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone()).collect();
        let head = keep[i].terms[0].clone();
        let tail = EVec { terms: keep[i].terms[1..].to_vec() };
        let mut r = reduce(ord, &tail, &others);
        r.terms.insert(0, head);
        r.make_monic();
        out.push(r);
    }
    out.sort_by(|a, b| cmp_term(ord, &b.lead().unwrap().0, &a.lead().unwrap().0));
    out
}

/// Checks Buchberger's criterion: all S-pairs reduce to zero.
pub fn is_groebner(ord: MonoOrder, basis: &[EVec]) -> bool {
    for j in 0..basis.len() {
        for i in 0..j {
            if basis[i].lead().unwrap().0.pos != basis[j].lead().unwrap().0.pos {
                continue;
            }
            let s = spoly(ord, &basis[i], &basis[j]);
            if !reduce(ord, &s, basis).is_zero() {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::q;

    fn ideal(ps: &[Poly]) -> Vec<EVec> {
        ps.iter().map(|p| EVec::from_polys(MonoOrder::Grevlex, std::slice::from_ref(p))).collect()
    }

    #[test]
    fn duplicate_generators() {
        let x = Poly::var(1, 0);
        let gb = groebner(MonoOrder::Grevlex, &ideal(&[x.clone(), x.clone()]));
        assert_eq!(gb.len(), 1);
        assert_eq!(gb[0].to_polys(1, 1)[0], x);
    }

    #[test]
    fn cyclic_example_is_groebner() {
        let x = Poly::var(3, 0);
        let y = Poly::var(3, 1);
        let z = Poly::var(3, 2);
        let f1 = &(&x + &y) + &z;
        let f2 = &(&(&x * &y) + &(&y * &z)) + &(&z * &x);
        let f3 = &(&(&x * &y) * &z) - &Poly::one(3);
        let gb = groebner(MonoOrder::Grevlex, &ideal(&[f1, f2, f3]));
        assert!(is_groebner(MonoOrder::Grevlex, &gb));
        // 1 is not in the ideal
        let one = EVec::from_polys(MonoOrder::Grevlex, &[Poly::constant(3, q(1))]);
        assert!(!reduce(MonoOrder::Grevlex, &one, &gb).is_zero());
    }
}
