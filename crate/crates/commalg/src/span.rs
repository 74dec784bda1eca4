//! Submodules of `P^r` given by generators, with syzygies and cofactor lifts.

use std::sync::OnceLock;

use num_traits::Zero;

use crate::engine::{self, EVec};
use crate::mono::MonoOrder;
use crate::poly::Poly;

const G: MonoOrder = MonoOrder::Grevlex;

/// Column vector of polynomials.
pub type Vector = Vec<Poly>;

pub fn vzero(rank: usize, nvars: usize) -> Vector {
    vec![Poly::zero(nvars); rank]
}

pub fn vunit(rank: usize, nvars: usize, k: usize) -> Vector {
    let mut v = vzero(rank, nvars);
    v[k] = Poly::one(nvars);
    v
}

pub fn vis_zero(v: &[Poly]) -> bool {
    v.iter().all(|p| p.is_zero())
}

pub fn vadd(a: &[Poly], b: &[Poly]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vsub(a: &[Poly], b: &[Poly]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vscale(c: &Poly, a: &[Poly]) -> Vector {
    a.iter().map(|x| c * x).collect()
}

/// `Σ c_i v_i`.
pub fn vcombine(rank: usize, nvars: usize, coeffs: &[Poly], vecs: &[Vector]) -> Vector {
    let mut out = vzero(rank, nvars);
    for (c, v) in coeffs.iter().zip(vecs) {
        if c.is_zero() {
            continue;
        }
        for (o, x) in out.iter_mut().zip(v) {
            o.add_assign_ref(&(c * x));
        }
    }
    out
}

/// Reduced Gröbner basis of the submodule spanned by `gens`.
pub fn module_groebner(gens: &[Vector]) -> Vec<EVec> {
    let ev: Vec<EVec> = gens.iter().map(|v| EVec::from_polys(G, v)).collect();
    engine::groebner(G, &ev)
}

pub fn module_reduce(v: &[Poly], gb: &[EVec], nvars: usize) -> Vector {
    let r = engine::reduce(G, &EVec::from_polys(G, v), gb);
    r.to_polys(v.len(), nvars)
}

pub struct Span {
    nvars: usize,
    rank: usize,
    gens: Vec<Vector>,
    aug: OnceLock<Vec<EVec>>,
    plain: OnceLock<Vec<EVec>>,
}

impl Span {
    pub fn new(nvars: usize, rank: usize, gens: Vec<Vector>) -> Span {
        debug_assert!(gens.iter().all(|g| g.len() == rank));
        Span { nvars, rank, gens, aug: OnceLock::new(), plain: OnceLock::new() }
    }

    pub fn gens(&self) -> &[Vector] {
        &self.gens
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    // Basis of (v_i, e_i) in P^{r+m}; position-over-term keeps the data block on top.
    fn aug(&self) -> &Vec<EVec> {
        self.aug.get_or_init(|| {
            let m = self.gens.len();
            let ev: Vec<EVec> = self
                .gens
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let mut comps = v.clone();
                    comps.extend(vzero(m, self.nvars));
                    comps[self.rank + i] = Poly::one(self.nvars);
                    EVec::from_polys(G, &comps)
                })
                .collect();
            engine::groebner(G, &ev)
        })
    }

    pub fn gb(&self) -> &Vec<EVec> {
        self.plain.get_or_init(|| module_groebner(&self.gens))
    }

    pub fn reduce(&self, v: &[Poly]) -> Vector {
        module_reduce(v, self.gb(), self.nvars)
    }

    pub fn contains(&self, v: &[Poly]) -> bool {
        vis_zero(&self.reduce(v))
    }

    /// Generators of the module of relations among `gens`.
    pub fn syzygies(&self) -> Vec<Vector> {
        let m = self.gens.len();
        let mut out = Vec::new();
        for e in self.aug() {
            if e.lead().unwrap().0.pos >= self.rank {
                let full = e.to_polys(self.rank + m, self.nvars);
                out.push(full[self.rank..].to_vec());
            }
        }
        out
    }

    /// Coefficients `c` with `v = Σ c_i gens_i`, if `v` lies in the span.
    pub fn lift(&self, v: &[Poly]) -> Option<Vec<Poly>> {
        let m = self.gens.len();
        let mut comps = v.to_vec();
        comps.extend(vzero(m, self.nvars));
        let r = engine::reduce(G, &EVec::from_polys(G, &comps), self.aug());
        if r.terms.iter().any(|(t, c)| t.pos < self.rank && !c.is_zero()) {
            return None;
        }
        let full = r.to_polys(self.rank + m, self.nvars);
        Some(full[self.rank..].iter().map(|p| -p).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syzygy_of_koszul_pair() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let s = Span::new(2, 1, vec![vec![x.clone()], vec![y.clone()]]);
        let syz = s.syzygies();
        assert_eq!(syz.len(), 1);
        let r = &(&syz[0][0] * &x) + &(&syz[0][1] * &y);
        assert!(r.is_zero());
        let target = vec![&(&x * &x) + &y];
        let c = s.lift(&target).unwrap();
        assert_eq!(&(&c[0] * &x) + &(&c[1] * &y), target[0]);
        assert!(s.lift(&[Poly::one(2)]).is_none());
    }
}
