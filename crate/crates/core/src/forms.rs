//! Polynomial differential forms on the 1- and 2-simplex, tensored with an
//! algebra, and the integration operators used to solve `dβ = ω`.

use std::sync::Arc;

use dgs_commalg::{q, Q};
use num_traits::Zero;

use crate::algebra::{Algebra, Element, Exp, Generator, Morphism};
use crate::DgaError;

/// `A ⊗ Ω_n` for `n ∈ {1, 2}`, built by appending `t, dt` (and `s, ds`) to `A`.
#[derive(Debug)]
pub struct Forms {
    pub base: Arc<Algebra>,
    pub alg: Arc<Algebra>,
    pub level: usize,
    pub t: usize,
    pub dt: usize,
    pub s: Option<usize>,
    pub ds: Option<usize>,
}

/// Edges of the 2-simplex, parametrized by `t ∈ [0,1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    /// `(t, 0)`: vertex 0 to vertex 1.
    First,
    /// `(0, t)`: vertex 0 to vertex 2.
    Second,
    /// `(1−t, t)`: vertex 1 to vertex 2.
    Third,
}

impl Forms {
    pub fn omega1(base: &Arc<Algebra>) -> Arc<Forms> {
        let n = base.ngens();
        let t = base.fresh_name("t");
        let dt = format!("d{}", t);
        let alg = base
            .extend(vec![Generator::new(t, 0), Generator::new(dt, 1)], |sk| vec![sk.gen(n + 1), sk.zero()])
            .expect("forms algebra");
        Arc::new(Forms { base: base.clone(), alg, level: 1, t: n, dt: n + 1, s: None, ds: None })
    }

    pub fn omega2(base: &Arc<Algebra>) -> Arc<Forms> {
        let n = base.ngens();
        let s = base.fresh_name("s");
        let mut t = base.fresh_name("t");
        if t == s {
            t = format!("{}_", t);
        }
        let (ds, dt) = (format!("d{}", s), format!("d{}", t));
        let alg = base
            .extend(
                vec![Generator::new(s, 0), Generator::new(t, 0), Generator::new(ds, 1), Generator::new(dt, 1)],
                |sk| vec![sk.gen(n + 2), sk.gen(n + 3), sk.zero(), sk.zero()],
            )
            .expect("forms algebra");
        Arc::new(Forms { base: base.clone(), alg, level: 2, t: n + 1, dt: n + 3, s: Some(n), ds: Some(n + 2) })
    }

    pub fn include(&self) -> Morphism {
        Morphism::inclusion(&self.base, &self.alg)
    }

    pub fn lift(&self, a: &Element) -> Element {
        a.embed(self.alg.ngens())
    }

    pub fn t(&self) -> Element {
        self.alg.gen(self.t)
    }

    pub fn dt(&self) -> Element {
        self.alg.gen(self.dt)
    }

    pub fn s(&self) -> Element {
        self.alg.gen(self.s.expect("level 2"))
    }

    pub fn ds(&self) -> Element {
        self.alg.gen(self.ds.expect("level 2"))
    }

    /// Evaluation at a point: `(t)` for level 1, `(s, t)` for level 2.
    pub fn eval_at(&self, point: &[Q]) -> Morphism {
        let n = self.base.ngens();
        let mut images: Vec<Element> = (0..n).map(|i| self.base.gen(i)).collect();
        match self.level {
            1 => {
                images.push(self.base.constant(point[0].clone()));
                images.push(self.base.zero());
            }
            _ => {
                images.push(self.base.constant(point[0].clone()));
                images.push(self.base.constant(point[1].clone()));
                images.push(self.base.zero());
                images.push(self.base.zero());
            }
        }
        Morphism { source: self.alg.clone(), target: self.base.clone(), images }
    }

    pub fn eval(&self, a: &Element, point: &[Q]) -> Element {
        self.eval_at(point).apply(a)
    }

    /// Restriction of a level-2 form to an edge, landing in `one` (level 1 over the same base).
    pub fn edge_map(&self, edge: Edge, one: &Forms) -> Morphism {
        assert_eq!(self.level, 2);
        let n = self.base.ngens();
        let a = &one.alg;
        let mut images: Vec<Element> = (0..n).map(|i| a.gen(i)).collect();
        let (t, dt, z) = (one.t(), one.dt(), a.zero());
        let (s_img, t_img, ds_img, dt_img) = match edge {
            Edge::First => (t.clone(), z.clone(), dt.clone(), z.clone()),
            Edge::Second => (z.clone(), t.clone(), z.clone(), dt.clone()),
            Edge::Third => (a.one().sub(&t), t.clone(), dt.neg(), dt.clone()),
        };
        images.extend([s_img, t_img, ds_img, dt_img]);
        Morphism { source: self.alg.clone(), target: a.clone(), images }
    }

    /// Integration operator `K_v` for the coordinate with generator index `v`
    /// and differential `dv`: `dK + Kd = id − (v = 0, dv = 0)`.
    pub fn integrate(&self, v: usize, dv: usize, w: &Element) -> Element {
        let alg = &self.alg;
        let mut out = alg.zero();
        let order = alg.canonical_order();
        let rank_dv = order.iter().position(|&i| i == dv).unwrap();
        for (e, c) in w.terms() {
            if e[dv] == 0 {
                continue;
            }
            let before = order[..rank_dv].iter().filter(|&&i| e[i] > 0 && alg.is_odd(i)).count();
            let mut e2: Exp = e.clone();
            e2[dv] = 0;
            e2[v] += 1;
            let mut c2 = c / q(e2[v] as i64);
            if before % 2 == 1 {
                c2 = -c2;
            }
            out.add_term(e2, c2);
        }
        out
    }

    pub fn k_t(&self, w: &Element) -> Element {
        self.integrate(self.t, self.dt, w)
    }

    pub fn k_s(&self, w: &Element) -> Element {
        self.integrate(self.s.unwrap(), self.ds.unwrap(), w)
    }

    /// Solves `dβ = ω` with `β(0) = 0` for a cocycle `ω` vanishing at `t = 0`.
    pub fn solve_basic(&self, w: &Element) -> Result<Element, DgaError> {
        if self.level != 1 {
            return Err(DgaError::Precondition("solve_basic needs level-1 forms".into()));
        }
        if !self.alg.d(w).is_zero() {
            return Err(DgaError::Precondition("ω is not a cocycle".into()));
        }
        if !self.eval(w, &[Q::zero()]).is_zero() {
            return Err(DgaError::Precondition("ω does not vanish at t = 0".into()));
        }
        Ok(self.k_t(w))
    }
}

pub fn solve_basic(forms: &Forms, w: &Element) -> Result<Element, DgaError> {
    forms.solve_basic(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::koszul;
    use dgs_commalg::Poly;

    #[test]
    fn integrate_dt() {
        let k = Algebra::new(vec![], vec![]).unwrap();
        let f = Forms::omega1(&k);
        assert_eq!(f.solve_basic(&f.dt()).unwrap(), f.t());
        assert!(f.solve_basic(&f.alg.zero()).unwrap().is_zero());
    }

    #[test]
    fn integrate_cocycle_times_t() {
        let a = koszul(&["x"], &[Poly::var(1, 0)]).unwrap();
        let f = Forms::omega1(&a);
        // a = x is a cocycle of degree 0
        let x = f.lift(&a.gen(0));
        let w = f.alg.mul(&x, &f.alg.mul(&f.t().scale(&q(2)), &f.dt()));
        let b = f.solve_basic(&w).unwrap();
        assert_eq!(b, f.alg.mul(&x, &f.alg.mul(&f.t(), &f.t())));
        assert_eq!(f.alg.d(&b), w);
    }

    #[test]
    fn homotopy_formula_on_level_two() {
        let a = koszul(&["x"], &[Poly::var(1, 0)]).unwrap();
        let f = Forms::omega2(&a);
        let al = &f.alg;
        let xi = f.lift(&a.gen(1));
        let w = al.mul(&al.mul(&f.ds(), &f.t()), &al.mul(&xi, &f.s()));
        let w = w.add(&al.mul(&f.dt(), &al.mul(&f.s(), &f.s())));
        let lhs = al.d(&f.k_s(&w)).add(&f.k_s(&al.d(&w)));
        let zero_s = {
            let mut imgs: Vec<Element> = (0..al.ngens()).map(|i| al.gen(i)).collect();
            imgs[f.s.unwrap()] = al.zero();
            imgs[f.ds.unwrap()] = al.zero();
            Morphism { source: al.clone(), target: al.clone(), images: imgs }.apply(&w)
        };
        assert_eq!(lhs, w.sub(&zero_s));
    }
}
