// Seeded random semi-free algebras, shared by the property and acceptance tests.

use std::sync::Arc;

use dgs::commalg::{q, Mono, Poly};
use dgs::{Algebra, Element, Generator};
use rand::Rng;

pub fn random_poly<R: Rng>(rng: &mut R, n: usize, maxdeg: u32, terms: usize) -> Poly {
    let mut p = Poly::zero(n);
    for _ in 0..terms {
        let mut e = vec![0u32; n];
        let mut left = rng.gen_range(0..=maxdeg);
        while left > 0 && n > 0 {
            e[rng.gen_range(0..n)] += 1;
            left -= 1;
        }
        p.add_term(Mono(e), q(rng.gen_range(-3..=3)));
    }
    p
}

/// Random homogeneous element of degree `n`; zero if the strand is empty.
pub fn random_element<R: Rng>(rng: &mut R, a: &Algebra, n: i32) -> Element {
    let basis = a.graded_basis(n);
    let nz = a.zero_gens().len();
    let mut out = a.zero();
    if basis.is_empty() {
        return out;
    }
    for _ in 0..rng.gen_range(1..=3) {
        let key = &basis[rng.gen_range(0..basis.len())];
        let p = random_poly(rng, nz, 2, 2);
        out = out.add(&a.join(key, &p));
    }
    out
}

/// Up to `max_gens` generators: one to three in degree 0, the rest in degrees
/// −1..=−3. Each new differential is `d(e)` for a random `e`, a polynomial
/// (degree −1), or a multiple of a cycle `y − e_y` left by an earlier generator.
pub fn random_algebra<R: Rng>(rng: &mut R, max_gens: usize) -> Arc<Algebra> {
    let n0 = rng.gen_range(1..=3.min(max_gens));
    let names = ["x", "y", "z"];
    let gens: Vec<Generator> = (0..n0).map(|i| Generator::new(names[i], 0)).collect();
    let mut a = Algebra::new(gens, vec![Element::zero(n0); n0]).unwrap();
    let room = (max_gens - n0).max(1);
    let extra = rng.gen_range(room.div_ceil(2)..=room);
    let mut degs: Vec<i32> = (0..extra)
        .map(|_| match rng.gen_range(0..10) {
            0..=4 => -1,
            5..=7 => -2,
            _ => -3,
        })
        .collect();
    degs.sort_by(|a, b| b.cmp(a));
    // (generator index, e) with d(gen) = d(e), so gen − e is a cycle
    let mut partners: Vec<(usize, Element)> = Vec::new();
    for (k, &deg) in degs.iter().enumerate() {
        let name = format!("t{}", k);
        let mut chosen: Option<(usize, Element)> = None;
        let mut diff = a.zero();
        let cands: Vec<(usize, Element)> =
            partners.iter().filter(|(g, _)| a.generator(*g).degree == deg + 1).cloned().collect();
        for _ in 0..4 {
            chosen = None;
            if !cands.is_empty() && rng.gen_bool(0.5) {
                let (g, e) = &cands[rng.gen_range(0..cands.len())];
                let cyc = a.gen(*g).sub(e);
                let p = a.poly_to_element(&random_poly(rng, n0, 1, 2));
                diff = a.mul(&p, &cyc);
            } else if deg == -1 && rng.gen_bool(0.6) {
                diff = a.poly_to_element(&random_poly(rng, n0, 2, 3));
            } else {
                let e = random_element(rng, &a, deg);
                diff = a.d(&e);
                chosen = Some((a.ngens(), e));
            }
            if !diff.is_zero() {
                break;
            }
        }
        if diff.is_zero() {
            chosen = Some((a.ngens(), a.zero()));
        }
        let n = a.ngens() + 1;
        let diff = diff.embed(n);
        a = a.extend(vec![Generator::new(name, deg)], |_| vec![diff]).unwrap();
        if let Some((g, e)) = chosen {
            partners.push((g, e.embed(n)));
        }
        for p in partners.iter_mut() {
            p.1 = p.1.embed(n);
        }
    }
    a
}
