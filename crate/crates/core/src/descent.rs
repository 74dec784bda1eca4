//! Localization covers, Čech complexes, gluing of modules along a cover and
//! the stage-by-stage gluing of algebras.
//!
//! Chart `I` of a cover of `A` by `g_1, …, g_k` is `A_I = A[u, ε]`, `dε = u·g_I − 1`,
//! with `g_I = Π_{i∈I} g_i`. Every chart uses the same generator names, so the
//! face map `A_I → A_J` is the identity except `u ↦ g_{J∖I}·u`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use dgs_commalg::module::{self, IsoReport, ModuleMap, ModulePresentation};
use dgs_commalg::span::{vis_zero, vzero, Vector};
use dgs_commalg::{MonoOrder, Poly, PresentedRing, RingMap, Span};

use crate::algebra::{localize_named, Algebra, Element, Generator, Morphism};
use crate::cohomology::{
    h0_ring, hn, induced_cohomology_map, strand_complex, strand_element, strand_vector, DerComplex, FreeExtension,
};
use crate::complex::{exact_at, Cohomology};
use crate::forms::Forms;
use crate::homotopy::{fill_edge, fill_triangle, lifting_order, Exactness, Homotopy, Obstruction};
use crate::DgaError;

fn pre(msg: impl Into<String>) -> DgaError {
    DgaError::Precondition(msg.into())
}

// ---------------------------------------------------------------------------
// covers

#[derive(Debug)]
pub struct Chart {
    pub index: Vec<usize>,
    pub alg: Arc<Algebra>,
    pub g: Poly,
    pub ring: Arc<PresentedRing>,
}

#[derive(Debug)]
pub struct Cover {
    pub base: Arc<Algebra>,
    pub elements: Vec<Poly>,
    /// `Σ c_i g_i = 1` in `h⁰(A)`.
    pub certificate: Vec<Poly>,
    pub ring: Arc<PresentedRing>,
    u: String,
    eps: String,
    charts: Mutex<BTreeMap<Vec<usize>, Arc<Chart>>>,
}

impl Cover {
    pub fn new(base: &Arc<Algebra>, elements: Vec<Poly>) -> Result<Arc<Cover>, DgaError> {
        let ring = h0_ring(base);
        if elements.is_empty() {
            return Err(pre("empty cover"));
        }
        if let Some(g) = elements.iter().find(|g| g.nvars() != ring.nvars()) {
            return Err(DgaError::Arity { expected: ring.nvars(), got: g.nvars() });
        }
        let certificate = ring
            .unit_ideal_certificate(&elements)
            .ok_or_else(|| pre("cover elements do not generate the unit ideal of h⁰"))?;
        let u = base.fresh_name("u");
        let mut eps = base.fresh_name("eps");
        if eps == u {
            eps.push('_');
        }
        Ok(Arc::new(Cover { base: base.clone(), elements, certificate, ring, u, eps, charts: Mutex::new(BTreeMap::new()) }))
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    /// Names of `u` and `ε` in the chart algebras.
    pub fn chart_names(&self) -> (&str, &str) {
        (&self.u, &self.eps)
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Number of variables of `h⁰(A)`.
    pub fn nvars(&self) -> usize {
        self.ring.nvars()
    }

    /// Generators of `A_I`: those of `A`, then `u`, `ε`.
    pub fn chart_ngens(&self) -> usize {
        self.base.ngens() + 2
    }

    pub fn product(&self, idx: &[usize]) -> Poly {
        let mut p = Poly::one(self.nvars());
        for &i in idx {
            p = &p * &self.elements[i];
        }
        p
    }

    pub fn chart(&self, idx: &[usize]) -> Arc<Chart> {
        if let Some(c) = self.charts.lock().unwrap().get(idx) {
            return c.clone();
        }
        let g = self.product(idx);
        let (alg, _) = localize_named(&self.base, &self.base.poly_to_element(&g), &self.u, &self.eps)
            .expect("localization of a degree-0 element");
        let ring = h0_ring(&alg);
        let c = Arc::new(Chart { index: idx.to_vec(), alg, g, ring });
        self.charts.lock().unwrap().insert(idx.to_vec(), c.clone());
        c
    }

    /// Index of `u` among the degree-0 variables of a chart.
    pub fn u_var(&self) -> usize {
        self.nvars()
    }

    /// A polynomial of `h⁰(A)` read in the variables of a chart.
    pub fn lift_poly(&self, p: &Poly) -> Poly {
        let map: Vec<usize> = (0..self.nvars()).collect();
        p.embed(self.nvars() + 1, &map)
    }

    pub fn u_poly(&self) -> Poly {
        Poly::var(self.nvars() + 1, self.nvars())
    }

    /// `R → R_I`.
    pub fn to_chart_ring(&self, idx: &[usize]) -> RingMap {
        let c = self.chart(idx);
        let images = (0..self.nvars()).map(|i| Poly::var(self.nvars() + 1, i)).collect();
        RingMap { source: self.ring.clone(), target: c.ring.clone(), images }
    }

    fn complement(&self, small: &[usize], big: &[usize]) -> Poly {
        let rest: Vec<usize> = big.iter().copied().filter(|i| !small.contains(i)).collect();
        self.lift_poly(&self.product(&rest))
    }

    /// `R_I → R_J` for `I ⊂ J`.
    pub fn ring_face(&self, small: &[usize], big: &[usize]) -> RingMap {
        let n = self.nvars();
        let mut images: Vec<Poly> = (0..n).map(|i| Poly::var(n + 1, i)).collect();
        images.push(&self.complement(small, big) * &self.u_poly());
        RingMap { source: self.chart(small).ring.clone(), target: self.chart(big).ring.clone(), images }
    }

    /// Substitution `u ↦ g_{J∖I}·u` on the first `A_I` generators of `src`, landing in `tgt`.
    fn face_images(&self, small: &[usize], big: &[usize], src: &Algebra, tgt: &Algebra) -> Vec<Element> {
        let nb = self.base.ngens();
        let mut images: Vec<Element> = (0..src.ngens()).map(|i| tgt.gen(i)).collect();
        let g = tgt.poly_to_element(&self.complement(small, big));
        images[nb] = tgt.mul(&g, &tgt.gen(nb));
        images
    }

    /// `A_I → A_J`.
    pub fn face(&self, small: &[usize], big: &[usize]) -> Morphism {
        let a = self.chart(small).alg.clone();
        let b = self.chart(big).alg.clone();
        let images = self.face_images(small, big, &a, &b);
        Morphism { source: a, target: b, images }
    }

    /// `g_I^k · p(u = 1/g_I)` for `p` over the chart variables; `k` must bound the `u`-degree.
    pub fn clear(&self, idx: &[usize], p: &Poly, k: u32) -> Poly {
        let n = self.nvars();
        let g = self.product(idx);
        let mut out = Poly::zero(n);
        for (m, c) in p.terms() {
            let j = m.0[n];
            assert!(j <= k, "u-degree exceeds the clearing exponent");
            let mut e = m.0[..n].to_vec();
            e.truncate(n);
            let t = Poly::term(dgs_commalg::Mono(e), c.clone());
            out = &out + &(&t * &g.pow(k - j));
        }
        self.ring.reduce(&out)
    }

    pub fn u_degree(&self, v: &[Poly]) -> u32 {
        v.iter().map(|p| p.degree_in(self.nvars())).max().unwrap_or(0)
    }

    /// Increasing multi-indices of length `p + 1`.
    pub fn indices(&self, p: usize) -> Vec<Vec<usize>> {
        fn rec(k: usize, start: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if left == 0 {
                out.push(cur.clone());
                return;
            }
            for i in start..k {
                cur.push(i);
                rec(k, i + 1, left - 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(self.len(), 0, p + 1, &mut Vec::new(), &mut out);
        out
    }
}

// ---------------------------------------------------------------------------
// Čech complexes of a module restricted to the charts

/// Čech complex of `M` restricted to the cover, in the model where slot `I`
/// holds a numerator `m` standing for `m / g_I^N`. Restriction from `I` to
/// `I ∪ {j}` is multiplication by `g_j^N`.
pub struct CechModel<'a> {
    pub cover: &'a Cover,
    pub module: ModulePresentation,
    pub level: u32,
}

impl<'a> CechModel<'a> {
    pub fn new(cover: &'a Cover, module: &ModulePresentation, level: u32) -> CechModel<'a> {
        CechModel { cover, module: module.clone(), level }
    }

    fn gpow(&self, i: usize) -> Poly {
        self.cover.elements[i].pow(self.level)
    }

    pub fn term(&self, p: i32) -> ModulePresentation {
        let ring = self.cover.ring.clone();
        if p < 0 {
            return ModulePresentation::zero(ring);
        }
        let n = self.cover.indices(p as usize).len();
        if n == 0 {
            return ModulePresentation::zero(ring);
        }
        module::direct_sum(&vec![self.module.clone(); n])
    }

    fn pos(&self, p: usize) -> HashMap<Vec<usize>, usize> {
        self.cover.indices(p).into_iter().enumerate().map(|(k, i)| (i, k)).collect()
    }

    /// `δ^p : C^p → C^{p+1}`.
    pub fn coboundary(&self, p: i32) -> ModuleMap {
        let src = self.term(p);
        let tgt = self.term(p + 1);
        let r = self.module.ngens();
        let nv = self.cover.nvars();
        let mut cols = Vec::new();
        if p >= 0 {
            let tpos = self.pos(p as usize + 1);
            for idx in self.cover.indices(p as usize) {
                for a in 0..r {
                    let mut v = vzero(tgt.ngens(), nv);
                    for j in 0..self.cover.len() {
                        if idx.contains(&j) {
                            continue;
                        }
                        let mut big = idx.clone();
                        big.push(j);
                        big.sort();
                        let k = big.iter().position(|&x| x == j).unwrap();
                        let mut c = self.gpow(j);
                        if k % 2 == 1 {
                            c = -c;
                        }
                        v[tpos[&big] * r + a] = c;
                    }
                    cols.push(v);
                }
            }
        }
        ModuleMap::new_unchecked(src, tgt, cols)
    }

    /// `M → C^0`, `m ↦ (g_i^N m)`.
    pub fn augmentation(&self) -> ModuleMap {
        let tgt = self.term(0);
        let r = self.module.ngens();
        let cols = (0..r)
            .map(|a| {
                let mut v = vzero(tgt.ngens(), self.cover.nvars());
                for i in 0..self.cover.len() {
                    v[i * r + a] = self.gpow(i);
                }
                v
            })
            .collect();
        ModuleMap::new_unchecked(self.module.clone(), tgt, cols)
    }

    pub fn cohomology(&self, p: i32) -> ModulePresentation {
        let ring = self.cover.ring.clone();
        if p < 0 {
            return ModulePresentation::zero(ring);
        }
        let c = self.term(p);
        if c.ngens() == 0 {
            return ModulePresentation::zero(ring);
        }
        let (_, inc) = module::kernel(&self.coboundary(p));
        let mut rels = c.relations().to_vec();
        rels.extend(self.coboundary(p - 1).columns);
        module::subquotient(&ring, c.ngens(), &inc.columns, &rels)
    }

    pub fn flatten(&self, cochain: &[Vector]) -> Vector {
        cochain.concat()
    }

    fn unflatten(&self, v: &[Poly]) -> Vec<Vector> {
        let r = self.module.ngens();
        if r == 0 {
            return vec![];
        }
        v.chunks(r).map(|c| c.to_vec()).collect()
    }

    pub fn apply_coboundary(&self, p: i32, cochain: &[Vector]) -> Vec<Vector> {
        let d = self.coboundary(p);
        let img = d.apply(&self.flatten(cochain));
        self.unflatten(&img)
    }

    pub fn is_cocycle(&self, p: i32, cochain: &[Vector]) -> bool {
        let img = self.apply_coboundary(p, cochain);
        img.iter().all(|v| self.module.is_zero_element(v))
    }

    pub fn equal(&self, a: &[Vector], b: &[Vector]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| self.module.equal_elements(x, y))
    }

    /// Contraction `(hα)_J = Σ_i c_i α_{iJ}` with `Σ c_i g_i^N = 1`.
    pub fn contract(&self, p: usize, cochain: &[Vector]) -> Result<Vec<Vector>, DgaError> {
        assert!(p >= 1);
        let powers: Vec<Poly> = (0..self.cover.len()).map(|i| self.gpow(i)).collect();
        let c = self
            .cover
            .ring
            .unit_ideal_certificate(&powers)
            .ok_or_else(|| pre("powers of the cover elements do not generate the unit ideal"))?;
        let src = self.pos(p);
        let r = self.module.ngens();
        let nv = self.cover.nvars();
        let mut out = Vec::new();
        for idx in self.cover.indices(p - 1) {
            let mut v = vzero(r, nv);
            for (i, ci) in c.iter().enumerate() {
                if idx.contains(&i) || ci.is_zero() {
                    continue;
                }
                let mut big = idx.clone();
                big.push(i);
                big.sort();
                let k = big.iter().position(|&x| x == i).unwrap();
                let a = &cochain[src[&big]];
                for (o, x) in v.iter_mut().zip(a) {
                    let t = ci * x;
                    *o = if k % 2 == 1 { &*o - &t } else { &*o + &t };
                }
            }
            out.push(v.iter().map(|p| self.cover.ring.reduce(p)).collect());
        }
        Ok(out)
    }

    /// `β` with `δβ = α` for a `p`-cocycle, `p ≥ 1`.
    pub fn trivialize(&self, p: usize, cochain: &[Vector]) -> Result<Vec<Vector>, DgaError> {
        if !self.is_cocycle(p as i32, cochain) {
            return Err(pre("cochain is not a cocycle"));
        }
        let beta = self.contract(p, cochain)?;
        if !self.equal(&self.apply_coboundary(p as i32 - 1, &beta), cochain) {
            return Err(pre("contraction did not bound the cocycle"));
        }
        Ok(beta)
    }
}

/// `H^p` of the cover with coefficients in `M`.
pub fn cech(cover: &Cover, m: &ModulePresentation, p: i32) -> ModulePresentation {
    CechModel::new(cover, m, 1).cohomology(p)
}

/// `β` with `∂β = α` for a Čech 1-cocycle (level-1 numerators).
pub fn trivialize_h1(cover: &Cover, m: &ModulePresentation, alpha: &[Vector]) -> Result<Vec<Vector>, DgaError> {
    CechModel::new(cover, m, 1).trivialize(1, alpha)
}

// ---------------------------------------------------------------------------
// gluing modules

/// Comparison data on an overlap `i < j`: both chart modules map into `target`
/// over `R_ij`; sections agree when their images do.
#[derive(Clone, Debug)]
pub struct Overlap {
    pub target: ModulePresentation,
    pub from_first: Vec<Vector>,
    pub from_second: Vec<Vector>,
}

/// A module over `h⁰(A)` glued from chart modules, with the chart maps.
#[derive(Clone, Debug)]
pub struct GluedModule {
    pub module: ModulePresentation,
    pub level: u32,
    tuples: Vec<Vector>,
    ambient: ModulePresentation,
    offsets: Vec<usize>,
    pub charts: Vec<ModulePresentation>,
    /// `M ⊗ R_i → M_i`, each certified to be an isomorphism.
    pub chart_maps: Vec<ModuleMap>,
}

fn cleared_relations(cover: &Cover, idx: &[usize], m: &ModulePresentation) -> Vec<Vector> {
    let rels: Vec<Vector> = m
        .relations()
        .iter()
        .map(|r| {
            let k = cover.u_degree(r);
            r.iter().map(|p| cover.clear(idx, p, k)).collect()
        })
        .collect();
    module::saturate(&cover.ring, m.ngens(), &rels, &cover.product(idx))
}

/// Glues chart modules along the comparison data, raising the pole order
/// until every chart map is an isomorphism.
pub fn glue_compatible(
    cover: &Cover,
    charts: &[ModulePresentation],
    overlaps: &BTreeMap<(usize, usize), Overlap>,
    max_level: u32,
) -> Result<GluedModule, DgaError> {
    let ring = cover.ring.clone();
    let nv = cover.nvars();
    let ranks: Vec<usize> = charts.iter().map(|m| m.ngens()).collect();
    let mut offsets = vec![0];
    for r in &ranks {
        offsets.push(offsets.last().unwrap() + r);
    }
    let total = *offsets.last().unwrap();
    let mut amb_rels = Vec::new();
    for (i, m) in charts.iter().enumerate() {
        for rel in cleared_relations(cover, &[i], m) {
            let mut v = vzero(total, nv);
            v[offsets[i]..offsets[i + 1]].clone_from_slice(&rel);
            amb_rels.push(v);
        }
    }
    let ambient = ModulePresentation::new(ring.clone(), total, amb_rels);
    // targets of the comparison map
    let mut toff = vec![0];
    let mut trels = Vec::new();
    let pairs: Vec<(usize, usize)> = overlaps.keys().copied().collect();
    let mut targets = Vec::new();
    for (i, j) in &pairs {
        let o = &overlaps[&(*i, *j)];
        let s = o.target.ngens();
        let base = *toff.last().unwrap();
        for rel in cleared_relations(cover, &[*i, *j], &o.target) {
            targets.push((base, rel));
        }
        toff.push(base + s);
    }
    let ttotal = *toff.last().unwrap();
    for (base, rel) in targets {
        let mut v = vzero(ttotal, nv);
        v[base..base + rel.len()].clone_from_slice(&rel);
        trels.push(v);
    }
    let target = ModulePresentation::new(ring.clone(), ttotal, trels);
    for level in 1..=max_level {
        let mut cols = vec![vzero(ttotal, nv); total];
        for (pi, (i, j)) in pairs.iter().enumerate() {
            let o = &overlaps[&(*i, *j)];
            let idx = [*i, *j];
            let m = o.from_first.iter().chain(&o.from_second).map(|v| cover.u_degree(v)).max().unwrap_or(0);
            let gi = cover.elements[*i].pow(level);
            let gj = cover.elements[*j].pow(level);
            for (k, col) in o.from_first.iter().enumerate() {
                for (s, p) in col.iter().enumerate() {
                    let c = &gj * &cover.clear(&idx, p, m);
                    cols[offsets[*i] + k][toff[pi] + s] = ring.reduce(&c);
                }
            }
            for (k, col) in o.from_second.iter().enumerate() {
                for (s, p) in col.iter().enumerate() {
                    let c = -(&gi * &cover.clear(&idx, p, m));
                    cols[offsets[*j] + k][toff[pi] + s] = ring.reduce(&c);
                }
            }
        }
        let src = ModulePresentation::free(ring.clone(), total);
        let phi = ModuleMap::new_unchecked(src, target.clone(), cols);
        let (_, inc) = module::kernel(&phi);
        let mut tuples: Vec<Vector> = inc.columns;
        tuples.retain(|t| !ambient.is_zero_element(t));
        let m = module::subquotient(&ring, total, &tuples, ambient.relations());
        let (small, _, from) = module::simplify(&m);
        let tuples: Vec<Vector> = from.columns.iter().map(|c| combine(&ring, total, c, &tuples)).collect();
        let mut g = GluedModule {
            module: small,
            level,
            tuples,
            ambient: ambient.clone(),
            offsets: offsets.clone(),
            charts: charts.to_vec(),
            chart_maps: vec![],
        };
        let mut ok = true;
        for (i, chart) in charts.iter().enumerate() {
            let phi = cover.to_chart_ring(&[i]);
            let src = module::base_change(&g.module, &phi)?;
            let tgt = module::reinterpret(chart, &cover.chart(&[i]).ring);
            let cols = g.tuples.iter().map(|t| g.tuple_to_chart(cover, i, t)).collect();
            let f = ModuleMap::new_unchecked(src, tgt, cols);
            if !module::is_isomorphism(&f) {
                ok = false;
                break;
            }
            g.chart_maps.push(f);
        }
        if ok {
            return Ok(g);
        }
    }
    Err(pre(format!("gluing did not stabilize up to pole order {}", max_level)))
}

fn combine(ring: &PresentedRing, rank: usize, coeffs: &[Poly], vecs: &[Vector]) -> Vector {
    let mut out = vzero(rank, ring.nvars());
    for (c, v) in coeffs.iter().zip(vecs) {
        if c.is_zero() {
            continue;
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o = &*o + &(c * x);
        }
    }
    out.iter().map(|p| ring.reduce(p)).collect()
}

impl GluedModule {
    fn tuple_to_chart(&self, cover: &Cover, i: usize, t: &[Poly]) -> Vector {
        let u = cover.u_poly().pow(self.level);
        t[self.offsets[i]..self.offsets[i + 1]].iter().map(|p| &cover.lift_poly(p) * &u).collect()
    }

    /// Image of a global element (coordinates over `R`) in `M_i ⊗ R_I`, divided by `g_I^k`.
    pub fn chart_vector(&self, cover: &Cover, i: usize, idx: &[usize], m: &[Poly], k: u32) -> Vector {
        let f = &self.chart_maps[i];
        let r = f.target.ngens();
        let mut v = vzero(r, cover.nvars() + 1);
        for (c, col) in m.iter().zip(&f.columns) {
            let c = cover.lift_poly(c);
            for (o, x) in v.iter_mut().zip(col) {
                *o = &*o + &(&c * x);
            }
        }
        let face = cover.ring_face(&[i], idx);
        let u = cover.u_poly().pow(k);
        v.iter().map(|p| face.target.reduce(&(&face.apply(p) * &u))).collect()
    }

    /// Global element with the given images in every chart.
    pub fn from_charts(&self, cover: &Cover, vs: &[Vector]) -> Option<Vector> {
        let k = vs.iter().map(|v| cover.u_degree(v)).max().unwrap_or(0).max(self.level);
        let total = self.ambient.ngens();
        let mut t = vzero(total, cover.nvars());
        for (i, v) in vs.iter().enumerate() {
            for (a, p) in v.iter().enumerate() {
                t[self.offsets[i] + a] = cover.clear(&[i], p, k);
            }
        }
        let scaled: Vec<Vector> = self
            .tuples
            .iter()
            .map(|tp| {
                let mut s = tp.clone();
                for i in 0..cover.len() {
                    let g = cover.elements[i].pow(k - self.level);
                    for p in &mut s[self.offsets[i]..self.offsets[i + 1]] {
                        *p = cover.ring.reduce(&(&*p * &g));
                    }
                }
                s
            })
            .collect();
        module::express(&self.ambient, &scaled, &t)
    }

    /// Writes `v ∈ M_i ⊗ R_I` as `m / g_I^k` with `m` global.
    pub fn slot_from_chart(&self, cover: &Cover, i: usize, idx: &[usize], v: &[Poly]) -> Option<(Vector, u32)> {
        let face = cover.ring_face(&[i], idx);
        let mi = module::base_change(&self.chart_maps[i].target, &face).ok()?;
        let cols: Vec<Vector> =
            self.chart_maps[i].columns.iter().map(|c| c.iter().map(|p| face.apply(p)).collect()).collect();
        let c = module::express(&mi, &cols, v)?;
        let k = cover.u_degree(&c);
        Some((c.iter().map(|p| cover.clear(idx, p, k)).collect(), k))
    }

    /// Isomorphism certificates of the chart maps.
    pub fn certificates(&self) -> Vec<IsoReport> {
        self.chart_maps.iter().map(module::isomorphism_report).collect()
    }
}

/// Glues `M_i` along isomorphisms `α_ij : M_i ⊗ R_ij → M_j ⊗ R_ij` (columns over `R_ij`).
pub fn glue_modules(
    cover: &Cover,
    charts: &[ModulePresentation],
    transitions: &BTreeMap<(usize, usize), Vec<Vector>>,
) -> Result<GluedModule, DgaError> {
    if charts.len() != cover.len() {
        return Err(DgaError::Arity { expected: cover.len(), got: charts.len() });
    }
    let restricted = |j: usize, idx: &[usize]| -> Result<ModulePresentation, DgaError> {
        Ok(module::base_change(&module::reinterpret(&charts[j], &cover.chart(&[j]).ring), &cover.ring_face(&[j], idx))?)
    };
    // cocycle condition α_jk ∘ α_ij = α_ik
    for idx in cover.indices(2) {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        let get = |a: usize, b: usize| transitions.get(&(a, b)).ok_or_else(|| pre(format!("missing transition ({},{})", a, b)));
        let up = |a: usize, b: usize, cols: &Vec<Vector>| -> Vec<Vector> {
            let f = cover.ring_face(&[a, b], &idx);
            cols.iter().map(|c| c.iter().map(|p| f.apply(p)).collect()).collect()
        };
        let (aij, ajk, aik) = (up(i, j, get(i, j)?), up(j, k, get(j, k)?), up(i, k, get(i, k)?));
        let mi = restricted(i, &idx)?;
        let mj = restricted(j, &idx)?;
        let mk = restricted(k, &idx)?;
        let f = ModuleMap::new_unchecked(mi.clone(), mj, aij);
        let g = ModuleMap::new_unchecked(f.target.clone(), mk.clone(), ajk);
        let h = ModuleMap::new_unchecked(mi, mk, aik);
        if !f.compose(&g).equals(&h) {
            return Err(pre(format!("cocycle condition fails on ({},{},{})", i, j, k)));
        }
    }
    let mut overlaps = BTreeMap::new();
    for idx in cover.indices(1) {
        let (i, j) = (idx[0], idx[1]);
        let a = transitions.get(&(i, j)).ok_or_else(|| pre(format!("missing transition ({},{})", i, j)))?;
        let target = restricted(j, &idx)?;
        let nv = cover.nvars() + 1;
        let from_second = (0..target.ngens()).map(|k| dgs_commalg::span::vunit(target.ngens(), nv, k)).collect();
        overlaps.insert((i, j), Overlap { target, from_first: a.clone(), from_second });
    }
    glue_compatible(cover, charts, &overlaps, 6)
}

// ---------------------------------------------------------------------------
// gluing data

/// Algebras `B_i` free over the charts `A_i` with strict transitions
/// `τ_ij : B_j → B_i|_{ij}` for `i < j`. Overlap algebras are base changes
/// `B_i|_I = B_i ⊗_{A_i} A_I`.
pub struct GluingData {
    pub cover: Arc<Cover>,
    pub locals: Vec<Arc<Algebra>>,
    /// Images of the new generators of `B_j` in `B_i|_{ij}`.
    pub transitions: BTreeMap<(usize, usize), Vec<Element>>,
    restricted: Mutex<HashMap<(usize, Vec<usize>), Arc<Algebra>>>,
    hcache: Mutex<HashMap<(usize, Vec<usize>, i32), Arc<ChartH>>>,
    glued: Mutex<HashMap<i32, Arc<GluedModule>>>,
}

/// `h^n(B_i)` together with the data needed to take classes in `B_i|_I`.
pub struct ChartH {
    pub h: Cohomology,
    pub alg: Arc<Algebra>,
    pub cocycles: Vec<Element>,
    span: Span,
}

impl ChartH {
    pub fn rank(&self) -> usize {
        self.cocycles.len()
    }
}

#[derive(Clone, Debug, Default)]
pub struct GluingReport {
    pub strictness: Vec<String>,
    pub cartesian: Vec<String>,
}

impl GluingReport {
    pub fn is_valid(&self) -> bool {
        self.strictness.is_empty() && self.cartesian.is_empty()
    }
}

/// `B_i ⊗_{A_i} A_I` for a chart algebra `B_i` over `A_i`.
pub fn restrict_local(cover: &Cover, b: &Arc<Algebra>, i: usize, idx: &[usize]) -> Arc<Algebra> {
    let nb = cover.chart_ngens();
    let chart = cover.chart(idx).alg.clone();
    let new: Vec<Generator> = b.gens()[nb..].to_vec();
    chart
        .extend(new, |sk| {
            let tgt = Arc::new(Algebra::skeleton(sk.gens().to_vec()));
            let images = cover.face_images(&[i], idx, b, &tgt);
            let m = Morphism { source: b.clone(), target: tgt.clone(), images };
            (nb..b.ngens()).map(|k| m.apply(b.diff_of(k))).collect()
        })
        .expect("base change of a chart algebra")
}

impl GluingData {
    pub fn new(
        cover: &Arc<Cover>,
        locals: Vec<Arc<Algebra>>,
        transitions: BTreeMap<(usize, usize), Vec<Element>>,
    ) -> Result<GluingData, DgaError> {
        if locals.len() != cover.len() {
            return Err(DgaError::Arity { expected: cover.len(), got: locals.len() });
        }
        let nb = cover.chart_ngens();
        for (i, b) in locals.iter().enumerate() {
            let a = cover.chart(&[i]).alg.clone();
            if b.ngens() < nb || b.gens()[..nb] != a.gens()[..] {
                return Err(pre(format!("B_{} does not extend its chart", i + 1)));
            }
            for k in 0..nb {
                if b.diff_of(k) != &a.diff_of(k).embed(b.ngens()) {
                    return Err(pre(format!("B_{} changes the differential of {}", i + 1, a.generator(k).name)));
                }
            }
            if let Some(g) = b.gens()[nb..].iter().find(|g| g.degree >= 0) {
                return Err(pre(format!("B_{}: new generator {} must have negative degree", i + 1, g.name)));
            }
        }
        let gd = GluingData {
            cover: cover.clone(),
            locals,
            transitions,
            restricted: Mutex::new(HashMap::new()),
            hcache: Mutex::new(HashMap::new()),
            glued: Mutex::new(HashMap::new()),
        };
        for idx in cover.indices(1) {
            let (i, j) = (idx[0], idx[1]);
            let t = gd.transitions.get(&(i, j)).ok_or_else(|| pre(format!("missing transition ({},{})", i + 1, j + 1)))?;
            let nj = gd.locals[j].ngens() - nb;
            if t.len() != nj {
                return Err(DgaError::Arity { expected: nj, got: t.len() });
            }
            let tgt = gd.local(i, &idx);
            if t.iter().any(|e| e.nvars() != tgt.ngens()) {
                return Err(DgaError::MismatchedAlgebras);
            }
        }
        Ok(gd)
    }

    /// The trivial datum `B_i = A_i`.
    pub fn trivial(cover: &Arc<Cover>) -> GluingData {
        let locals = (0..cover.len()).map(|i| cover.chart(&[i]).alg.clone()).collect();
        let transitions = cover.indices(1).into_iter().map(|idx| ((idx[0], idx[1]), vec![])).collect();
        GluingData::new(cover, locals, transitions).expect("trivial gluing")
    }

    pub fn new_gens(&self, i: usize) -> std::ops::Range<usize> {
        self.cover.chart_ngens()..self.locals[i].ngens()
    }

    /// `B_i|_I`.
    pub fn local(&self, i: usize, idx: &[usize]) -> Arc<Algebra> {
        if idx == [i] {
            return self.locals[i].clone();
        }
        let key = (i, idx.to_vec());
        if let Some(a) = self.restricted.lock().unwrap().get(&key) {
            return a.clone();
        }
        let alg = restrict_local(&self.cover, &self.locals[i], i, idx);
        self.restricted.lock().unwrap().insert(key, alg.clone());
        alg
    }

    /// `B_i|_I → B_i|_J`.
    pub fn restrict_map(&self, i: usize, small: &[usize], big: &[usize]) -> Morphism {
        let s = self.local(i, small);
        let t = self.local(i, big);
        let images = self.cover.face_images(small, big, &s, &t);
        Morphism { source: s, target: t, images }
    }

    /// `B_j|_J → B_i|_J` for `i ≤ j` in `J`.
    pub fn transition(&self, i: usize, j: usize, idx: &[usize]) -> Morphism {
        let s = self.local(j, idx);
        let t = self.local(i, idx);
        if i == j {
            return Morphism::identity(&s);
        }
        let nb = self.cover.chart_ngens();
        let mut images: Vec<Element> = (0..nb).map(|k| t.gen(k)).collect();
        let r = self.restrict_map(i, &[i, j], idx);
        for e in &self.transitions[&(i, j)] {
            images.push(r.apply(e));
        }
        Morphism { source: s, target: t, images }
    }

    /// `τ_ij : B_j → B_i|_{ij}`.
    pub fn tau(&self, i: usize, j: usize) -> Morphism {
        self.restrict_map(j, &[j], &[i, j]).compose(&self.transition(i, j, &[i, j]))
    }

    /// Strictness and cartesianness on the window `[lo, hi]`.
    pub fn validate(&self, lo: i32, hi: i32) -> GluingReport {
        let mut rep = GluingReport::default();
        let cover = &self.cover;
        for (i, b) in self.locals.iter().enumerate() {
            let a = cover.chart(&[i]);
            if !h0_ring(b).same_ideal(&a.ring) {
                rep.cartesian.push(format!("chart {}: h⁰(B_i) differs from h⁰(A_i)", i + 1));
            }
        }
        for idx in cover.indices(1) {
            let (i, j) = (idx[0], idx[1]);
            let t = self.transition(i, j, &idx);
            for v in t.check().violations {
                rep.strictness.push(format!("transition ({},{}): {}", i + 1, j + 1, v));
            }
        }
        for idx in cover.indices(2) {
            let (i, j, k) = (idx[0], idx[1], idx[2]);
            let direct = self.transition(i, k, &idx);
            let via = self.transition(j, k, &idx).compose(&self.transition(i, j, &idx));
            let bk = &self.locals[k];
            for g in self.new_gens(k) {
                if direct.images[g] != via.images[g] {
                    rep.strictness.push(format!(
                        "triple ({},{},{}): transitions disagree on {}",
                        i + 1,
                        j + 1,
                        k + 1,
                        bk.generator(g).name
                    ));
                }
            }
        }
        if !rep.strictness.is_empty() {
            return rep;
        }
        for idx in cover.indices(1) {
            let (i, j) = (idx[0], idx[1]);
            let t = self.transition(i, j, &idx);
            for n in lo..=hi {
                let ok = induced_cohomology_map(&t, n, &hn(&t.source, n), &hn(&t.target, n))
                    .map(|f| module::is_isomorphism(&f))
                    .unwrap_or(false);
                if !ok {
                    rep.cartesian.push(format!("overlap ({},{}): h^{} not preserved by the transition", i + 1, j + 1, n));
                }
            }
        }
        rep
    }

    /// `h^n(B_i)` with classes taken in `B_i|_I`.
    pub fn chart_h(&self, i: usize, idx: &[usize], n: i32) -> Arc<ChartH> {
        let key = (i, idx.to_vec(), n);
        if let Some(c) = self.hcache.lock().unwrap().get(&key) {
            return c.clone();
        }
        let base = if idx == [i] {
            let b = &self.locals[i];
            let h = hn(b, n);
            let (small, _, from) = module::simplify(&h.module);
            let keep: Vec<usize> = from
                .columns
                .iter()
                .map(|c| c.iter().position(|p| !p.is_zero()).expect("unit column"))
                .collect();
            let cocycles: Vec<Vector> = keep.iter().map(|&k| h.cocycles[k].clone()).collect();
            Cohomology { degree: n, module: small, cocycles }
        } else {
            self.chart_h(i, &[i], n).h.clone()
        };
        let alg = self.local(i, idx);
        let r = self.restrict_map(i, &[i], idx);
        let cocycles: Vec<Element> = base.cocycles.iter().map(|z| r.apply(&strand_element(&self.locals[i], n, z))).collect();
        let mut gens: Vec<Vector> = cocycles.iter().map(|z| strand_vector(&alg, n, z)).collect();
        let sc = strand_complex(&alg, n, n);
        gens.extend(sc.diff(n - 1).columns.iter().cloned());
        let span = Span::new(alg.zero_gens().len(), sc.rank(n), gens);
        let c = Arc::new(ChartH { h: base, alg, cocycles, span });
        self.hcache.lock().unwrap().insert(key, c.clone());
        c
    }

    /// Coordinates of the class of a cocycle of `B_i|_I` in `h^n(B_i) ⊗ R_I`.
    pub fn class(&self, i: usize, idx: &[usize], n: i32, z: &Element) -> Result<Vector, DgaError> {
        let ch = self.chart_h(i, idx, n);
        let v = strand_vector(&ch.alg, n, z);
        let c = ch.span.lift(&v).ok_or_else(|| pre(format!("element of degree {} is not a cocycle", n)))?;
        Ok(c[..ch.rank()].to_vec())
    }

    /// A cocycle of `B_i|_I` representing the given coordinates.
    pub fn representative(&self, i: usize, idx: &[usize], n: i32, v: &[Poly]) -> Element {
        let ch = self.chart_h(i, idx, n);
        let a = &ch.alg;
        let mut out = a.zero();
        for (c, z) in v.iter().zip(&ch.cocycles) {
            if !c.is_zero() {
                out = out.add(&a.mul(&a.poly_to_element(c), z));
            }
        }
        out
    }

    /// The glued module `M^n` of the `h^n(B_i)`.
    pub fn glued(&self, n: i32) -> Result<Arc<GluedModule>, DgaError> {
        if let Some(g) = self.glued.lock().unwrap().get(&n) {
            return Ok(g.clone());
        }
        let cover = &self.cover;
        let charts: Vec<ModulePresentation> = (0..cover.len())
            .map(|i| module::reinterpret(&self.chart_h(i, &[i], n).h.module, &cover.chart(&[i]).ring))
            .collect();
        let mut overlaps = BTreeMap::new();
        for idx in cover.indices(1) {
            let (i, j) = (idx[0], idx[1]);
            let target = module::base_change(&charts[i], &cover.ring_face(&[i], &idx))?;
            let nv = cover.nvars() + 1;
            let from_first = (0..target.ngens()).map(|k| dgs_commalg::span::vunit(target.ngens(), nv, k)).collect();
            let tau = self.tau(i, j);
            let chj = self.chart_h(j, &[j], n);
            let mut from_second = Vec::new();
            for z in &chj.cocycles {
                from_second.push(self.class(i, &idx, n, &tau.apply(z))?);
            }
            overlaps.insert((i, j), Overlap { target, from_first, from_second });
        }
        let g = Arc::new(glue_compatible(cover, &charts, &overlaps, 6)?);
        self.glued.lock().unwrap().insert(n, g.clone());
        Ok(g)
    }
}

// ---------------------------------------------------------------------------
// homotopy squares

/// Candidate `A → B` with `f_i : B → B_i` and `f_ij : f_i ⇒ τ_ij f_j` in `B_i|_{ij}`.
#[derive(Clone, Debug)]
pub struct HomotopySquare {
    pub ext: FreeExtension,
    pub maps: Vec<Morphism>,
    pub edges: BTreeMap<(usize, usize), Homotopy>,
}

#[derive(Clone, Debug, Default)]
pub struct SquareReport {
    pub violations: Vec<String>,
}

impl SquareReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, Default)]
pub struct AugmentationReport {
    pub checked: usize,
    pub failures: Vec<([usize; 3], Obstruction)>,
}

impl AugmentationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `h` pushed forward along `phi` into homotopies valued in `fm`.
pub fn push_homotopy(h: &Homotopy, phi: &Morphism, fm: &Arc<Forms>) -> Homotopy {
    let mut images: Vec<Element> = phi.images.iter().map(|e| fm.lift(e)).collect();
    images.push(fm.t());
    images.push(fm.dt());
    let m = Morphism { source: h.forms.alg.clone(), target: fm.alg.clone(), images };
    Homotopy { forms: fm.clone(), body: h.body.compose(&m) }
}

pub fn verify_homotopy_square(gd: &GluingData, sq: &HomotopySquare) -> SquareReport {
    let mut rep = SquareReport::default();
    let cover = &gd.cover;
    let a = &cover.base;
    for (i, f) in sq.maps.iter().enumerate() {
        for v in f.check().violations {
            rep.violations.push(format!("f_{}: {}", i + 1, v));
        }
        for k in 0..a.ngens() {
            let want = sq.maps[i].target.gen(k);
            if f.images[sq.ext.emb[k]] != want {
                rep.violations.push(format!("f_{} is not the identity on {}", i + 1, a.generator(k).name));
            }
        }
    }
    for idx in cover.indices(1) {
        let (i, j) = (idx[0], idx[1]);
        let Some(h) = sq.edges.get(&(i, j)) else {
            rep.violations.push(format!("missing homotopy ({},{})", i + 1, j + 1));
            continue;
        };
        let start = sq.maps[i].compose(&gd.restrict_map(i, &[i], &idx));
        let end = sq.maps[j].compose(&gd.tau(i, j));
        for v in h.verify(&start, &end).violations {
            rep.violations.push(format!("f_({},{}): {}", i + 1, j + 1, v));
        }
    }
    rep
}

/// The three edges over `B_i|_{ijk}`.
pub fn triangle_edges(gd: &GluingData, sq: &HomotopySquare, idx: &[usize]) -> [Homotopy; 3] {
    let (i, j, k) = (idx[0], idx[1], idx[2]);
    let tgt = gd.local(i, idx);
    let fm = Forms::omega1(&tgt);
    let e1 = push_homotopy(&sq.edges[&(i, j)], &gd.restrict_map(i, &[i, j], idx), &fm);
    let e2 = push_homotopy(&sq.edges[&(i, k)], &gd.restrict_map(i, &[i, k], idx), &fm);
    let to = gd.restrict_map(j, &[j, k], idx).compose(&gd.transition(i, j, idx));
    let e3 = push_homotopy(&sq.edges[&(j, k)], &to, &fm);
    [e1, e2, e3]
}

/// Triangle fillers `f_ij ∗ f_jk ≃ f_ik` on every triple overlap.
pub fn verify_augmentation(gd: &GluingData, sq: &HomotopySquare) -> AugmentationReport {
    let mut rep = AugmentationReport::default();
    for idx in gd.cover.indices(2) {
        let [e1, e2, e3] = triangle_edges(gd, sq, &idx);
        rep.checked += 1;
        if let Err(o) = fill_triangle(&e1, &e2, &e3) {
            rep.failures.push(([idx[0], idx[1], idx[2]], o));
        }
    }
    rep
}

#[derive(Clone, Debug, Default)]
pub struct RepairReport {
    pub rounds: usize,
    /// Generators whose edge homotopies were modified.
    pub modified: Vec<String>,
}

/// Cocycle data `(slot numerators, pole orders)` brought to a common level on which
/// it is an honest cocycle of the level model.
fn common_level(
    cover: &Cover,
    m: &ModulePresentation,
    p: usize,
    slots: Vec<(Vector, u32)>,
) -> Result<(u32, Vec<Vector>), DgaError> {
    let idxs = cover.indices(p);
    let mut level = slots.iter().map(|s| s.1).max().unwrap_or(0).max(1);
    let ring = &cover.ring;
    for _ in 0..4 {
        let alpha: Vec<Vector> = slots
            .iter()
            .zip(&idxs)
            .map(|((v, k), idx)| {
                let g = cover.product(idx).pow(level - k);
                v.iter().map(|x| ring.reduce(&(x * &g))).collect()
            })
            .collect();
        let model = CechModel::new(cover, m, level);
        if model.is_cocycle(p as i32, &alpha) {
            return Ok((level, alpha));
        }
        level += 1;
    }
    Err(pre("classes do not form a Čech cocycle"))
}

/// Modifies the edge homotopies on the generators `new` (all of one degree)
/// by `dt·θ_ij` so that every triangle fills. Maps `f_i` and the edges on all
/// other generators are left untouched.
pub fn repair_augmentation(
    gd: &GluingData,
    sq: &HomotopySquare,
    new: &[usize],
) -> Result<(HomotopySquare, RepairReport), DgaError> {
    let cover = &gd.cover;
    let b = sq.ext.target().clone();
    let order = lifting_order(&b);
    let mut out = sq.clone();
    let mut rep = RepairReport::default();
    for _ in 0..=new.len() {
        let aug = verify_augmentation(gd, &out);
        if aug.is_valid() {
            return Ok((out, rep));
        }
        rep.rounds += 1;
        let pos = |o: &Obstruction| order.iter().position(|&g| b.generator(g).name == o.generator).unwrap();
        let first = aug.failures.iter().min_by_key(|(_, o)| pos(o)).unwrap();
        let x = order[pos(&first.1)];
        if !new.contains(&x) {
            return Err(pre(format!("base square is not an augmentation (fails at {})", b.generator(x).name)));
        }
        let deg = first.1.degree;
        let glued = gd.glued(deg)?;
        let mut slots = Vec::new();
        for idx in cover.indices(2) {
            let hit = aug.failures.iter().find(|(t, o)| t[..] == idx[..] && o.generator == b.generator(x).name);
            match hit {
                Some((_, o)) => {
                    let v = gd.class(idx[0], &idx, deg, &o.cocycle)?;
                    let s = glued
                        .slot_from_chart(cover, idx[0], &idx, &v)
                        .ok_or_else(|| pre("obstruction class outside the glued module"))?;
                    slots.push(s);
                }
                None => slots.push((vzero(glued.module.ngens(), cover.nvars()), 0)),
            }
        }
        let (level, alpha) = common_level(cover, &glued.module, 2, slots)?;
        let beta = CechModel::new(cover, &glued.module, level).trivialize(2, &alpha)?;
        for (idx, bij) in cover.indices(1).iter().zip(&beta) {
            if vis_zero(bij) {
                continue;
            }
            let (i, j) = (idx[0], idx[1]);
            let v = glued.chart_vector(cover, i, idx, bij, level);
            let theta = gd.representative(i, idx, deg, &v).neg();
            let h = out.edges.get_mut(&(i, j)).unwrap();
            let fm = h.forms.clone();
            let add = fm.alg.mul(&fm.dt(), &fm.lift(&theta));
            h.body.images[x] = h.body.images[x].add(&add);
        }
        rep.modified.push(b.generator(x).name.clone());
    }
    let aug = verify_augmentation(gd, &out);
    if aug.is_valid() {
        Ok((out, rep))
    } else {
        Err(pre("repair did not converge"))
    }
}

// ---------------------------------------------------------------------------
// gluing algebras

#[derive(Clone, Debug)]
pub struct StageReport {
    pub stage: i32,
    pub killed: usize,
    pub added: usize,
    pub cech_corrections: usize,
    pub repaired: bool,
    /// `h^{−n}(B_(n+1)) → M^{−n}` is an isomorphism.
    pub iso: bool,
    /// `h^{−n−1}(B_(n+1)) → M^{−n−1}` is surjective.
    pub surjective: bool,
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub degree: i32,
    pub kind: &'static str,
    pub holds: bool,
}

pub struct GlueResult {
    pub square: HomotopySquare,
    pub stages: Vec<StageReport>,
    pub certificates: Vec<Certificate>,
}

impl GlueResult {
    pub fn algebra(&self) -> &Arc<Algebra> {
        self.square.ext.target()
    }

    pub fn all_hold(&self) -> bool {
        self.certificates.iter().all(|c| c.holds) && self.stages.iter().all(|s| s.iso && s.surjective)
    }
}

/// `h^n(B) → M^n` through the charts.
pub fn comparison_map(gd: &GluingData, sq: &HomotopySquare, n: i32) -> Result<ModuleMap, DgaError> {
    let b = sq.ext.target();
    let glued = gd.glued(n)?;
    let h = hn(b, n);
    let src = module::reinterpret(&h.module, &gd.cover.ring);
    let mut cols = Vec::new();
    for z in &h.cocycles {
        let ze = strand_element(b, n, z);
        let mut vs = Vec::new();
        for (i, f) in sq.maps.iter().enumerate() {
            vs.push(gd.class(i, &[i], n, &f.apply(&ze))?);
        }
        cols.push(glued.from_charts(&gd.cover, &vs).ok_or_else(|| pre(format!("class in degree {} does not glue", n)))?);
    }
    Ok(ModuleMap::new_unchecked(src, glued.module.clone(), cols))
}

fn initial_square(gd: &GluingData) -> HomotopySquare {
    let a = gd.cover.base.clone();
    let ext = FreeExtension::new(Morphism::identity(&a)).expect("identity is free");
    let maps: Vec<Morphism> = gd.locals.iter().map(|b| Morphism::inclusion(&a, b)).collect();
    let mut edges = BTreeMap::new();
    for idx in gd.cover.indices(1) {
        let f = maps[idx[0]].compose(&gd.restrict_map(idx[0], &[idx[0]], &idx));
        edges.insert((idx[0], idx[1]), Homotopy::constant(&f));
    }
    HomotopySquare { ext, maps, edges }
}

fn extend_homotopy(h: &Homotopy, b: &Arc<Algebra>, extra: Vec<Element>) -> Homotopy {
    let mut images: Vec<Element> = h.body.images.clone();
    images.extend(extra);
    Homotopy { forms: h.forms.clone(), body: Morphism { source: b.clone(), target: h.body.target.clone(), images } }
}

/// Runs the gluing induction for `budget` stages, returning `B_(budget)`.
pub fn glue_algebras(gd: &GluingData, budget: i32) -> Result<GlueResult, DgaError> {
    if budget < 1 {
        return Err(DgaError::BudgetExhausted(budget));
    }
    let rep = gd.validate(-budget - 1, 0);
    if !rep.is_valid() {
        let first = rep.strictness.iter().chain(&rep.cartesian).next().unwrap();
        return Err(pre(format!("gluing data invalid: {}", first)));
    }
    let cover = gd.cover.clone();
    let mut sq = initial_square(gd);
    let mut stages = Vec::new();
    for n in 0..budget {
        let deg = -n - 1;
        let b = sq.ext.target().clone();
        // classes to kill in degree −n and generators for degree −n−1
        let mu = comparison_map(gd, &sq, -n)?;
        let (_, kinc) = module::kernel(&mu);
        let h = hn(&b, -n);
        let mut kills = Vec::new();
        for col in &kinc.columns {
            let mut z = b.zero();
            for (c, cyc) in col.iter().zip(&h.cocycles) {
                if !c.is_zero() {
                    z = z.add(&b.mul(&b.poly_to_element(c), &strand_element(&b, -n, cyc)));
                }
            }
            if !z.is_zero() {
                kills.push(z);
            }
        }
        let target = gd.glued(deg)?;
        let adds: Vec<usize> =
            (0..target.module.ngens()).filter(|&k| !target.module.is_zero_element(&target.module.unit(k))).collect();
        let mut new_gens = Vec::new();
        let mut diffs = Vec::new();
        for (k, z) in kills.iter().enumerate() {
            new_gens.push(Generator::new(b.fresh_name(&format!("k{}_{}", n, k + 1)), deg));
            diffs.push(z.clone());
        }
        for k in 0..adds.len() {
            new_gens.push(Generator::new(b.fresh_name(&format!("m{}_{}", n, k + 1)), deg));
            diffs.push(b.zero());
        }
        let nb = b.ngens();
        let total = nb + new_gens.len();
        let b2 = b.extend(new_gens, |_| diffs.iter().map(|e| e.embed(total)).collect())?;
        let new_idx: Vec<usize> = (nb..total).collect();
        // chart maps
        let mut betas: Vec<Vec<Element>> = Vec::new();
        for (i, f) in sq.maps.iter().enumerate() {
            let mut ex = Exactness::new(&gd.locals[i]);
            let mut v = Vec::new();
            for z in &kills {
                let fz = f.apply(z);
                let pre_img = ex.preimage(&fz, -n).ok_or_else(|| {
                    pre(format!("stage {}: chart {}: killed class is not exact", n, i + 1))
                })?;
                v.push(pre_img);
            }
            betas.push(v);
        }
        let gammas: Vec<Vec<Element>> = (0..cover.len())
            .map(|i| {
                adds.iter()
                    .map(|&k| {
                        let e = target.module.unit(k);
                        let v = target.chart_vector(&cover, i, &[i], &e, 0);
                        gd.representative(i, &[i], deg, &v)
                    })
                    .collect()
            })
            .collect();
        // edges for the killing generators, with a Čech correction when needed
        let mut corrections = 0;
        let mut edge_vals: BTreeMap<(usize, usize), Vec<Element>> = BTreeMap::new();
        for (nu, z) in kills.iter().enumerate() {
            let solve = |betas: &Vec<Vec<Element>>| -> BTreeMap<(usize, usize), Result<Element, Element>> {
                let mut out = BTreeMap::new();
                for idx in cover.indices(1) {
                    let (i, j) = (idx[0], idx[1]);
                    let h = &sq.edges[&(i, j)];
                    let fm = &h.forms;
                    let rhs = h.body.apply(z);
                    let fx = gd.restrict_map(i, &[i], &idx).apply(&betas[i][nu]);
                    let gx = gd.tau(i, j).apply(&betas[j][nu]);
                    let mut ex = Exactness::new(&gd.local(i, &idx));
                    out.insert((i, j), fill_edge(fm, &rhs, &fx, &gx, deg, &mut ex));
                }
                out
            };
            let mut res = solve(&betas);
            if res.values().any(|r| r.is_err()) {
                corrections += 1;
                let mut slots = Vec::new();
                for idx in cover.indices(1) {
                    match &res[&(idx[0], idx[1])] {
                        Ok(_) => slots.push((vzero(target.module.ngens(), cover.nvars()), 0)),
                        Err(c) => {
                            let v = gd.class(idx[0], &idx, deg, c)?;
                            slots.push(
                                target
                                    .slot_from_chart(&cover, idx[0], &idx, &v)
                                    .ok_or_else(|| pre(format!("stage {}: edge obstruction does not glue", n)))?,
                            );
                        }
                    }
                }
                let (level, alpha) = common_level(&cover, &target.module, 1, slots)?;
                let beta = CechModel::new(&cover, &target.module, level).trivialize(1, &alpha)?;
                for (i, bi) in beta.iter().enumerate() {
                    if vis_zero(bi) {
                        continue;
                    }
                    let v = target.chart_vector(&cover, i, &[i], bi, level);
                    let zeta = gd.representative(i, &[i], deg, &v);
                    betas[i][nu] = betas[i][nu].add(&zeta);
                }
                res = solve(&betas);
            }
            for (key, r) in res {
                let v = r.map_err(|_| pre(format!("stage {}: edge ({},{}) stays obstructed", n, key.0 + 1, key.1 + 1)))?;
                edge_vals.entry(key).or_default().push(v);
            }
        }
        for (mu_k, _) in adds.iter().enumerate() {
            for idx in cover.indices(1) {
                let (i, j) = (idx[0], idx[1]);
                let h = &sq.edges[&(i, j)];
                let fx = gd.restrict_map(i, &[i], &idx).apply(&gammas[i][mu_k]);
                let gx = gd.tau(i, j).apply(&gammas[j][mu_k]);
                let mut ex = Exactness::new(&gd.local(i, &idx));
                let v = fill_edge(&h.forms, &h.forms.alg.zero(), &fx, &gx, deg, &mut ex)
                    .map_err(|_| pre(format!("stage {}: module generator lifts disagree on ({},{})", n, i + 1, j + 1)))?;
                edge_vals.entry((i, j)).or_default().push(v);
            }
        }
        let ext = FreeExtension::new(Morphism::inclusion(&cover.base, &b2))?;
        let maps: Vec<Morphism> = sq
            .maps
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut images = f.images.clone();
                images.extend(betas[i].iter().cloned());
                images.extend(gammas[i].iter().cloned());
                Morphism { source: b2.clone(), target: f.target.clone(), images }
            })
            .collect();
        let edges = sq
            .edges
            .iter()
            .map(|(k, h)| (*k, extend_homotopy(h, &b2, edge_vals.remove(k).unwrap_or_default())))
            .collect();
        sq = HomotopySquare { ext, maps, edges };
        let mut repaired = false;
        if cover.len() >= 3 && !verify_augmentation(gd, &sq).is_valid() {
            let (s2, _) = repair_augmentation(gd, &sq, &new_idx)?;
            sq = s2;
            repaired = true;
        }
        let iso = module::is_isomorphism(&comparison_map(gd, &sq, -n)?);
        let surjective = module::is_surjective(&comparison_map(gd, &sq, deg)?);
        stages.push(StageReport {
            stage: n,
            killed: kills.len(),
            added: adds.len(),
            cech_corrections: corrections,
            repaired,
            iso,
            surjective,
        });
    }
    let mut certificates = Vec::new();
    for l in (-budget + 1)..=0 {
        let holds = module::is_isomorphism(&comparison_map(gd, &sq, l)?);
        certificates.push(Certificate { degree: l, kind: "isomorphism", holds });
    }
    let holds = module::is_surjective(&comparison_map(gd, &sq, -budget)?);
    certificates.push(Certificate { degree: -budget, kind: "surjective", holds });
    Ok(GlueResult { square: sq, stages, certificates })
}

// ---------------------------------------------------------------------------
// descent for morphisms

#[derive(Clone, Debug)]
pub struct DescentLevel {
    pub level: i32,
    /// Base change of `h^{−ℓ}Der` to each chart and pairwise overlap is an isomorphism.
    pub charts: Vec<(Vec<usize>, bool)>,
    pub h0_iso: bool,
    pub h1_zero: bool,
}

impl DescentLevel {
    pub fn passes(&self) -> bool {
        self.h0_iso && self.h1_zero && self.charts.iter().all(|c| c.1)
    }
}

/// Čech `H⁰`, `H¹` of `h^{−ℓ}Der_C(B, A_•)` along `f : B → A` for each level.
pub fn descent_morphisms_check(
    ext: &FreeExtension,
    f: &Morphism,
    cover: &Cover,
    levels: &[i32],
) -> Result<Vec<DescentLevel>, DgaError> {
    let mut out = Vec::new();
    for &l in levels {
        let n = -l;
        let dc = DerComplex::new(ext, f, n, n)?;
        let h = dc.cohomology(n);
        let m = module::reinterpret(&h.module, &cover.ring);
        let mut charts = Vec::new();
        for p in 0..2 {
            for idx in cover.indices(p) {
                let ch = cover.chart(&idx);
                let fi = f.compose(&Morphism::inclusion(&cover.base, &ch.alg));
                let dci = DerComplex::new(ext, &fi, n, n)?;
                let hi = dci.cohomology(n);
                let span = Span::new(ch.alg.zero_gens().len(), dci.basis(n).len(), hi.cocycles.clone());
                let mut cols = Vec::new();
                for z in &h.cocycles {
                    let vals: Vec<Element> = dc.values(n, z).iter().map(|e| e.embed(ch.alg.ngens())).collect();
                    let v = dci.vector(n, &vals);
                    cols.push(span.lift(&v).ok_or_else(|| pre("restricted derivation is not a cocycle"))?);
                }
                let src = module::base_change(&m, &cover.to_chart_ring(&idx))?;
                let tgt = module::reinterpret(&hi.module, &ch.ring);
                let ok = module::is_isomorphism(&ModuleMap::new_unchecked(src, tgt, cols));
                charts.push((idx, ok));
            }
        }
        let model = CechModel::new(cover, &m, 1);
        let eps = model.augmentation();
        let h0_iso = module::is_injective(&eps) && exact_at(&eps, &model.coboundary(0));
        let h1_zero = model.cohomology(1).is_zero();
        out.push(DescentLevel { level: l, charts, h0_iso, h1_zero });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// non-freeness of rank-one modules over `ℚ[x, y]/(y² − f(x))`

#[derive(Clone, Debug)]
pub struct NonFreeCertificate {
    /// Images of the generators under an injective functional `M → R`.
    pub functional: Vec<Poly>,
    pub injective: bool,
    /// Generator of the norm ideal of the image over `ℚ[x]`.
    pub norm: Poly,
    pub norm_degree: u32,
    /// Degree of `f`.
    pub curve_degree: u32,
    pub certified: bool,
}

/// Certifies that a rank-one module is not free: it embeds as an ideal `J` whose
/// norm over `ℚ[x]` has degree below `deg f` and is not a square. A principal
/// ideal has norm `a² − b² f`, which is a square when `b = 0` and has degree at
/// least `deg f` otherwise (`deg f` odd).
pub fn nonfree_certificate(m: &ModulePresentation) -> Result<NonFreeCertificate, DgaError> {
    let ring = m.ring().clone();
    if ring.nvars() != 2 || ring.relations().len() != 1 {
        return Err(pre("expected a ring ℚ[x, y]/(y² − f(x))"));
    }
    let rel = &ring.relations()[0];
    let (x, y) = if rel.degree_in(1) == 2 && rel.terms().all(|(mo, _)| mo.0[1] == 0 || mo.0 == vec![0, 2]) {
        (0, 1)
    } else if rel.degree_in(0) == 2 && rel.terms().all(|(mo, _)| mo.0[0] == 0 || mo.0 == vec![2, 0]) {
        (1, 0)
    } else {
        return Err(pre("relation is not of the form y² − f(x)"));
    };
    let curve_degree = rel.degree_in(x);
    let (_, functionals) = module::hom_to_ring(m);
    let r1 = ModulePresentation::free(ring.clone(), 1);
    let mut chosen = None;
    for phi in functionals {
        if phi.iter().all(|p| ring.is_zero(p)) {
            continue;
        }
        let cols = phi.iter().map(|p| vec![p.clone()]).collect();
        let map = ModuleMap::new_unchecked(m.clone(), r1.clone(), cols);
        if module::is_injective(&map) {
            chosen = Some(phi);
            break;
        }
    }
    let Some(phi) = chosen else {
        return Err(pre("no injective functional to the ring"));
    };
    // ℚ[x]-lattice spanned by φ_k and y·φ_k in the basis (1, y)
    let yv = Poly::var(2, y);
    let mut rows: Vec<(Poly, Poly)> = Vec::new();
    for p in &phi {
        for q in [p.clone(), &yv * p] {
            let q = ring.reduce(&q);
            let mut a = Poly::zero(2);
            let mut b = Poly::zero(2);
            for (mo, c) in q.terms() {
                let mut e = mo.0.clone();
                let k = e[y];
                e[y] = 0;
                let t = Poly::term(dgs_commalg::Mono(e), c.clone());
                if k == 0 {
                    a = &a + &t;
                } else {
                    b = &b + &t;
                }
            }
            rows.push((a, b));
        }
    }
    let mut minors = Vec::new();
    for s in 0..rows.len() {
        for t in s + 1..rows.len() {
            let d = &(&rows[s].0 * &rows[t].1) - &(&rows[s].1 * &rows[t].0);
            if !d.is_zero() {
                minors.push(d);
            }
        }
    }
    let gb = dgs_commalg::ring::ideal_groebner(MonoOrder::Grevlex, 2, &minors);
    let norm = gb.into_iter().next().unwrap_or_else(|| Poly::zero(2));
    let norm_degree = norm.degree_in(x);
    let certified = !norm.is_zero()
        && curve_degree % 2 == 1
        && norm_degree < curve_degree
        && !is_square(&univariate(&norm, x));
    Ok(NonFreeCertificate { functional: phi, injective: true, norm, norm_degree, curve_degree, certified })
}

fn univariate(p: &Poly, x: usize) -> Vec<dgs_commalg::Q> {
    let mut c = vec![dgs_commalg::Q::from_integer(0.into()); p.degree_in(x) as usize + 1];
    for (m, q) in p.terms() {
        c[m.0[x] as usize] += q;
    }
    c
}

/// Whether a nonzero univariate polynomial is a constant times a square.
fn is_square(c: &[dgs_commalg::Q]) -> bool {
    use dgs_commalg::Q;
    let n = c.len() - 1;
    if n % 2 == 1 {
        return false;
    }
    let m = n / 2;
    let lc = c[n].clone();
    let monic: Vec<Q> = c.iter().map(|a| a / &lc).collect();
    // top-down square root of the monic polynomial
    let mut r = vec![Q::from_integer(0.into()); m + 1];
    r[m] = Q::from_integer(1.into());
    for k in (0..m).rev() {
        let mut acc = monic[m + k].clone();
        for i in (k + 1)..=m {
            let j = m + k - i;
            if j > k && j <= m {
                acc -= &r[i] * &r[j];
            }
        }
        r[k] = acc / Q::from_integer(2.into());
    }
    let mut sq = vec![Q::from_integer(0.into()); n + 1];
    for i in 0..=m {
        for j in 0..=m {
            sq[i + j] += &r[i] * &r[j];
        }
    }
    sq == monic
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::koszul;

    fn v(n: usize, i: usize) -> Poly {
        Poly::var(n, i)
    }

    fn line_cover() -> Arc<Cover> {
        let a = koszul(&["x"], &[]).unwrap();
        let one = Poly::one(1);
        Cover::new(&a, vec![v(1, 0), &one - &v(1, 0)]).unwrap()
    }

    #[test]
    fn cech_of_free_module() {
        let c = line_cover();
        let m = ModulePresentation::free(c.ring.clone(), 2);
        assert!(cech(&c, &m, 1).is_zero());
        let model = CechModel::new(&c, &m, 1);
        let eps = model.augmentation();
        assert!(module::is_injective(&eps));
        assert!(exact_at(&eps, &model.coboundary(0)));
        let model = CechModel::new(&c, &m, 2);
        let alpha = vec![vec![Poly::one(1), v(1, 0)]];
        let beta = model.trivialize(1, &alpha).unwrap();
        assert_eq!(beta.len(), 2);
    }

    #[test]
    fn glue_trivial_modules() {
        let c = line_cover();
        let charts: Vec<ModulePresentation> =
            (0..2).map(|i| ModulePresentation::free(c.chart(&[i]).ring.clone(), 1)).collect();
        let mut t = BTreeMap::new();
        t.insert((0, 1), vec![vec![Poly::one(2)]]);
        let g = glue_modules(&c, &charts, &t).unwrap();
        assert_eq!(g.module.ngens(), 1);
        assert!(g.certificates().iter().all(|r| r.is_iso()));
    }

    #[test]
    fn glue_trivial_datum() {
        let c = line_cover();
        let gd = GluingData::trivial(&c);
        assert!(gd.validate(-2, 0).is_valid());
        let r = glue_algebras(&gd, 2).unwrap();
        assert!(r.all_hold(), "{:?}", r.stages);
    }

    fn elliptic() -> Arc<Algebra> {
        let (x, y) = (v(2, 0), v(2, 1));
        let f = &(&(&x * &x) * &x) - &x;
        crate::algebra::koszul_named(&["x", "y"], &[&(&y * &y) - &f], "xi").unwrap()
    }

    #[test]
    fn trivial_datum_nonregular() {
        // h^{-1}(A) ≠ 0: dξ1 = xy, dξ2 = x²y
        let (x, y) = (v(2, 0), v(2, 1));
        let xy = &x * &y;
        let a = koszul(&["x", "y"], &[xy.clone(), &x * &xy]).unwrap();
        let one = Poly::one(2);
        let c = Cover::new(&a, vec![x.clone(), &one - &x]).unwrap();
        let gd = GluingData::trivial(&c);
        let r = glue_algebras(&gd, 2).unwrap();
        assert!(r.all_hold(), "{:?}", r.stages);
    }

    #[test]
    fn squares() {
        let q = |v: &[i64]| v.iter().map(|&a| dgs_commalg::Q::from_integer(a.into())).collect::<Vec<_>>();
        assert!(is_square(&q(&[1, 2, 1])));
        assert!(is_square(&q(&[0, 0, 0, 0, 3])));
        assert!(is_square(&q(&[5])));
        assert!(!is_square(&q(&[-1, 0, 1])));
        assert!(!is_square(&q(&[0, 1])));
    }

    #[test]
    fn twisted_line_bundle() {
        let a = elliptic();
        let (x, one) = (v(2, 0), Poly::one(2));
        let c = Cover::new(&a, vec![x.clone(), &(&x * &x) - &one]).unwrap();
        let locals: Vec<Arc<Algebra>> = (0..2)
            .map(|i| {
                let ch = c.chart(&[i]).alg.clone();
                ch.extend(vec![Generator::new("eta", -1)], |sk| vec![sk.zero()]).unwrap()
            })
            .collect();
        assert!(GluingData::new(&c, locals.clone(), BTreeMap::from([((0, 1), vec![Element::zero(0)])])).is_err());
        let b01 = restrict_local(&c, &locals[0], 0, &[0, 1]);
        // η ↦ y/(x² − 1)·η = x y u·η
        let xi = b01.index_of("x").unwrap();
        let yi = b01.index_of("y").unwrap();
        let ui = c.base.ngens();
        let e = b01.index_of("eta").unwrap();
        let img = b01.mul(&b01.mul(&b01.gen(xi), &b01.gen(yi)), &b01.mul(&b01.gen(ui), &b01.gen(e)));
        let gd = GluingData::new(&c, locals, BTreeMap::from([((0, 1), vec![img])])).unwrap();
        assert!(gd.validate(-2, 0).is_valid(), "{:?}", gd.validate(-2, 0));
        let m = gd.glued(-1).unwrap();
        let cert = nonfree_certificate(&m.module).unwrap();
        assert!(cert.certified, "{:?}", cert);
        let r = glue_algebras(&gd, 2).unwrap();
        assert!(r.all_hold(), "{:?}", r.stages);
    }

    #[test]
    fn repair_loop_triangle() {
        let a = koszul(&[], &[]).unwrap();
        let c = Cover::new(&a, vec![Poly::one(0); 3]).unwrap();
        let locals: Vec<Arc<Algebra>> = (0..3)
            .map(|i| {
                let ch = c.chart(&[i]).alg.clone();
                ch.extend(vec![Generator::new("eta", -1), Generator::new("zeta", -2)], |sk| vec![sk.zero(), sk.zero()])
                    .unwrap()
            })
            .collect();
        let mut tr = BTreeMap::new();
        for idx in c.indices(1) {
            tr.insert((idx[0], idx[1]), vec![]);
        }
        for idx in c.indices(1) {
            let b = restrict_local(&c, &locals[idx[0]], idx[0], &idx);
            tr.insert((idx[0], idx[1]), vec![b.gen(2), b.gen(3)]);
        }
        let gd = GluingData::new(&c, locals.clone(), tr).unwrap();
        assert!(gd.validate(-2, 0).is_valid());
        let bt = a.extend(vec![Generator::new("xt", -1)], |sk| vec![sk.zero()]).unwrap();
        let ext = FreeExtension::new(Morphism::inclusion(&a, &bt)).unwrap();
        let maps: Vec<Morphism> =
            locals.iter().map(|b| Morphism { source: bt.clone(), target: b.clone(), images: vec![b.gen(2)] }).collect();
        let mut edges = BTreeMap::new();
        for idx in c.indices(1) {
            let t = gd.local(idx[0], &idx);
            let fm = Forms::omega1(&t);
            let mut img = fm.lift(&t.gen(2));
            if idx == [0, 1] {
                img = img.add(&fm.alg.mul(&fm.dt(), &fm.lift(&t.gen(3))));
            }
            edges.insert((idx[0], idx[1]), Homotopy { forms: fm.clone(), body: Morphism { source: bt.clone(), target: fm.alg.clone(), images: vec![img] } });
        }
        let sq = HomotopySquare { ext, maps, edges };
        assert!(verify_homotopy_square(&gd, &sq).is_valid(), "{:?}", verify_homotopy_square(&gd, &sq));
        assert!(!verify_augmentation(&gd, &sq).is_valid());
        let (fixed, rep) = repair_augmentation(&gd, &sq, &[0]).unwrap();
        assert_eq!(rep.modified, vec!["xt".to_string()]);
        assert!(verify_augmentation(&gd, &fixed).is_valid());
        assert!(verify_homotopy_square(&gd, &fixed).is_valid());
        for (f, g) in sq.maps.iter().zip(&fixed.maps) {
            assert!(f.equals(g));
        }
    }

    fn tower() -> Arc<Algebra> {
        let z = v(1, 0);
        let k = koszul(&["z"], &[z.clone(), z]).unwrap();
        k.extend(vec![Generator::new("zeta", -2)], |sk| vec![sk.gen(1).sub(&sk.gen(2))]).unwrap()
    }

    #[test]
    fn descent_for_morphisms() {
        let b = tower();
        let ext = FreeExtension::over_field(&b);
        for a in [koszul(&["x"], &[]).unwrap(), elliptic()] {
            let n = h0_ring(&a).nvars();
            let x = v(n, 0);
            let one = Poly::one(n);
            let covers = if n == 1 {
                vec![vec![x.clone(), &one - &x], vec![x.clone(), &one - &x, &(&x * &x) + &one]]
            } else {
                vec![vec![x.clone(), &(&x * &x) - &one], vec![x.clone(), &x - &one, &x + &one]]
            };
            for els in covers {
                let c = Cover::new(&a, els).unwrap();
                let f = Morphism::new(b.clone(), a.clone(), vec![a.zero(); 4]).unwrap();
                for lvl in descent_morphisms_check(&ext, &f, &c, &[1, 2]).unwrap() {
                    assert!(lvl.passes(), "{:?}", lvl);
                }
            }
        }
    }
}
