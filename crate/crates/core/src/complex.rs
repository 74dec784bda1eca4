//! Bounded cochain complexes of finite free modules over a presented ring.

use std::sync::Arc;

use dgs_commalg::module::{self, ModuleMap, ModulePresentation};
use dgs_commalg::span::{vis_zero, Vector};
use dgs_commalg::{PresentedRing, Span};

/// Complex on the window `[lo, hi]`. Ranks are stored for `lo−1 ..= hi+1`
/// and differentials `d^n : C^n → C^{n+1}` for `n = lo−1 ..= hi`, so that
/// cohomology is defined at every degree of the window.
#[derive(Clone, Debug)]
pub struct ChainComplexF {
    pub ring: Arc<PresentedRing>,
    pub lo: i32,
    pub hi: i32,
    labels: Vec<Vec<String>>,
    diffs: Vec<ModuleMap>,
}

/// A cohomology module together with the cocycles representing its generators.
#[derive(Clone, Debug)]
pub struct Cohomology {
    pub degree: i32,
    pub module: ModulePresentation,
    pub cocycles: Vec<Vector>,
}

impl ChainComplexF {
    /// `labels[k]` is the basis of degree `lo − 1 + k`; `columns(n, j)` returns
    /// the image of basis element `j` of degree `n` in degree `n + 1`.
    pub fn from_fn(
        ring: Arc<PresentedRing>,
        lo: i32,
        hi: i32,
        labels: Vec<Vec<String>>,
        mut columns: impl FnMut(i32, usize) -> Vector,
    ) -> ChainComplexF {
        assert_eq!(labels.len() as i32, hi - lo + 3);
        let mut diffs = Vec::new();
        for n in (lo - 1)..=hi {
            let k = (n - lo + 1) as usize;
            let src = ModulePresentation::free(ring.clone(), labels[k].len());
            let tgt = ModulePresentation::free(ring.clone(), labels[k + 1].len());
            let cols = (0..labels[k].len()).map(|j| columns(n, j)).collect();
            diffs.push(ModuleMap::new_unchecked(src, tgt, cols));
        }
        ChainComplexF { ring, lo, hi, labels, diffs }
    }

    fn idx(&self, n: i32) -> usize {
        assert!(n >= self.lo - 1 && n <= self.hi + 1, "degree {} outside stored range", n);
        (n - self.lo + 1) as usize
    }

    pub fn rank(&self, n: i32) -> usize {
        if n < self.lo - 1 || n > self.hi + 1 {
            return 0;
        }
        self.labels[self.idx(n)].len()
    }

    pub fn labels(&self, n: i32) -> &[String] {
        &self.labels[self.idx(n)]
    }

    pub fn diff(&self, n: i32) -> &ModuleMap {
        &self.diffs[self.idx(n)]
    }

    pub fn free(&self, n: i32) -> ModulePresentation {
        ModulePresentation::free(self.ring.clone(), self.rank(n))
    }

    /// Checks `d^{n+1} ∘ d^n = 0` on the stored range.
    pub fn check_d_squared(&self) -> bool {
        ((self.lo - 1)..self.hi).all(|n| self.diff(n).compose(self.diff(n + 1)).is_zero())
    }

    pub fn cocycle_generators(&self, n: i32) -> Vec<Vector> {
        let d = self.diff(n);
        if d.target.ngens() == 0 {
            return (0..self.rank(n)).map(|k| d.source.unit(k)).collect();
        }
        module::kernel(d).1.columns
    }

    pub fn cohomology(&self, n: i32) -> Cohomology {
        let z = self.cocycle_generators(n);
        let b = &self.diff(n - 1).columns;
        let m = module::subquotient(&self.ring, self.rank(n), &z, b);
        Cohomology { degree: n, module: m, cocycles: z }
    }

    /// Transposed complex over the same ring; degree `n` becomes `−n`.
    pub fn dual(&self) -> ChainComplexF {
        let lo = -self.hi;
        let hi = -self.lo;
        let labels: Vec<Vec<String>> = ((lo - 1)..=(hi + 1)).map(|p| self.labels(-p).to_vec()).collect();
        let me = self.clone();
        ChainComplexF::from_fn(self.ring.clone(), lo, hi, labels, move |p, j| {
            // (d^*)^p : C^{-p}^* → C^{-p-1}^*, transpose of d^{-p-1}
            let d = me.diff(-p - 1);
            d.columns.iter().map(|col| col[j].clone()).collect()
        })
    }

    /// Base change along a ring map on the coefficients.
    pub fn base_change(&self, phi: &dgs_commalg::RingMap) -> ChainComplexF {
        let labels = self.labels.clone();
        let me = self.clone();
        ChainComplexF::from_fn(phi.target.clone(), self.lo, self.hi, labels, move |n, j| {
            me.diff(n).columns[j].iter().map(|p| phi.apply(p)).collect()
        })
    }

    pub fn is_acyclic(&self) -> bool {
        (self.lo..=self.hi).all(|n| self.cohomology(n).module.is_zero())
    }
}

/// Map on cohomology induced by a chain-level map `f: C^n → D^m` sending cocycles to cocycles.
pub fn induced_map(hx: &Cohomology, hy: &Cohomology, f: &ModuleMap) -> ModuleMap {
    let nv = hy.module.nvars();
    let rank = f.target.ngens();
    let span = Span::new(nv, rank, hy.cocycles.clone());
    let cols = hx
        .cocycles
        .iter()
        .map(|z| {
            let img = f.apply(z);
            span.lift(&img).expect("image of a cocycle is a cocycle")
        })
        .collect();
    ModuleMap::new_unchecked(hx.module.clone(), hy.module.clone(), cols)
}

/// `im f = ker g` inside the middle module.
pub fn exact_at(f: &ModuleMap, g: &ModuleMap) -> bool {
    if !f.compose(g).is_zero() {
        return false;
    }
    let (_, inc) = module::kernel(g);
    inc.columns
        .iter()
        .all(|v| vis_zero(&f.target.reduce(v)) || module::express(&f.target, &f.columns, v).is_some())
}
