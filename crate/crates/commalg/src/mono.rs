use std::cmp::Ordering;

/// Exponent vector of a commutative monomial.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Mono(pub Vec<u32>);

impl Mono {
    pub fn one(n: usize) -> Mono {
        Mono(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Mono {
        let mut e = vec![0; n];
        e[i] = 1;
        Mono(e)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Mono) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other / self`, assuming `self` divides `other`.
    pub fn quotient_of(&self, other: &Mono) -> Mono {
        Mono(other.0.iter().zip(&self.0).map(|(a, b)| a - b).collect())
    }

    pub fn lcm(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn coprime(&self, other: &Mono) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a == 0 || *b == 0)
    }
}

/// Graded reverse lexicographic comparison.
pub fn grevlex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    if da != db {
        return da.cmp(&db);
    }
    for i in (0..a.len()).rev() {
        if a[i] != b[i] {
            return b[i].cmp(&a[i]);
        }
    }
    Ordering::Equal
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        grevlex(&self.0, &other.0)
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Monomial orders understood by the Gröbner engine.
///
/// Everything public runs in `Grevlex`. `Elim(k)` is the block order with the
/// first `k` variables eliminated; it is used only for ring-map image and
/// kernel tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonoOrder {
    Grevlex,
    Elim(usize),
}

impl MonoOrder {
    pub fn cmp(&self, a: &Mono, b: &Mono) -> Ordering {
        match *self {
            MonoOrder::Grevlex => grevlex(&a.0, &b.0),
            MonoOrder::Elim(k) => grevlex(&a.0[..k], &b.0[..k])
                .then_with(|| grevlex(&a.0[k..], &b.0[k..])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grevlex_basics() {
        // x > y > z, x*z < y^2 in grevlex
        let xz = Mono(vec![1, 0, 1]);
        let yy = Mono(vec![0, 2, 0]);
        assert!(xz < yy);
        assert!(Mono(vec![1, 0, 0]) > Mono(vec![0, 1, 0]));
        assert!(Mono(vec![0, 0, 2]) > Mono(vec![1, 0, 0]));
    }

    #[test]
    fn elim_puts_first_block_on_top() {
        let o = MonoOrder::Elim(1);
        let a = Mono(vec![1, 0]);
        let b = Mono(vec![0, 5]);
        assert_eq!(o.cmp(&a, &b), Ordering::Greater);
    }
}
