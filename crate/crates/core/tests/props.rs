use dgs::algebra::localize;
use dgs::cohomology::localization_report;
use dgs::{Element, Morphism};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[path = "../../cli/tests/support/random.rs"]
mod random;

use random::{random_algebra, random_element};

fn sign(m: i32, n: i32) -> i64 {
    if (m * n).rem_euclid(2) == 1 {
        -1
    } else {
        1
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn d_squares_to_zero(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_algebra(&mut rng, 6);
        for n in -4..=0 {
            let x = random_element(&mut rng, &a, n);
            let dx = a.d(&x);
            prop_assert!(a.d(&dx).is_zero());
            if !dx.is_zero() {
                prop_assert_eq!(a.degree(&dx).unwrap(), Some(n + 1));
            }
        }
    }

    #[test]
    fn leibniz_and_koszul_sign(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_algebra(&mut rng, 6);
        let m = -rng.gen_range(0..=3);
        let n = -rng.gen_range(0..=3);
        let x = random_element(&mut rng, &a, m);
        let y = random_element(&mut rng, &a, n);
        let lhs = a.d(&a.mul(&x, &y));
        let rhs = a.mul(&a.d(&x), &y).add(&a.mul(&x, &a.d(&y)).scale(&dgs::commalg::q(sign(m, 1))));
        prop_assert_eq!(lhs, rhs);
        let xy = a.mul(&x, &y);
        let yx = a.mul(&y, &x).scale(&dgs::commalg::q(sign(m, n)));
        prop_assert_eq!(xy, yx);
    }

    #[test]
    fn product_is_associative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_algebra(&mut rng, 5);
        let xs: Vec<Element> = (0..3).map(|_| { let k = -rng.gen_range(0..=2); random_element(&mut rng, &a, k) }).collect();
        prop_assert_eq!(a.mul(&a.mul(&xs[0], &xs[1]), &xs[2]), a.mul(&xs[0], &a.mul(&xs[1], &xs[2])));
    }

    #[test]
    fn localization_is_a_chain_map(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_algebra(&mut rng, 5);
        let g = random_element(&mut rng, &a, 0);
        prop_assume!(!g.is_zero());
        let (ag, inc) = localize(&a, &g).unwrap();
        prop_assert!(inc.check().valid);
        for n in -3..=0 {
            let x = random_element(&mut rng, &a, n);
            prop_assert_eq!(inc.apply(&a.d(&x)), ag.d(&inc.apply(&x)));
        }
        let id = Morphism::identity(&ag);
        prop_assert!(inc.compose(&id).equals(&inc));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cohomology_commutes_with_localization(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_algebra(&mut rng, 4);
        let g = random_element(&mut rng, &a, 0);
        prop_assume!(!g.is_zero());
        for n in [0, -1] {
            prop_assert!(localization_report(&a, &g, n).unwrap().is_iso());
        }
    }
}
