use num_complex::Complex;
use proptest::prelude::*;
use sptlab::analysis::{gsd_count, modular_matrices, t_eigenvalues};
use sptlab::cocycle::{omega_g, slant1, slant2, standard_cocycle, verify_cocycle};
use sptlab::{make_group, Cocycle3, CocycleParams, FiniteGroup, GroupSpec};
use std::f64::consts::PI;
use std::sync::Arc;

fn zn(n: usize, p: u32) -> Cocycle3 {
    let g = Arc::new(make_group(&GroupSpec::Cyclic(n)).unwrap());
    standard_cocycle(g, &CocycleParams::level(p)).unwrap()
}

/// Independent evaluation of the type-I generator on `Z_N`:
/// `exp(2πi p a (b + c − [b + c]) / N²)` with `[·]` reduction mod N.
fn type_one(n: usize, p: u32, a: usize, b: usize, c: usize) -> Complex<f64> {
    let carry = (b + c - (b + c) % n) as f64;
    Complex::from_polar(1.0, 2.0 * PI * p as f64 * a as f64 * carry / (n * n) as f64)
}

#[test]
fn cyclic_tables_match_closed_form() {
    for n in 2..=6 {
        for p in 0..n as u32 {
            let a = zn(n, p);
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        assert!((a.get(x, y, z) - type_one(n, p, x, y, z)).norm() < 1e-12);
                    }
                }
            }
        }
    }
}

/// Commuting-pair classes counted directly: orbits of simultaneous conjugation.
fn pair_orbits(g: &FiniteGroup) -> usize {
    let n = g.order();
    let mut seen = vec![false; n * n];
    let mut count = 0;
    for x in 0..n {
        for y in 0..n {
            if seen[x * n + y] || g.mul(x, y) != g.mul(y, x) {
                continue;
            }
            count += 1;
            for h in 0..n {
                let hi = g.inv(h);
                let cx = g.mul(g.mul(h, x), hi);
                let cy = g.mul(g.mul(h, y), hi);
                seen[cx * n + cy] = true;
            }
        }
    }
    count
}

#[test]
fn pair_class_counts() {
    for (spec, want) in [
        (GroupSpec::Cyclic(2), 4),
        (GroupSpec::Cyclic(3), 9),
        (GroupSpec::Symmetric3, 8),
        (GroupSpec::Dihedral4, 22),
    ] {
        let g = make_group(&spec).unwrap();
        assert_eq!(pair_orbits(&g), want);
        assert_eq!(g.commuting_pair_classes().len(), want);
        assert_eq!(g.commuting_pair_class_count_burnside(), want);
    }
}

#[test]
fn gsd_examples() {
    assert_eq!(gsd_count(&zn(2, 0)).unwrap().count, 4);
    assert_eq!(gsd_count(&zn(2, 1)).unwrap().count, 4);
    assert_eq!(gsd_count(&zn(3, 0)).unwrap().count, 9);
    let s3 = Arc::new(make_group(&GroupSpec::Symmetric3).unwrap());
    assert_eq!(gsd_count(&Cocycle3::trivial(s3)).unwrap().count, 8);
}

#[test]
fn s3_conjugate_pairs_share_class() {
    let g = make_group(&GroupSpec::Symmetric3).unwrap();
    for (x, y) in g.commuting_pairs() {
        for h in g.elements() {
            assert_eq!(g.pair_class_rep(x, y), g.pair_class_rep(g.conj(h, x), g.conj(h, y)));
        }
    }
}

#[test]
fn modular_relations_for_small_builtins() {
    for n in 2..=4 {
        for p in 0..n as u32 {
            let m = modular_matrices(&zn(n, p));
            assert!(m.s4_residual < 1e-10 && m.st3_residual < 1e-10, "Z{n} level {p}");
        }
    }
}

fn sorted_by_angle(mut v: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
    v.sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap());
    v
}

/// T on the pair basis of `Z2` maps `(1,0) ↔ (1,1)` with phase `α(1,1,1)` on one leg
/// and fixes `(0,0)`, `(0,1)`: spins `{1,1,1,−1}` untwisted and `{1,1,i,−i}` twisted.
#[test]
fn z2_topological_spins() {
    let c = |re, im| Complex::new(re, im);
    let trivial = sorted_by_angle(t_eigenvalues(&zn(2, 0)));
    let twisted = sorted_by_angle(t_eigenvalues(&zn(2, 1)));
    for (got, want) in trivial.iter().zip(sorted_by_angle(vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)])) {
        assert!((got - want).norm() < 1e-10);
    }
    for (got, want) in twisted.iter().zip(sorted_by_angle(vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)])) {
        assert!((got - want).norm() < 1e-10);
    }
}

/// `ω^g` and the plain slant product differ by the coboundary of `ε(k) = α(g,k,k⁻¹)`.
#[test]
fn omega_is_slant_times_coboundary() {
    for a in [zn(3, 1), zn(4, 3)] {
        let g = a.group();
        for x in g.elements() {
            let eps = |k: usize| a.get(x, k, g.inv(k));
            for k in g.elements() {
                for h in g.elements() {
                    let ratio = omega_g(&a, x).get(k, h) / slant1(&a, x).get(k, h);
                    assert!((ratio - eps(g.mul(k, h)) / (eps(k) * eps(h))).norm() < 1e-12);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn standard_cocycles_satisfy_the_cocycle_condition(n in 2usize..7, p in 0u32..6) {
        let a = zn(n, p % n as u32);
        let v = verify_cocycle(&a).unwrap();
        prop_assert!(v.ok && v.max_residual < 1e-10);
    }

    #[test]
    fn coboundary_twists_keep_the_cocycle_condition(n in 2usize..5, p in 0u32..4, seed in 0u64..1000) {
        use rand::SeedableRng;
        let a = zn(n, p % n as u32);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let b = a.random_coboundary_twist(&mut rng, 4);
        prop_assert!(verify_cocycle(&b).unwrap().max_residual < 1e-10);
        // slant2 is a class invariant
        let g = a.group();
        for (x, y) in g.commuting_pairs() {
            let s = slant2(&a, x, y).unwrap();
            let t = slant2(&b, x, y).unwrap();
            for (u, w) in s.values.iter().zip(&t.values) {
                prop_assert!((u - w).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn slant_products_are_cocycles_and_characters(n in 2usize..6, p in 0u32..5, x in 0usize..5, y in 0usize..5) {
        let a = zn(n, p % n as u32);
        let (x, y) = (x % n, y % n);
        let g = a.group();
        let all: Vec<usize> = g.elements().collect();
        prop_assert!(slant1(&a, x).cocycle_residual(&all) < 1e-10);
        prop_assert!(omega_g(&a, x).cocycle_residual(&all) < 1e-10);
        let th = slant2(&a, x, y).unwrap();
        prop_assert!(th.multiplicativity_residual(g) < 1e-10);
    }
}
