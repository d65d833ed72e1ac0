use proptest::prelude::*;
use sptlab::cocycle::{omega_at, slant2, standard_cocycle};
use sptlab::mpo::{
    check_representation, check_zipper, compose_crossings, extract_associator, rank_vs_trace_check,
    symmetry_action_formula, symmetry_action_on_crossing, transfer_spectrum, MpoFamily,
};
use sptlab::peps::{
    defect_projective_action, global_symmetry_check, spt_state, theta_check, theta_prediction, verify_pulling_through,
};
use sptlab::{c64, make_group, Cocycle3, CocycleParams, GroupSpec, TriLattice};
use std::sync::Arc;

fn zn(n: usize, p: u32) -> Cocycle3 {
    let g = Arc::new(make_group(&GroupSpec::Cyclic(n)).unwrap());
    standard_cocycle(g, &CocycleParams::level(p)).unwrap()
}

fn z2z2(t1: u32, t2: u32, t12: u32) -> Cocycle3 {
    let spec = GroupSpec::Product(Box::new(GroupSpec::Cyclic(2)), Box::new(GroupSpec::Cyclic(2)));
    let g = Arc::new(make_group(&spec).unwrap());
    let params = CocycleParams { type_i: vec![t1, t2], type_ii: vec![((0, 1), t12)], type_iii: vec![] };
    standard_cocycle(g, &params).unwrap()
}

#[test]
fn extracted_associator_is_inverse_cocycle() {
    for a in [zn(2, 1), zn(3, 2), z2z2(1, 0, 1)] {
        let ex = extract_associator(&a).unwrap();
        for (x, y) in ex.table().iter().zip(a.inverse().table()) {
            assert!((x - y).norm() < 1e-10);
        }
    }
}

#[test]
fn trivial_cocycle_crossings_are_trivial() {
    let a = zn(3, 0);
    let fam = MpoFamily::from_associator(&a).unwrap();
    for g in 0..3 {
        for k in 0..3 {
            for h in 0..3 {
                assert!((compose_crossings(&fam, g, k, h).unwrap() - c64(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn crossing_factor_set_for_type_two() {
    let a = z2z2(0, 0, 1);
    let fam = MpoFamily::from_associator(&a).unwrap();
    for g in 0..4 {
        for k in 0..4 {
            for h in 0..4 {
                let c = compose_crossings(&fam, g, k, h).unwrap();
                assert!((c - omega_at(&a, g, k, h)).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn symmetry_action_on_crossings_matches_formula() {
    let a = zn(4, 1);
    let fam = MpoFamily::from_associator(&a).unwrap();
    for g in 0..4 {
        for h in 0..4 {
            for k in 0..4 {
                let got = symmetry_action_on_crossing(&fam, g, h, k).unwrap();
                let want = symmetry_action_formula(&fam, g, h, k).unwrap();
                assert!((got - want).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn spt_state_is_symmetric() {
    let lat = TriLattice::torus(2, 2).unwrap();
    for a in [zn(2, 1), zn(3, 1)] {
        for g in a.group().elements() {
            let e = global_symmetry_check(&a, &lat, g).unwrap();
            assert!((e - c64(1.0, 0.0)).norm() < 1e-10);
        }
        assert!(spt_state(&a, &lat).unwrap().norm() > 0.0);
    }
}

#[test]
fn twisted_state_eigenvalues_are_slant_products() {
    let lat = TriLattice::torus(2, 2).unwrap();
    for a in [zn(2, 1), zn(3, 1), zn(3, 2)] {
        let n = a.group().order();
        for x in 0..n {
            for y in 0..n {
                for k in 0..n {
                    let got = theta_check(&a, &lat, x, y, k).unwrap();
                    let want = theta_prediction(&a, x, y, k).unwrap();
                    assert!((got - want).norm() < 1e-10, "({x},{y}) k={k}");
                }
            }
        }
    }
}

fn z2_cubed(t123: u32) -> Cocycle3 {
    let z2 = || Box::new(GroupSpec::Cyclic(2));
    let spec = GroupSpec::Product(Box::new(GroupSpec::Product(z2(), z2())), z2());
    let g = Arc::new(make_group(&spec).unwrap());
    let params = CocycleParams { type_i: vec![0, 0, 0], type_ii: vec![], type_iii: vec![((0, 1, 2), t123)] };
    standard_cocycle(g, &params).unwrap()
}

/// Bits of a `Z2³` element, read off the group's own product structure.
fn bits(a: &Cocycle3) -> Vec<[u32; 3]> {
    let grp = a.group();
    let gens: Vec<usize> = (1..8).filter(|&x| grp.inv(x) == x).collect();
    // pick three generators that span
    let mut basis = Vec::new();
    for &x in &gens {
        let span: Vec<usize> = (0..1 << basis.len())
            .map(|m: usize| basis.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).fold(0, |acc, (_, &b)| grp.mul(acc, b)))
            .collect();
        if !span.contains(&x) {
            basis.push(x);
        }
    }
    let mut out = vec![[0; 3]; 8];
    for m in 0..8u32 {
        let e = (0..3).filter(|i| m >> i & 1 == 1).fold(0, |acc, i| grp.mul(acc, basis[i]));
        out[e] = [m & 1, m >> 1 & 1, m >> 2 & 1];
    }
    out
}

fn det3(a: [u32; 3], b: [u32; 3], c: [u32; 3]) -> u32 {
    let d = a[0] * (b[1] * c[2] + b[2] * c[1]) + a[1] * (b[0] * c[2] + b[2] * c[0]) + a[2] * (b[0] * c[1] + b[1] * c[0]);
    d % 2
}

/// Type III on `Z2³` gives `θ^{x,y}(k) = (−1)^{det[x y k]}`, a basis-independent sign.
#[test]
fn type_three_slant_products() {
    let a = z2_cubed(1);
    let b = bits(&a);
    for x in 0..8 {
        for y in 0..8 {
            let th = slant2(&a, x, y).unwrap();
            for k in 0..8 {
                let want = if det3(b[x], b[y], b[k]) == 1 { -1.0 } else { 1.0 };
                assert!((th.at(k).unwrap() - c64(want, 0.0)).norm() < 1e-10, "({x},{y},{k})");
            }
        }
    }
}

#[test]
fn type_three_twisted_states() {
    let a = z2_cubed(1);
    let lat = TriLattice::torus(2, 2).unwrap();
    let b = bits(&a);
    let (x, y) = (b.iter().position(|v| *v == [1, 0, 0]).unwrap(), b.iter().position(|v| *v == [0, 1, 0]).unwrap());
    for k in 0..8 {
        let want = if det3(b[x], b[y], b[k]) == 1 { -1.0 } else { 1.0 };
        assert!((theta_check(&a, &lat, x, y, k).unwrap() - c64(want, 0.0)).norm() < 1e-10);
    }
}

#[test]
fn defect_factor_set_matches_omega() {
    let a = zn(2, 1);
    let lat = TriLattice::torus(3, 3).unwrap();
    for h in 0..2 {
        for k in 0..2 {
            let got = defect_projective_action(&a, &lat, 1, h, k).unwrap();
            assert!((got - omega_at(&a, 1, k, h)).norm() < 1e-10);
        }
    }
}

#[test]
fn diagnostics() {
    for a in [zn(2, 1), zn(3, 2)] {
        assert!(transfer_spectrum(&a, 0, 3).unwrap().single_block);
        for len in 2..=4 {
            assert!(rank_vs_trace_check(&a, len).unwrap().ok);
        }
    }
}

#[test]
fn perturbed_cocycle_is_rejected() {
    let a = zn(2, 1);
    let mut t = a.table().to_vec();
    t[7] *= c64(0.0, 1.0);
    let bad = Cocycle3::from_table(a.group_arc(), t);
    assert!(bad.is_err() || MpoFamily::from_associator(&bad.unwrap()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mpo_group_law_and_zipper(n in 2usize..5, p in 0u32..4, g in 0usize..4, h in 0usize..4, len in 2usize..6) {
        let a = zn(n, p % n as u32);
        let (g, h) = (g % n, h % n);
        prop_assert!(check_representation(&a, g, h, len).unwrap() < 1e-10);
        prop_assert!(check_zipper(&a, g, h, len).unwrap() < 1e-10);
    }

    #[test]
    fn pulling_through_on_the_sphere(n in 2usize..5, p in 0u32..4) {
        let a = zn(n, p % n as u32);
        let lat = TriLattice::sphere().unwrap();
        prop_assert!(verify_pulling_through(&a, &lat).unwrap() < 1e-10);
    }
}
