use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sptlab::cocycle::standard_cocycle;
use sptlab::gauging::{commutator_norm, random_state};
use sptlab::hamiltonian::{
    circuit_identity_residual, conjugated_vertex_term, edge_term, entangler, entangler_state_check, field_term,
    flux_term, frustration_free_check, random_symmetric_term, spt_vertex_term, spt_vertex_terms, trivial_vertex_term,
    twisted_frustration_check, twisted_sector_spectrum, vertex_residuals, LocalTerm,
};
use sptlab::linalg::hermitian_eigen;
use sptlab::peps::{spt_state, Operator};
use sptlab::{c64, make_group, Cocycle3, CocycleParams, GroupSpec, TriLattice};
use std::sync::Arc;

fn zn(n: usize, p: u32) -> Cocycle3 {
    let g = Arc::new(make_group(&GroupSpec::Cyclic(n)).unwrap());
    standard_cocycle(g, &CocycleParams::level(p)).unwrap()
}

fn z2z2(t12: u32) -> Cocycle3 {
    let spec = GroupSpec::Product(Box::new(GroupSpec::Cyclic(2)), Box::new(GroupSpec::Cyclic(2)));
    let g = Arc::new(make_group(&spec).unwrap());
    let params = CocycleParams { type_i: vec![1, 0], type_ii: vec![((0, 1), t12)], type_iii: vec![] };
    standard_cocycle(g, &params).unwrap()
}

/// The vertex term equals the entangler-conjugated trivial term, computed from
/// `D`-phases before and after the vertex update.
#[test]
fn vertex_term_matches_conjugation() {
    let sphere = TriLattice::sphere().unwrap();
    let torus = TriLattice::torus(2, 2).unwrap();
    for a in [zn(2, 1), zn(3, 1), zn(3, 2), zn(4, 3), z2z2(1)] {
        for lat in [&sphere, &torus] {
            if a.group().order() > 3 && lat.num_vertices > 4 {
                continue;
            }
            for v in 0..lat.num_vertices {
                let h = spt_vertex_term(&a, lat, v).unwrap();
                let d = conjugated_vertex_term(&a, lat, v).unwrap();
                assert!(h.max_diff(&d).unwrap() < 1e-10);
                assert!(h.hermiticity_residual() < 1e-12);
                assert!(h.projector_residual() < 1e-12);
            }
        }
    }
}

#[test]
fn trivial_cocycle_gives_plain_average() {
    let a = zn(3, 0);
    let lat = TriLattice::torus(2, 2).unwrap();
    for v in 0..4 {
        let h = spt_vertex_term(&a, &lat, v).unwrap();
        let t = trivial_vertex_term(a.group(), &lat, v).unwrap();
        assert!(h.max_diff(&t).unwrap() < 1e-12);
    }
}

#[test]
fn vertex_terms_commute() {
    let a = zn(3, 1);
    let lat = TriLattice::torus(2, 2).unwrap();
    let dims = vec![3; 4];
    let terms = spt_vertex_terms(&a, &lat).unwrap();
    for h in &terms {
        for k in &terms {
            assert!(commutator_norm(h, k, &dims).unwrap() < 1e-12);
        }
    }
}

#[test]
fn fixed_point_is_frustration_free() {
    let lat = TriLattice::torus(2, 2).unwrap();
    for a in [zn(2, 1), zn(3, 2)] {
        assert!(frustration_free_check(&a, &lat).unwrap().max_residual < 1e-10);
        let n = a.group().order();
        for x in 0..n {
            for y in 0..n {
                assert!(twisted_frustration_check(&a, &lat, x, y).unwrap().max_residual < 1e-10);
            }
        }
    }
}

#[test]
fn perturbed_state_is_frustrated() {
    let a = zn(2, 1);
    let lat = TriLattice::torus(2, 2).unwrap();
    let mut psi = spt_state(&a, &lat).unwrap();
    psi.amps[3] *= c64(-1.0, 0.0);
    let r = vertex_residuals(&spt_vertex_terms(&a, &lat).unwrap(), &psi).unwrap();
    assert!(r.iter().any(|&x| x > 1e-3));
}

#[test]
fn entangler_prepares_fixed_point() {
    for (a, lat) in [(zn(3, 1), TriLattice::torus(2, 2).unwrap()), (z2z2(1), TriLattice::sphere().unwrap())] {
        let d = entangler(&a, &lat);
        assert!(d.unitarity_residual().unwrap() < 1e-12);
        assert!(entangler_state_check(&a, &lat, 1e-10).unwrap().close);
        for v in 0..lat.num_vertices {
            assert!(circuit_identity_residual(&a, &lat, v).unwrap() < 1e-10);
        }
    }
}

#[test]
fn twisted_sectors_have_one_ground_state_each() {
    // Type I on Z_N: every twisted sector is symmetric, so GSD = N².
    let a = zn(3, 1);
    let lat = TriLattice::torus(2, 2).unwrap();
    let mut zeros = 0;
    for (x, y) in a.group().commuting_pair_classes() {
        let spec = twisted_sector_spectrum(&a, &lat, x, y).unwrap();
        zeros += spec.iter().filter(|e| e.abs() < 1e-9).count();
        assert!(spec.iter().all(|&e| e > -1e-9));
    }
    assert_eq!(zeros, 9);
}

#[test]
fn simple_terms() {
    let z2 = make_group(&GroupSpec::Cyclic(2)).unwrap();
    let lat = TriLattice::torus(2, 2).unwrap();
    // Pauli X on one vertex
    let x = field_term(&z2, &lat, 0, 1).unwrap().matrix();
    let (ev, _) = hermitian_eigen(&x);
    assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    for e in 0..lat.num_edges() {
        let t = edge_term(&z2, &lat, e, 0).unwrap();
        assert!(t.projector_residual() < 1e-12 && t.hermiticity_residual() < 1e-12);
    }
    let f = flux_term(&z2, &lat, 0, 0).unwrap();
    assert!(f.projector_residual() < 1e-12);
    assert!(f.support.iter().all(|&s| s >= lat.num_vertices));
    let s3 = make_group(&GroupSpec::Symmetric3).unwrap();
    let non_central = (1..6).find(|&m| !s3.is_central(m)).unwrap();
    assert!(flux_term(&s3, &lat, 0, non_central).is_err());
}

#[test]
fn tensor_view_round_trip() {
    let a = zn(2, 1);
    let lat = TriLattice::sphere().unwrap();
    let h = spt_vertex_term(&a, &lat, 1).unwrap();
    let back = LocalTerm::from_tensor(h.support.clone(), &h.tensor().unwrap(), true).unwrap();
    assert!(h.max_diff(&back).unwrap() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn vertex_terms_are_symmetric(n in 2usize..5, p in 0u32..4, v in 0usize..4, k in 0usize..4, seed in 0u64..1000) {
        let a = zn(n, p % n as u32);
        let grp = a.group();
        let lat = TriLattice::torus(2, 2).unwrap();
        let h = spt_vertex_term(&a, &lat, v).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state(vec![n; 4], &mut rng).unwrap();
        let k = k % n;
        let lhs = h.apply(&psi.apply_global(grp, k));
        let rhs = h.apply(&psi).apply_global(grp, k);
        prop_assert!(lhs.sub(&rhs).unwrap().norm() < 1e-10);
    }

    #[test]
    fn random_symmetric_terms_commute_with_the_symmetry(s3 in any::<bool>(), k in 0usize..6, seed in 0u64..1000) {
        let g = make_group(&if s3 { GroupSpec::Symmetric3 } else { GroupSpec::Cyclic(3) }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = rng.random_range(0..3usize);
        let term = random_symmetric_term(&g, vec![u, u + 1], &mut rng).unwrap();
        let psi = random_state(vec![g.order(); 4], &mut rng).unwrap();
        let k = k % g.order();
        let lhs = term.apply(&psi.apply_global(&g, k));
        let rhs = term.apply(&psi).apply_global(&g, k);
        prop_assert!(lhs.sub(&rhs).unwrap().norm() < 1e-10);
    }
}
