use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sptlab::cocycle::standard_cocycle;
use sptlab::gauging::{
    check_go_identity, classify_connection, commutator_norm, disentangle, disentangle_and_compare, entangle,
    flat_connections, flux_projector, gauge_state, gauss_projector, go_residual, holonomies, is_flat, overlap_gram,
    random_state, simple_representative, GConnection, GaugedLayout,
};
use sptlab::hamiltonian::{edge_term, gauged_vertex_term, random_symmetric_term, spt_vertex_term, twisted_vertex_term};
use sptlab::peps::{spt_state, Operator, StateVector};
use sptlab::{c64, make_group, Cocycle3, CocycleParams, FiniteGroup, GroupSpec, TriLattice};
use std::sync::Arc;

fn cocycle(spec: GroupSpec, p: u32) -> Cocycle3 {
    let g = Arc::new(make_group(&spec).unwrap());
    let params = if g.cyclic_factors().is_some() { CocycleParams::level(p) } else { CocycleParams::default() };
    standard_cocycle(g, &params).unwrap()
}

fn zn(n: usize, p: u32) -> Cocycle3 {
    cocycle(GroupSpec::Cyclic(n), p)
}

/// Brute-force flat count for `Z2`: every triangle's three edge values must sum to 0 mod 2.
fn z2_flat_count(lat: &TriLattice) -> usize {
    let ne = lat.num_edges();
    (0u32..1 << ne)
        .filter(|mask| lat.triangles.iter().all(|t| t.edges.iter().map(|&e| mask >> e & 1).sum::<u32>() % 2 == 0))
        .count()
}

#[test]
fn flat_connection_counts() {
    let z2 = make_group(&GroupSpec::Cyclic(2)).unwrap();
    let z3 = make_group(&GroupSpec::Cyclic(3)).unwrap();
    let torus = TriLattice::torus(2, 2).unwrap();
    let sphere = TriLattice::sphere().unwrap();
    assert_eq!(z2_flat_count(&torus), 32);
    assert_eq!(flat_connections(&z2, &torus).unwrap().len(), 32);
    assert_eq!(z2_flat_count(&sphere), 8);
    assert_eq!(flat_connections(&z2, &sphere).unwrap().len(), 8);
    // sphere: pure gauge, |G|^{V−1}
    assert_eq!(flat_connections(&z3, &sphere).unwrap().len(), 27);
    for phi in flat_connections(&z3, &torus).unwrap() {
        assert!(is_flat(&z3, &torus, &phi));
    }
}

#[test]
fn single_edge_flip_is_not_flat() {
    let z2 = make_group(&GroupSpec::Cyclic(2)).unwrap();
    let lat = TriLattice::torus(2, 2).unwrap();
    let mut phi = GConnection::identity(&lat);
    phi.values[5] = 1;
    assert!(!is_flat(&z2, &lat, &phi));
    assert!(classify_connection(&z2, &lat, &phi).is_err());
}

#[test]
fn simple_representatives_have_prescribed_holonomy() {
    let lat = TriLattice::torus(2, 2).unwrap();
    for spec in [GroupSpec::Cyclic(3), GroupSpec::Symmetric3] {
        let g = make_group(&spec).unwrap();
        for (x, y) in g.commuting_pairs() {
            let phi = simple_representative(&g, &lat, x, y).unwrap();
            assert!(is_flat(&g, &lat, &phi));
            assert_eq!(holonomies(&g, &lat, &phi).unwrap(), (x, y));
        }
    }
}

#[test]
fn odd_state_gauges_to_zero() {
    let z2 = make_group(&GroupSpec::Cyclic(2)).unwrap();
    let lat = TriLattice::sphere().unwrap();
    let psi = StateVector::from_fn(vec![2; 4], |c| match c.iter().sum::<usize>() {
        0 => c64(1.0, 0.0),
        4 => c64(-1.0, 0.0),
        _ => c64(0.0, 0.0),
    })
    .unwrap();
    let out = gauge_state(&z2, &lat, &psi, &GConnection::identity(&lat)).unwrap();
    assert!(out.norm() < 1e-12);
}

/// `⟨G ψ|G ψ⟩ = ⟨ψ|P|ψ⟩` with `P = (1/|G|) Σ_g R(g)^{⊗V}`.
fn symmetric_norm_sqr(g: &FiniteGroup, psi: &StateVector) -> f64 {
    let mut acc = StateVector::zeros(psi.dims.clone()).unwrap();
    for h in g.elements() {
        let moved = psi.apply_global(g, h);
        for (a, b) in acc.amps.iter_mut().zip(&moved.amps) {
            *a += b / g.order() as f64;
        }
    }
    psi.inner(&acc).unwrap().re
}

#[test]
fn gauss_projectors_are_commuting_projectors() {
    let z2 = make_group(&GroupSpec::Cyclic(2)).unwrap();
    let lat = TriLattice::sphere().unwrap();
    let dims = GaugedLayout::new(&z2, &lat).dims();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_state(dims.clone(), &mut rng).unwrap();
    for v in 0..4 {
        let p = gauss_projector(&z2, &lat, v).unwrap();
        let once = p.apply(&s);
        assert!(p.apply(&once).sub(&once).unwrap().norm() < 1e-12);
        for w in 0..4 {
            let q = gauss_projector(&z2, &lat, w).unwrap();
            assert!(commutator_norm(&p, &q, &dims).unwrap() < 1e-12);
        }
    }
}

#[test]
fn gauged_states_satisfy_gauss_and_flatness() {
    let cases = [
        (zn(3, 1), TriLattice::sphere().unwrap(), (0, 0)),
        (zn(2, 1), TriLattice::torus(2, 2).unwrap(), (1, 1)),
    ];
    for (a, lat, (x, y)) in cases {
        let g = a.group();
        let psi = spt_state(&a, &lat).unwrap();
        let phi = if lat.is_closed() && x + y > 0 {
            simple_representative(g, &lat, x, y).unwrap()
        } else {
            GConnection::identity(&lat).gauge_move(g, &lat, 2, 1)
        };
        let gs = gauge_state(g, &lat, &psi, &phi).unwrap();
        assert!(gs.norm() > 1e-3);
        for v in 0..lat.num_vertices {
            let p = gauss_projector(g, &lat, v).unwrap();
            assert!(p.apply(&gs).sub(&gs).unwrap().norm() < 1e-10);
        }
        for t in 0..lat.triangles.len() {
            let b = flux_projector(g, &lat, t).unwrap();
            assert!(b.apply(&gs).sub(&gs).unwrap().norm() < 1e-10);
        }
    }
}

#[test]
fn gauged_vertex_terms_commute_with_constraints() {
    let a = zn(2, 1);
    let g = a.group();
    let lat = TriLattice::sphere().unwrap();
    let dims = GaugedLayout::new(g, &lat).dims();
    for v in 0..4 {
        let h = gauged_vertex_term(&a, &lat, v).unwrap();
        for w in 0..4 {
            assert!(commutator_norm(&h, &gauss_projector(g, &lat, w).unwrap(), &dims).unwrap() < 1e-12);
        }
        for t in 0..lat.triangles.len() {
            assert!(commutator_norm(&h, &flux_projector(g, &lat, t).unwrap(), &dims).unwrap() < 1e-12);
        }
    }
}

/// Spoke-framed gauged vertex term against the twisted matter term, on the twisted torus.
#[test]
fn gauged_vertex_term_intertwines_twisted_term() {
    let a = zn(2, 1);
    let g = a.group();
    let lat = TriLattice::torus(2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (x, y) in [(0, 0), (1, 0), (1, 1)] {
        let phi = simple_representative(g, &lat, x, y).unwrap();
        let psi = random_state(vec![2; lat.num_vertices], &mut rng).unwrap();
        for v in 0..lat.num_vertices {
            let gv = gauged_vertex_term(&a, &lat, v).unwrap();
            let tv = twisted_vertex_term(&a, &lat, v, &phi).unwrap();
            assert!(go_residual(g, &lat, &gv, &tv, &phi, &psi).unwrap() < 1e-10);
        }
    }
}

#[test]
fn entangler_round_trip() {
    let z3 = make_group(&GroupSpec::Cyclic(3)).unwrap();
    let lat = TriLattice::sphere().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = random_state(GaugedLayout::new(&z3, &lat).dims(), &mut rng).unwrap();
    let back = entangle(&z3, &lat, &disentangle(&z3, &lat, &s).unwrap()).unwrap();
    assert!(back.sub(&s).unwrap().norm() < 1e-12);
}

#[test]
fn gauged_ground_states_are_orthogonal() {
    let gram = overlap_gram(&zn(2, 1), &TriLattice::torus(2, 2).unwrap()).unwrap();
    assert_eq!(gram.rank, 4);
    assert!(gram.max_offdiag < 1e-10);
}

#[test]
fn gauged_fixed_point_is_tqd_ground_state() {
    for a in [zn(2, 1), zn(3, 2)] {
        let r = disentangle_and_compare(&a, &TriLattice::sphere().unwrap()).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-10);
        assert!((r.product_fidelity - 1.0).abs() < 1e-10);
    }
}

#[test]
fn edge_term_gauging() {
    let z2 = make_group(&GroupSpec::Cyclic(2)).unwrap();
    let lat = TriLattice::torus(2, 2).unwrap();
    let phi = simple_representative(&z2, &lat, 1, 1).unwrap();
    for e in 0..lat.num_edges() {
        let term = edge_term(&z2, &lat, e, 1).unwrap();
        assert!(check_go_identity(&z2, &lat, &term, &phi, e as u64).unwrap() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn classification_is_gauge_invariant(
        s3 in any::<bool>(),
        pair in 0usize..64,
        moves in proptest::collection::vec((0usize..4, 0usize..6), 0..40),
    ) {
        let g = make_group(&if s3 { GroupSpec::Symmetric3 } else { GroupSpec::Cyclic(3) }).unwrap();
        let lat = TriLattice::torus(2, 2).unwrap();
        let pairs = g.commuting_pairs();
        let (x, y) = pairs[pair % pairs.len()];
        let mut phi = simple_representative(&g, &lat, x, y).unwrap();
        let before = classify_connection(&g, &lat, &phi).unwrap();
        for (v, k) in moves {
            phi = phi.gauge_move(&g, &lat, v, k % g.order());
        }
        let after = classify_connection(&g, &lat, &phi).unwrap();
        // a move at the base vertex conjugates the holonomies; only the class is invariant
        prop_assert_eq!(after.class_id, before.class_id);
        prop_assert_eq!(g.pair_class_rep(after.x, after.y), before.class_id);
    }

    #[test]
    fn gauging_map_norm_is_symmetric_projection(n in 2usize..4, seed in 0u64..10_000) {
        let g = make_group(&GroupSpec::Cyclic(n)).unwrap();
        let lat = TriLattice::sphere().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state(vec![n; 4], &mut rng).unwrap();
        let gs = gauge_state(&g, &lat, &psi, &GConnection::identity(&lat)).unwrap();
        prop_assert!((gs.norm_sqr() - symmetric_norm_sqr(&g, &psi)).abs() < 1e-10);
    }

    #[test]
    fn symmetric_terms_gauge_covariantly(seed in 0u64..10_000, x in 0usize..2, y in 0usize..2) {
        let a = zn(2, 1);
        let g = a.group();
        let lat = TriLattice::torus(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = rng.random_range(0..lat.num_vertices);
        let w = (u + 1 + rng.random_range(0..lat.num_vertices - 1)) % lat.num_vertices;
        let term = random_symmetric_term(g, vec![u, w], &mut rng).unwrap();
        let phi = simple_representative(g, &lat, x, y).unwrap();
        prop_assert!(check_go_identity(g, &lat, &term, &phi, seed).unwrap() < 1e-10);
    }

    #[test]
    fn spt_vertex_terms_gauge_covariantly(v in 0usize..4, seed in 0u64..1000) {
        let a = zn(2, 1);
        let lat = TriLattice::torus(2, 2).unwrap();
        let term = spt_vertex_term(&a, &lat, v).unwrap();
        let phi = GConnection::identity(&lat);
        prop_assert!(check_go_identity(a.group(), &lat, &term, &phi, seed).unwrap() < 1e-10);
    }
}
