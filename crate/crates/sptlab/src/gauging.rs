//! Gauging of the global symmetry: flat connections, the gauging map on states and
//! operators, Gauss-law and flux projectors, and the disentangling circuit.
//!
//! Conventions (the single source of truth for the gauge sector):
//!
//! | object | convention |
//! |---|---|
//! | edge `e` | points from `tail` to `head`, `head < tail` |
//! | gauged basis | vertices first, then edges; index `matter · |G|^E + edges` |
//! | Gauss move `A_v^k` | `g_v ↦ g_v k⁻¹`; `φ_e ↦ k φ_e` if `v` is the head, `φ_e k⁻¹` if the tail |
//! | transport | `t_head = φ_e t_tail`; `g_head φ_e g_tail⁻¹` is gauge invariant |
//! | plaquette flux | boundary word of [`TriLattice::plaquette_word`], `Π φ_e^{σ}` in visiting order |
//! | holonomy `(x, y)` | inverse transport around the column-0 (resp. row-0) vertex loop |
//!
//! The gauging map is `G_φ|ψ⟩ = |G|^{(V−1)/2} P[|ψ⟩ ⊗ |φ⟩]` with `P = Π_v P_v`; the
//! prefactor makes `G†G = (1/|G|) Σ_k R(k)^{⊗V}` for the trivial connection.

use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::hamiltonian::LocalTerm;
use crate::lattice::{Surface, TriLattice};
use crate::peps::{spt_state, tilde_alpha, twisted_state, Operator, StateVector};
use crate::{c64, Cocycle3, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use std::collections::{BTreeSet, HashMap, VecDeque};

/// Group element on every edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GConnection {
    pub values: Vec<usize>,
}

impl GConnection {
    pub fn identity(lat: &TriLattice) -> Self {
        GConnection {
            values: vec![0; lat.num_edges()],
        }
    }

    pub fn new(grp: &FiniteGroup, lat: &TriLattice, values: Vec<usize>) -> Result<Self> {
        if values.len() != lat.num_edges() {
            return Err(Error::Dimension(format!(
                "{} edge values for {} edges",
                values.len(),
                lat.num_edges()
            )));
        }
        for &v in &values {
            grp.check_element(v)?;
        }
        Ok(GConnection { values })
    }

    /// Applies the gauge move `a_v^k` to the connection.
    pub fn gauge_move(&self, grp: &FiniteGroup, lat: &TriLattice, v: usize, k: usize) -> Self {
        let mut out = self.clone();
        for e in lat.star_edges(v) {
            let ed = lat.edges[e];
            if ed.head == v {
                out.values[e] = grp.mul(k, out.values[e]);
            } else {
                out.values[e] = grp.mul(out.values[e], grp.inv(k));
            }
        }
        out
    }
}

/// Twist sector of a flat connection on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TwistLabel {
    pub x: usize,
    pub y: usize,
    /// Lexicographically minimal simultaneous conjugate of `(x, y)`.
    pub class_id: (usize, usize),
}

impl TwistLabel {
    pub fn new(grp: &FiniteGroup, x: usize, y: usize) -> Result<Self> {
        grp.check_element(x)?;
        grp.check_element(y)?;
        if !grp.commute(x, y) {
            return Err(Error::Validation(format!("{x} and {y} do not commute")));
        }
        Ok(TwistLabel {
            x,
            y,
            class_id: grp.pair_class_rep(x, y),
        })
    }
}

/// Flux through triangle `t`.
pub fn plaquette_flux(grp: &FiniteGroup, lat: &TriLattice, phi: &[usize], t: usize) -> usize {
    lat.plaquette_word(t).into_iter().fold(0, |acc, (e, s)| {
        let v = if s > 0 { phi[e] } else { grp.inv(phi[e]) };
        grp.mul(acc, v)
    })
}

pub fn is_flat(grp: &FiniteGroup, lat: &TriLattice, phi: &GConnection) -> bool {
    (0..lat.num_triangles()).all(|t| plaquette_flux(grp, lat, &phi.values, t) == 0)
}

/// Transport `t_to` from `t_from = e` along edge `e`.
fn transport_step(grp: &FiniteGroup, lat: &TriLattice, phi: &[usize], e: usize, from: usize) -> usize {
    if lat.edges[e].tail == from {
        phi[e]
    } else {
        grp.inv(phi[e])
    }
}

/// The flat connection `φ_e = s(head) s(tail)⁻¹`, where `s = x^{-a} y^{-b}` for a
/// corner wrapped `a` times around the first and `b` times around the second cycle.
/// It is the connection seen by [`twisted_state`].
pub fn simple_representative(grp: &FiniteGroup, lat: &TriLattice, x: usize, y: usize) -> Result<GConnection> {
    TwistLabel::new(grp, x, y)?;
    if !matches!(lat.surface, Surface::Torus { .. }) {
        return Err(Error::Validation("simple representatives need a torus".into()));
    }
    let shift = |lift: (u8, u8)| {
        let mut s = 0;
        if lift.0 > 0 {
            s = grp.mul(s, grp.inv(x));
        }
        if lift.1 > 0 {
            s = grp.mul(s, grp.inv(y));
        }
        s
    };
    let mut values = vec![0; lat.num_edges()];
    for (e, v) in values.iter_mut().enumerate() {
        let t = lat.edge_triangles[e][0];
        let tri = &lat.triangles[t];
        let ed = lat.edges[e];
        let sh = shift(tri.lift[tri.slot(ed.head).unwrap()]);
        let st = shift(tri.lift[tri.slot(ed.tail).unwrap()]);
        *v = grp.div(sh, st);
    }
    Ok(GConnection { values })
}

/// Holonomies `(x, y)` of a connection on the torus, based at vertex (0,0).
pub fn holonomies(grp: &FiniteGroup, lat: &TriLattice, phi: &GConnection) -> Result<(usize, usize)> {
    let (n, m) = match lat.surface {
        Surface::Torus { n, m } => (n, m),
        s => return Err(Error::Validation(format!("holonomies need a torus, got {s}"))),
    };
    let walk = |steps: Vec<(usize, usize)>| {
        let mut t = 0;
        for (e, from) in steps {
            t = grp.mul(transport_step(grp, lat, &phi.values, e, from), t);
        }
        grp.inv(t)
    };
    let col: Vec<(usize, usize)> = (0..n).map(|i| (3 * (i * m) + 1, lat.torus_vertex(i, 0).unwrap())).collect();
    let row: Vec<(usize, usize)> = (0..m).map(|j| (3 * j, lat.torus_vertex(0, j).unwrap())).collect();
    Ok((walk(col), walk(row)))
}

pub fn classify_connection(grp: &FiniteGroup, lat: &TriLattice, phi: &GConnection) -> Result<TwistLabel> {
    if !is_flat(grp, lat, phi) {
        return Err(Error::Validation("connection is not flat".into()));
    }
    let (x, y) = holonomies(grp, lat, phi)?;
    TwistLabel::new(grp, x, y)
}

/// All flat connections, sorted: gauge orbits of the simple representatives (only
/// the trivial connection on the sphere).
pub fn flat_connections(grp: &FiniteGroup, lat: &TriLattice) -> Result<Vec<GConnection>> {
    let n = grp.order();
    let nv = lat.num_vertices;
    let seeds = match lat.surface {
        Surface::Torus { .. } => grp
            .commuting_pairs()
            .into_iter()
            .map(|(x, y)| simple_representative(grp, lat, x, y))
            .collect::<Result<Vec<_>>>()?,
        Surface::Sphere => vec![GConnection::identity(lat)],
        s => return Err(Error::Validation(format!("flat connections not enumerated on {s}"))),
    };
    let orbits = (n as u128).pow(nv as u32) * seeds.len() as u128;
    if orbits > crate::peps::DENSE_BUDGET as u128 {
        return Err(Error::Budget {
            needed: orbits,
            limit: crate::peps::DENSE_BUDGET as u128,
        });
    }
    let mut out = BTreeSet::new();
    let shape = StateVector {
        dims: vec![n; nv],
        amps: Vec::new(),
    };
    let mut h = vec![0; nv];
    for s in &seeds {
        for i in 0..n.pow(nv as u32) {
            shape.config_into(i, &mut h);
            let mut phi = s.clone();
            for (e, v) in phi.values.iter_mut().enumerate() {
                let ed = lat.edges[e];
                *v = grp.mul(grp.mul(h[ed.head], *v), grp.inv(h[ed.tail]));
            }
            out.insert(phi);
        }
    }
    Ok(out.into_iter().collect())
}

/// Layout of the gauged Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaugedLayout {
    pub n: usize,
    pub vertices: usize,
    pub edges: usize,
}

impl GaugedLayout {
    pub fn new(grp: &FiniteGroup, lat: &TriLattice) -> Self {
        GaugedLayout {
            n: grp.order(),
            vertices: lat.num_vertices,
            edges: lat.num_edges(),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.n; self.vertices + self.edges]
    }

    pub fn zeros(&self) -> Result<StateVector> {
        StateVector::zeros(self.dims())
    }
}

/// `G_φ|ψ⟩` for a matter state `ψ` on vertex space.
pub fn gauge_state(grp: &FiniteGroup, lat: &TriLattice, psi: &StateVector, phi: &GConnection) -> Result<StateVector> {
    let lay = GaugedLayout::new(grp, lat);
    if psi.dims != vec![lay.n; lay.vertices] {
        return Err(Error::Dimension("matter state does not match the lattice".into()));
    }
    if phi.values.len() != lay.edges {
        return Err(Error::Dimension("connection does not match the lattice".into()));
    }
    let mut out = lay.zeros()?;
    let nv = lay.vertices;
    let scale = (lay.n as f64).powf((nv as f64 - 1.0) / 2.0) / (lay.n as f64).powi(nv as i32);
    let mut g = vec![0; nv];
    let mut h = vec![0; nv];
    let mut cfg = vec![0; nv + lay.edges];
    for (i, a) in psi.amps.iter().enumerate() {
        if a.norm() == 0.0 {
            continue;
        }
        psi.config_into(i, &mut g);
        for j in 0..psi.amps.len() {
            psi.config_into(j, &mut h);
            for v in 0..nv {
                cfg[v] = grp.mul(g[v], grp.inv(h[v]));
            }
            for (e, ed) in lat.edges.iter().enumerate() {
                cfg[nv + e] = grp.mul(grp.mul(h[ed.head], phi.values[e]), grp.inv(h[ed.tail]));
            }
            let k = out.index(&cfg);
            out.amps[k] += a * scale;
        }
    }
    Ok(out)
}

/// Gauss-law projector `P_v = (1/|G|) Σ_k A_v^k`.
#[derive(Debug, Clone)]
pub struct GaussProjector {
    grp: FiniteGroup,
    v: usize,
    nv: usize,
    heads: Vec<usize>,
    tails: Vec<usize>,
}

pub fn gauss_projector(grp: &FiniteGroup, lat: &TriLattice, v: usize) -> Result<GaussProjector> {
    if v >= lat.num_vertices {
        return Err(Error::Validation(format!("vertex {v} out of range")));
    }
    let star = lat.star_edges(v);
    Ok(GaussProjector {
        grp: grp.clone(),
        v,
        nv: lat.num_vertices,
        heads: star.iter().copied().filter(|&e| lat.edges[e].head == v).collect(),
        tails: star.iter().copied().filter(|&e| lat.edges[e].tail == v).collect(),
    })
}

impl Operator for GaussProjector {
    fn column(&self, col: &[usize], emit: &mut dyn FnMut(&[usize], C64)) {
        let grp = &self.grp;
        let w = c64(1.0 / grp.order() as f64, 0.0);
        let mut row = col.to_vec();
        for k in grp.elements() {
            let ki = grp.inv(k);
            row[self.v] = grp.mul(col[self.v], ki);
            for &e in &self.heads {
                row[self.nv + e] = grp.mul(k, col[self.nv + e]);
            }
            for &e in &self.tails {
                row[self.nv + e] = grp.mul(col[self.nv + e], ki);
            }
            emit(&row, w);
        }
    }
}

/// Projector onto flux `m` through triangle `t`.
#[derive(Debug, Clone)]
pub struct FluxProjector {
    grp: FiniteGroup,
    word: Vec<(usize, i32)>,
    nv: usize,
    m: usize,
}

impl FluxProjector {
    pub fn new(grp: &FiniteGroup, lat: &TriLattice, t: usize, m: usize) -> Result<Self> {
        if t >= lat.num_triangles() {
            return Err(Error::Validation(format!("triangle {t} out of range")));
        }
        grp.check_element(m)?;
        Ok(FluxProjector {
            grp: grp.clone(),
            word: lat.plaquette_word(t),
            nv: lat.num_vertices,
            m,
        })
    }

    pub fn flux(&self, cfg: &[usize]) -> usize {
        self.word.iter().fold(0, |acc, &(e, s)| {
            let v = cfg[self.nv + e];
            self.grp.mul(acc, if s > 0 { v } else { self.grp.inv(v) })
        })
    }
}

/// `B_t`: projector onto zero flux through triangle `t`.
pub fn flux_projector(grp: &FiniteGroup, lat: &TriLattice, t: usize) -> Result<FluxProjector> {
    FluxProjector::new(grp, lat, t, 0)
}

impl Operator for FluxProjector {
    fn column(&self, col: &[usize], emit: &mut dyn FnMut(&[usize], C64)) {
        if self.flux(col) == self.m {
            emit(col, c64(1.0, 0.0));
        }
    }
}

/// Spanning tree of a connected vertex set, as `(child, parent, edge)` in BFS order
/// from `support[0]`.
fn spanning_tree(lat: &TriLattice, support: &[usize]) -> Result<Vec<(usize, usize, usize)>> {
    let inside = |v: usize| support.contains(&v);
    let mut seen = vec![false; lat.num_vertices];
    let mut tree = Vec::new();
    let root = *support.first().ok_or_else(|| Error::Validation("empty support".into()))?;
    seen[root] = true;
    let mut q = VecDeque::from([root]);
    while let Some(p) = q.pop_front() {
        for e in lat.star_edges(p) {
            let ed = lat.edges[e];
            let c = if ed.tail == p { ed.head } else { ed.tail };
            if inside(c) && !seen[c] {
                seen[c] = true;
                tree.push((c, p, e));
                q.push_back(c);
            }
        }
    }
    if tree.len() + 1 != support.len() {
        return Err(Error::Validation("support of the operator is not connected".into()));
    }
    Ok(tree)
}

/// Frame `t_v` on `support` (same order) from the edge values `phi`.
fn tree_frame(grp: &FiniteGroup, lat: &TriLattice, support: &[usize], tree: &[(usize, usize, usize)], phi: &[usize]) -> Vec<usize> {
    let mut t = vec![0usize; lat.num_vertices];
    for &(c, p, e) in tree {
        t[c] = grp.mul(transport_step(grp, lat, phi, e, p), t[p]);
    }
    support.iter().map(|&v| t[v]).collect()
}

/// `𝒢_Γ[O]` for a local term `O` on the connected vertex set `Γ`: in the frame of a
/// spanning tree of `Γ`, `⟨g'|𝒢[O]|g⟩ = ⟨g't|O|gt⟩` at fixed edge values.
#[derive(Debug, Clone)]
pub struct GaugedOperator {
    grp: FiniteGroup,
    lat: TriLattice,
    term: LocalTerm,
    tree: Vec<(usize, usize, usize)>,
}

pub fn gauge_operator(grp: &FiniteGroup, lat: &TriLattice, term: &LocalTerm) -> Result<GaugedOperator> {
    let tree = spanning_tree(lat, &term.support)?;
    Ok(GaugedOperator {
        grp: grp.clone(),
        lat: lat.clone(),
        term: term.clone(),
        tree,
    })
}

impl GaugedOperator {
    /// Edges the operator reads: the tree edges of its support.
    pub fn edges(&self) -> Vec<usize> {
        self.tree.iter().map(|&(_, _, e)| e).collect()
    }
}

fn framed_column(
    grp: &FiniteGroup,
    term: &LocalTerm,
    frame: &[usize],
    col: &[usize],
    emit: &mut dyn FnMut(&[usize], C64),
) {
    let local: Vec<usize> = term.support.iter().zip(frame).map(|(&v, &t)| grp.mul(col[v], t)).collect();
    let mut row = col.to_vec();
    term.local_column(&local, &mut |out, z| {
        for (k, &v) in term.support.iter().enumerate() {
            row[v] = grp.mul(out[k], grp.inv(frame[k]));
        }
        emit(&row, z);
    });
}

impl Operator for GaugedOperator {
    fn column(&self, col: &[usize], emit: &mut dyn FnMut(&[usize], C64)) {
        let nv = self.lat.num_vertices;
        let frame = tree_frame(&self.grp, &self.lat, &self.term.support, &self.tree, &col[nv..]);
        framed_column(&self.grp, &self.term, &frame, col, emit);
    }
}

/// `O^φ`: the matter operator `O` dressed with the background connection `φ`.
#[derive(Debug, Clone)]
pub struct TwistedOperator {
    grp: FiniteGroup,
    term: LocalTerm,
    frame: Vec<usize>,
}

pub fn twisted_operator(grp: &FiniteGroup, lat: &TriLattice, term: &LocalTerm, phi: &GConnection) -> Result<TwistedOperator> {
    let tree = spanning_tree(lat, &term.support)?;
    let frame = tree_frame(grp, lat, &term.support, &tree, &phi.values);
    Ok(TwistedOperator {
        grp: grp.clone(),
        term: term.clone(),
        frame,
    })
}

impl Operator for TwistedOperator {
    fn column(&self, col: &[usize], emit: &mut dyn FnMut(&[usize], C64)) {
        framed_column(&self.grp, &self.term, &self.frame, col, emit);
    }
}

/// Random normalized matter state.
pub fn random_state<R: Rng>(dims: Vec<usize>, rng: &mut R) -> Result<StateVector> {
    let s = StateVector::from_fn(dims, |_| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))?;
    s.normalized()
}

/// `‖𝒢[O] G_φ|ψ⟩ − G_φ O^φ|ψ⟩‖` for a random normalized `ψ` drawn from `seed`.
pub fn check_go_identity(grp: &FiniteGroup, lat: &TriLattice, term: &LocalTerm, phi: &GConnection, seed: u64) -> Result<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let psi = random_state(vec![grp.order(); lat.num_vertices], &mut rng)?;
    go_residual(grp, lat, &gauge_operator(grp, lat, term)?, &twisted_operator(grp, lat, term, phi)?, phi, &psi)
}

/// `‖gauged · G_φ|ψ⟩ − G_φ · twisted|ψ⟩‖`.
pub fn go_residual(
    grp: &FiniteGroup,
    lat: &TriLattice,
    gauged: &dyn Operator,
    twisted: &dyn Operator,
    phi: &GConnection,
    psi: &StateVector,
) -> Result<f64> {
    let lhs = gauged.apply(&gauge_state(grp, lat, psi, phi)?);
    let rhs = gauge_state(grp, lat, &twisted.apply(psi), phi)?;
    Ok(lhs.sub(&rhs)?.norm())
}

/// Gram matrix of the gauged twisted ground states over the commuting-pair
/// classes (in the order of [`FiniteGroup::commuting_pair_classes`]).
#[derive(Debug, Clone)]
pub struct OverlapGram {
    pub classes: Vec<(usize, usize)>,
    pub matrix: DMatrix<C64>,
    pub max_offdiag: f64,
    pub rank: usize,
}

pub fn overlap_gram(alpha: &Cocycle3, lat: &TriLattice) -> Result<OverlapGram> {
    let grp = alpha.group();
    let classes = grp.commuting_pair_classes();
    let mut gauged = Vec::with_capacity(classes.len());
    for &(x, y) in &classes {
        let psi = twisted_state(alpha, lat, x, y)?.normalized()?;
        let phi = simple_representative(grp, lat, x, y)?;
        gauged.push(gauge_state(grp, lat, &psi, &phi)?);
    }
    let k = classes.len();
    let mut matrix = DMatrix::from_element(k, k, c64(0.0, 0.0));
    for a in 0..k {
        for b in 0..k {
            matrix[(a, b)] = gauged[a].inner(&gauged[b])?;
        }
    }
    let dmax = (0..k).map(|a| matrix[(a, a)].norm()).fold(0.0, f64::max);
    let mut max_offdiag: f64 = 0.0;
    for a in 0..k {
        for b in 0..k {
            if a != b {
                max_offdiag = max_offdiag.max(matrix[(a, b)].norm());
            }
        }
    }
    let rank = (0..k).filter(|&a| matrix[(a, a)].norm() > 1e-10 * dmax.max(1e-300)).count();
    Ok(OverlapGram {
        classes,
        matrix,
        max_offdiag,
        rank,
    })
}

/// Applies the disentangling circuit `C`: `φ_e ↦ g_head φ_e g_tail⁻¹`, matter
/// unchanged.
pub fn disentangle(grp: &FiniteGroup, lat: &TriLattice, state: &StateVector) -> Result<StateVector> {
    conjugate_edges(grp, lat, state, false)
}

/// Applies `C†`: `φ_e ↦ g_head⁻¹ φ_e g_tail`.
pub fn entangle(grp: &FiniteGroup, lat: &TriLattice, state: &StateVector) -> Result<StateVector> {
    conjugate_edges(grp, lat, state, true)
}

fn conjugate_edges(grp: &FiniteGroup, lat: &TriLattice, state: &StateVector, inverse: bool) -> Result<StateVector> {
    let lay = GaugedLayout::new(grp, lat);
    if state.dims != lay.dims() {
        return Err(Error::Dimension("state is not on the gauged space".into()));
    }
    let nv = lay.vertices;
    let mut out = lay.zeros()?;
    let mut cfg = vec![0; nv + lay.edges];
    for (i, a) in state.amps.iter().enumerate() {
        if a.norm() == 0.0 {
            continue;
        }
        state.config_into(i, &mut cfg);
        for (e, ed) in lat.edges.iter().enumerate() {
            let (l, r) = if inverse {
                (grp.inv(cfg[ed.head]), cfg[ed.tail])
            } else {
                (cfg[ed.head], grp.inv(cfg[ed.tail]))
            };
            cfg[nv + e] = grp.mul(grp.mul(l, cfg[nv + e]), r);
        }
        let j = out.index(&cfg);
        out.amps[j] += a;
    }
    Ok(out)
}

/// Twisted-quantum-double state `Σ_g Π_△ α̃_△(g) ⊗_e |g_head g_tail⁻¹⟩` on the edges.
pub fn tqd_state(alpha: &Cocycle3, lat: &TriLattice) -> Result<StateVector> {
    let grp = alpha.group();
    let n = grp.order();
    let nv = lat.num_vertices;
    let mut out = StateVector::zeros(vec![n; lat.num_edges()])?;
    let shape = StateVector {
        dims: vec![n; nv],
        amps: Vec::new(),
    };
    let mut g = vec![0; nv];
    let mut ecfg = vec![0; lat.num_edges()];
    for i in 0..n.pow(nv as u32) {
        shape.config_into(i, &mut g);
        let mut w = c64(1.0, 0.0);
        for tri in &lat.triangles {
            w *= tilde_alpha(alpha, tri, tri.corners.map(|v| g[v]));
        }
        for (e, ed) in lat.edges.iter().enumerate() {
            ecfg[e] = grp.div(g[ed.head], g[ed.tail]);
        }
        let j = out.index(&ecfg);
        out.amps[j] += w;
    }
    Ok(out)
}

/// Result of [`disentangle_and_compare`].
#[derive(Debug, Clone)]
pub struct DisentangleReport {
    /// `1 − ‖C G|ψ⟩ − |+⟩^V ⊗ χ‖² / ‖C G|ψ⟩‖²`.
    pub product_fidelity: f64,
    /// Fidelity of the gauge remainder `χ` with the TQD state.
    pub fidelity: f64,
}

/// Gauges the fixed-point state, disentangles the matter and compares the gauge
/// remainder with [`tqd_state`].
pub fn disentangle_and_compare(alpha: &Cocycle3, lat: &TriLattice) -> Result<DisentangleReport> {
    let grp = alpha.group();
    if !lat.is_closed() {
        return Err(Error::Validation("disentangling needs a closed surface".into()));
    }
    let n = grp.order();
    let nv = lat.num_vertices;
    let psi = spt_state(alpha, lat)?.normalized()?;
    let gauged = gauge_state(grp, lat, &psi, &GConnection::identity(lat))?;
    let c = disentangle(grp, lat, &gauged)?;
    let ne = n.pow(lat.num_edges() as u32);
    let nm = n.pow(nv as u32);
    // χ = (⟨+|^V ⊗ 1) C G|ψ⟩.
    let plus = 1.0 / (nm as f64).sqrt();
    let mut chi = StateVector::zeros(vec![n; lat.num_edges()])?;
    for m in 0..nm {
        for e in 0..ne {
            chi.amps[e] += c.amps[m * ne + e] * plus;
        }
    }
    let total = c.norm_sqr();
    if total == 0.0 {
        return Err(Error::Numerical("gauged state vanishes".into()));
    }
    let mut defect = 0.0;
    for m in 0..nm {
        for e in 0..ne {
            defect += (c.amps[m * ne + e] - chi.amps[e] * plus).norm_sqr();
        }
    }
    let product_fidelity = 1.0 - defect / total;
    if defect / total > 1e-10 {
        return Err(Error::NotProportional(format!(
            "matter does not factor out after disentangling (defect {:.2e})",
            defect / total
        )));
    }
    let tqd = tqd_state(alpha, lat)?;
    let ov = chi.inner(&tqd)?.norm_sqr() / (chi.norm_sqr() * tqd.norm_sqr());
    Ok(DisentangleReport {
        product_fidelity,
        fidelity: ov,
    })
}

/// Largest column norm of `[A, B]` over every basis state of `dims`: zero iff the
/// operators commute.
pub fn commutator_norm(a: &dyn Operator, b: &dyn Operator, dims: &[usize]) -> Result<f64> {
    let shape = StateVector::zeros(dims.to_vec())?;
    let mut cfg = vec![0; dims.len()];
    let mut worst: f64 = 0.0;
    let mut acc: HashMap<usize, C64> = HashMap::new();
    for i in 0..shape.len() {
        shape.config_into(i, &mut cfg);
        acc.clear();
        b.column(&cfg, &mut |r1, z1| {
            a.column(r1, &mut |r2, z2| *acc.entry(shape.index(r2)).or_default() += z1 * z2);
        });
        a.column(&cfg, &mut |r1, z1| {
            b.column(r1, &mut |r2, z2| *acc.entry(shape.index(r2)).or_default() -= z1 * z2);
        });
        worst = worst.max(acc.values().fold(0.0, |s, z| s + z.norm_sqr()).sqrt());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_group, GroupSpec};

    #[test]
    fn single_edge_not_flat_on_sphere() {
        let g = make_group(&GroupSpec::Cyclic(2)).unwrap();
        let lat = TriLattice::sphere().unwrap();
        let mut phi = GConnection::identity(&lat);
        assert!(is_flat(&g, &lat, &phi));
        phi.values[0] = 1;
        assert!(!is_flat(&g, &lat, &phi));
        let bad = (0..lat.num_triangles())
            .filter(|&t| plaquette_flux(&g, &lat, &phi.values, t) != 0)
            .count();
        assert_eq!(bad, 2);
    }

    #[test]
    fn simple_representative_holonomy() {
        let g = make_group(&GroupSpec::Cyclic(2)).unwrap();
        let lat = TriLattice::torus(2, 2).unwrap();
        for (x, y) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let phi = simple_representative(&g, &lat, x, y).unwrap();
            assert!(is_flat(&g, &lat, &phi));
            assert_eq!(holonomies(&g, &lat, &phi).unwrap(), (x, y));
        }
        assert_eq!(flat_connections(&g, &lat).unwrap().len(), 32);
    }

    #[test]
    fn gauss_projector_idempotent() {
        let g = make_group(&GroupSpec::Cyclic(2)).unwrap();
        let lat = TriLattice::sphere().unwrap();
        let p = gauss_projector(&g, &lat, 0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let psi = random_state(GaugedLayout::new(&g, &lat).dims(), &mut rng).unwrap();
        let once = p.apply(&psi);
        let twice = p.apply(&once);
        assert!(once.sub(&twice).unwrap().norm() < 1e-12);
    }
}
