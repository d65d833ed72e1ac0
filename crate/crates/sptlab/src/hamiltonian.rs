//! Fixed-point Hamiltonians: vertex terms `h_v^α` (plain, twisted and gauged),
//! the entangler `D_α`, the symmetric edge/field/flux terms, the twisted quantum
//! double vertex term and the spectral checks.
//!
//! Vertex terms are projectors and the Hamiltonian is `Σ_v (1 − h_v)`. The matrix
//! element `⟨ĝ|h_v^α|g⟩` is `1/|G|` times a product over the triangles around `v`
//! of the cocycle on the tetrahedron whose vertices are the triangle's corners in
//! label order with `ĝ_v` inserted immediately before `g_v`. That weight only
//! depends on ratios of corner values, so each triangle may carry its own frame;
//! twisted and gauged terms use the transport along the triangle's own spokes.

use crate::error::{Error, Result};
use crate::gauging::{
    disentangle, entangle, flat_connections, gauss_projector, flux_projector, simple_representative,
    GConnection, GaugedLayout,
};
use crate::group::FiniteGroup;
use crate::lattice::{Triangle, TriLattice};
use crate::linalg::{hermitian_eigen, lanczos_lowest};
use crate::peps::{spt_state, tilde_alpha, twisted_state, Operator, StateVector, DENSE_BUDGET};
use crate::{c64, Cocycle3, Tensor, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

/// Operator on a few sites, stored column by column.
#[derive(Debug, Clone)]
pub struct LocalTerm {
    /// Positions in the configuration the term acts on.
    pub support: Vec<usize>,
    /// Local dimension of every supported site.
    pub n: usize,
    pub hermitian: bool,
    columns: Vec<Vec<(usize, C64)>>,
}

impl LocalTerm {
    /// Builds a term from its columns: `f(in, emit)` emits `(out, value)` pairs.
    pub fn from_columns(
        support: Vec<usize>,
        n: usize,
        hermitian: bool,
        mut f: impl FnMut(&[usize], &mut dyn FnMut(&[usize], C64)),
    ) -> Result<Self> {
        let k = support.len();
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != k {
            return Err(Error::Validation("repeated site in the support of a term".into()));
        }
        let dim = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
        if dim > DENSE_BUDGET as u128 {
            return Err(Error::Budget {
                needed: dim,
                limit: DENSE_BUDGET as u128,
            });
        }
        let dim = dim as usize;
        let mut columns = Vec::with_capacity(dim);
        let mut cfg = vec![0; k];
        for i in 0..dim {
            decode(i, n, &mut cfg);
            let mut col: Vec<(usize, C64)> = Vec::new();
            f(&cfg, &mut |out, z| {
                let j = encode(out, n);
                match col.iter_mut().find(|(r, _)| *r == j) {
                    Some(slot) => slot.1 += z,
                    None => col.push((j, z)),
                }
            });
            col.retain(|(_, z)| z.norm() > 1e-15);
            col.sort_by_key(|&(r, _)| r);
            columns.push(col);
        }
        Ok(LocalTerm {
            support,
            n,
            hermitian,
            columns,
        })
    }

    /// Builds a term from a tensor with axes `o0.. o{k-1}, i0.. i{k-1}`.
    pub fn from_tensor(support: Vec<usize>, t: &Tensor, hermitian: bool) -> Result<Self> {
        let k = support.len();
        let n = t.dims().first().copied().unwrap_or(1);
        let outs: Vec<String> = (0..k).map(|a| format!("o{a}")).collect();
        let ins: Vec<String> = (0..k).map(|a| format!("i{a}")).collect();
        let order: Vec<&str> = outs.iter().chain(&ins).map(String::as_str).collect();
        let t = t.permute(&order)?;
        let dim = n.pow(k as u32);
        let data = t.data();
        Self::from_columns(support, n, hermitian, |cfg, emit| {
            let c = encode(cfg, n);
            let mut out = vec![0; k];
            for r in 0..dim {
                let z = data[r * dim + c];
                if z.norm() > 0.0 {
                    decode(r, n, &mut out);
                    emit(&out, z);
                }
            }
        })
    }

    /// Dense tensor with axes `o0.. o{k-1}, i0.. i{k-1}`.
    pub fn tensor(&self) -> Result<Tensor> {
        let k = self.support.len();
        let axes: Vec<(String, usize)> = (0..k)
            .map(|a| (format!("o{a}"), self.n))
            .chain((0..k).map(|a| (format!("i{a}"), self.n)))
            .collect();
        let mut t = Tensor::zeros(axes)?;
        let dim = self.columns.len();
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, z) in col {
                t.data_mut()[r * dim + c] = z;
            }
        }
        Ok(t)
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        let dim = self.columns.len();
        let mut m = DMatrix::from_element(dim, dim, c64(0.0, 0.0));
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, z) in col {
                m[(r, c)] = z;
            }
        }
        m
    }

    pub fn local_column(&self, input: &[usize], emit: &mut dyn FnMut(&[usize], C64)) {
        let mut out = vec![0; self.support.len()];
        for &(r, z) in &self.columns[encode(input, self.n)] {
            decode(r, self.n, &mut out);
            emit(&out, z);
        }
    }

    /// Largest entry of `h − h†`.
    pub fn hermiticity_residual(&self) -> f64 {
        let m = self.matrix();
        (&m - m.adjoint()).camax()
    }

    /// Largest entry of `h² − h`.
    pub fn projector_residual(&self) -> f64 {
        let m = self.matrix();
        (&m * &m - &m).camax()
    }

    /// Largest entry of the difference with a term on the same support.
    pub fn max_diff(&self, other: &LocalTerm) -> Result<f64> {
        if self.support != other.support || self.n != other.n {
            return Err(Error::Dimension("terms act on different sites".into()));
        }
        Ok((self.matrix() - other.matrix()).camax())
    }
}

impl Operator for LocalTerm {
    fn column(&self, col: &[usize], emit: &mut dyn FnMut(&[usize], C64)) {
        let local: Vec<usize> = self.support.iter().map(|&s| col[s]).collect();
        let mut row = col.to_vec();
        self.local_column(&local, &mut |out, z| {
            for (k, &s) in self.support.iter().enumerate() {
                row[s] = out[k];
            }
            emit(&row, z);
        });
    }
}

fn encode(cfg: &[usize], n: usize) -> usize {
    cfg.iter().fold(0, |acc, &c| acc * n + c)
}

fn decode(mut i: usize, n: usize, out: &mut [usize]) {
    for k in (0..out.len()).rev() {
        out[k] = i % n;
        i /= n;
    }
}

/// Sign fixing which way the tetrahedron weight enters; pinned by the
/// `h_v^α = D_α h_v^0 D_α†` test below.
const TETRA_SIGN: i32 = 1;

/// Tetrahedron weight of triangle `tri` when the corner in slot `vslot` moves from
/// `vals[vslot]` to `hat`.
pub fn tetra_weight(alpha: &Cocycle3, tri: &Triangle, vslot: usize, vals: [usize; 3], hat: usize) -> C64 {
    let grp = alpha.group();
    let order = tri.sorted_slots();
    let mut q = [0usize; 4];
    let mut pos = 0;
    let mut j = 0;
    for (p, &s) in order.iter().enumerate() {
        if s == vslot {
            q[pos] = hat;
            pos += 1;
            j = p;
        }
        q[pos] = vals[s];
        pos += 1;
    }
    let sign = if j % 2 == 0 { 1 } else { -1 };
    alpha.pow(
        grp.div(q[0], q[1]),
        grp.div(q[1], q[2]),
        grp.div(q[2], q[3]),
        TETRA_SIGN * sign * tri.sigma,
    )
}

/// A triangle around a vertex with the spoke edges from the vertex to the other
/// two corners.
#[derive(Debug, Clone, Copy)]
struct StarTriangle {
    tri: usize,
    vslot: usize,
    /// `(slot, edge)` of the other two corners.
    spokes: [(usize, usize); 2],
}

fn star(lat: &TriLattice, v: usize) -> Vec<StarTriangle> {
    lat.star_triangles(v)
        .into_iter()
        .map(|t| {
            let tri = &lat.triangles[t];
            let j = tri.slot(v).unwrap();
            StarTriangle {
                tri: t,
                vslot: j,
                spokes: [((j + 1) % 3, tri.edges[j]), ((j + 2) % 3, tri.edges[(j + 2) % 3])],
            }
        })
        .collect()
}

fn check_vertex(lat: &TriLattice, v: usize) -> Result<()> {
    if v >= lat.num_vertices {
        return Err(Error::Validation(format!("vertex {v} out of range")));
    }
    Ok(())
}

/// Transport from `v` along edge `e` (`t_v = 1`).
fn spoke(grp: &FiniteGroup, lat: &TriLattice, phi: &[usize], e: usize, v: usize) -> usize {
    if lat.edges[e].tail == v {
        phi[e]
    } else {
        grp.inv(phi[e])
    }
}

/// `Π_△ tetra_weight` with corner values `g_c t_c` and `t` read from `phi` along
/// the spokes (all `t_c = 1` when `phi` is `None`).
fn vertex_weight(
    alpha: &Cocycle3,
    lat: &TriLattice,
    st: &[StarTriangle],
    v: usize,
    g: &[usize],
    phi: Option<&[usize]>,
    hat: usize,
) -> C64 {
    let grp = alpha.group();
    let mut w = c64(1.0, 0.0);
    for s in st {
        let tri = &lat.triangles[s.tri];
        let mut vals = [0usize; 3];
        vals[s.vslot] = g[v];
        for &(slot, e) in &s.spokes {
            let c = tri.corners[slot];
            vals[slot] = match phi {
                Some(p) => grp.mul(g[c], spoke(grp, lat, p, e, v)),
                None => g[c],
            };
        }
        w *= tetra_weight(alpha, tri, s.vslot, vals, hat);
    }
    w
}

fn star_support(lat: &TriLattice, v: usize) -> Vec<usize> {
    let mut s: Vec<usize> = lat.star_triangles(v).into_iter().flat_map(|t| lat.triangles[t].corners).collect();
    s.sort_unstable();
    s.dedup();
    s
}

fn vertex_term_with(alpha: &Cocycle3, lat: &TriLattice, v: usize, phi: Option<&GConnection>) -> Result<LocalTerm> {
    check_vertex(lat, v)?;
    let grp = alpha.group();
    let n = grp.order();
    let support = star_support(lat, v);
    let st = star(lat, v);
    let mut g = vec![0usize; lat.num_vertices];
    let pv = support.iter().position(|&s| s == v).unwrap();
    let inv_n = 1.0 / n as f64;
    LocalTerm::from_columns(support.clone(), n, true, |cfg, emit| {
        for (k, &s) in support.iter().enumerate() {
            g[s] = cfg[k];
        }
        let mut out = cfg.to_vec();
        for hat in grp.elements() {
            out[pv] = hat;
            let w = vertex_weight(alpha, lat, &st, v, &g, phi.map(|p| p.values.as_slice()), hat);
            emit(&out, w * inv_n);
        }
    })
}

/// `h_v^0 = |+⟩⟨+|_v`.
pub fn trivial_vertex_term(grp: &FiniteGroup, lat: &TriLattice, v: usize) -> Result<LocalTerm> {
    check_vertex(lat, v)?;
    let n = grp.order();
    let support = star_support(lat, v);
    let pv = support.iter().position(|&s| s == v).unwrap();
    LocalTerm::from_columns(support, n, true, |cfg, emit| {
        let mut out = cfg.to_vec();
        for hat in 0..n {
            out[pv] = hat;
            emit(&out, c64(1.0 / n as f64, 0.0));
        }
    })
}

/// `h_v^α` on the vertices of the star of `v`.
pub fn spt_vertex_term(alpha: &Cocycle3, lat: &TriLattice, v: usize) -> Result<LocalTerm> {
    vertex_term_with(alpha, lat, v, None)
}

/// `h_v^{α,φ}`: the vertex term in the background connection `φ`.
pub fn twisted_vertex_term(alpha: &Cocycle3, lat: &TriLattice, v: usize, phi: &GConnection) -> Result<LocalTerm> {
    if phi.values.len() != lat.num_edges() {
        return Err(Error::Dimension("connection does not match the lattice".into()));
    }
    vertex_term_with(alpha, lat, v, Some(phi))
}

/// Reference form `⟨ĝ|h|g⟩ = (1/|G|) Π_{△∋v} α̃_△(ĝ)/α̃_△(g)`, i.e. `D_α h_v^0 D_α†`
/// written out locally.
pub fn conjugated_vertex_term(alpha: &Cocycle3, lat: &TriLattice, v: usize) -> Result<LocalTerm> {
    check_vertex(lat, v)?;
    let grp = alpha.group();
    let n = grp.order();
    let support = star_support(lat, v);
    let tris = lat.star_triangles(v);
    let pv = support.iter().position(|&s| s == v).unwrap();
    let mut g = vec![0usize; lat.num_vertices];
    LocalTerm::from_columns(support.clone(), n, true, |cfg, emit| {
        for (k, &s) in support.iter().enumerate() {
            g[s] = cfg[k];
        }
        let before: C64 = tris.iter().map(|&t| tilde_alpha(alpha, &lat.triangles[t], lat.triangles[t].corners.map(|c| g[c]))).product();
        let mut out = cfg.to_vec();
        let gv = g[v];
        for hat in grp.elements() {
            g[v] = hat;
            let after: C64 = tris.iter().map(|&t| tilde_alpha(alpha, &lat.triangles[t], lat.triangles[t].corners.map(|c| g[c]))).product();
            out[pv] = hat;
            emit(&out, after / before / n as f64);
        }
        g[v] = gv;
    })
}

/// `ℰ_e^m = δ(g_head g_tail⁻¹ = m)` on the endpoints of edge `e`.
pub fn edge_term(grp: &FiniteGroup, lat: &TriLattice, e: usize, m: usize) -> Result<LocalTerm> {
    let ed = *lat.edges.get(e).ok_or_else(|| Error::Validation(format!("edge {e} out of range")))?;
    grp.check_element(m)?;
    LocalTerm::from_columns(vec![ed.head, ed.tail], grp.order(), true, |cfg, emit| {
        if grp.div(cfg[0], cfg[1]) == m {
            emit(cfg, c64(1.0, 0.0));
        }
    })
}

/// `ℱ_v^c = (L_c + L_{c⁻¹})/2` with `L_c|g⟩ = |cg⟩` on vertex `v`.
pub fn field_term(grp: &FiniteGroup, lat: &TriLattice, v: usize, c: usize) -> Result<LocalTerm> {
    check_vertex(lat, v)?;
    grp.check_element(c)?;
    LocalTerm::from_columns(vec![v], grp.order(), true, |cfg, emit| {
        emit(&[grp.mul(c, cfg[0])], c64(0.5, 0.0));
        emit(&[grp.mul(grp.inv(c), cfg[0])], c64(0.5, 0.0));
    })
}

/// `ℬ_t^m = δ(flux through t = m)` on the edges of triangle `t`, positioned in the
/// gauged layout. `m` must be central.
pub fn flux_term(grp: &FiniteGroup, lat: &TriLattice, t: usize, m: usize) -> Result<LocalTerm> {
    if t >= lat.num_triangles() {
        return Err(Error::Validation(format!("triangle {t} out of range")));
    }
    grp.check_element(m)?;
    if !grp.is_central(m) {
        return Err(Error::Validation(format!("flux {m} is not central")));
    }
    let word = lat.plaquette_word(t);
    let nv = lat.num_vertices;
    LocalTerm::from_columns(word.iter().map(|&(e, _)| nv + e).collect(), grp.order(), true, |cfg, emit| {
        let f = word.iter().zip(cfg).fold(0, |acc, (&(_, s), &x)| grp.mul(acc, if s > 0 { x } else { grp.inv(x) }));
        if f == m {
            emit(cfg, c64(1.0, 0.0));
        }
    })
}

/// Diagonal entangler `D_α|g⟩ = Π_△ α̃_△(g)|g⟩` on vertex space.
#[derive(Debug, Clone)]
pub struct Entangler {
    alpha: Cocycle3,
    lat: TriLattice,
}

pub fn entangler(alpha: &Cocycle3, lat: &TriLattice) -> Entangler {
    Entangler {
        alpha: alpha.clone(),
        lat: lat.clone(),
    }
}

impl Entangler {
    pub fn phase(&self, g: &[usize]) -> C64 {
        self.lat
            .triangles
            .iter()
            .map(|tri| tilde_alpha(&self.alpha, tri, tri.corners.map(|c| g[c])))
            .product()
    }

    /// Largest `|D D† − 1|` over the basis.
    pub fn unitarity_residual(&self) -> Result<f64> {
        let dims = vec![self.alpha.group().order(); self.lat.num_vertices];
        let shape = StateVector::zeros(dims)?;
        let mut g = vec![0; self.lat.num_vertices];
        let mut worst: f64 = 0.0;
        for i in 0..shape.len() {
            shape.config_into(i, &mut g);
            worst = worst.max((self.phase(&g).norm_sqr() - 1.0).abs());
        }
        Ok(worst)
    }
}

impl Operator for Entangler {
    fn column(&self, col: &[usize], emit: &mut dyn FnMut(&[usize], C64)) {
        emit(col, self.phase(col));
    }
}

/// `|+⟩^{⊗V}` on the matter sites.
pub fn plus_state(n: usize, sites: usize) -> Result<StateVector> {
    let len = (n as f64).powi(sites as i32);
    StateVector::from_fn(vec![n; sites], |_| c64(1.0 / len.sqrt(), 0.0))
}

/// Largest entry of `D_α h_v^0 D_α† − h_v^α` over the full matter space.
pub fn circuit_identity_residual(alpha: &Cocycle3, lat: &TriLattice, v: usize) -> Result<f64> {
    let grp = alpha.group();
    let d = entangler(alpha, lat);
    let h = spt_vertex_term(alpha, lat, v)?;
    let shape = StateVector::zeros(vec![grp.order(); lat.num_vertices])?;
    let mut g = vec![0; lat.num_vertices];
    let mut worst: f64 = 0.0;
    let n = grp.order() as f64;
    for i in 0..shape.len() {
        shape.config_into(i, &mut g);
        let dg = d.phase(&g).conj();
        let mut col: Vec<(usize, C64)> = Vec::new();
        h.column(&g, &mut |row, z| col.push((shape.index(row), z)));
        let mut gh = g.clone();
        for hat in grp.elements() {
            gh[v] = hat;
            let want = d.phase(&gh) * dg / n;
            let j = shape.index(&gh);
            let got = col.iter().filter(|&&(r, _)| r == j).map(|&(_, z)| z).sum::<C64>();
            worst = worst.max((got - want).norm());
        }
        // no entries off the `v` fibre
        for &(r, _) in &col {
            let rc = shape.config(r);
            if (0..g.len()).any(|k| k != v && rc[k] != g[k]) {
                worst = f64::INFINITY;
            }
        }
    }
    Ok(worst)
}

/// `‖D_α|+⟩ − ψ_α‖` up to a global phase, with `ψ_α` the assembled PEPS.
pub fn entangler_state_check(alpha: &Cocycle3, lat: &TriLattice, tol: f64) -> Result<crate::tensors::PhaseVerdict<f64>> {
    let plus = plus_state(alpha.group().order(), lat.num_vertices)?;
    let a = entangler(alpha, lat).apply(&plus);
    let b = spt_state(alpha, lat)?.normalized()?;
    a.compare_upto_phase(&b, tol)
}

/// Residuals `‖h_v ψ − ψ‖` for every vertex.
pub fn vertex_residuals(terms: &[LocalTerm], psi: &StateVector) -> Result<Vec<f64>> {
    let psi = psi.normalized()?;
    terms.iter().map(|h| Ok(h.apply(&psi).sub(&psi)?.norm())).collect()
}

/// Result of [`frustration_free_check`].
#[derive(Debug, Clone)]
pub struct FrustrationReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

pub fn spt_vertex_terms(alpha: &Cocycle3, lat: &TriLattice) -> Result<Vec<LocalTerm>> {
    (0..lat.num_vertices).map(|v| spt_vertex_term(alpha, lat, v)).collect()
}

/// `h_v^α|ψ_α⟩ = |ψ_α⟩` at every vertex.
pub fn frustration_free_check(alpha: &Cocycle3, lat: &TriLattice) -> Result<FrustrationReport> {
    let psi = spt_state(alpha, lat)?;
    let residuals = vertex_residuals(&spt_vertex_terms(alpha, lat)?, &psi)?;
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(FrustrationReport {
        residuals,
        max_residual,
    })
}

/// `h_v^{α,φ}|ψ^{(x,y)}⟩ = |ψ^{(x,y)}⟩` for the twisted state and the simple
/// representative connection.
pub fn twisted_frustration_check(alpha: &Cocycle3, lat: &TriLattice, x: usize, y: usize) -> Result<FrustrationReport> {
    let phi = simple_representative(alpha.group(), lat, x, y)?;
    let psi = twisted_state(alpha, lat, x, y)?;
    let terms = (0..lat.num_vertices)
        .map(|v| twisted_vertex_term(alpha, lat, v, &phi))
        .collect::<Result<Vec<_>>>()?;
    let residuals = vertex_residuals(&terms, &psi)?;
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(FrustrationReport {
        residuals,
        max_residual,
    })
}

/// `𝒢[h_v^α]` on the gauged space: the vertex term with every triangle framed by
/// the edge values on its spokes.
#[derive(Debug, Clone)]
pub struct GaugedVertexTerm {
    alpha: Cocycle3,
    lat: TriLattice,
    v: usize,
    star: Vec<StarTriangle>,
}

pub fn gauged_vertex_term(alpha: &Cocycle3, lat: &TriLattice, v: usize) -> Result<GaugedVertexTerm> {
    check_vertex(lat, v)?;
    Ok(GaugedVertexTerm {
        alpha: alpha.clone(),
        lat: lat.clone(),
        v,
        star: star(lat, v),
    })
}

impl Operator for GaugedVertexTerm {
    fn column(&self, col: &[usize], emit: &mut dyn FnMut(&[usize], C64)) {
        let nv = self.lat.num_vertices;
        let (g, phi) = col.split_at(nv);
        let n = self.alpha.group().order();
        let mut row = col.to_vec();
        for hat in self.alpha.group().elements() {
            row[self.v] = hat;
            let w = vertex_weight(&self.alpha, &self.lat, &self.star, self.v, g, Some(phi), hat);
            emit(&row, w / n as f64);
        }
    }
}

/// Vertex term of the twisted quantum double on the edge space:
/// `T_v|ψ⟩ = (1/|G|) Σ_k W_v(k, ψ) |A_v^k ψ⟩`, with `A_v^k` multiplying the edges at
/// `v` by `k` (on the left at heads, by `k⁻¹` on the right at tails).
#[derive(Debug, Clone)]
pub struct TqdVertexTerm {
    alpha: Cocycle3,
    lat: TriLattice,
    v: usize,
    star: Vec<StarTriangle>,
}

pub fn tqd_vertex_term(alpha: &Cocycle3, lat: &TriLattice, v: usize) -> Result<TqdVertexTerm> {
    check_vertex(lat, v)?;
    Ok(TqdVertexTerm {
        alpha: alpha.clone(),
        lat: lat.clone(),
        v,
        star: star(lat, v),
    })
}

impl Operator for TqdVertexTerm {
    fn column(&self, col: &[usize], emit: &mut dyn FnMut(&[usize], C64)) {
        let grp = self.alpha.group();
        let n = grp.order();
        let g = vec![0usize; self.lat.num_vertices];
        let mut row = col.to_vec();
        let edges = self.lat.star_edges(self.v);
        for k in grp.elements() {
            let w = vertex_weight(&self.alpha, &self.lat, &self.star, self.v, &g, Some(col), k);
            for &e in &edges {
                let ed = self.lat.edges[e];
                row[e] = if ed.head == self.v {
                    grp.mul(k, col[e])
                } else {
                    grp.mul(col[e], grp.inv(k))
                };
            }
            emit(&row, w / n as f64);
        }
    }
}

/// `‖T_v χ − ⟨+|^V C 𝒢[h_v] C† (|+⟩^V ⊗ χ)‖` for a random edge state `χ`.
pub fn tqd_vertex_residual(alpha: &Cocycle3, lat: &TriLattice, v: usize, seed: u64) -> Result<f64> {
    let grp = alpha.group();
    let lay = GaugedLayout::new(grp, lat);
    let n = lay.n;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let chi = crate::gauging::random_state(vec![n; lay.edges], &mut rng)?;
    let nm = n.pow(lay.vertices as u32);
    let ne = chi.len();
    let plus = 1.0 / (nm as f64).sqrt();
    let mut full = lay.zeros()?;
    for m in 0..nm {
        for e in 0..ne {
            full.amps[m * ne + e] = chi.amps[e] * plus;
        }
    }
    let pre = entangle(grp, lat, &full)?;
    let post = disentangle(grp, lat, &gauged_vertex_term(alpha, lat, v)?.apply(&pre))?;
    let mut got = StateVector::zeros(vec![n; lay.edges])?;
    for m in 0..nm {
        for e in 0..ne {
            got.amps[e] += post.amps[m * ne + e] * plus;
        }
    }
    let want = tqd_vertex_term(alpha, lat, v)?.apply(&chi);
    Ok(got.sub(&want)?.norm())
}

/// `Σ_v (1 − h_v)` as a dense matrix on the matter space.
pub fn dense_hamiltonian(terms: &[LocalTerm], sites: usize, n: usize) -> Result<DMatrix<C64>> {
    let dim = (n as u128).pow(sites as u32);
    if dim * dim > DENSE_BUDGET as u128 * 4 {
        return Err(Error::Budget {
            needed: dim * dim,
            limit: DENSE_BUDGET as u128 * 4,
        });
    }
    let dim = dim as usize;
    let shape = StateVector {
        dims: vec![n; sites],
        amps: Vec::new(),
    };
    let mut m = DMatrix::from_fn(dim, dim, |i, j| if i == j { c64(terms.len() as f64, 0.0) } else { c64(0.0, 0.0) });
    let mut cfg = vec![0; sites];
    for c in 0..dim {
        shape.config_into(c, &mut cfg);
        for h in terms {
            h.column(&cfg, &mut |row, z| {
                m[(shape.index(row), c)] -= z;
            });
        }
    }
    Ok(m)
}

/// Spectrum of `H^φ = Σ_v (1 − h_v^{α,φ})` on the subspace invariant under the
/// centralizer of `(x, y)`.
pub fn twisted_sector_spectrum(alpha: &Cocycle3, lat: &TriLattice, x: usize, y: usize) -> Result<Vec<f64>> {
    let grp = alpha.group();
    let n = grp.order();
    let phi = simple_representative(grp, lat, x, y)?;
    let terms = (0..lat.num_vertices)
        .map(|v| twisted_vertex_term(alpha, lat, v, &phi))
        .collect::<Result<Vec<_>>>()?;
    let h = dense_hamiltonian(&terms, lat.num_vertices, n)?;
    let cent = grp.centralizer(&[x, y])?;
    let dim = h.nrows();
    let shape = StateVector {
        dims: vec![n; lat.num_vertices],
        amps: Vec::new(),
    };
    let mut p = DMatrix::from_element(dim, dim, c64(0.0, 0.0));
    let mut cfg = vec![0; lat.num_vertices];
    let w = 1.0 / cent.len() as f64;
    for c in 0..dim {
        shape.config_into(c, &mut cfg);
        for &k in &cent {
            let row: Vec<usize> = cfg.iter().map(|&g| grp.mul(g, grp.inv(k))).collect();
            p[(shape.index(&row), c)] += c64(w, 0.0);
        }
    }
    let (pv, pvec) = hermitian_eigen(&p);
    let keep: Vec<usize> = (0..dim).filter(|&i| pv[i] > 0.5).collect();
    let q = DMatrix::from_fn(dim, keep.len(), |r, c| pvec[(r, keep[c])]);
    let hr = q.adjoint() * h * &q;
    Ok(hermitian_eigen(&hr).0)
}

/// Result of [`gauged_spectrum_check`].
#[derive(Debug, Clone)]
pub struct GaugedSpectrum {
    /// Number of flat connections: the dimension of the flat gauge-invariant sector.
    pub sector_dim: usize,
    pub gauged: Vec<f64>,
    /// Union over twist classes of the twisted-matter spectra.
    pub twisted: Vec<f64>,
    pub max_diff: f64,
    /// Degeneracy of energy 0 in the gauged sector.
    pub ground_degeneracy: usize,
    /// Lowest eigenvalue of the full gauged Hamiltonian with Gauss and flux
    /// penalties, from Lanczos.
    pub lanczos_ground: f64,
    pub lanczos_residual: f64,
}

/// Compares the gauged Hamiltonian on the flat gauge-invariant sector with the
/// twisted matter Hamiltonians, class by class.
pub fn gauged_spectrum_check(alpha: &Cocycle3, lat: &TriLattice, seed: u64) -> Result<GaugedSpectrum> {
    let grp = alpha.group();
    let lay = GaugedLayout::new(grp, lat);
    let n = lay.n;
    let nv = lay.vertices;
    let flat = flat_connections(grp, lat)?;
    let terms = (0..nv).map(|v| gauged_vertex_term(alpha, lat, v)).collect::<Result<Vec<_>>>()?;
    let hamiltonian = |psi: &StateVector| -> StateVector {
        let mut out = psi.clone();
        for a in out.amps.iter_mut() {
            *a *= nv as f64;
        }
        for t in &terms {
            let hp = t.apply(psi);
            for (o, h) in out.amps.iter_mut().zip(&hp.amps) {
                *o -= h;
            }
        }
        out
    };
    // Orbit basis |φ⟩⟩ = |G|^{-V/2} Σ_h |h⁻¹⟩ ⊗ |h φ h⁻¹⟩.
    let shape = StateVector {
        dims: vec![n; nv],
        amps: Vec::new(),
    };
    let nh = n.pow(nv as u32);
    let amp = c64(1.0 / (nh as f64).sqrt(), 0.0);
    let mut basis = Vec::with_capacity(flat.len());
    let mut h = vec![0; nv];
    let mut cfg = vec![0; nv + lay.edges];
    for phi in &flat {
        let mut s = lay.zeros()?;
        for i in 0..nh {
            shape.config_into(i, &mut h);
            for v in 0..nv {
                cfg[v] = grp.inv(h[v]);
            }
            for (e, ed) in lat.edges.iter().enumerate() {
                cfg[nv + e] = grp.mul(grp.mul(h[ed.head], phi.values[e]), grp.inv(h[ed.tail]));
            }
            let j = s.index(&cfg);
            s.amps[j] += amp;
        }
        basis.push(s);
    }
    let k = basis.len();
    let images: Vec<StateVector> = basis.iter().map(&hamiltonian).collect();
    let mut hm = DMatrix::from_element(k, k, c64(0.0, 0.0));
    for a in 0..k {
        for b in 0..k {
            hm[(a, b)] = basis[a].inner(&images[b])?;
        }
    }
    let gauged = hermitian_eigen(&hm).0;
    let mut twisted = Vec::new();
    for &(x, y) in &grp.commuting_pair_classes() {
        twisted.extend(twisted_sector_spectrum(alpha, lat, x, y)?);
    }
    twisted.sort_by(f64::total_cmp);
    let max_diff = if twisted.len() == gauged.len() {
        gauged.iter().zip(&twisted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let ground_degeneracy = gauged.iter().filter(|e| e.abs() < 1e-8).count();

    let gauss = (0..nv).map(|v| gauss_projector(grp, lat, v)).collect::<Result<Vec<_>>>()?;
    let flux = (0..lat.num_triangles()).map(|t| flux_projector(grp, lat, t)).collect::<Result<Vec<_>>>()?;
    let dims = lay.dims();
    let full = |x: &[C64]| -> Vec<C64> {
        let psi = StateVector {
            dims: dims.clone(),
            amps: x.to_vec(),
        };
        let mut out = hamiltonian(&psi);
        let penalties: Vec<&dyn Operator> = gauss
            .iter()
            .map(|p| p as &dyn Operator)
            .chain(flux.iter().map(|p| p as &dyn Operator))
            .collect();
        for p in penalties {
            let pp = p.apply(&psi);
            for ((o, a), b) in out.amps.iter_mut().zip(&psi.amps).zip(&pp.amps) {
                *o += a - b;
            }
        }
        out.amps
    };
    let lz = lanczos_lowest(lay.zeros()?.len(), full, 1, 120, 1e-10, seed)?;
    Ok(GaugedSpectrum {
        sector_dim: k,
        gauged,
        twisted,
        max_diff,
        ground_degeneracy,
        lanczos_ground: lz.values[0],
        lanczos_residual: lz.residuals[0],
    })
}

/// Random 2-site operator made symmetric under the global right action.
pub fn random_symmetric_term<R: Rng>(grp: &FiniteGroup, support: Vec<usize>, rng: &mut R) -> Result<LocalTerm> {
    let n = grp.order();
    let k = support.len();
    let dim = n.pow(k as u32);
    let raw = DMatrix::from_fn(dim, dim, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let mut cfg = vec![0; k];
    let mut sym = DMatrix::from_element(dim, dim, c64(0.0, 0.0));
    let shift = |i: usize, h: usize, cfg: &mut Vec<usize>| {
        decode(i, n, cfg);
        for g in cfg.iter_mut() {
            *g = grp.mul(*g, h);
        }
        encode(cfg, n)
    };
    for h in grp.elements() {
        for r in 0..dim {
            let rr = shift(r, h, &mut cfg);
            for c in 0..dim {
                let cc = shift(c, h, &mut cfg);
                sym[(rr, cc)] += raw[(r, c)] / n as f64;
            }
        }
    }
    LocalTerm::from_columns(support, n, false, |cfg, emit| {
        let c = encode(cfg, n);
        let mut out = vec![0; cfg.len()];
        for r in 0..dim {
            decode(r, n, &mut out);
            emit(&out, sym[(r, c)]);
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{standard_cocycle, CocycleParams};
    use crate::group::{make_group, GroupSpec};
    use std::sync::Arc;

    fn zn(n: usize, level: u32) -> Cocycle3 {
        let g = Arc::new(make_group(&GroupSpec::Cyclic(n)).unwrap());
        standard_cocycle(g, &CocycleParams::level(level)).unwrap()
    }

    #[test]
    fn tetra_form_matches_conjugation() {
        for (n, p) in [(2, 1), (3, 1), (4, 3)] {
            let a = zn(n, p);
            for lat in [TriLattice::sphere().unwrap(), TriLattice::torus(2, 2).unwrap()] {
                for v in 0..lat.num_vertices {
                    let h = spt_vertex_term(&a, &lat, v).unwrap();
                    let d = conjugated_vertex_term(&a, &lat, v).unwrap();
                    assert!(h.max_diff(&d).unwrap() < 1e-12, "Z{n} level {p} vertex {v}");
                }
            }
        }
    }

    #[test]
    fn trivial_cocycle_gives_trivial_term() {
        let a = zn(3, 0);
        let lat = TriLattice::sphere().unwrap();
        let h = spt_vertex_term(&a, &lat, 1).unwrap();
        let h0 = trivial_vertex_term(a.group(), &lat, 1).unwrap();
        assert!(h.max_diff(&h0).unwrap() < 1e-14);
    }

    #[test]
    fn flux_term_needs_central_element() {
        let g = make_group(&GroupSpec::Symmetric3).unwrap();
        let lat = TriLattice::sphere().unwrap();
        let t = (0..6).find(|&m| m != 0 && !g.is_central(m)).unwrap();
        assert!(flux_term(&g, &lat, 0, t).is_err());
        assert!(flux_term(&g, &lat, 0, 0).is_ok());
    }
}
