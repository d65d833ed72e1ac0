//! Fixed-point SPT PEPS on a triangulation.
//!
//! Every triangle carries one physical leg per corner and a pair of virtual legs per
//! edge. The legs of edge slot `k` (joining corners `k` and `k+1`, counterclockwise)
//! are labeled `e{k}a` (value of corner `k`) and `e{k}b` (value of corner `k+1`).
//! The tensor is nonzero only when every virtual leg equals the physical value of its
//! corner, with the entry
//!
//! ```text
//! α̃_△ = α^{σ_π}(g₁g₂⁻¹, g₂g₃⁻¹, g₃),   (g₁, g₂, g₃) the corner values in ascending vertex order.
//! ```
//!
//! Contracted states are returned on vertex space, `⊗_v ℂ[G]`: the copies of a vertex
//! in different triangles are identified (`⊗_{△∋v}|g⟩ ↦ |g⟩`). For fixed-point
//! tensors the triangle-space state lives entirely on that diagonal subspace, see
//! [`assemble_triangle_state`]. Basis index of a configuration `g`:
//! `Σ_v g_v · |G|^{V−1−v}`.
//!
//! The physical symmetry is `R(h)|g⟩ = |g h⁻¹⟩` on every site.

use crate::cocycle::{slant2, Cocycle3};
use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::lattice::{DefectString, MpoSite, TriLattice, Triangle};
use crate::mpo::{CrossingKind, Handedness, MpoFamily};
use crate::tensors::{allclose_upto_phase, PhaseVerdict};
use crate::{c64, Tensor, C64};
use nalgebra::DMatrix;
use std::collections::HashMap;

/// Largest dense amplitude vector produced.
pub const DENSE_BUDGET: usize = 1 << 22;
/// Largest number of (configuration, virtual configuration) pairs visited when
/// contracting non-diagonal tensors.
pub const CONTRACTION_BUDGET: u128 = 1 << 27;

/// `α̃_△` for corner values `vals` (counterclockwise slots).
pub fn tilde_alpha(alpha: &Cocycle3, tri: &Triangle, vals: [usize; 3]) -> C64 {
    let grp = alpha.group();
    let o = tri.sorted_slots();
    let (g1, g2, g3) = (vals[o[0]], vals[o[1]], vals[o[2]]);
    alpha.pow(grp.div(g1, g2), grp.div(g2, g3), g3, tri.sigma)
}

/// Dense amplitudes on a product of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub dims: Vec<usize>,
    pub amps: Vec<C64>,
}

impl StateVector {
    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = checked_len(&dims)?;
        Ok(StateVector {
            dims,
            amps: vec![c64(0.0, 0.0); len],
        })
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> C64) -> Result<Self> {
        let mut s = Self::zeros(dims)?;
        let mut cfg = vec![0usize; s.dims.len()];
        for i in 0..s.amps.len() {
            s.config_into(i, &mut cfg);
            s.amps[i] = f(&cfg);
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn config_into(&self, mut idx: usize, out: &mut [usize]) {
        for k in (0..self.dims.len()).rev() {
            out[k] = idx % self.dims[k];
            idx /= self.dims[k];
        }
    }

    pub fn config(&self, idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        self.config_into(idx, &mut out);
        out
    }

    pub fn index(&self, cfg: &[usize]) -> usize {
        cfg.iter().zip(&self.dims).fold(0, |acc, (&c, &d)| acc * d + c)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::Dimension("state layouts differ".into()));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Numerical("cannot normalize the zero state".into()));
        }
        Ok(StateVector {
            dims: self.dims.clone(),
            amps: self.amps.iter().map(|z| z / n).collect(),
        })
    }

    pub fn sub(&self, other: &StateVector) -> Result<StateVector> {
        if self.dims != other.dims {
            return Err(Error::Dimension("state layouts differ".into()));
        }
        Ok(StateVector {
            dims: self.dims.clone(),
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn to_tensor(&self) -> Result<Tensor> {
        let axes = self.dims.iter().enumerate().map(|(k, &d)| (format!("s{k}"), d)).collect();
        Tensor::new(axes, self.amps.clone())
    }

    pub fn compare_upto_phase(&self, other: &StateVector, tol: f64) -> Result<PhaseVerdict<f64>> {
        allclose_upto_phase(&self.to_tensor()?, &other.to_tensor()?, tol)
    }

    /// `R(h)^{⊗V}` on a vertex-space state: `ψ ↦ ψ(· h)`.
    pub fn apply_global(&self, grp: &FiniteGroup, h: usize) -> StateVector {
        let mut out = self.clone();
        let mut cfg = vec![0usize; self.dims.len()];
        for i in 0..self.amps.len() {
            self.config_into(i, &mut cfg);
            for c in cfg.iter_mut() {
                *c = grp.mul(*c, h);
            }
            out.amps[i] = self.amps[self.index(&cfg)];
        }
        out
    }
}

/// Linear map on a product of sites, given column by column in the product basis.
pub trait Operator {
    /// Calls `emit(row, value)` for every nonzero entry in the column of basis
    /// configuration `col`.
    fn column(&self, col: &[usize], emit: &mut dyn FnMut(&[usize], C64));

    fn apply(&self, psi: &StateVector) -> StateVector {
        let mut out = StateVector {
            dims: psi.dims.clone(),
            amps: vec![c64(0.0, 0.0); psi.amps.len()],
        };
        let mut cfg = vec![0usize; psi.dims.len()];
        for (i, a) in psi.amps.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            psi.config_into(i, &mut cfg);
            self.column(&cfg, &mut |row, z| {
                let j = out.index(row);
                out.amps[j] += z * a;
            });
        }
        out
    }
}

fn checked_len(dims: &[usize]) -> Result<usize> {
    let mut len: u128 = 1;
    for &d in dims {
        len = len.saturating_mul(d as u128);
    }
    if len > DENSE_BUDGET as u128 {
        return Err(Error::Budget {
            needed: len,
            limit: DENSE_BUDGET as u128,
        });
    }
    Ok(len as usize)
}

/// Site tensor of one triangle, stored on its support: for every assignment `c` of
/// group elements to the corners (which fixes all six virtual legs) a vector over the
/// three physical legs.
#[derive(Debug, Clone)]
pub struct SptTensor {
    pub triangle: usize,
    pub n: usize,
    /// `phys[c]` lists the nonzero `(p, amplitude)`; `c` and `p` are encoded as
    /// `x₀·n² + x₁·n + x₂` over the corner slots.
    pub phys: Vec<Vec<(usize, C64)>>,
}

impl SptTensor {
    fn encode(&self, c: [usize; 3]) -> usize {
        (c[0] * self.n + c[1]) * self.n + c[2]
    }

    fn decode(&self, i: usize) -> [usize; 3] {
        let n = self.n;
        [i / (n * n), (i / n) % n, i % n]
    }

    /// Entry at physical values `p` and virtual legs `[e0a, e0b, e1a, e1b, e2a, e2b]`.
    pub fn get(&self, p: [usize; 3], virt: [usize; 6]) -> C64 {
        // e{k}a is corner k, e{k}b is corner k+1.
        let c = [virt[0], virt[2], virt[4]];
        if virt[1] != c[1] || virt[3] != c[2] || virt[5] != c[0] {
            return c64(0.0, 0.0);
        }
        self.entry(self.encode(c), self.encode(p))
    }

    fn entry(&self, ci: usize, pi: usize) -> C64 {
        self.phys[ci]
            .iter()
            .find(|(q, _)| *q == pi)
            .map_or(c64(0.0, 0.0), |&(_, z)| z)
    }

    /// `true` when every virtual assignment maps to a single physical basis state
    /// equal to it.
    pub fn is_diagonal(&self) -> bool {
        self.phys
            .iter()
            .enumerate()
            .all(|(ci, v)| v.iter().all(|&(pi, z)| pi == ci || z.norm() == 0.0))
    }

    /// Dense tensor with axes `p0 p1 p2 e0a e0b e1a e1b e2a e2b`.
    pub fn to_labeled(&self) -> Result<Tensor> {
        let n = self.n;
        let mut axes: Vec<(String, usize)> = (0..3).map(|k| (format!("p{k}"), n)).collect();
        for k in 0..3 {
            axes.push((format!("e{k}a"), n));
            axes.push((format!("e{k}b"), n));
        }
        checked_len(&vec![n; 9])?;
        let mut t = Tensor::zeros(axes)?;
        for (ci, v) in self.phys.iter().enumerate() {
            let c = self.decode(ci);
            for &(pi, z) in v {
                let p = self.decode(pi);
                t.set(&[p[0], p[1], p[2], c[0], c[1], c[1], c[2], c[2], c[0]], z);
            }
        }
        Ok(t)
    }
}

/// The fixed-point tensor `A_△` of triangle `t`.
pub fn spt_tensor(alpha: &Cocycle3, lat: &TriLattice, t: usize) -> Result<SptTensor> {
    if t >= lat.num_triangles() {
        return Err(Error::Validation(format!("triangle {t} out of range")));
    }
    let n = alpha.group().order();
    let tri = &lat.triangles[t];
    let phys = (0..n * n * n)
        .map(|ci| vec![(ci, tilde_alpha(alpha, tri, [ci / (n * n), (ci / n) % n, ci % n]))])
        .collect();
    Ok(SptTensor { triangle: t, n, phys })
}

pub fn spt_tensors(alpha: &Cocycle3, lat: &TriLattice) -> Result<Vec<SptTensor>> {
    (0..lat.num_triangles()).map(|t| spt_tensor(alpha, lat, t)).collect()
}

/// Symmetry twist `(x, y)` inserted on the two non-contractible cycles of a torus.
#[derive(Debug, Clone)]
pub struct Twist {
    pub x: usize,
    pub y: usize,
    family: MpoFamily,
    cx: Vec<MpoSite>,
    cy: Vec<MpoSite>,
    crossing: Tensor,
    /// `(h, σ)` ↦ value of `B_σ(h)` keyed by its output pair `(l, r)`.
    sites: HashMap<(usize, i32), Vec<C64>>,
}

impl Twist {
    pub fn new(alpha: &Cocycle3, lat: &TriLattice, x: usize, y: usize) -> Result<Self> {
        let grp = alpha.group();
        grp.check_element(x)?;
        grp.check_element(y)?;
        if !grp.commute(x, y) {
            return Err(Error::Validation(format!("twist elements {x} and {y} do not commute")));
        }
        let n = grp.order();
        let family = MpoFamily::from_peps_cocycle(alpha)?;
        let (cx, cy) = lat.mpo_loops()?;
        // The y string is the main leg of the crossing, the x string the transverse one.
        let crossing = family.crossing(CrossingKind::WR, y, x)?.tensor;
        let mut sites = HashMap::new();
        for h in [x, y] {
            for s in [1, -1] {
                let mut vals = vec![c64(0.0, 0.0); n * n];
                for (l, r, _, _, z) in family.site_entries(h, Handedness::from_sign(s)) {
                    vals[l * n + r] = z;
                }
                sites.insert((h, s), vals);
            }
        }
        Ok(Twist {
            x,
            y,
            family,
            cx,
            cy,
            crossing,
            sites,
        })
    }

    pub fn family(&self) -> &MpoFamily {
        &self.family
    }

    /// Right factor applied to a corner with wrap counts `(a, b)`.
    fn shift(&self, grp: &FiniteGroup, lift: (u8, u8)) -> usize {
        let mut s = 0;
        if lift.0 > 0 {
            s = grp.mul(s, grp.inv(self.x));
        }
        if lift.1 > 0 {
            s = grp.mul(s, grp.inv(self.y));
        }
        s
    }
}

/// Corner values of triangle `t` seen through the twist lift.
fn corner_values(grp: &FiniteGroup, lat: &TriLattice, t: usize, cfg: &[usize], twist: Option<&Twist>) -> [usize; 3] {
    let tri = &lat.triangles[t];
    let mut out = [0; 3];
    for k in 0..3 {
        let v = cfg[tri.corners[k]];
        out[k] = match twist {
            Some(tw) => grp.mul(v, tw.shift(grp, tri.lift[k])),
            None => v,
        };
    }
    out
}

fn vertex_value(grp: &FiniteGroup, lat: &TriLattice, t: usize, v: usize, cfg: &[usize], twist: Option<&Twist>) -> usize {
    let k = lat.triangles[t].slot(v).expect("vertex in triangle");
    corner_values(grp, lat, t, cfg, twist)[k]
}

/// Weight of the twist MPOs and crossing for the virtual configuration `cfg`.
fn twist_weight(grp: &FiniteGroup, lat: &TriLattice, tw: &Twist, cfg: &[usize]) -> C64 {
    let n = grp.order();
    let mut w = c64(1.0, 0.0);
    let mut bonds: Vec<Vec<(usize, usize)>> = Vec::new();
    for (h, sites) in [(tw.x, &tw.cx), (tw.y, &tw.cy)] {
        let mut lr = Vec::with_capacity(sites.len());
        for s in sites.iter() {
            let b0 = vertex_value(grp, lat, s.b_side, s.pair.0, cfg, Some(tw));
            let b1 = vertex_value(grp, lat, s.b_side, s.pair.1, cfg, Some(tw));
            let a0 = vertex_value(grp, lat, s.a_side, s.pair.0, cfg, Some(tw));
            let a1 = vertex_value(grp, lat, s.a_side, s.pair.1, cfg, Some(tw));
            if a0 != grp.mul(b0, h) || a1 != grp.mul(b1, h) {
                return c64(0.0, 0.0);
            }
            w *= tw.sites[&(h, s.handedness(lat))][b0 * n + b1];
            lr.push((b0, b1));
        }
        bonds.push(lr);
    }
    // Bonds meet at vertex (0,0): the x ring closes between its last and first
    // site, the y ring likewise.
    let (bx, by) = (&bonds[0], &bonds[1]);
    let ti = bx[0].0;
    let to = bx[bx.len() - 1].1;
    let gi = by[0].0;
    let go = by[by.len() - 1].1;
    w * tw.crossing.get(&[gi, go, ti, to])
}

fn product_weight(
    grp: &FiniteGroup,
    lat: &TriLattice,
    tensors: &[SptTensor],
    phys: &[usize],
    virt: &[usize],
    twist: Option<&Twist>,
) -> C64 {
    let mut w = c64(1.0, 0.0);
    for (t, a) in tensors.iter().enumerate() {
        let p = corner_values(grp, lat, t, phys, twist);
        let c = corner_values(grp, lat, t, virt, twist);
        let z = a.entry(a.encode(c), a.encode(p));
        if z.norm() == 0.0 {
            return z;
        }
        w *= z;
    }
    if let Some(tw) = twist {
        w *= twist_weight(grp, lat, tw, virt);
    }
    w
}

/// Contracts the network on vertex space, optionally with a symmetry twist inserted
/// on the virtual level.
pub fn assemble_state(grp: &FiniteGroup, lat: &TriLattice, tensors: &[SptTensor], twist: Option<&Twist>) -> Result<StateVector> {
    if tensors.len() != lat.num_triangles() {
        return Err(Error::Dimension("one tensor per triangle required".into()));
    }
    let n = grp.order();
    let dims = vec![n; lat.num_vertices];
    let mut state = StateVector::zeros(dims).map_err(|e| match e {
        Error::Budget { needed, limit } => Error::Budget { needed, limit },
        e => e,
    })?;
    let diagonal = tensors.iter().all(|t| t.is_diagonal());
    let mut cfg = vec![0usize; lat.num_vertices];
    if diagonal {
        for i in 0..state.amps.len() {
            state.config_into(i, &mut cfg);
            state.amps[i] = product_weight(grp, lat, tensors, &cfg, &cfg, twist);
        }
        return Ok(state);
    }
    let pairs = (state.amps.len() as u128).pow(2);
    if pairs > CONTRACTION_BUDGET {
        return Err(Error::Budget {
            needed: pairs,
            limit: CONTRACTION_BUDGET,
        });
    }
    let mut virt = vec![0usize; lat.num_vertices];
    for i in 0..state.amps.len() {
        state.config_into(i, &mut cfg);
        let mut acc = c64(0.0, 0.0);
        for j in 0..state.amps.len() {
            state.config_into(j, &mut virt);
            acc += product_weight(grp, lat, tensors, &cfg, &virt, twist);
        }
        state.amps[i] = acc;
    }
    Ok(state)
}

/// The untwisted fixed-point state on vertex space.
pub fn spt_state(alpha: &Cocycle3, lat: &TriLattice) -> Result<StateVector> {
    let tensors = spt_tensors(alpha, lat)?;
    assemble_state(alpha.group(), lat, &tensors, None)
}

/// The full state on triangle space `⊗_△ ℂ[G]^{⊗3}` (site `3t+k` is corner slot `k` of
/// triangle `t`). Only for very small networks.
pub fn assemble_triangle_state(grp: &FiniteGroup, lat: &TriLattice, tensors: &[SptTensor]) -> Result<StateVector> {
    let n = grp.order();
    let nt = lat.num_triangles();
    let mut out = StateVector::zeros(vec![n; 3 * nt])?;
    let nv = lat.num_vertices;
    let total = (n as u128).pow(nv as u32);
    if total > CONTRACTION_BUDGET {
        return Err(Error::Budget {
            needed: total,
            limit: CONTRACTION_BUDGET,
        });
    }
    let vs = StateVector {
        dims: vec![n; nv],
        amps: Vec::new(),
    };
    let mut c = vec![0usize; nv];
    for j in 0..total as usize {
        vs.config_into(j, &mut c);
        // Tensor product over triangles of phys[c|△].
        let mut partial: Vec<(usize, C64)> = vec![(0, c64(1.0, 0.0))];
        for (t, a) in tensors.iter().enumerate() {
            let cv = corner_values(grp, lat, t, &c, None);
            let row = &a.phys[a.encode(cv)];
            let mut next = Vec::new();
            for &(idx, w) in &partial {
                for &(pi, z) in row {
                    next.push((idx * n * n * n + pi, w * z));
                }
            }
            partial = next;
        }
        for (idx, w) in partial {
            out.amps[idx] += w;
        }
    }
    Ok(out)
}

/// Isometry `⊗_{△∋v}|g⟩ ↦ |g⟩` applied backwards: embeds a vertex-space state into
/// triangle space.
pub fn embed_in_triangle_space(grp: &FiniteGroup, lat: &TriLattice, state: &StateVector) -> Result<StateVector> {
    let n = grp.order();
    let mut out = StateVector::zeros(vec![n; 3 * lat.num_triangles()])?;
    let mut cfg = vec![0usize; lat.num_vertices];
    let mut tcfg = vec![0usize; 3 * lat.num_triangles()];
    for i in 0..state.amps.len() {
        state.config_into(i, &mut cfg);
        for (t, tri) in lat.triangles.iter().enumerate() {
            for k in 0..3 {
                tcfg[3 * t + k] = cfg[tri.corners[k]];
            }
        }
        let j = out.index(&tcfg);
        out.amps[j] = state.amps[i];
    }
    Ok(out)
}

/// MPO family used for pulling-through, built from `alpha` without validation so
/// that corrupted tables can be probed.
fn ring_around(
    alpha: &Cocycle3,
    lat: &TriLattice,
    t: usize,
    h: usize,
) -> HashMap<[usize; 6], Vec<([usize; 6], C64)>> {
    let fam = MpoFamily::unchecked(alpha);
    let n = alpha.group().order();
    let tri = &lat.triangles[t];
    // Sites counterclockwise around the triangle; edge slot k carries the pair
    // (corner k, corner k+1).
    let mut site_entries = Vec::new();
    for k in 0..3 {
        let e = lat.edges[tri.edges[k]];
        let plus = e.head == tri.corners[k];
        site_entries.push(fam.site_entries(h, if plus { Handedness::Plus } else { Handedness::Minus }));
    }
    // Ring contraction: bonds r_k = l_{k+1}.
    let mut out: HashMap<[usize; 6], Vec<([usize; 6], C64)>> = HashMap::new();
    for &(l0, r0, i0, o0, z0) in &site_entries[0] {
        for &(l1, r1, i1, o1, z1) in &site_entries[1] {
            if l1 != r0 {
                continue;
            }
            for &(l2, r2, i2, o2, z2) in &site_entries[2] {
                if l2 != r1 || r2 != l0 {
                    continue;
                }
                let pout = [o0 / n, o0 % n, o1 / n, o1 % n, o2 / n, o2 % n];
                let pin = [i0 / n, i0 % n, i1 / n, i1 % n, i2 / n, i2 % n];
                out.entry(pout).or_default().push((pin, z0 * z1 * z2));
            }
        }
    }
    out
}

/// Largest `|R(h)^{⊗3}A_△ − A_△·V_{∂△}(h)|` over triangles and group elements, where
/// `V_{∂△}(h)` is the ring of MPO sites on the six virtual legs. The MPO ring runs
/// counterclockwise around the triangle with the triangle's own values on its output
/// side.
pub fn pulling_through_residual(alpha: &Cocycle3, lat: &TriLattice, tensors: &[SptTensor]) -> Result<f64> {
    let grp = alpha.group();
    let n = grp.order();
    let mut worst: f64 = 0.0;
    for (t, a) in tensors.iter().enumerate() {
        for h in 0..n {
            let ring = ring_around(alpha, lat, t, h);
            // (A·V)[p, w]: contract A's virtual legs with the ring outputs.
            let mut rhs: HashMap<([usize; 3], [usize; 6]), C64> = HashMap::new();
            for (ci, row) in a.phys.iter().enumerate() {
                let c = a.decode(ci);
                let legs = [c[0], c[1], c[1], c[2], c[2], c[0]];
                if let Some(list) = ring.get(&legs) {
                    for &(pi, z) in row {
                        for &(w, v) in list {
                            *rhs.entry((a.decode(pi), w)).or_insert(c64(0.0, 0.0)) += z * v;
                        }
                    }
                }
            }
            // (R(h)^{⊗3}A)[p, w] = A[p·h, w].
            let mut lhs: HashMap<([usize; 3], [usize; 6]), C64> = HashMap::new();
            for (ci, row) in a.phys.iter().enumerate() {
                let c = a.decode(ci);
                let w = [c[0], c[1], c[1], c[2], c[2], c[0]];
                for &(pi, z) in row {
                    let p = a.decode(pi);
                    let ph = [0, 1, 2].map(|k| grp.mul(p[k], grp.inv(h)));
                    *lhs.entry((ph, w)).or_insert(c64(0.0, 0.0)) += z;
                }
            }
            for (k, v) in &lhs {
                worst = worst.max((v - rhs.get(k).copied().unwrap_or_default()).norm());
            }
            for (k, v) in &rhs {
                if !lhs.contains_key(k) {
                    worst = worst.max(v.norm());
                }
            }
        }
    }
    Ok(worst)
}

/// Pulling-through residual of the fixed-point tensors of `alpha`. The table is not
/// validated, so a corrupted cocycle yields a large residual.
pub fn verify_pulling_through(alpha: &Cocycle3, lat: &TriLattice) -> Result<f64> {
    let tensors = spt_tensors(alpha, lat)?;
    pulling_through_residual(alpha, lat, &tensors)
}

/// `⟨ψ|R(g)^{⊗V}|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn expectation_of_global(grp: &FiniteGroup, state: &StateVector, g: usize) -> Result<C64> {
    grp.check_element(g)?;
    let n2 = state.norm_sqr();
    if n2 == 0.0 {
        return Err(Error::Numerical("state vanishes".into()));
    }
    Ok(state.inner(&state.apply_global(grp, g))? / n2)
}

pub fn global_symmetry_check(alpha: &Cocycle3, lat: &TriLattice, g: usize) -> Result<C64> {
    if !lat.is_closed() {
        return Err(Error::Validation("global symmetry check needs a closed surface".into()));
    }
    let psi = spt_state(alpha, lat)?;
    expectation_of_global(alpha.group(), &psi, g)
}

/// State with `V(x)` and `V(y)` on the two cycles of a torus, joined by a crossing
/// tensor at vertex (0,0).
pub fn twisted_state(alpha: &Cocycle3, lat: &TriLattice, x: usize, y: usize) -> Result<StateVector> {
    let tw = Twist::new(alpha, lat, x, y)?;
    let tensors = spt_tensors(alpha, lat)?;
    assemble_state(alpha.group(), lat, &tensors, Some(&tw))
}

/// Eigenvalue of `R(k)^{⊗V}` on the `(x, y)`-twisted state.
pub fn theta_check(alpha: &Cocycle3, lat: &TriLattice, x: usize, y: usize, k: usize) -> Result<C64> {
    let grp = alpha.group();
    let cxy = grp.centralizer(&[x, y])?;
    if !cxy.contains(&k) {
        return Err(Error::Validation(format!("{k} does not commute with ({x},{y})")));
    }
    let psi = twisted_state(alpha, lat, x, y)?;
    expectation_of_global(grp, &psi, k)
}

/// Predicted value of [`theta_check`]: the twice slant product `θ^{x,y}(k)` of the
/// PEPS cocycle.
pub fn theta_prediction(alpha: &Cocycle3, x: usize, y: usize, k: usize) -> Result<C64> {
    let th = slant2(alpha, x, y)?;
    th.at(k)
        .ok_or_else(|| Error::Validation(format!("{k} does not commute with ({x},{y})")))
}

/// Projector onto `|ẽ⟩ = |G|^{-1/2} Σ_g |g⟩`.
pub fn trivial_rep_projector(n: usize) -> DMatrix<C64> {
    DMatrix::from_element(n, n, c64(1.0 / n as f64, 0.0))
}

/// Applies `P(λ) = (1−λ)·1 + λP` to every physical leg.
pub fn filter_deform(grp: &FiniteGroup, tensors: &[SptTensor], lambda: f64, p: &DMatrix<C64>) -> Result<Vec<SptTensor>> {
    let n = grp.order();
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Validation(format!("λ = {lambda} outside [0, 1)")));
    }
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::Dimension("filter must act on ℂ[G]".into()));
    }
    for g in 0..n {
        let r = DMatrix::from_fn(n, n, |i, j| {
            if i == grp.mul(j, grp.inv(g)) {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        });
        if (&r * p - p * &r).camax() > 1e-12 {
            return Err(Error::Validation(format!("filter does not commute with R({g})")));
        }
    }
    let f = DMatrix::<C64>::identity(n, n) * c64(1.0 - lambda, 0.0) + p * c64(lambda, 0.0);
    let out = tensors
        .iter()
        .map(|a| {
            let phys = a
                .phys
                .iter()
                .map(|v| {
                    let mut w = vec![c64(0.0, 0.0); n * n * n];
                    for &(pi, z) in v {
                        let q = a.decode(pi);
                        for i0 in 0..n {
                            for i1 in 0..n {
                                for i2 in 0..n {
                                    w[(i0 * n + i1) * n + i2] += f[(i0, q[0])] * f[(i1, q[1])] * f[(i2, q[2])] * z;
                                }
                            }
                        }
                    }
                    w.into_iter().enumerate().filter(|(_, z)| z.norm() != 0.0).collect()
                })
                .collect();
            SptTensor {
                triangle: a.triangle,
                n,
                phys,
            }
        })
        .collect();
    Ok(out)
}

/// Axes of a defect endpoint tensor: the six virtual legs the missing triangle
/// would carry, then the MPO bond.
pub const DEFECT_AXES: [&str; 7] = ["e0a", "e0b", "e1a", "e1b", "e2a", "e2b", "bond"];

/// Phase of `B_σ(h)` as a function of its output pair, `(l, r) ↦ value`.
fn site_phases(alpha: &Cocycle3, h: usize, sign: i32) -> Vec<C64> {
    let n = alpha.group().order();
    let mut vals = vec![c64(0.0, 0.0); n * n];
    for (l, r, _, _, z) in MpoFamily::unchecked(alpha).site_entries(h, Handedness::from_sign(sign)) {
        vals[l * n + r] = z;
    }
    vals
}

/// Open string `V(g)` between two punctures, with the data needed to contract it.
#[derive(Debug, Clone)]
pub struct DefectNetwork {
    pub string: DefectString,
    pub g: usize,
    phases: Vec<Vec<C64>>,
    /// `shift[3t + slot]` for the corners that see the shifted value.
    shift: Vec<bool>,
}

impl DefectNetwork {
    pub fn new(alpha: &Cocycle3, lat: &TriLattice, string: DefectString, g: usize) -> Result<Self> {
        alpha.group().check_element(g)?;
        let phases = string
            .sites
            .iter()
            .map(|s| site_phases(alpha, g, s.handedness(lat)))
            .collect();
        let mut shift = vec![false; 3 * lat.num_triangles()];
        for &(t, v) in &string.shifted {
            let k = lat.triangles[t]
                .slot(v)
                .ok_or_else(|| Error::Validation(format!("vertex {v} is not a corner of triangle {t}")))?;
            shift[3 * t + k] = true;
        }
        Ok(DefectNetwork {
            string,
            g,
            phases,
            shift,
        })
    }

    /// Value of vertex `v` seen from triangle `t`.
    fn seen(&self, grp: &FiniteGroup, lat: &TriLattice, t: usize, v: usize, cfg: &[usize]) -> usize {
        let k = lat.triangles[t].slot(v).expect("corner of triangle");
        if self.shift[3 * t + k] {
            grp.mul(cfg[v], grp.inv(self.g))
        } else {
            cfg[v]
        }
    }

    /// Indices into a defect tensor at puncture `t` for the configuration `cfg`.
    fn endpoint_index(&self, grp: &FiniteGroup, lat: &TriLattice, t: usize, cfg: &[usize]) -> [usize; 7] {
        let tri = &lat.triangles[t];
        let mut idx = [0; 7];
        for k in 0..3 {
            let nb = lat.dual[t][k].expect("closed surface");
            idx[2 * k] = self.seen(grp, lat, nb, tri.corners[k], cfg);
            idx[2 * k + 1] = self.seen(grp, lat, nb, tri.corners[(k + 1) % 3], cfg);
        }
        let (v, s) = if t == self.string.t0 {
            (self.string.path[0], self.string.sites[0].b_side)
        } else {
            let last = self.string.sites.len() - 1;
            (*self.string.path.last().unwrap(), self.string.sites[last].b_side)
        };
        idx[6] = self.seen(grp, lat, s, v, cfg);
        idx
    }

    /// Product of all tensors except the two endpoint tensors.
    fn bulk_weight(&self, alpha: &Cocycle3, lat: &TriLattice, cfg: &[usize]) -> C64 {
        let grp = alpha.group();
        let n = grp.order();
        let mut w = c64(1.0, 0.0);
        for (t, tri) in lat.triangles.iter().enumerate() {
            if t == self.string.t0 || t == self.string.t1 {
                continue;
            }
            let c = [0, 1, 2].map(|k| self.seen(grp, lat, t, tri.corners[k], cfg));
            w *= tilde_alpha(alpha, tri, c);
        }
        for (s, ph) in self.string.sites.iter().zip(&self.phases) {
            let l = self.seen(grp, lat, s.b_side, s.pair.0, cfg);
            let r = self.seen(grp, lat, s.b_side, s.pair.1, cfg);
            w *= ph[l * n + r];
        }
        w
    }
}

/// Which end of a defect string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefectEnd {
    Start,
    End,
}

impl DefectNetwork {
    pub fn puncture(&self, end: DefectEnd) -> usize {
        match end {
            DefectEnd::Start => self.string.t0,
            DefectEnd::End => self.string.t1,
        }
    }

    /// Leg configurations of the endpoint tensor at `end` reached by some vertex
    /// configuration, keyed by the corner values of the puncture.
    pub fn reachable(&self, grp: &FiniteGroup, lat: &TriLattice, end: DefectEnd) -> Vec<([usize; 3], [usize; 7])> {
        let n = grp.order();
        let t = self.puncture(end);
        let tri = &lat.triangles[t];
        let mut cfg = vec![0usize; lat.num_vertices];
        let mut out = Vec::with_capacity(n * n * n);
        for ci in 0..n * n * n {
            let c = [ci / (n * n), (ci / n) % n, ci % n];
            for k in 0..3 {
                cfg[tri.corners[k]] = c[k];
            }
            out.push((c, self.endpoint_index(grp, lat, t, &cfg)));
        }
        out
    }

    /// Amplitude of the defect state at `cfg`.
    pub fn amplitude(&self, alpha: &Cocycle3, lat: &TriLattice, b0: &Tensor, b1: &Tensor, cfg: &[usize]) -> C64 {
        let grp = alpha.group();
        let z0 = b0.get(&self.endpoint_index(grp, lat, self.string.t0, cfg));
        if z0.norm() == 0.0 {
            return z0;
        }
        let z1 = b1.get(&self.endpoint_index(grp, lat, self.string.t1, cfg));
        if z1.norm() == 0.0 {
            return z1;
        }
        self.bulk_weight(alpha, lat, cfg) * z0 * z1
    }
}

fn check_defect_tensor(t: &Tensor, n: usize) -> Result<Tensor> {
    let labels = t.labels();
    if labels.len() != 7 || DEFECT_AXES.iter().any(|a| !labels.contains(a)) {
        return Err(Error::Dimension(format!(
            "defect tensor needs axes {DEFECT_AXES:?}, got {labels:?}"
        )));
    }
    let p = t.permute(&DEFECT_AXES)?;
    if p.dims().iter().any(|&d| d != n) {
        return Err(Error::Dimension(format!("defect tensor legs must have dimension {n}")));
    }
    Ok(p)
}

fn zero_defect_tensor(n: usize) -> Tensor {
    Tensor::zeros(DEFECT_AXES.iter().map(|&a| (a, n)).collect()).unwrap()
}

/// Diagonal projector (as a 0/1 mask over the defect legs) onto the leg
/// configurations the network can reach at `end`. Components outside it do not
/// contribute to the state.
pub fn defect_support(grp: &FiniteGroup, lat: &TriLattice, net: &DefectNetwork, end: DefectEnd) -> Tensor {
    let mut m = zero_defect_tensor(grp.order());
    for (_, idx) in net.reachable(grp, lat, end) {
        m.set(&idx, c64(1.0, 0.0));
    }
    m
}

/// Endpoint tensor that closes the puncture at `end` with its own fixed-point
/// tensor, the bond carrying the string's value. For `g = e` this restores the
/// untwisted state.
pub fn closure_defect_tensor(alpha: &Cocycle3, lat: &TriLattice, net: &DefectNetwork, end: DefectEnd) -> Tensor {
    let grp = alpha.group();
    let tri = &lat.triangles[net.puncture(end)];
    let mut b = zero_defect_tensor(grp.order());
    for (c, idx) in net.reachable(grp, lat, end) {
        b.set(&idx, tilde_alpha(alpha, tri, c));
    }
    b
}

/// Random endpoint tensor supported on the reachable leg configurations.
pub fn random_admissible_defect_tensor<R: rand::Rng>(
    grp: &FiniteGroup,
    lat: &TriLattice,
    net: &DefectNetwork,
    end: DefectEnd,
    rng: &mut R,
) -> Tensor {
    let mut b = zero_defect_tensor(grp.order());
    for (_, idx) in net.reachable(grp, lat, end) {
        b.set(&idx, c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    }
    b
}

/// State with an open `V(g)` string between the punctures of `string`, closed by
/// the endpoint tensors `b0` (at `t0`) and `b1` (at `t1`) with axes [`DEFECT_AXES`].
pub fn defect_pair_state(
    alpha: &Cocycle3,
    lat: &TriLattice,
    string: &DefectString,
    g: usize,
    b0: &Tensor,
    b1: &Tensor,
) -> Result<StateVector> {
    let grp = alpha.group();
    let n = grp.order();
    let b0 = check_defect_tensor(b0, n)?;
    let b1 = check_defect_tensor(b1, n)?;
    let net = DefectNetwork::new(alpha, lat, string.clone(), g)?;
    StateVector::from_fn(vec![n; lat.num_vertices], |cfg| net.amplitude(alpha, lat, &b0, &b1, cfg))
}

/// Action of `R(k)^{⊗V}` on one endpoint tensor: `(M(k)B)[x] = phase(x) · B[x·k]` on
/// reachable configurations `x`.
#[derive(Debug, Clone)]
pub struct EndpointAction {
    pub k: usize,
    pub end: DefectEnd,
    /// `(x, x·k, phase)`.
    pub entries: Vec<([usize; 7], [usize; 7], C64)>,
}

impl EndpointAction {
    pub fn apply(&self, b: &Tensor) -> Result<Tensor> {
        let n = b.dims().first().copied().unwrap_or(0);
        let b = check_defect_tensor(b, n)?;
        let mut out = zero_defect_tensor(n);
        for (x, xk, z) in &self.entries {
            out.set(x, z * b.get(xk));
        }
        Ok(out)
    }
}

/// Builds `M(k)` at `end` from the MPO ring around the puncture and the zipper
/// phase where the ring crosses the string: `α(b,k,g)/α(b,g,k)` at the start
/// and its inverse at the end, `b` the bond value. The start operator is divided by
/// the orientation phase `α(g,k,k⁻¹)` and the end operator multiplied by it, which
/// leaves `M₀ ⊗ M₁` unchanged.
pub fn endpoint_action(alpha: &Cocycle3, lat: &TriLattice, net: &DefectNetwork, end: DefectEnd, k: usize) -> Result<EndpointAction> {
    let grp = alpha.group();
    let g = net.g;
    grp.check_element(k)?;
    if !grp.commute(g, k) {
        return Err(Error::Validation(format!("{k} does not commute with the string element {g}")));
    }
    let n = grp.order();
    let t = net.puncture(end);
    let tri = &lat.triangles[t];
    let rings: Vec<Vec<C64>> = (0..3)
        .map(|j| {
            let a = tri.corners[(j + 1) % 3];
            let sign = if lat.edges[tri.edges[j]].head == a { 1 } else { -1 };
            site_phases(alpha, k, sign)
        })
        .collect();
    let eps = alpha.get(g, k, grp.inv(k));
    let entries = net
        .reachable(grp, lat, end)
        .into_iter()
        .map(|(_, x)| {
            let mut z = c64(1.0, 0.0);
            for j in 0..3 {
                // The neighbor across slot j traverses it as (corner j+1, corner j).
                z *= rings[j][x[2 * j + 1] * n + x[2 * j]];
            }
            let b = x[6];
            let zip = alpha.get(b, k, g) / alpha.get(b, g, k);
            z *= match end {
                DefectEnd::Start => zip / eps,
                DefectEnd::End => eps / zip,
            };
            (x, x.map(|v| grp.mul(v, k)), z)
        })
        .collect();
    Ok(EndpointAction { k, end, entries })
}

/// Largest `|ψ_{B₀,B₁}(x·k) − ψ_{M₀(k)B₀, M₁(k)B₁}(x)|` over vertex configurations
/// (all of them when within the dense budget, else a fixed pseudo-random sample).
pub fn endpoint_action_residual(
    alpha: &Cocycle3,
    lat: &TriLattice,
    net: &DefectNetwork,
    b0: &Tensor,
    b1: &Tensor,
    k: usize,
) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let grp = alpha.group();
    let n = grp.order();
    let b0 = check_defect_tensor(b0, n)?;
    let b1 = check_defect_tensor(b1, n)?;
    let m0b = endpoint_action(alpha, lat, net, DefectEnd::Start, k)?.apply(&b0)?;
    let m1b = endpoint_action(alpha, lat, net, DefectEnd::End, k)?.apply(&b1)?;
    let nv = lat.num_vertices;
    let total = (n as u128).pow(nv as u32);
    let mut worst: f64 = 0.0;
    let mut check = |cfg: &[usize]| {
        let ck: Vec<usize> = cfg.iter().map(|&c| grp.mul(c, k)).collect();
        let lhs = net.amplitude(alpha, lat, &b0, &b1, &ck);
        let rhs = net.amplitude(alpha, lat, &m0b, &m1b, cfg);
        worst = worst.max((lhs - rhs).norm());
    };
    if total <= DENSE_BUDGET as u128 {
        let shape = StateVector {
            dims: vec![n; nv],
            amps: Vec::new(),
        };
        let mut cfg = vec![0; nv];
        for i in 0..total as usize {
            shape.config_into(i, &mut cfg);
            check(&cfg);
        }
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..1 << 14 {
            let cfg: Vec<usize> = (0..nv).map(|_| rng.random_range(0..n)).collect();
            check(&cfg);
        }
    }
    Ok(worst)
}

/// Scalar `c` with `M(k)M(h) = c·M(kh)` at the start of the string.
pub fn endpoint_factor(alpha: &Cocycle3, lat: &TriLattice, net: &DefectNetwork, h: usize, k: usize) -> Result<C64> {
    let grp = alpha.group();
    let mh = endpoint_action(alpha, lat, net, DefectEnd::Start, h)?;
    let mk = endpoint_action(alpha, lat, net, DefectEnd::Start, k)?;
    let mkh = endpoint_action(alpha, lat, net, DefectEnd::Start, grp.mul(k, h))?;
    let phase_of = |m: &EndpointAction| -> HashMap<[usize; 7], C64> { m.entries.iter().map(|(x, _, z)| (*x, *z)).collect() };
    let (ph, pkh) = (phase_of(&mh), phase_of(&mkh));
    let mut ratio: Option<C64> = None;
    for (x, _, zk) in &mk.entries {
        // (M(k)M(h)B)[x] = zk(x) · zh(x·k) · B[x·k·h].
        let xk = x.map(|v| grp.mul(v, k));
        let zh = ph
            .get(&xk)
            .ok_or_else(|| Error::Numerical("endpoint support is not closed under the action".into()))?;
        let r = zk * zh / pkh[x];
        match ratio {
            None => ratio = Some(r),
            Some(r0) if (r - r0).norm() > 1e-10 => {
                return Err(Error::NotProportional(format!(
                    "composite endpoint action differs from M({}) by a non-constant factor",
                    grp.mul(k, h)
                )))
            }
            _ => {}
        }
    }
    ratio.ok_or_else(|| Error::Numerical("empty endpoint support".into()))
}

/// Default punctures: triangle 0 and the first triangle joined to it by a defect
/// string of at least two edges (or one edge if no such triangle exists).
pub fn default_punctures(lat: &TriLattice) -> Result<DefectString> {
    let mut fallback = None;
    for t in 1..lat.num_triangles() {
        if let Ok(ds) = lat.defect_string(0, t) {
            if ds.sites.len() >= 2 {
                return Ok(ds);
            }
            fallback.get_or_insert(ds);
        }
    }
    fallback.ok_or_else(|| Error::Validation("no pair of vertex-disjoint punctures".into()))
}

/// Projective phase of the endpoint action: applies `R(h)` then `R(k)` to a defect
/// state with random admissible endpoint tensors, checks that each acts through the
/// endpoint operators, and returns `c` with `M(k)M(h) = c·M(kh)`.
pub fn defect_projective_action(alpha: &Cocycle3, lat: &TriLattice, g: usize, h: usize, k: usize) -> Result<C64> {
    use rand::SeedableRng;
    let grp = alpha.group();
    for x in [g, h, k] {
        grp.check_element(x)?;
    }
    let cg = grp.centralizer(&[g])?;
    if !cg.contains(&h) || !cg.contains(&k) {
        return Err(Error::Validation(format!("{h} and {k} must commute with {g}")));
    }
    let string = default_punctures(lat)?;
    let net = DefectNetwork::new(alpha, lat, string, g)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let b0 = random_admissible_defect_tensor(grp, lat, &net, DefectEnd::Start, &mut rng);
    let b1 = random_admissible_defect_tensor(grp, lat, &net, DefectEnd::End, &mut rng);
    for x in [h, k] {
        let r = endpoint_action_residual(alpha, lat, &net, &b0, &b1, x)?;
        if r > 1e-10 {
            return Err(Error::NotProportional(format!(
                "R({x}) does not act through the endpoint operators (residual {r:.2e})"
            )));
        }
    }
    endpoint_factor(alpha, lat, &net, h, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{standard_cocycle, CocycleParams};
    use crate::group::{make_group, GroupSpec};
    use std::sync::Arc;

    fn zn(n: usize, p: u32) -> Cocycle3 {
        let g = Arc::new(make_group(&GroupSpec::Cyclic(n)).unwrap());
        standard_cocycle(g, &CocycleParams::level(p)).unwrap()
    }

    #[test]
    fn defect_identity_closure() {
        let a = zn(2, 1);
        let lat = TriLattice::torus(3, 3).unwrap();
        let ds = default_punctures(&lat).unwrap();
        let net = DefectNetwork::new(&a, &lat, ds.clone(), 0).unwrap();
        let b0 = closure_defect_tensor(&a, &lat, &net, DefectEnd::Start);
        let b1 = closure_defect_tensor(&a, &lat, &net, DefectEnd::End);
        let psi = defect_pair_state(&a, &lat, &ds, 0, &b0, &b1).unwrap();
        let full = spt_state(&a, &lat).unwrap();
        assert!(psi.sub(&full).unwrap().norm() < 1e-12);
    }

    #[test]
    fn defect_kernel_gives_zero() {
        let a = zn(2, 1);
        let lat = TriLattice::torus(3, 3).unwrap();
        let ds = default_punctures(&lat).unwrap();
        let net = DefectNetwork::new(&a, &lat, ds.clone(), 1).unwrap();
        let mask = defect_support(a.group(), &lat, &net, DefectEnd::Start);
        let mut b0 = mask.clone();
        for v in b0.data_mut() {
            *v = c64(1.0, 0.0) - *v;
        }
        let b1 = defect_support(a.group(), &lat, &net, DefectEnd::End);
        let psi = defect_pair_state(&a, &lat, &ds, 1, &b0, &b1).unwrap();
        assert_eq!(psi.norm(), 0.0);
        let psi = defect_pair_state(&a, &lat, &ds, 1, &mask, &b1).unwrap();
        assert!(psi.norm() > 1.0);
    }

    #[test]
    fn z2_defect_phase() {
        let a = zn(2, 1);
        let lat = TriLattice::torus(3, 3).unwrap();
        let c = defect_projective_action(&a, &lat, 1, 1, 1).unwrap();
        assert!((c + 1.0).norm() < 1e-10);
    }

    #[test]
    fn z2_entry() {
        let a = zn(2, 1);
        let lat = TriLattice::sphere().unwrap();
        // Face 2 is (0,1,3): already ascending.
        let t = spt_tensor(&a, &lat, 2).unwrap();
        assert_eq!(lat.triangles[2].sigma, 1);
        let v = t.get([1, 0, 1], [1, 0, 0, 1, 1, 1]);
        assert!((v + 1.0).norm() < 1e-15);
        assert_eq!(t.get([1, 0, 1], [1, 1, 0, 1, 1, 1]), c64(0.0, 0.0));
    }

    #[test]
    fn pulling_through_small() {
        let a = zn(3, 1);
        let lat = TriLattice::torus(2, 2).unwrap();
        assert!(verify_pulling_through(&a, &lat).unwrap() < 1e-12);
    }

    #[test]
    fn untwisted_equals_zero_twist() {
        let a = zn(3, 2);
        let lat = TriLattice::torus(2, 2).unwrap();
        let psi = spt_state(&a, &lat).unwrap();
        let tw = twisted_state(&a, &lat, 0, 0).unwrap();
        assert!(psi.compare_upto_phase(&tw, 1e-12).unwrap().close);
    }

    #[test]
    fn sphere_symmetric() {
        let a = zn(2, 1);
        let lat = TriLattice::sphere().unwrap();
        let e = global_symmetry_check(&a, &lat, 1).unwrap();
        assert!((e - 1.0).norm() < 1e-10);
    }
}
