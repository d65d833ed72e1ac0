//! Symmetry MPOs of the fixed-point SPT PEPS.
//!
//! Layout of an MPO site tensor (axes `l`, `r`, `pin`, `pout`): the site acts on
//! the virtual pair `(k1, k2)` of one PEPS bond, listed in the order the MPO ring
//! traverses them. The ring shares `k2` of one site with `k1` of the next, and the
//! bonds carry these shared values on the output side:
//!
//! ```text
//! B_+(h)[l=k1, r=k2, pin=(k1·h, k2·h), pout=(k1, k2)] = α(k1·k2⁻¹, k2, h)
//! B_-(h)[l=k1, r=k2, pin=(k1·h, k2·h), pout=(k1, k2)] = α(k2·k1⁻¹, k1, h)⁻¹
//! ```
//!
//! A pair index is `k1·|G| + k2`. `B_+` sits where the ring runs against the
//! edge direction (ring order `(g₋, g₊)`), `B_-` where it runs along it.
//!
//! The reduction tensor fuses `V(g)` stacked on `V(h)` (`h` acts first):
//! `X(g,h)[f=b, t=b, b=b·g] = α(b,g,h)` with `t` the `V(g)` bond and `b` the
//! `V(h)` bond.
//!
//! The family is built from the PEPS cocycle α. Its associator is α⁻¹, and the
//! crossing-tensor algebra is phrased in terms of that associator.

use crate::cocycle::{omega_at, slant1_at, slant2, verify_cocycle, Cocycle3};
use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::{eigenvalues_by_magnitude, null_vector};
use crate::{c64, Tensor, C64};
use nalgebra::DMatrix;
use rustc_hash::FxHashMap as HashMap;

pub const IDENTITY_TOL: f64 = 1e-12;
pub const PHASE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Handedness {
    Plus,
    Minus,
}

impl Handedness {
    pub fn sign(self) -> i32 {
        match self {
            Handedness::Plus => 1,
            Handedness::Minus => -1,
        }
    }

    pub fn from_sign(s: i32) -> Self {
        if s >= 0 {
            Handedness::Plus
        } else {
            Handedness::Minus
        }
    }
}

/// Fixed-point MPO family of a PEPS cocycle.
#[derive(Debug, Clone)]
pub struct MpoFamily {
    peps: Cocycle3,
    assoc: Cocycle3,
}

impl MpoFamily {
    /// Family of the fixed-point PEPS built from `alpha`.
    pub fn from_peps_cocycle(alpha: &Cocycle3) -> Result<Self> {
        check_input(alpha)?;
        Ok(MpoFamily {
            peps: alpha.clone(),
            assoc: alpha.inverse(),
        })
    }

    /// The family whose associator is `alpha`.
    pub fn from_associator(alpha: &Cocycle3) -> Result<Self> {
        check_input(alpha)?;
        Ok(MpoFamily {
            peps: alpha.inverse(),
            assoc: alpha.clone(),
        })
    }

    /// Family of `alpha` without validating the table. Identity checks on the
    /// result measure how far `alpha` is from a normalized cocycle.
    pub fn unchecked(alpha: &Cocycle3) -> Self {
        MpoFamily {
            peps: alpha.clone(),
            assoc: alpha.inverse(),
        }
    }

    pub fn peps_cocycle(&self) -> &Cocycle3 {
        &self.peps
    }

    /// The 3-cocycle of the MPO representation (α⁻¹ of the PEPS cocycle).
    pub fn associator(&self) -> &Cocycle3 {
        &self.assoc
    }

    pub fn group(&self) -> &FiniteGroup {
        self.peps.group()
    }

    fn n(&self) -> usize {
        self.group().order()
    }

    pub fn site(&self, h: usize, sigma: Handedness) -> MpoTensor {
        mpo_site(&self.peps, h, sigma)
    }

    /// Nonzero entries `(l, r, pin, pout, value)` of [`MpoFamily::site`], without
    /// building the dense tensor.
    pub fn site_entries(&self, h: usize, sigma: Handedness) -> Vec<(usize, usize, usize, usize, C64)> {
        site_entries(&self.peps, h, sigma)
    }

    pub fn x(&self, g: usize, h: usize) -> ReductionX {
        reduction_x(&self.peps, g, h)
    }

    /// `ζ_h(c) = α(c, h, h⁻¹)` of the PEPS cocycle.
    fn zeta(&self, h: usize, c: usize) -> C64 {
        self.peps.get(c, h, self.group().inv(h))
    }
}

fn check_input(alpha: &Cocycle3) -> Result<()> {
    if !alpha.is_normalized() {
        return Err(Error::Validation("cocycle must be normalized".into()));
    }
    let v = verify_cocycle(alpha)?;
    if !v.ok {
        return Err(Error::Validation(format!(
            "not a 3-cocycle: residual {:.3e}",
            v.max_residual
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct MpoTensor {
    pub g: usize,
    pub sigma: Handedness,
    /// Axes `l`, `r` (dim |G|), `pin`, `pout` (dim |G|²).
    pub tensor: Tensor,
}

#[derive(Debug, Clone)]
pub struct ReductionX {
    pub g: usize,
    pub h: usize,
    /// Axes `f` (fused), `t` (V(g) bond), `b` (V(h) bond).
    pub tensor: Tensor,
}

/// Site tensor `B_σ(g)` of the MPO `V(g)` for the fixed-point PEPS of `alpha`.
pub fn build_mpo_tensor(alpha: &Cocycle3, g: usize, sigma: Handedness) -> Result<MpoTensor> {
    check_input(alpha)?;
    alpha.group().check_element(g)?;
    Ok(mpo_site(alpha, g, sigma))
}

fn mpo_site(alpha: &Cocycle3, h: usize, sigma: Handedness) -> MpoTensor {
    let n = alpha.group().order();
    let mut t = Tensor::zeros(vec![("l", n), ("r", n), ("pin", n * n), ("pout", n * n)]).unwrap();
    for (l, r, pin, pout, ph) in site_entries(alpha, h, sigma) {
        t.set(&[l, r, pin, pout], ph);
    }
    MpoTensor { g: h, sigma, tensor: t }
}

/// Nonzero entries `(l, r, pin, pout, value)` of `B_σ(h)`.
fn site_entries(alpha: &Cocycle3, h: usize, sigma: Handedness) -> Vec<(usize, usize, usize, usize, C64)> {
    let grp = alpha.group();
    let n = grp.order();
    let mut out = Vec::with_capacity(n * n);
    for k1 in 0..n {
        for k2 in 0..n {
            let ph = match sigma {
                Handedness::Plus => alpha.get(grp.div(k1, k2), k2, h),
                Handedness::Minus => alpha.get(grp.div(k2, k1), k1, h).conj(),
            };
            let pin = grp.mul(k1, h) * n + grp.mul(k2, h);
            out.push((k1, k2, pin, k1 * n + k2, ph));
        }
    }
    out
}

/// Reduction tensor `X(g,h)`.
pub fn reduction_x(alpha: &Cocycle3, g: usize, h: usize) -> ReductionX {
    let grp = alpha.group();
    let n = grp.order();
    let mut t = Tensor::zeros(vec![("f", n), ("t", n), ("b", n)]).unwrap();
    for b in 0..n {
        t.set(&[b, b, grp.mul(b, g)], alpha.get(b, g, h));
    }
    ReductionX { g, h, tensor: t }
}

// Sparse chain evaluation. The fixed-point tensors are monomial, so chains are
// contracted entry by entry instead of densely.

type Key = (usize, usize, u64, u64);

#[derive(Debug, Clone)]
struct SparseChain {
    dphys: u64,
    entries: HashMap<Key, C64>,
}

fn sparse_site(t: &Tensor) -> Vec<(usize, usize, usize, usize, C64)> {
    let p = t.permute(&["l", "r", "pin", "pout"]).expect("site axes");
    let d = p.dims();
    let mut out = Vec::new();
    for (off, v) in p.data().iter().enumerate() {
        if v.norm() == 0.0 {
            continue;
        }
        let po = off % d[3];
        let rest = off / d[3];
        let pi = rest % d[2];
        let rest = rest / d[2];
        out.push((rest / d[1], rest % d[1], pi, po, *v));
    }
    out
}

impl SparseChain {
    fn single(site: &[(usize, usize, usize, usize, C64)], dphys: usize) -> Self {
        let mut entries = HashMap::default();
        for &(l, r, pi, po, v) in site {
            *entries.entry((l, r, pi as u64, po as u64)).or_insert(c64(0.0, 0.0)) += v;
        }
        SparseChain {
            dphys: dphys as u64,
            entries,
        }
    }

    fn extend(&self, site: &[(usize, usize, usize, usize, C64)]) -> Self {
        let mut by_l: HashMap<usize, Vec<(usize, usize, usize, C64)>> = HashMap::default();
        for &(l, r, pi, po, v) in site {
            by_l.entry(l).or_default().push((r, pi, po, v));
        }
        let fanout = site.len().div_ceil(by_l.len().max(1));
        let mut entries = HashMap::with_capacity_and_hasher(self.entries.len() * fanout, Default::default());
        for (&(l, r, pi, po), &v) in &self.entries {
            if let Some(list) = by_l.get(&r) {
                for &(r2, pi2, po2, w) in list {
                    let key = (l, r2, pi * self.dphys + pi2 as u64, po * self.dphys + po2 as u64);
                    *entries.entry(key).or_insert(c64(0.0, 0.0)) += v * w;
                }
            }
        }
        SparseChain {
            dphys: self.dphys,
            entries,
        }
    }

    fn chain(site: &[(usize, usize, usize, usize, C64)], dphys: usize, len: usize) -> Self {
        let mut c = Self::single(site, dphys);
        for _ in 1..len {
            c = c.extend(site);
        }
        c
    }

    /// Contracts the left bond with `left[(new, old)]` and the right bond with `right[(old, new)]`.
    fn with_boundaries(&self, left: &[(usize, usize, C64)], right: &[(usize, usize, C64)]) -> Self {
        let mut lm: HashMap<usize, Vec<(usize, C64)>> = HashMap::default();
        for &(new, old, v) in left {
            lm.entry(old).or_default().push((new, v));
        }
        let mut rm: HashMap<usize, Vec<(usize, C64)>> = HashMap::default();
        for &(old, new, v) in right {
            rm.entry(old).or_default().push((new, v));
        }
        let mut entries = HashMap::default();
        for (&(l, r, pi, po), &v) in &self.entries {
            let (Some(ls), Some(rs)) = (lm.get(&l), rm.get(&r)) else { continue };
            for &(nl, a) in ls {
                for &(nr, b) in rs {
                    *entries.entry((nl, nr, pi, po)).or_insert(c64(0.0, 0.0)) += a * v * b;
                }
            }
        }
        SparseChain {
            dphys: self.dphys,
            entries,
        }
    }

    fn ring(&self) -> HashMap<(u64, u64), C64> {
        let mut out = HashMap::default();
        for (&(l, r, pi, po), &v) in &self.entries {
            if l == r {
                *out.entry((pi, po)).or_insert(c64(0.0, 0.0)) += v;
            }
        }
        out
    }
}

fn max_diff<K: std::hash::Hash + Eq + Copy>(a: &HashMap<K, C64>, b: &HashMap<K, C64>) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, v) in a {
        worst = worst.max((v - b.get(k).copied().unwrap_or_default()).norm());
    }
    for (k, v) in b {
        if !a.contains_key(k) {
            worst = worst.max(v.norm());
        }
    }
    worst
}

/// Site of `V(g)·V(h)` with bonds fused as `t·|G| + b`.
fn stacked_site(fam: &MpoFamily, g: usize, h: usize, sigma: Handedness) -> Vec<(usize, usize, usize, usize, C64)> {
    let n = fam.n();
    let top = sparse_site(&fam.site(g, sigma).tensor);
    let bot = sparse_site(&fam.site(h, sigma).tensor);
    let mut by_out: HashMap<usize, Vec<(usize, usize, usize, C64)>> = HashMap::default();
    for &(l, r, pi, po, v) in &bot {
        by_out.entry(po).or_default().push((l, r, pi, v));
    }
    let mut out = Vec::new();
    for &(lt, rt, mid, po, v) in &top {
        if let Some(list) = by_out.get(&mid) {
            for &(lb, rb, pi, w) in list {
                out.push((lt * n + lb, rt * n + rb, pi, po, v * w));
            }
        }
    }
    out
}

fn x_entries(x: &ReductionX, n: usize) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for f in 0..n {
        for t in 0..n {
            for b in 0..n {
                let v = x.tensor.get(&[f, t, b]);
                if v.norm() > 0.0 {
                    out.push((f, t * n + b, v));
                }
            }
        }
    }
    out
}

/// `‖X⁺(g,h)·[V(g)V(h)]·X(g,h) − V(gh)‖_max` on an open chain of `len` sites, and the
/// same without reductions on the closed ring.
pub fn check_representation(alpha: &Cocycle3, g: usize, h: usize, len: usize) -> Result<f64> {
    let fam = MpoFamily::from_peps_cocycle(alpha)?;
    representation_residual(&fam, g, h, len, Handedness::Plus)
}

pub fn representation_residual(fam: &MpoFamily, g: usize, h: usize, len: usize, sigma: Handedness) -> Result<f64> {
    if len < 2 {
        return Err(Error::Validation("chain length must be at least 2".into()));
    }
    let grp = fam.group();
    grp.check_element(g)?;
    grp.check_element(h)?;
    let n = fam.n();
    let stacked = SparseChain::chain(&stacked_site(fam, g, h, sigma), n * n, len);
    let target = SparseChain::chain(&sparse_site(&fam.site(grp.mul(g, h), sigma).tensor), n * n, len);
    let x = x_entries(&fam.x(g, h), n);
    let left: Vec<_> = x.iter().map(|&(f, p, v)| (f, p, v.conj())).collect();
    let right: Vec<_> = x.iter().map(|&(f, p, v)| (p, f, v)).collect();
    let reduced = stacked.with_boundaries(&left, &right);
    let open = max_diff(&reduced.entries, &target.entries);
    let ring = max_diff(&stacked.ring(), &target.ring());
    Ok(open.max(ring))
}

pub fn check_zipper(alpha: &Cocycle3, g: usize, h: usize, len: usize) -> Result<f64> {
    let fam = MpoFamily::from_peps_cocycle(alpha)?;
    let x = fam.x(g, h);
    zipper_residual(&fam, &x, len, Handedness::Plus)
}

/// Residual of `[V(g)V(h)]·X_right = X_left·V(gh)` and `X⁺_left·[V(g)V(h)] = V(gh)·X⁺_right`
/// on an open chain of `len` sites, using the supplied reduction tensor.
pub fn zipper_residual(fam: &MpoFamily, x: &ReductionX, len: usize, sigma: Handedness) -> Result<f64> {
    if len < 1 {
        return Err(Error::Validation("chain length must be positive".into()));
    }
    let grp = fam.group();
    let (g, h) = (x.g, x.h);
    let n = fam.n();
    let stacked = SparseChain::chain(&stacked_site(fam, g, h, sigma), n * n, len);
    let target = SparseChain::chain(&sparse_site(&fam.site(grp.mul(g, h), sigma).tensor), n * n, len);
    let xe = x_entries(x, n);
    let ident = |d: usize| -> Vec<(usize, usize, C64)> { (0..d).map(|i| (i, i, c64(1.0, 0.0))).collect() };
    let x_right: Vec<_> = xe.iter().map(|&(f, p, v)| (p, f, v)).collect();
    let x_left: Vec<_> = xe.iter().map(|&(f, p, v)| (p, f, v)).collect();
    let xd_left: Vec<_> = xe.iter().map(|&(f, p, v)| (f, p, v.conj())).collect();
    let xd_right: Vec<_> = xe.iter().map(|&(f, p, v)| (f, p, v.conj())).collect();
    // [V(g)V(h)]·X on the right vs X·V(gh) on the left; both have a pair bond on the left.
    let lhs = stacked.with_boundaries(&ident(n * n), &x_right);
    let rhs = target.with_boundaries(&x_left, &ident(n));
    let r1 = max_diff(&lhs.entries, &rhs.entries);
    // X⁺·[V(g)V(h)] vs V(gh)·X⁺; both have a pair bond on the right.
    let lhs = stacked.with_boundaries(&xd_left, &ident(n * n));
    let rhs = target.with_boundaries(&ident(n), &xd_right);
    let r2 = max_diff(&lhs.entries, &rhs.entries);
    Ok(r1.max(r2))
}

/// Scalar `c(h1,h2,h3)` with `X(h1h2,h3)[X(h1,h2)⊗1] = c · X(h1,h2h3)[1⊗X(h2,h3)]`.
pub fn extract_associator(alpha: &Cocycle3) -> Result<Cocycle3> {
    let fam = MpoFamily::from_peps_cocycle(alpha)?;
    associator_of(&fam, |g, h| fam.x(g, h).tensor)
}

/// Associator of an arbitrary family of reduction tensors `x(g,h)` (axes `f`, `t`, `b`).
pub fn associator_of(fam: &MpoFamily, x: impl Fn(usize, usize) -> Tensor) -> Result<Cocycle3> {
    let grp = fam.group();
    let n = grp.order();
    let mut table = vec![c64(1.0, 0.0); n * n * n];
    for h1 in 0..n {
        for h2 in 0..n {
            for h3 in 0..n {
                let outer = x(grp.mul(h1, h2), h3).rename("t", "m")?.rename("b", "b3")?;
                let inner = x(h1, h2).rename("f", "m")?.rename("t", "b1")?.rename("b", "b2")?;
                let lhs = Tensor::contract(&outer, &inner, &[("m", "m")])?;
                let outer = x(h1, grp.mul(h2, h3)).rename("t", "b1")?.rename("b", "m")?;
                let inner = x(h2, h3).rename("f", "m")?.rename("t", "b2")?.rename("b", "b3")?;
                let rhs = Tensor::contract(&outer, &inner, &[("m", "m")])?;
                let (c, resid) = lhs.proportionality(&rhs)?;
                if resid > PHASE_TOL {
                    return Err(Error::NotProportional(format!(
                        "reductions for ({h1},{h2},{h3}) differ by more than a scalar (residual {resid:.3e})"
                    )));
                }
                table[(h1 * n + h2) * n + h3] = c;
            }
        }
    }
    Cocycle3::from_table(fam.peps.group_arc(), table)
}

#[derive(Debug, Clone)]
pub struct OrientationGauge {
    pub g: usize,
    /// Bond gauge with `B_+(g) = Z_g · rev B_-(g⁻¹) · Z_g⁻¹`.
    pub z: DMatrix<C64>,
    /// `Z_g (Z_{g⁻¹}⁻¹)ᵀ = χ_g · 1`.
    pub chi: C64,
    /// Residual of the intertwining relation for `g` and for `g⁻¹`.
    pub residual: f64,
    /// Deviation of `Z_g (Z_{g⁻¹}⁻¹)ᵀ` from a multiple of the identity.
    pub chi_residual: f64,
}

/// Orientation reversal of a site: swap ring direction (bonds and pair order) and
/// exchange input and output.
pub fn reverse_site(t: &Tensor, n: usize) -> Result<Tensor> {
    let swap = |p: usize| (p % n) * n + p / n;
    let src = t.permute(&["l", "r", "pin", "pout"])?;
    Tensor::from_fn(vec![("l", n), ("r", n), ("pin", n * n), ("pout", n * n)], |i| {
        src.get(&[i[1], i[0], swap(i[3]), swap(i[2])])
    })
}

fn solve_gauge_matrix(b1: &Tensor, b2: &Tensor, n: usize) -> Result<(DMatrix<C64>, f64)> {
    // Mixed transfer E[(l,l'),(r,r')] = Σ_p b1[l,r,p] conj b2[l',r',p]; its leading
    // right eigenvector, read as a matrix M[r,r'], is the gauge.
    let m1 = b1.to_matrix(&["l", "r"], &["pin", "pout"])?;
    let m2 = b2.to_matrix(&["l", "r"], &["pin", "pout"])?;
    let mut e = DMatrix::<C64>::zeros(n * n, n * n);
    for l in 0..n {
        for r in 0..n {
            for lp in 0..n {
                for rp in 0..n {
                    let mut s = c64(0.0, 0.0);
                    for c in 0..m1.ncols() {
                        s += m1[(l * n + r, c)] * m2[(lp * n + rp, c)].conj();
                    }
                    e[(l * n + lp, r * n + rp)] = s;
                }
            }
        }
    }
    let ev = eigenvalues_by_magnitude(&e)?;
    if ev.is_empty() || ev[0].norm() == 0.0 {
        return Err(Error::Numerical("mixed transfer operator vanishes".into()));
    }
    if ev.len() > 1 && (ev[0] - ev[1]).norm() < 1e-8 {
        return Err(Error::Numerical(
            "degenerate leading eigenspace of the mixed transfer operator; MPO is not single-blocked".into(),
        ));
    }
    let shifted = &e - DMatrix::<C64>::identity(n * n, n * n) * ev[0];
    let (v, _) = null_vector(&shifted)?;
    let mut z = DMatrix::from_fn(n, n, |r, rp| v[r * n + rp]);
    // Fix the scale: first nonzero entry in column-major order becomes 1.
    if let Some(p) = z.iter().copied().find(|c| c.norm() > 1e-8) {
        z /= p;
    }
    // Residual of b1 = Z b2 Z⁻¹ per physical index.
    let zi = z
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("orientation gauge is singular".into()))?;
    let mut resid: f64 = 0.0;
    for c in 0..m1.ncols() {
        let a = DMatrix::from_fn(n, n, |l, r| m1[(l * n + r, c)]);
        let b = DMatrix::from_fn(n, n, |l, r| m2[(l * n + r, c)]);
        resid = resid.max((a - &z * b * &zi).camax());
    }
    Ok((z, resid))
}

pub fn solve_orientation_gauge(alpha: &Cocycle3, g: usize) -> Result<OrientationGauge> {
    let fam = MpoFamily::from_peps_cocycle(alpha)?;
    orientation_gauge(&fam, g)
}

pub fn orientation_gauge(fam: &MpoFamily, g: usize) -> Result<OrientationGauge> {
    let grp = fam.group();
    grp.check_element(g)?;
    let n = fam.n();
    let gi = grp.inv(g);
    let solve = |k: usize| -> Result<(DMatrix<C64>, f64)> {
        let b1 = fam.site(k, Handedness::Plus).tensor;
        let b2 = reverse_site(&fam.site(grp.inv(k), Handedness::Minus).tensor, n)?;
        solve_gauge_matrix(&b1, &b2, n)
    };
    let (z, r1) = solve(g)?;
    let (zinv_el, r2) = solve(gi)?;
    let zz = zinv_el
        .try_inverse()
        .ok_or_else(|| Error::Numerical("orientation gauge is singular".into()))?
        .transpose();
    let prod = &z * zz;
    let chi = prod[(0, 0)];
    let chi_residual = (prod - DMatrix::<C64>::identity(n, n) * chi).camax();
    Ok(OrientationGauge {
        g,
        z,
        chi,
        residual: r1.max(r2),
        chi_residual,
    })
}

#[derive(Debug, Clone)]
pub struct TransferSpectrum {
    pub eigenvalues: Vec<C64>,
    pub single_block: bool,
}

/// Leading eigenvalues of `𝔼 = Σ_p B_p ⊗ conj B_p` for an MPO site with axes `l`, `r`, `pin`, `pout`.
pub fn transfer_spectrum_of(site: &Tensor, top_k: usize) -> Result<TransferSpectrum> {
    let d = site.dim("l")?;
    if site.dim("r")? != d {
        return Err(Error::Dimension("left and right bonds differ".into()));
    }
    let m = site.to_matrix(&["l", "r"], &["pin", "pout"])?;
    let mut e = DMatrix::<C64>::zeros(d * d, d * d);
    for l in 0..d {
        for lp in 0..d {
            for r in 0..d {
                for rp in 0..d {
                    let mut s = c64(0.0, 0.0);
                    for c in 0..m.ncols() {
                        s += m[(l * d + r, c)] * m[(lp * d + rp, c)].conj();
                    }
                    e[(l * d + lp, r * d + rp)] = s;
                }
            }
        }
    }
    let ev = eigenvalues_by_magnitude(&e)?;
    let single_block = match ev.len() {
        0 => false,
        1 => ev[0].norm() > 0.0,
        _ => ev[0].norm() - ev[1].norm() > 1e-8,
    };
    Ok(TransferSpectrum {
        eigenvalues: ev.into_iter().take(top_k).collect(),
        single_block,
    })
}

pub fn transfer_spectrum(alpha: &Cocycle3, g: usize, top_k: usize) -> Result<TransferSpectrum> {
    let site = build_mpo_tensor(alpha, g, Handedness::Plus)?;
    transfer_spectrum_of(&site.tensor, top_k)
}

/// Direct sum of two MPO sites (block-diagonal bonds).
pub fn direct_sum_site(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (da, db) = (a.dim("l")?, b.dim("l")?);
    let (pi, po) = (a.dim("pin")?, a.dim("pout")?);
    if b.dim("pin")? != pi || b.dim("pout")? != po {
        return Err(Error::Dimension("physical legs differ".into()));
    }
    let a = a.permute(&["l", "r", "pin", "pout"])?;
    let b = b.permute(&["l", "r", "pin", "pout"])?;
    let d = da + db;
    Tensor::from_fn(vec![("l", d), ("r", d), ("pin", pi), ("pout", po)], |i| {
        if i[0] < da && i[1] < da {
            a.get(&[i[0], i[1], i[2], i[3]])
        } else if i[0] >= da && i[1] >= da {
            b.get(&[i[0] - da, i[1] - da, i[2], i[3]])
        } else {
            c64(0.0, 0.0)
        }
    })
}

#[derive(Debug, Clone)]
pub struct RankTrace {
    pub rank: usize,
    pub trace: C64,
    pub ok: bool,
}

/// Rank of the closed projector MPO `V(1)` of length `len` against `tr(𝔼^len)`.
pub fn rank_vs_trace_check(alpha: &Cocycle3, len: usize) -> Result<RankTrace> {
    let site = build_mpo_tensor(alpha, 0, Handedness::Plus)?;
    rank_vs_trace_of(&site.tensor, len)
}

pub fn rank_vs_trace_of(site: &Tensor, len: usize) -> Result<RankTrace> {
    if len < 1 {
        return Err(Error::Validation("length must be positive".into()));
    }
    let d = site.dim("l")?;
    let dphys = site.dim("pin")?;
    let ring = SparseChain::chain(&sparse_site(site), dphys, len).ring();
    let rank = sparse_rank(&ring)?;
    // tr 𝔼^L with 𝔼 built from the same site.
    let m = site.to_matrix(&["l", "r"], &["pin", "pout"])?;
    let mut e = DMatrix::<C64>::zeros(d * d, d * d);
    for l in 0..d {
        for lp in 0..d {
            for r in 0..d {
                for rp in 0..d {
                    let mut s = c64(0.0, 0.0);
                    for c in 0..m.ncols() {
                        s += m[(l * d + r, c)] * m[(lp * d + rp, c)].conj();
                    }
                    e[(l * d + lp, r * d + rp)] = s;
                }
            }
        }
    }
    let mut p = DMatrix::<C64>::identity(d * d, d * d);
    for _ in 0..len {
        p = &p * &e;
    }
    let trace = p.trace();
    let ok = (trace.re - rank as f64).abs() < 0.5 && trace.im.abs() < 0.5;
    Ok(RankTrace { rank, trace, ok })
}

/// Numerical rank of a sparse operator: exact for monomial operators, dense SVD for
/// small general ones.
fn sparse_rank(op: &HashMap<(u64, u64), C64>) -> Result<usize> {
    let live: Vec<_> = op.iter().filter(|(_, v)| v.norm() > 1e-12).collect();
    let mut rows = HashMap::default();
    let mut cols = HashMap::default();
    for ((i, j), _) in &live {
        *rows.entry(*i).or_insert(0usize) += 1;
        *cols.entry(*j).or_insert(0usize) += 1;
    }
    if rows.values().all(|&c| c == 1) && cols.values().all(|&c| c == 1) {
        return Ok(live.len());
    }
    let ri: HashMap<u64, usize> = rows.keys().enumerate().map(|(k, &r)| (r, k)).collect();
    let ci: HashMap<u64, usize> = cols.keys().enumerate().map(|(k, &c)| (c, k)).collect();
    if ri.len() * ci.len() > 1 << 24 {
        return Err(Error::Budget {
            needed: (ri.len() * ci.len()) as u128,
            limit: 1 << 24,
        });
    }
    let mut m = DMatrix::<C64>::zeros(ri.len(), ci.len());
    for ((i, j), v) in live {
        m[(ri[i], ci[j])] = *v;
    }
    Ok(crate::linalg::numerical_rank(&m, 1e-10))
}

// Crossing tensors. Axes: `gi`, `go` on the g string, `ti`, `to` on the transverse
// string, all of bond dimension |G|.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrossingKind {
    WR,
    WL,
    VR,
    VL,
}

#[derive(Debug, Clone)]
pub struct CrossingTensor {
    pub kind: CrossingKind,
    pub g: usize,
    pub h: usize,
    pub tensor: Tensor,
}

const Q_AXES: [&str; 4] = ["gi", "go", "ti", "to"];

fn q_zeros(n: usize) -> Tensor {
    Tensor::zeros(Q_AXES.iter().map(|&a| (a, n)).collect()).unwrap()
}

fn require_commuting(grp: &FiniteGroup, g: usize, h: usize) -> Result<()> {
    grp.check_element(g)?;
    grp.check_element(h)?;
    if !grp.commute(g, h) {
        return Err(Error::Validation(format!("elements {g} and {h} do not commute")));
    }
    Ok(())
}

impl MpoFamily {
    /// Crossing tensor of the given kind. `W_R = X(g,h)X⁺(h,g)` and `W_L = X(h,g)X⁺(g,h)`
    /// are contracted from the reduction tensors; `V_R`, `V_L` additionally carry the
    /// orientation phases `ζ_h`.
    pub fn crossing(&self, kind: CrossingKind, g: usize, h: usize) -> Result<CrossingTensor> {
        let grp = self.group();
        require_commuting(grp, g, h)?;
        let n = self.n();
        let a = &self.peps;
        let tensor = match kind {
            CrossingKind::WR => {
                let xg = self.x(g, h).tensor.rename("t", "go")?.rename("b", "to")?;
                let xh = self.x(h, g).tensor.conj().rename("t", "ti")?.rename("b", "gi")?;
                Tensor::contract(&xg, &xh, &[("f", "f")])?.permute(&Q_AXES)?
            }
            CrossingKind::WL => {
                let xg = self.x(g, h).tensor.conj().rename("t", "gi")?.rename("b", "ti")?;
                let xh = self.x(h, g).tensor.rename("t", "to")?.rename("b", "go")?;
                Tensor::contract(&xg, &xh, &[("f", "f")])?.permute(&Q_AXES)?
            }
            CrossingKind::VR => {
                let mut q = q_zeros(n);
                let hi = grp.inv(h);
                for x in 0..n {
                    let ag = grp.mul(x, g);
                    let v = a.get(x, h, g).conj() * a.get(x, grp.mul(g, h), hi).conj() * self.zeta(h, ag);
                    q.set(&[grp.mul(x, h), x, x, ag], v);
                }
                q
            }
            CrossingKind::VL => {
                let mut q = q_zeros(n);
                let hi = grp.inv(h);
                for x in 0..n {
                    let ag = grp.mul(x, g);
                    let v = a.get(x, grp.mul(g, h), hi) * a.get(x, h, g) / self.zeta(h, ag);
                    q.set(&[x, grp.mul(x, h), ag, x], v);
                }
                q
            }
        };
        Ok(CrossingTensor { kind, g, h, tensor })
    }

    /// Reads a left-geometry crossing with transverse element `h` as a right-geometry
    /// crossing with transverse element `h⁻¹`.
    pub fn reverse_transverse(&self, q: &Tensor, h: usize) -> Result<Tensor> {
        let grp = self.group();
        let n = self.n();
        let src = q.permute(&Q_AXES)?;
        let mut out = q_zeros(n);
        for gi in 0..n {
            for go in 0..n {
                for ti in 0..n {
                    for to in 0..n {
                        let v = src.get(&[gi, go, ti, to]);
                        if v.norm() == 0.0 {
                            continue;
                        }
                        let w = v * self.zeta(h, ti) / self.zeta(h, to);
                        out.set(&[gi, go, grp.mul(to, h), grp.mul(ti, h)], w);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `Q1 × Q2` along the g string (`Q2` first), with the transverse strings `t1`, `t2`
    /// fused by `X(t1,t2)` on the inputs and `X⁺(t1,t2)` on the outputs.
    pub fn compose(&self, q1: &Tensor, t1: usize, q2: &Tensor, t2: usize) -> Result<Tensor> {
        let x = self.x(t1, t2).tensor;
        let a = q1.clone().relabel(|l| format!("1{l}"))?;
        let b = q2.clone().relabel(|l| format!("2{l}"))?;
        let ab = Tensor::contract(&a, &b, &[("1gi", "2go")])?;
        let xin = x.clone().rename("f", "ti")?.rename("t", "x1")?.rename("b", "x2")?;
        let abx = Tensor::contract(&ab, &xin, &[("1ti", "x1"), ("2ti", "x2")])?;
        let xout = x.conj().rename("f", "to")?.rename("t", "y1")?.rename("b", "y2")?;
        let r = Tensor::contract(&abx, &xout, &[("1to", "y1"), ("2to", "y2")])?;
        r.rename("2gi", "gi")?.rename("1go", "go")?.permute(&Q_AXES)
    }

    fn ratio(&self, a: &Tensor, b: &Tensor, what: &str) -> Result<C64> {
        let (c, resid) = a.proportionality(b)?;
        if resid > PHASE_TOL {
            return Err(Error::NotProportional(format!("{what}: residual {resid:.3e}")));
        }
        Ok(c)
    }
}

pub fn crossing_tensor(alpha: &Cocycle3, kind: CrossingKind, g: usize, h: usize) -> Result<CrossingTensor> {
    MpoFamily::from_associator(alpha)?.crossing(kind, g, h)
}

#[derive(Debug, Clone)]
pub struct SquareEdge {
    pub name: &'static str,
    pub measured: C64,
    pub expected: C64,
}

#[derive(Debug, Clone)]
pub struct CrossingSquare {
    pub edges: Vec<SquareEdge>,
    pub max_deviation: f64,
}

/// Phases along the square `W_L → W_R(h⁻¹) → V_R(h⁻¹) → V_L → W_L`, measured by
/// contraction and compared with their cocycle expressions.
pub fn verify_crossing_square(fam: &MpoFamily, g: usize, h: usize) -> Result<CrossingSquare> {
    let grp = fam.group();
    require_commuting(grp, g, h)?;
    let a = fam.associator();
    let hi = grp.inv(h);
    let wr_hi = fam.crossing(CrossingKind::WR, g, hi)?.tensor;
    let vr_hi = fam.crossing(CrossingKind::VR, g, hi)?.tensor;
    let wl = fam.crossing(CrossingKind::WL, g, h)?.tensor;
    let vl = fam.crossing(CrossingKind::VL, g, h)?.tensor;
    let rev_wl = fam.reverse_transverse(&wl, h)?;
    let rev_vl = fam.reverse_transverse(&vl, h)?;
    let edges = vec![
        SquareEdge {
            name: "W_R(g,h^-1) / rev W_L(g,h)",
            measured: fam.ratio(&wr_hi, &rev_wl, "W_R vs reversed W_L")?,
            expected: slant1_at(a, g, h, hi),
        },
        SquareEdge {
            name: "W_R(g,h^-1) / V_R(g,h^-1)",
            measured: fam.ratio(&wr_hi, &vr_hi, "W_R vs V_R")?,
            expected: a.get(g, hi, h),
        },
        SquareEdge {
            name: "V_R(g,h^-1) / rev V_L(g,h)",
            measured: fam.ratio(&vr_hi, &rev_vl, "V_R vs reversed V_L")?,
            expected: omega_at(a, g, h, hi),
        },
        SquareEdge {
            name: "V_L(g,h) / W_L(g,h)",
            measured: fam.ratio(&vl, &wl, "V_L vs W_L")?,
            expected: a.get(g, h, hi),
        },
    ];
    let max_deviation = edges
        .iter()
        .map(|e| (e.measured - e.expected).norm())
        .fold(0.0, f64::max);
    Ok(CrossingSquare { edges, max_deviation })
}

/// Phase `c` with `V_R(g,k) × V_R(g,h) = c · V_R(g,kh)`.
pub fn compose_crossings(fam: &MpoFamily, g: usize, k: usize, h: usize) -> Result<C64> {
    let grp = fam.group();
    require_commuting(grp, g, k)?;
    require_commuting(grp, g, h)?;
    let vk = fam.crossing(CrossingKind::VR, g, k)?.tensor;
    let vh = fam.crossing(CrossingKind::VR, g, h)?.tensor;
    let prod = fam.compose(&vk, k, &vh, h)?;
    let target = fam.crossing(CrossingKind::VR, g, grp.mul(k, h))?.tensor;
    fam.ratio(&prod, &target, "V_R composition")
}

/// Phase picked up by `W_R(g,h)` under conjugation by `V_R(g,k)`:
/// `V_R(g,k) × W_R(g,h) × rev V_L(g,k) = c · W_R(g,h)`.
pub fn symmetry_action_on_crossing(fam: &MpoFamily, g: usize, h: usize, k: usize) -> Result<C64> {
    let grp = fam.group();
    require_commuting(grp, g, h)?;
    require_commuting(grp, g, k)?;
    require_commuting(grp, h, k)?;
    let vk = fam.crossing(CrossingKind::VR, g, k)?.tensor;
    let w = fam.crossing(CrossingKind::WR, g, h)?.tensor;
    let vl = fam.crossing(CrossingKind::VL, g, k)?.tensor;
    let back = fam.reverse_transverse(&vl, k)?;
    let first = fam.compose(&vk, k, &w, h)?;
    let all = fam.compose(&first, grp.mul(k, h), &back, grp.inv(k))?;
    fam.ratio(&all, &w, "symmetry action on W_R")
}

/// Expected value of [`symmetry_action_on_crossing`]: `ω^g(k,h)/ω^g(h,k)`.
pub fn symmetry_action_formula(fam: &MpoFamily, g: usize, h: usize, k: usize) -> Result<C64> {
    let th = slant2(fam.associator(), g, h)?;
    th.at(k)
        .ok_or_else(|| Error::Validation(format!("{k} is not in the centralizer of ({g},{h})")))
}

pub use crate::analysis::Modular;

/// Image pair and phase of S or T on the crossing `W_R(g,h)`, cross-checked against a
/// direct manipulation of the crossing tensors.
#[derive(Debug, Clone)]
pub struct ModularCrossing {
    pub image: (usize, usize),
    pub phase: C64,
    /// Phase measured on the tensors.
    pub measured: C64,
}

pub fn modular_on_crossing(fam: &MpoFamily, which: Modular, g: usize, h: usize) -> Result<ModularCrossing> {
    let grp = fam.group();
    require_commuting(grp, g, h)?;
    let (image, phase) = crate::analysis::modular_image(fam.associator(), which, g, h);
    let w = fam.crossing(CrossingKind::WR, g, h)?.tensor;
    let measured = match which {
        Modular::S => {
            // Rotate: the transverse string becomes the main one and the old main
            // string, now traversed backwards, becomes transverse with g⁻¹.
            let n = fam.n();
            let src = w.permute(&Q_AXES)?;
            let mut rot = q_zeros(n);
            for gi in 0..n {
                for go in 0..n {
                    for hi in 0..n {
                        for ho in 0..n {
                            let v = src.get(&[gi, go, hi, ho]);
                            if v.norm() == 0.0 {
                                continue;
                            }
                            let val = v * fam.zeta(g, gi) / fam.zeta(g, go);
                            rot.set(&[hi, ho, grp.mul(go, g), grp.mul(gi, g)], val);
                        }
                    }
                }
            }
            let target = fam.crossing(CrossingKind::WR, image.0, image.1)?.tensor;
            fam.ratio(&target, &rot, "S-rotated crossing")?
        }
        Modular::T => {
            let wgg = fam.crossing(CrossingKind::WR, g, g)?.tensor;
            let prod = fam.compose(&wgg, g, &w, h)?;
            let target = fam.crossing(CrossingKind::WR, image.0, image.1)?.tensor;
            fam.ratio(&prod, &target, "Dehn-twisted crossing")?
        }
    };
    Ok(ModularCrossing {
        image,
        phase,
        measured,
    })
}
