//! Degeneracy counting and modular matrices.
//!
//! S and T act on the span of all commuting pairs `|g,h⟩` (column = input):
//! `S|g,h⟩ = α^{(h)}(g⁻¹,g)⁻¹ |h,g⁻¹⟩` and `T|g,h⟩ = α(g,h,g) |g,gh⟩`.

use crate::cocycle::{slant1_at, slant2, Cocycle3};
use crate::error::Result;
use crate::{c64, C64};
use nalgebra::DMatrix;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Image of a commuting pair under S or T.
pub fn modular_image(alpha: &Cocycle3, which: Modular, g: usize, h: usize) -> ((usize, usize), C64) {
    let grp = alpha.group();
    match which {
        Modular::S => {
            let gi = grp.inv(g);
            ((h, gi), slant1_at(alpha, h, gi, g).inv())
        }
        Modular::T => ((g, grp.mul(g, h)), alpha.get(g, h, g)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modular {
    S,
    T,
}

#[derive(Debug, Clone)]
pub struct ModularData {
    /// Basis: all commuting pairs in lexicographic order.
    pub pairs: Vec<(usize, usize)>,
    pub s: DMatrix<C64>,
    pub t: DMatrix<C64>,
    /// `‖S⁴ − 1‖_F`.
    pub s4_residual: f64,
    /// `‖(ST)³ − S²‖_F`.
    pub st3_residual: f64,
    /// Per class representative: raw S and T images and the representatives they fall into.
    pub class_images: Vec<ClassImage>,
}

#[derive(Debug, Clone)]
pub struct ClassImage {
    pub rep: (usize, usize),
    pub s_image: (usize, usize),
    pub s_image_rep: (usize, usize),
    pub s_phase: C64,
    pub t_image: (usize, usize),
    pub t_image_rep: (usize, usize),
    pub t_phase: C64,
}

pub fn modular_matrices(alpha: &Cocycle3) -> ModularData {
    let grp = alpha.group();
    let pairs = grp.commuting_pairs();
    let idx: HashMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let n = pairs.len();
    let mut s = DMatrix::zeros(n, n);
    let mut t = DMatrix::zeros(n, n);
    for (j, &(g, h)) in pairs.iter().enumerate() {
        let (img, ph) = modular_image(alpha, Modular::S, g, h);
        s[(idx[&img], j)] = ph;
        let (img, ph) = modular_image(alpha, Modular::T, g, h);
        t[(idx[&img], j)] = ph;
    }
    let id = DMatrix::<C64>::identity(n, n);
    let s2 = &s * &s;
    let s4_residual = (&s2 * &s2 - &id).norm();
    let st = &s * &t;
    let st3_residual = (&st * &st * &st - &s2).norm();
    let class_images = grp
        .commuting_pair_classes()
        .into_iter()
        .map(|rep| {
            let (si, sp) = modular_image(alpha, Modular::S, rep.0, rep.1);
            let (ti, tp) = modular_image(alpha, Modular::T, rep.0, rep.1);
            ClassImage {
                rep,
                s_image: si,
                s_image_rep: grp.pair_class_rep(si.0, si.1),
                s_phase: sp,
                t_image: ti,
                t_image_rep: grp.pair_class_rep(ti.0, ti.1),
                t_phase: tp,
            }
        })
        .collect();
    ModularData {
        pairs,
        s,
        t,
        s4_residual,
        st3_residual,
        class_images,
    }
}

/// Eigenvalues of T on all commuting pairs, from its cycle decomposition.
///
/// T permutes pairs `(g,h) → (g,gh)`; a cycle of length `m` with phase product
/// `p` contributes the `m` roots of `λ^m = p`.
pub fn t_eigenvalues(alpha: &Cocycle3) -> Vec<C64> {
    let grp = alpha.group();
    let pairs = grp.commuting_pairs();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(pairs.len());
    for &start in &pairs {
        if seen.contains(&start) {
            continue;
        }
        let mut cur = start;
        let mut prod = c64(1.0, 0.0);
        let mut m = 0usize;
        loop {
            seen.insert(cur);
            let (next, ph) = modular_image(alpha, Modular::T, cur.0, cur.1);
            prod *= ph;
            m += 1;
            cur = next;
            if cur == start {
                break;
            }
        }
        let base = prod.arg() / m as f64;
        for j in 0..m {
            out.push(C64::from_polar(1.0, base + 2.0 * PI * j as f64 / m as f64));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct GsdReport {
    pub count: usize,
    /// Per commuting-pair class: representative and whether the twice slant product is trivial.
    pub classes: Vec<((usize, usize), bool)>,
}

/// Number of commuting-pair classes whose twice slant product is trivial.
pub fn gsd_count(alpha: &Cocycle3) -> Result<GsdReport> {
    let grp = alpha.group();
    let mut classes = Vec::new();
    for (x, y) in grp.commuting_pair_classes() {
        let th = slant2(alpha, x, y)?;
        classes.push(((x, y), th.is_trivial(1e-10)));
    }
    Ok(GsdReport {
        count: classes.iter().filter(|c| c.1).count(),
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{standard_cocycle, CocycleParams};
    use crate::group::{make_group, GroupSpec};
    use std::sync::Arc;

    #[test]
    fn z2_t_spectrum_from_cycles_matches_dense() {
        let g = Arc::new(make_group(&GroupSpec::Cyclic(2)).unwrap());
        let a = standard_cocycle(g, &CocycleParams::level(1)).unwrap();
        let md = modular_matrices(&a);
        let ev = md.t.clone().schur().eigenvalues().unwrap();
        let mut fast = t_eigenvalues(&a);
        let mut dense: Vec<C64> = ev.iter().copied().collect();
        let key = |z: &C64| (z.arg() * 1e6).round() as i64;
        fast.sort_by_key(key);
        dense.sort_by_key(key);
        for (x, y) in fast.iter().zip(&dense) {
            assert!((x - y).norm() < 1e-10);
        }
        assert!(md.s4_residual < 1e-10 && md.st3_residual < 1e-10);
    }
}
