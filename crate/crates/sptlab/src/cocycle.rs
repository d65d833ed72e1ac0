//! 3-cocycles and the phase functions derived from them.

use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::{c64, C64};
use rand::Rng;
use std::f64::consts::PI;
use std::sync::Arc;

pub const COCYCLE_TOL: f64 = 1e-10;
const UNIT_TOL: f64 = 1e-12;

/// Unit-modulus table α(a,b,c) over a finite group.
#[derive(Debug, Clone)]
pub struct Cocycle3 {
    group: Arc<FiniteGroup>,
    table: Vec<C64>,
    label: String,
}

/// Level data for [`standard_cocycle`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CocycleParams {
    /// One level per cyclic factor.
    pub type_i: Vec<u32>,
    /// Levels for factor pairs `(i, j)`, `i < j`.
    pub type_ii: Vec<((usize, usize), u32)>,
    /// Levels for factor triples `(i, j, k)`.
    pub type_iii: Vec<((usize, usize, usize), u32)>,
}

impl CocycleParams {
    pub fn level(p: u32) -> Self {
        CocycleParams {
            type_i: vec![p],
            ..Default::default()
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.type_i.iter().all(|&p| p == 0)
            && self.type_ii.iter().all(|&(_, p)| p == 0)
            && self.type_iii.iter().all(|&(_, p)| p == 0)
    }
}

/// Verdict of [`verify_cocycle`].
#[derive(Debug, Clone)]
pub struct CocycleVerdict {
    pub ok: bool,
    pub max_residual: f64,
    pub violations: Vec<[usize; 4]>,
}

#[derive(Debug, Clone)]
pub struct Cocycle2 {
    group: Arc<FiniteGroup>,
    table: Vec<C64>,
}

/// A one-dimensional representation of a subgroup.
#[derive(Debug, Clone)]
pub struct Rep1D {
    pub domain: Vec<usize>,
    pub values: Vec<C64>,
}

fn phase(turns: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * turns)
}

impl Cocycle3 {
    pub fn from_table(group: Arc<FiniteGroup>, table: Vec<C64>) -> Result<Self> {
        let n = group.order();
        if table.len() != n * n * n {
            return Err(Error::Validation(format!(
                "cocycle table has {} entries, expected {}",
                table.len(),
                n * n * n
            )));
        }
        if let Some(i) = table.iter().position(|z| (z.norm() - 1.0).abs() > UNIT_TOL) {
            let (a, b, c) = (i / (n * n), (i / n) % n, i % n);
            return Err(Error::Validation(format!(
                "entry ({a},{b},{c}) has modulus {}",
                table[i].norm()
            )));
        }
        Ok(Cocycle3 {
            group,
            table,
            label: "table".into(),
        })
    }

    pub fn from_fn(group: Arc<FiniteGroup>, f: impl Fn(usize, usize, usize) -> C64) -> Result<Self> {
        let n = group.order();
        let mut t = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    t.push(f(a, b, c));
                }
            }
        }
        Self::from_table(group, t)
    }

    pub fn trivial(group: Arc<FiniteGroup>) -> Self {
        let n = group.order();
        Cocycle3 {
            group,
            table: vec![c64(1.0, 0.0); n * n * n],
            label: "trivial".into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn group_arc(&self) -> Arc<FiniteGroup> {
        self.group.clone()
    }

    pub fn table(&self) -> &[C64] {
        &self.table
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> C64 {
        let n = self.group.order();
        self.table[(a * n + b) * n + c]
    }

    /// `α^σ(a,b,c)` for `σ = ±1`.
    #[inline]
    pub fn pow(&self, a: usize, b: usize, c: usize, sigma: i32) -> C64 {
        let v = self.get(a, b, c);
        if sigma >= 0 {
            v
        } else {
            v.conj()
        }
    }

    pub fn is_normalized(&self) -> bool {
        let n = self.group.order();
        (0..n).all(|x| {
            (0..n).all(|y| {
                self.get(0, x, y) == c64(1.0, 0.0)
                    && self.get(x, 0, y) == c64(1.0, 0.0)
                    && self.get(x, y, 0) == c64(1.0, 0.0)
            })
        })
    }

    pub fn inverse(&self) -> Self {
        Cocycle3 {
            group: self.group.clone(),
            table: self.table.iter().map(|z| z.conj()).collect(),
            label: format!("{}^-1", self.label),
        }
    }

    /// Pointwise product with `dβ`, `dβ(a,b,c) = β(b,c)β(a,bc)/(β(ab,c)β(a,b))`.
    pub fn times_coboundary(&self, beta: &[C64]) -> Self {
        let g = &self.group;
        let n = g.order();
        assert_eq!(beta.len(), n * n);
        let b = |x: usize, y: usize| beta[x * n + y];
        let mut table = self.table.clone();
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let d = b(y, z) * b(x, g.mul(y, z)) / (b(g.mul(x, y), z) * b(x, y));
                    table[(x * n + y) * n + z] *= d;
                }
            }
        }
        Cocycle3 {
            group: self.group.clone(),
            table,
            label: format!("{}*d(beta)", self.label),
        }
    }

    /// Multiplies by a random normalized coboundary with values in `k`-th roots of unity.
    pub fn random_coboundary_twist<R: Rng>(&self, rng: &mut R, k: u32) -> Self {
        let n = self.group.order();
        let mut beta = vec![c64(1.0, 0.0); n * n];
        for x in 1..n {
            for y in 1..n {
                beta[x * n + y] = phase(rng.random_range(0..k) as f64 / k as f64);
            }
        }
        self.times_coboundary(&beta)
    }

    /// Divides out the coboundary that sets every identity slot to 1.
    pub fn normalize(&self) -> Self {
        let n = self.group.order();
        let mut beta = vec![c64(1.0, 0.0); n * n];
        for c in 1..n {
            beta[c] = self.get(0, 0, c).conj();
        }
        for a in 1..n {
            beta[a * n] = self.get(a, 0, 0);
        }
        let mut out = self.times_coboundary(&beta);
        // exact ones on identity slots
        for x in 0..n {
            for y in 0..n {
                out.table[(x * n) * n + y] = c64(1.0, 0.0);
                out.table[(x * n + y) * n] = c64(1.0, 0.0);
                out.table[x * n + y] = c64(1.0, 0.0);
            }
        }
        out.label = self.label.clone();
        out
    }

    fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::Validation(
                "cocycle is not normalized; call normalize() first".into(),
            ))
        }
    }

    /// Checks unit modulus, normalization and the cocycle condition.
    pub fn validate(&self) -> Result<()> {
        self.require_normalized()?;
        let v = verify_cocycle(self)?;
        if !v.ok {
            return Err(Error::Validation(format!(
                "cocycle condition fails (max residual {:.3e})",
                v.max_residual
            )));
        }
        Ok(())
    }
}

pub fn verify_cocycle(alpha: &Cocycle3) -> Result<CocycleVerdict> {
    if let Some(z) = alpha.table.iter().find(|z| (z.norm() - 1.0).abs() > UNIT_TOL) {
        return Err(Error::Validation(format!("non-unit entry of modulus {}", z.norm())));
    }
    let g = alpha.group();
    let n = g.order();
    let mut max_residual: f64 = 0.0;
    let mut violations = Vec::new();
    for g0 in 0..n {
        for g1 in 0..n {
            let g01 = g.mul(g0, g1);
            for g2 in 0..n {
                let g12 = g.mul(g1, g2);
                for g3 in 0..n {
                    let num = alpha.get(g0, g1, g2) * alpha.get(g0, g12, g3) * alpha.get(g1, g2, g3);
                    let den = alpha.get(g01, g2, g3) * alpha.get(g0, g1, g.mul(g2, g3));
                    let r = (num / den - 1.0).norm();
                    max_residual = max_residual.max(r);
                    if r > COCYCLE_TOL {
                        violations.push([g0, g1, g2, g3]);
                    }
                }
            }
        }
    }
    Ok(CocycleVerdict {
        ok: violations.is_empty(),
        max_residual,
        violations,
    })
}

fn floor_sum(b: usize, c: usize, n: usize) -> f64 {
    (b + c - (b + c) % n) as f64
}

/// Representative generators of H³ for products of cyclic groups.
pub fn standard_cocycle(group: Arc<FiniteGroup>, params: &CocycleParams) -> Result<Cocycle3> {
    if params.is_trivial() && params.type_ii.is_empty() && params.type_iii.is_empty() {
        return Ok(Cocycle3::trivial(group).with_label("trivial"));
    }
    let factors = group
        .cyclic_factors()
        .ok_or_else(|| {
            Error::Validation(format!(
                "standard cocycles with nonzero levels are only available for products of cyclic groups, not {}",
                group.name()
            ))
        })?
        .to_vec();
    if params.type_i.len() > factors.len() {
        return Err(Error::Validation(format!(
            "{} type-I levels for {} cyclic factors",
            params.type_i.len(),
            factors.len()
        )));
    }
    for &((i, j), _) in &params.type_ii {
        if !(i < j && j < factors.len()) {
            return Err(Error::Validation(format!("bad type-II factor pair ({i},{j})")));
        }
    }
    for &((i, j, k), _) in &params.type_iii {
        if !(i < j && j < k && k < factors.len()) {
            return Err(Error::Validation(format!("bad type-III factor triple ({i},{j},{k})")));
        }
    }
    let digits = |mut x: usize| {
        let mut d = vec![0; factors.len()];
        for i in (0..factors.len()).rev() {
            d[i] = x % factors[i];
            x /= factors[i];
        }
        d
    };
    let f = |a: usize, b: usize, c: usize| {
        let (a, b, c) = (digits(a), digits(b), digits(c));
        let mut turns = 0.0;
        for (i, &p) in params.type_i.iter().enumerate() {
            let n = factors[i];
            turns += p as f64 * a[i] as f64 * floor_sum(b[i], c[i], n) / (n * n) as f64;
        }
        for &((i, j), p) in &params.type_ii {
            let (ni, nj) = (factors[i], factors[j]);
            turns += p as f64 * a[i] as f64 * floor_sum(b[j], c[j], nj) / (ni * nj) as f64;
        }
        for &((i, j, k), p) in &params.type_iii {
            let g = gcd(gcd(factors[i], factors[j]), factors[k]);
            turns += p as f64 * (a[i] * b[j] * c[k]) as f64 / g as f64;
        }
        phase(turns)
    };
    let label = describe_params(params);
    Ok(Cocycle3::from_fn(group, f)?.with_label(label))
}

fn describe_params(p: &CocycleParams) -> String {
    let mut parts = vec![format!(
        "I{:?}",
        p.type_i
    )];
    if !p.type_ii.is_empty() {
        parts.push(format!("II{:?}", p.type_ii));
    }
    if !p.type_iii.is_empty() {
        parts.push(format!("III{:?}", p.type_iii));
    }
    parts.join(" ")
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Cocycle2 {
    pub fn from_fn(group: Arc<FiniteGroup>, f: impl Fn(usize, usize) -> C64) -> Self {
        let n = group.order();
        let table = (0..n * n).map(|i| f(i / n, i % n)).collect();
        Cocycle2 { group, table }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.table[a * self.group.order() + b]
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    /// Largest violation of `ω(a,b)ω(ab,c) = ω(b,c)ω(a,bc)` over a subgroup.
    pub fn cocycle_residual(&self, domain: &[usize]) -> f64 {
        let g = &self.group;
        let mut worst: f64 = 0.0;
        for &a in domain {
            for &b in domain {
                for &c in domain {
                    let l = self.get(a, b) * self.get(g.mul(a, b), c);
                    let r = self.get(b, c) * self.get(a, g.mul(b, c));
                    worst = worst.max((l - r).norm());
                }
            }
        }
        worst
    }

    /// `self / other` pointwise.
    pub fn ratio(&self, other: &Cocycle2) -> Cocycle2 {
        Cocycle2 {
            group: self.group.clone(),
            table: self.table.iter().zip(&other.table).map(|(a, b)| a / b).collect(),
        }
    }
}

impl Rep1D {
    pub fn at(&self, k: usize) -> Option<C64> {
        self.domain.iter().position(|&d| d == k).map(|i| self.values[i])
    }

    pub fn is_trivial(&self, tol: f64) -> bool {
        self.values.iter().all(|v| (v - 1.0).norm() <= tol)
    }

    pub fn multiplicativity_residual(&self, g: &FiniteGroup) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, &a) in self.domain.iter().enumerate() {
            for (j, &b) in self.domain.iter().enumerate() {
                if let Some(ab) = self.at(g.mul(a, b)) {
                    worst = worst.max((self.values[i] * self.values[j] - ab).norm());
                } else {
                    return f64::INFINITY;
                }
            }
        }
        worst
    }
}

/// `α^{(g)}(k,h) = α(g,k,h)α(k,h,g)/α(k,g,h)`.
pub fn slant1(alpha: &Cocycle3, g: usize) -> Cocycle2 {
    Cocycle2::from_fn(alpha.group_arc(), |k, h| slant1_at(alpha, g, k, h))
}

#[inline]
pub fn slant1_at(alpha: &Cocycle3, g: usize, k: usize, h: usize) -> C64 {
    alpha.get(g, k, h) * alpha.get(k, h, g) / alpha.get(k, g, h)
}

/// The factor set `ω^g(k,h) = α^{(g)}(k,h) α(g,kh,(kh)^{-1}) / (α(g,k,k^{-1}) α(g,h,h^{-1}))`.
pub fn omega_g(alpha: &Cocycle3, g: usize) -> Cocycle2 {
    Cocycle2::from_fn(alpha.group_arc(), |k, h| omega_at(alpha, g, k, h))
}

#[inline]
pub fn omega_at(alpha: &Cocycle3, g: usize, k: usize, h: usize) -> C64 {
    let grp = alpha.group();
    let kh = grp.mul(k, h);
    slant1_at(alpha, g, k, h) * alpha.get(g, kh, grp.inv(kh))
        / (alpha.get(g, k, grp.inv(k)) * alpha.get(g, h, grp.inv(h)))
}

/// `θ(k) = ω^x(k,y)/ω^x(y,k)` on the centralizer of `{x, y}`.
pub fn slant2(alpha: &Cocycle3, x: usize, y: usize) -> Result<Rep1D> {
    let g = alpha.group();
    g.check_element(x)?;
    g.check_element(y)?;
    if !g.commute(x, y) {
        return Err(Error::Validation(format!("elements {x} and {y} do not commute")));
    }
    let domain = g.centralizer(&[x, y])?;
    let values = domain
        .iter()
        .map(|&k| omega_at(alpha, x, k, y) / omega_at(alpha, x, y, k))
        .collect();
    Ok(Rep1D { domain, values })
}

/// `β(g,h) = α(h,g,g^{-1})/α(hg,g^{-1},h^{-1})`.
pub fn pivotal_beta(alpha: &Cocycle3, g: usize, h: usize) -> C64 {
    let grp = alpha.group();
    let gi = grp.inv(g);
    alpha.get(h, g, gi) / alpha.get(grp.mul(h, g), gi, grp.inv(h))
}

/// Residual of `dβ(a,b,c) α(c^{-1},b^{-1},a^{-1}) / α(a,b,c) = 1`.
pub fn pivotal_beta_residual(alpha: &Cocycle3) -> f64 {
    let g = alpha.group();
    let n = g.order();
    let b = |x, y| pivotal_beta(alpha, x, y);
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let db = b(x, y) * b(g.mul(x, y), z) / (b(y, z) * b(x, g.mul(y, z)));
                let r = db * alpha.get(g.inv(z), g.inv(y), g.inv(x)) / alpha.get(x, y, z);
                worst = worst.max((r - 1.0).norm());
            }
        }
    }
    worst
}

/// `(γ(gh,h^{-1}), γ'(gh,h^{-1})) = (α^{-1}(g,h,h^{-1}), α(g^{-1},g,h))`.
pub fn one_line_pivotals(alpha: &Cocycle3, g: usize, h: usize) -> (C64, C64) {
    let grp = alpha.group();
    (
        alpha.get(g, h, grp.inv(h)).conj(),
        alpha.get(grp.inv(g), g, h),
    )
}

/// Phase angle in turns, rounded to a fixed grid so that fingerprints compare exactly.
pub fn quantize_phase(z: C64) -> i64 {
    const GRID: f64 = 1e7;
    let t = z.arg() / (2.0 * PI);
    let t = if t < 0.0 { t + 1.0 } else { t };
    let q = (t * GRID).round() as i64;
    q % GRID as i64
}

/// Coboundary-invariant summary of a cohomology class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClassFingerprint {
    /// Per pair class: (representative, quantized θ values over the centralizer).
    pub pair_characters: Vec<((usize, usize), Vec<i64>)>,
    /// Quantized, sorted eigenphases of the T matrix on all commuting pairs.
    pub t_spectrum: Vec<i64>,
}

pub fn class_fingerprint(alpha: &Cocycle3) -> Result<ClassFingerprint> {
    let g = alpha.group();
    let mut pair_characters = Vec::new();
    for (x, y) in g.commuting_pair_classes() {
        let th = slant2(alpha, x, y)?;
        pair_characters.push(((x, y), th.values.iter().map(|&v| quantize_phase(v)).collect()));
    }
    let mut t_spectrum: Vec<i64> = crate::analysis::t_eigenvalues(alpha)
        .into_iter()
        .map(quantize_phase)
        .collect();
    t_spectrum.sort_unstable();
    Ok(ClassFingerprint {
        pair_characters,
        t_spectrum,
    })
}

/// Exhaustive search for a normalized 2-cochain β with values in `k`-th roots of unity
/// such that `a = b · dβ`. Feasible only for very small groups.
pub fn search_coboundary(a: &Cocycle3, b: &Cocycle3, k: u32) -> Option<Vec<C64>> {
    let g = a.group();
    let n = g.order();
    let free: Vec<(usize, usize)> = (1..n).flat_map(|x| (1..n).map(move |y| (x, y))).collect();
    let total = (k as u128).checked_pow(free.len() as u32)?;
    if total > 50_000_000 {
        return None;
    }
    let target: Vec<C64> = a.table.iter().zip(&b.table).map(|(x, y)| x / y).collect();
    let mut digits = vec![0u32; free.len()];
    let mut beta = vec![c64(1.0, 0.0); n * n];
    for _ in 0..total {
        for (i, &(x, y)) in free.iter().enumerate() {
            beta[x * n + y] = phase(digits[i] as f64 / k as f64);
        }
        let trial = Cocycle3::trivial(a.group_arc()).times_coboundary(&beta);
        if trial
            .table
            .iter()
            .zip(&target)
            .all(|(u, v)| (u - v).norm() < 1e-9)
        {
            return Some(beta);
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_group, GroupSpec};

    fn z(n: usize) -> Arc<FiniteGroup> {
        Arc::new(make_group(&GroupSpec::Cyclic(n)).unwrap())
    }

    #[test]
    fn z2_sign_cocycle() {
        let a = standard_cocycle(z(2), &CocycleParams::level(1)).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for w in 0..2 {
                    let expect = if x * y * w == 1 { -1.0 } else { 1.0 };
                    assert!((a.get(x, y, w) - expect).norm() < 1e-15);
                }
            }
        }
        assert!(verify_cocycle(&a).unwrap().ok);
    }

    #[test]
    fn broken_cocycle_reports_violation() {
        let t = (0..8)
            .map(|i| if i == 7 { c64(0.0, 1.0) } else { c64(1.0, 0.0) })
            .collect();
        let a = Cocycle3::from_table(z(2), t).unwrap();
        let v = verify_cocycle(&a).unwrap();
        assert!(!v.ok);
        assert!(v.violations.contains(&[1, 1, 1, 1]));
    }

    #[test]
    fn non_unit_entry_rejected() {
        let mut t = vec![c64(1.0, 0.0); 8];
        t[3] = c64(2.0, 0.0);
        assert!(Cocycle3::from_table(z(2), t).is_err());
    }

    #[test]
    fn z2_derived_phases() {
        let a = standard_cocycle(z(2), &CocycleParams::level(1)).unwrap();
        assert!((slant1(&a, 1).get(1, 1) + 1.0).norm() < 1e-15);
        assert!((omega_g(&a, 1).get(1, 1) + 1.0).norm() < 1e-15);
        assert!((pivotal_beta(&a, 1, 1) + 1.0).norm() < 1e-15);
        let (gm, gp) = one_line_pivotals(&a, 1, 1);
        assert!((gm + 1.0).norm() < 1e-15 && (gp + 1.0).norm() < 1e-15);
        let (gm, gp) = one_line_pivotals(&a, 0, 1);
        assert!((gm - 1.0).norm() < 1e-15 && (gp - 1.0).norm() < 1e-15);
        assert!(slant2(&a, 1, 1).unwrap().is_trivial(1e-12));
    }

    #[test]
    fn normalize_undoes_unnormalized_coboundary() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let a = standard_cocycle(z(3), &CocycleParams::level(1)).unwrap();
        let beta: Vec<C64> = (0..9).map(|_| phase(rng.random::<f64>())).collect();
        let b = a.times_coboundary(&beta);
        assert!(!b.is_normalized());
        let c = b.normalize();
        assert!(c.is_normalized());
        assert!(verify_cocycle(&c).unwrap().ok);
        assert_eq!(class_fingerprint(&a).unwrap(), class_fingerprint(&c).unwrap());
    }

    #[test]
    fn non_cyclic_levels_rejected() {
        let s3 = Arc::new(make_group(&GroupSpec::Symmetric3).unwrap());
        assert!(standard_cocycle(s3.clone(), &CocycleParams::level(1)).is_err());
        assert!(standard_cocycle(s3, &CocycleParams::level(0)).is_ok());
    }
}
