//! Finite groups given by multiplication tables.
//!
//! Elements are indices `0..n` and `0` is always the identity.

use crate::error::{Error, Result};
use std::collections::BTreeSet;

/// Descriptor accepted by [`make_group`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupSpec {
    Cyclic(usize),
    Product(Box<GroupSpec>, Box<GroupSpec>),
    Symmetric3,
    Dihedral4,
    Table(Vec<Vec<usize>>),
}

impl GroupSpec {
    /// Parses the short names used on the command line: `z2`, `z3`, `z2xz2`, `s3`, `d4`.
    pub fn parse_builtin(name: &str) -> Result<GroupSpec> {
        let lower = name.trim().to_ascii_lowercase();
        let factors: Vec<&str> = lower.split('x').collect();
        if factors.len() > 1 {
            let mut it = factors.iter().map(|f| GroupSpec::parse_builtin(f));
            let mut acc = it.next().unwrap()?;
            for f in it {
                acc = GroupSpec::Product(Box::new(acc), Box::new(f?));
            }
            return Ok(acc);
        }
        match lower.as_str() {
            "s3" => Ok(GroupSpec::Symmetric3),
            "d4" => Ok(GroupSpec::Dihedral4),
            s if s.starts_with('z') => s[1..]
                .parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .map(GroupSpec::Cyclic)
                .ok_or_else(|| Error::Validation(format!("bad cyclic group name `{name}`"))),
            _ => Err(Error::Validation(format!("unknown builtin group `{name}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    name: String,
    n: usize,
    mult: Vec<usize>,
    inv: Vec<usize>,
    classes: Vec<Vec<usize>>,
    /// Cyclic factor orders when the group is a product of cyclic groups, row-major digits.
    cyclic_factors: Option<Vec<usize>>,
}

pub fn make_group(spec: &GroupSpec) -> Result<FiniteGroup> {
    let (name, table, factors) = build_table(spec)?;
    FiniteGroup::from_table_with(name, table, factors)
}

fn build_table(spec: &GroupSpec) -> Result<(String, Vec<Vec<usize>>, Option<Vec<usize>>)> {
    Ok(match spec {
        GroupSpec::Cyclic(n) => {
            if *n == 0 {
                return Err(Error::Validation("cyclic group of order 0".into()));
            }
            let t = (0..*n).map(|a| (0..*n).map(|b| (a + b) % n).collect()).collect();
            (format!("Z{n}"), t, Some(vec![*n]))
        }
        GroupSpec::Product(a, b) => {
            let (na, ta, fa) = build_table(a)?;
            let (nb, tb, fb) = build_table(b)?;
            let (sa, sb) = (ta.len(), tb.len());
            let n = sa * sb;
            let mut t = vec![vec![0; n]; n];
            for x in 0..n {
                for y in 0..n {
                    let (x1, x2) = (x / sb, x % sb);
                    let (y1, y2) = (y / sb, y % sb);
                    t[x][y] = ta[x1][y1] * sb + tb[x2][y2];
                }
            }
            let factors = match (fa, fb) {
                (Some(mut a), Some(b)) => {
                    a.extend(b);
                    Some(a)
                }
                _ => None,
            };
            (format!("{na}x{nb}"), t, factors)
        }
        GroupSpec::Symmetric3 => (
            "S3".into(),
            permutation_table(&all_perms3()),
            None,
        ),
        GroupSpec::Dihedral4 => ("D4".into(), dihedral_table(4), None),
        GroupSpec::Table(t) => ("table".into(), t.clone(), None),
    })
}

fn all_perms3() -> Vec<[usize; 3]> {
    // identity first, then lexicographic
    vec![
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ]
}

fn permutation_table(perms: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let idx = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
    perms
        .iter()
        .map(|p| {
            perms
                .iter()
                .map(|q| idx([p[q[0]], p[q[1]], p[q[2]]]))
                .collect()
        })
        .collect()
}

/// Dihedral group of order 2m with elements r^k s^f stored at index f*m + k.
fn dihedral_table(m: usize) -> Vec<Vec<usize>> {
    let n = 2 * m;
    let mut t = vec![vec![0; n]; n];
    for a in 0..n {
        for b in 0..n {
            let (fa, ka) = (a / m, a % m);
            let (fb, kb) = (b / m, b % m);
            // r^ka s^fa r^kb s^fb = r^(ka ± kb) s^(fa+fb)
            let k = if fa == 0 { (ka + kb) % m } else { (ka + m - kb) % m };
            t[a][b] = ((fa + fb) % 2) * m + k;
        }
    }
    t
}

impl FiniteGroup {
    pub fn from_table(name: impl Into<String>, table: Vec<Vec<usize>>) -> Result<Self> {
        Self::from_table_with(name.into(), table, None)
    }

    fn from_table_with(
        name: String,
        table: Vec<Vec<usize>>,
        cyclic_factors: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::Validation("empty multiplication table".into()));
        }
        if table.iter().any(|row| row.len() != n) {
            return Err(Error::Validation("multiplication table is not square".into()));
        }
        if let Some(v) = table.iter().flatten().find(|&&v| v >= n) {
            return Err(Error::Validation(format!("table entry {v} out of range")));
        }
        for g in 0..n {
            if table[0][g] != g || table[g][0] != g {
                return Err(Error::Validation(format!(
                    "element 0 is not an identity (fails at {g})"
                )));
            }
        }
        let mult: Vec<usize> = table.into_iter().flatten().collect();
        let mut inv = vec![usize::MAX; n];
        for g in 0..n {
            match (0..n).find(|&h| mult[g * n + h] == 0 && mult[h * n + g] == 0) {
                Some(h) => inv[g] = h,
                None => {
                    return Err(Error::Validation(format!("no inverse for element {g}")))
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let l = mult[mult[a * n + b] * n + c];
                    let r = mult[a * n + mult[b * n + c]];
                    if l != r {
                        return Err(Error::Validation(format!(
                            "table is not associative at ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
        let mut g = FiniteGroup {
            name,
            n,
            mult,
            inv,
            classes: Vec::new(),
            cyclic_factors,
        };
        g.classes = g.compute_classes();
        Ok(g)
    }

    fn compute_classes(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for x in 0..self.n {
            if seen[x] {
                continue;
            }
            let orbit: BTreeSet<usize> = (0..self.n).map(|h| self.conj(h, x)).collect();
            for &y in &orbit {
                seen[y] = true;
            }
            out.push(orbit.into_iter().collect());
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.n
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mult[a * self.n + b]
    }

    /// Product of a sequence, left to right.
    pub fn mul_all(&self, xs: &[usize]) -> usize {
        xs.iter().fold(0, |acc, &x| self.mul(acc, x))
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    /// `a b^{-1}`.
    #[inline]
    pub fn div(&self, a: usize, b: usize) -> usize {
        self.mul(a, self.inv[b])
    }

    /// `h x h^{-1}`.
    #[inline]
    pub fn conj(&self, h: usize, x: usize) -> usize {
        self.mul(self.mul(h, x), self.inv[h])
    }

    #[inline]
    pub fn commute(&self, a: usize, b: usize) -> bool {
        self.mul(a, b) == self.mul(b, a)
    }

    pub fn table(&self) -> Vec<Vec<usize>> {
        self.mult.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn conjugacy_classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.n).all(|a| (0..self.n).all(|b| self.commute(a, b)))
    }

    pub fn center(&self) -> Vec<usize> {
        self.centralizer(&(0..self.n).collect::<Vec<_>>())
            .unwrap_or_default()
    }

    pub fn is_central(&self, m: usize) -> bool {
        m < self.n && (0..self.n).all(|g| self.commute(g, m))
    }

    pub fn cyclic_factors(&self) -> Option<&[usize]> {
        self.cyclic_factors.as_deref()
    }

    pub fn check_element(&self, g: usize) -> Result<()> {
        if g < self.n {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "element {g} out of range for group of order {}",
                self.n
            )))
        }
    }

    pub fn centralizer(&self, s: &[usize]) -> Result<Vec<usize>> {
        if s.is_empty() {
            return Err(Error::Validation("centralizer of an empty set".into()));
        }
        for &x in s {
            self.check_element(x)?;
        }
        Ok((0..self.n)
            .filter(|&g| s.iter().all(|&x| self.commute(g, x)))
            .collect())
    }

    pub fn commuting_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for x in 0..self.n {
            for y in 0..self.n {
                if self.commute(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Lexicographically minimal element of the simultaneous conjugation orbit of `(x, y)`.
    pub fn pair_class_rep(&self, x: usize, y: usize) -> (usize, usize) {
        (0..self.n)
            .map(|h| (self.conj(h, x), self.conj(h, y)))
            .min()
            .unwrap()
    }

    /// One lexicographically minimal representative per class of commuting pairs.
    pub fn commuting_pair_classes(&self) -> Vec<(usize, usize)> {
        let reps: BTreeSet<(usize, usize)> = self
            .commuting_pairs()
            .into_iter()
            .map(|(x, y)| self.pair_class_rep(x, y))
            .collect();
        reps.into_iter().collect()
    }

    /// Burnside count of commuting-pair classes.
    pub fn commuting_pair_class_count_burnside(&self) -> usize {
        let pairs = self.commuting_pairs();
        let fixed: usize = (0..self.n)
            .map(|g| {
                pairs
                    .iter()
                    .filter(|&&(x, y)| self.conj(g, x) == x && self.conj(g, y) == y)
                    .count()
            })
            .sum();
        fixed / self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_have_expected_class_counts() {
        let z2 = make_group(&GroupSpec::Cyclic(2)).unwrap();
        assert_eq!(z2.conjugacy_classes().len(), 2);
        let s3 = make_group(&GroupSpec::Symmetric3).unwrap();
        assert_eq!(s3.order(), 6);
        assert_eq!(s3.conjugacy_classes().len(), 3);
        let d4 = make_group(&GroupSpec::Dihedral4).unwrap();
        assert_eq!(d4.order(), 8);
        assert_eq!(d4.conjugacy_classes().len(), 5);
        assert_eq!(d4.center().len(), 2);
    }

    #[test]
    fn invalid_table_is_rejected() {
        let err = make_group(&GroupSpec::Table(vec![vec![0, 1], vec![1, 1]])).unwrap_err();
        assert!(err.to_string().contains("no inverse for element 1"), "{err}");
    }

    #[test]
    fn pair_classes() {
        let z2 = make_group(&GroupSpec::Cyclic(2)).unwrap();
        assert_eq!(
            z2.commuting_pair_classes(),
            vec![(0, 0), (0, 1), (1, 0), (1, 1)]
        );
        let s3 = make_group(&GroupSpec::Symmetric3).unwrap();
        assert_eq!(s3.commuting_pair_classes().len(), 8);
        assert_eq!(s3.commuting_pair_class_count_burnside(), 8);
    }

    #[test]
    fn centralizer_of_transposition() {
        let s3 = make_group(&GroupSpec::Symmetric3).unwrap();
        assert_eq!(s3.centralizer(&[1]).unwrap(), vec![0, 1]);
        assert_eq!(s3.centralizer(&[0]).unwrap().len(), 6);
    }

    #[test]
    fn builtin_names_parse() {
        let g = make_group(&GroupSpec::parse_builtin("z2xz2").unwrap()).unwrap();
        assert_eq!(g.order(), 4);
        assert_eq!(g.cyclic_factors(), Some(&[2, 2][..]));
        assert!(GroupSpec::parse_builtin("q8").is_err());
    }
}
