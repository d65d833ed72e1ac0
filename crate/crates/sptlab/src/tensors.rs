//! Dense labeled tensors over `Complex<T>`.
//!
//! Storage is row-major in the order of the axis list. Contraction is done by
//! permuting both operands into matrix form and multiplying.

use crate::error::{Error, Result};
use crate::Scalar;
use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::{One, Zero};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTensor<T: Scalar> {
    axes: Vec<(String, usize)>,
    data: Vec<Complex<T>>,
}

/// Result of [`allclose_upto_phase`].
#[derive(Debug, Clone, Copy)]
pub struct PhaseVerdict<T: Scalar> {
    pub close: bool,
    /// `b ≈ phase · a`.
    pub phase: Complex<T>,
    /// `1 - |⟨a,b⟩| / (‖a‖‖b‖)`.
    pub defect: T,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

impl<T: Scalar> LabeledTensor<T> {
    pub fn new(axes: Vec<(String, usize)>, data: Vec<Complex<T>>) -> Result<Self> {
        let size: usize = axes.iter().map(|a| a.1).product();
        if size != data.len() {
            return Err(Error::Dimension(format!(
                "axes describe {size} entries but data has {}",
                data.len()
            )));
        }
        for (i, (l, d)) in axes.iter().enumerate() {
            if *d == 0 {
                return Err(Error::Dimension(format!("axis `{l}` has dimension 0")));
            }
            if axes[..i].iter().any(|(m, _)| m == l) {
                return Err(Error::Validation(format!("duplicate axis label `{l}`")));
            }
        }
        Ok(LabeledTensor { axes, data })
    }

    pub fn zeros<S: Into<String>>(axes: Vec<(S, usize)>) -> Result<Self> {
        let axes: Vec<(String, usize)> = axes.into_iter().map(|(l, d)| (l.into(), d)).collect();
        let size = axes.iter().map(|a| a.1).product();
        Self::new(axes, vec![Complex::zero(); size])
    }

    pub fn from_fn<S: Into<String>>(
        axes: Vec<(S, usize)>,
        mut f: impl FnMut(&[usize]) -> Complex<T>,
    ) -> Result<Self> {
        let mut t = Self::zeros(axes)?;
        let dims = t.dims();
        let mut idx = vec![0; dims.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            for k in (0..dims.len()).rev() {
                idx[k] += 1;
                if idx[k] < dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(t)
    }

    /// Identity map between `rows` and `cols` labels, each of dimension `d`.
    pub fn identity(row: &str, col: &str, d: usize) -> Result<Self> {
        Self::from_fn(vec![(row, d), (col, d)], |i| {
            if i[0] == i[1] {
                Complex::one()
            } else {
                Complex::zero()
            }
        })
    }

    pub fn scalar(v: Complex<T>) -> Self {
        LabeledTensor {
            axes: Vec::new(),
            data: vec![v],
        }
    }

    pub fn axes(&self) -> &[(String, usize)] {
        &self.axes
    }

    pub fn labels(&self) -> Vec<&str> {
        self.axes.iter().map(|a| a.0.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.1).collect()
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn axis(&self, label: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.0 == label)
            .ok_or_else(|| Error::Validation(format!("unknown axis label `{label}`")))
    }

    pub fn dim(&self, label: &str) -> Result<usize> {
        Ok(self.axes[self.axis(label)?].1)
    }

    fn offset(&self, idx: &[usize]) -> usize {
        let mut off = 0;
        for (k, &i) in idx.iter().enumerate() {
            off = off * self.axes[k].1 + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> Complex<T> {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: Complex<T>) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn rename(mut self, from: &str, to: &str) -> Result<Self> {
        let i = self.axis(from)?;
        if from != to && self.axis(to).is_ok() {
            return Err(Error::Validation(format!("label `{to}` already present")));
        }
        self.axes[i].0 = to.to_string();
        Ok(self)
    }

    pub fn relabel(mut self, f: impl Fn(&str) -> String) -> Result<Self> {
        for a in self.axes.iter_mut() {
            a.0 = f(&a.0);
        }
        Self::new(self.axes, self.data)
    }

    /// Reorders axes to the given label order.
    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.rank() {
            return Err(Error::Validation(format!(
                "permutation lists {} labels for a rank-{} tensor",
                order.len(),
                self.rank()
            )));
        }
        let perm: Vec<usize> = order.iter().map(|l| self.axis(l)).collect::<Result<_>>()?;
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::Validation("repeated label in permutation".into()));
            }
        }
        Ok(self.permute_axes(&perm))
    }

    fn permute_axes(&self, perm: &[usize]) -> Self {
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return self.clone();
        }
        let dims = self.dims();
        let src_strides = strides(&dims);
        let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        let step: Vec<usize> = perm.iter().map(|&p| src_strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0; perm.len()];
        let mut src = 0usize;
        for _ in 0..self.data.len() {
            data.push(self.data[src]);
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                src += step[k];
                if idx[k] < new_dims[k] {
                    break;
                }
                src -= step[k] * new_dims[k];
                idx[k] = 0;
            }
        }
        LabeledTensor {
            axes: perm.iter().map(|&p| self.axes[p].clone()).collect(),
            data,
        }
    }

    pub fn conj(&self) -> Self {
        LabeledTensor {
            axes: self.axes.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        LabeledTensor {
            axes: self.axes.clone(),
            data: self.data.iter().map(|z| *z * s).collect(),
        }
    }

    fn aligned(&self, other: &Self) -> Result<Self> {
        let order = self.labels();
        let b = other.permute(&order)?;
        if b.dims() != self.dims() {
            return Err(Error::Dimension("axis dimensions differ".into()));
        }
        Ok(b)
    }

    /// `self + s·other`, matching axes by label.
    pub fn add_scaled(&self, other: &Self, s: Complex<T>) -> Result<Self> {
        let b = self.aligned(other)?;
        Ok(LabeledTensor {
            axes: self.axes.clone(),
            data: self.data.iter().zip(&b.data).map(|(x, y)| *x + *y * s).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, -Complex::one())
    }

    pub fn norm_sqr(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn norm(&self) -> T {
        num_traits::Float::sqrt(self.norm_sqr())
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| num_traits::Float::max(acc, z.norm()))
    }

    /// `⟨self, other⟩ = Σ conj(self)·other`, matching axes by label.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        let b = self.aligned(other)?;
        Ok(self
            .data
            .iter()
            .zip(&b.data)
            .fold(Complex::zero(), |acc, (x, y)| acc + x.conj() * *y))
    }

    /// Sums over the paired axes. Free axes keep their labels: those of `a` first, then `b`.
    pub fn contract(a: &Self, b: &Self, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut ia = Vec::with_capacity(pairs.len());
        let mut ib = Vec::with_capacity(pairs.len());
        for &(la, lb) in pairs {
            let (x, y) = (a.axis(la)?, b.axis(lb)?);
            if a.axes[x].1 != b.axes[y].1 {
                return Err(Error::Dimension(format!(
                    "`{la}` has dimension {} but `{lb}` has {}",
                    a.axes[x].1, b.axes[y].1
                )));
            }
            if ia.contains(&x) || ib.contains(&y) {
                return Err(Error::Validation("axis paired twice".into()));
            }
            ia.push(x);
            ib.push(y);
        }
        let free_a: Vec<usize> = (0..a.rank()).filter(|i| !ia.contains(i)).collect();
        let free_b: Vec<usize> = (0..b.rank()).filter(|i| !ib.contains(i)).collect();
        let out_axes: Vec<(String, usize)> = free_a
            .iter()
            .map(|&i| a.axes[i].clone())
            .chain(free_b.iter().map(|&i| b.axes[i].clone()))
            .collect();
        for (i, (l, _)) in out_axes.iter().enumerate() {
            if out_axes[..i].iter().any(|(m, _)| m == l) {
                return Err(Error::Validation(format!(
                    "free label `{l}` occurs on both operands; rename first"
                )));
            }
        }
        let pa: Vec<usize> = free_a.iter().chain(&ia).copied().collect();
        let pb: Vec<usize> = ib.iter().chain(&free_b).copied().collect();
        let am = a.permute_axes(&pa);
        let bm = b.permute_axes(&pb);
        let m: usize = free_a.iter().map(|&i| a.axes[i].1).product();
        let k: usize = ia.iter().map(|&i| a.axes[i].1).product();
        let n: usize = free_b.iter().map(|&i| b.axes[i].1).product();
        let data = matmul(&am.data, &bm.data, m, k, n);
        Ok(LabeledTensor {
            axes: out_axes,
            data,
        })
    }

    /// Outer product; labels must be disjoint.
    pub fn outer(a: &Self, b: &Self) -> Result<Self> {
        Self::contract(a, b, &[])
    }

    /// Traces pairs of axes of the same tensor.
    pub fn trace(&self, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut t = self.clone();
        for &(x, y) in pairs {
            let (ix, iy) = (t.axis(x)?, t.axis(y)?);
            let d = t.axes[ix].1;
            if t.axes[iy].1 != d {
                return Err(Error::Dimension(format!("cannot trace `{x}` with `{y}`")));
            }
            let delta = LabeledTensor::identity("__tr_a", "__tr_b", d)?;
            let _ = (ix, iy);
            t = Self::contract(&t, &delta, &[(x, "__tr_a"), (y, "__tr_b")])?;
        }
        Ok(t)
    }

    /// Matrix view: rows indexed by `rows` labels, columns by `cols` labels.
    pub fn to_matrix(&self, rows: &[&str], cols: &[&str]) -> Result<DMatrix<Complex<T>>> {
        let order: Vec<&str> = rows.iter().chain(cols).copied().collect();
        let p = self.permute(&order)?;
        let r: usize = rows.iter().map(|l| self.dim(l)).collect::<Result<Vec<_>>>()?.iter().product();
        let c = p.data.len() / r;
        Ok(DMatrix::from_row_slice(r, c, &p.data))
    }

    pub fn from_matrix<S: Into<String>>(
        m: &DMatrix<Complex<T>>,
        rows: Vec<(S, usize)>,
        cols: Vec<(S, usize)>,
    ) -> Result<Self> {
        let axes: Vec<(String, usize)> = rows
            .into_iter()
            .chain(cols)
            .map(|(l, d)| (l.into(), d))
            .collect();
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self::new(axes, data)
    }

    /// Moore–Penrose pseudoinverse of the `rows → cols` matrix view; the result maps back,
    /// with axes `cols` then `rows`.
    pub fn pinv(&self, rows: &[&str], cols: &[&str]) -> Result<Self> {
        let m = self.to_matrix(rows, cols)?;
        let p = pinv_matrix(&m)?;
        let mk = |ls: &[&str]| -> Result<Vec<(String, usize)>> {
            ls.iter().map(|l| Ok((l.to_string(), self.dim(l)?))).collect()
        };
        Self::from_matrix(&p, mk(cols)?, mk(rows)?)
    }

    /// `(c, r)` with `self ≈ c·reference`, `c` read off at the largest entry of `reference`
    /// and `r = max |self − c·reference|`.
    pub fn proportionality(&self, reference: &Self) -> Result<(Complex<T>, T)> {
        let b = reference.aligned(self)?;
        let (imax, _) = reference
            .data
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, bv), (i, z)| {
                if z.norm() > bv {
                    (i, z.norm())
                } else {
                    (bi, bv)
                }
            });
        let r0 = reference.data[imax];
        if r0.norm() == T::zero() {
            return Err(Error::NotProportional("reference tensor is zero".into()));
        }
        let c = b.data[imax] / r0;
        let resid = reference
            .data
            .iter()
            .zip(&b.data)
            .fold(T::zero(), |acc, (r, s)| {
                num_traits::Float::max(acc, (*s - *r * c).norm())
            });
        Ok((c, resid))
    }

    /// Debug dump: one header line of `label:dim` pairs, then `re im` per entry.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let hdr: Vec<String> = self.axes.iter().map(|(l, d)| format!("{l}:{d}")).collect();
        let _ = writeln!(s, "{}", hdr.join(" "));
        for z in &self.data {
            let _ = writeln!(s, "{:e} {:e}", z.re, z.im);
        }
        s
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let hdr = lines
            .next()
            .ok_or_else(|| Error::Validation("empty dump".into()))?;
        let axes = hdr
            .split_whitespace()
            .map(|tok| {
                let (l, d) = tok
                    .rsplit_once(':')
                    .ok_or_else(|| Error::Validation(format!("bad axis `{tok}`")))?;
                let d = d
                    .parse()
                    .map_err(|_| Error::Validation(format!("bad dimension in `{tok}`")))?;
                Ok((l.to_string(), d))
            })
            .collect::<Result<Vec<_>>>()?;
        let data = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let mut it = l.split_whitespace().map(|x| x.parse::<f64>());
                match (it.next(), it.next()) {
                    (Some(Ok(re)), Some(Ok(im))) => Ok(Complex::new(
                        T::from(re).unwrap(),
                        T::from(im).unwrap(),
                    )),
                    _ => Err(Error::Validation(format!("bad entry line `{l}`"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes, data)
    }
}

fn matmul<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>], m: usize, k: usize, n: usize) -> Vec<Complex<T>> {
    let mut c = vec![Complex::zero(); m * n];
    for i in 0..m {
        let row = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let x = a[i * k + p];
            if x.is_zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (r, y) in row.iter_mut().zip(brow) {
                *r += x * *y;
            }
        }
    }
    c
}

/// SVD-based pseudoinverse; singular values below `1e-10·σ_max` are dropped.
pub fn pinv_matrix<T: Scalar>(m: &DMatrix<Complex<T>>) -> Result<DMatrix<Complex<T>>> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(DMatrix::zeros(c, r));
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let vt = svd.v_t.as_ref().ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let smax = svd
        .singular_values
        .iter()
        .fold(T::zero(), |a, &s| num_traits::Float::max(a, s));
    let cutoff = smax * T::from(1e-10).unwrap();
    let mut out = DMatrix::<Complex<T>>::zeros(c, r);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff || s == T::zero() {
            continue;
        }
        let inv = Complex::new(T::one() / s, T::zero());
        let vcol = vt.row(i).adjoint();
        let urow = u.column(i).adjoint();
        out += (vcol * urow) * inv;
    }
    Ok(out)
}

pub fn allclose_upto_phase<T: Scalar>(
    a: &LabeledTensor<T>,
    b: &LabeledTensor<T>,
    tol: T,
) -> Result<PhaseVerdict<T>> {
    let (na, nb) = (a.norm(), b.norm());
    if na == T::zero() || nb == T::zero() {
        return Err(Error::Validation("zero-norm tensor in phase comparison".into()));
    }
    let ov = a.inner(b)?;
    let ratio = ov.norm() / (na * nb);
    let phase = if ov.norm() > T::zero() {
        ov / Complex::new(ov.norm(), T::zero())
    } else {
        Complex::one()
    };
    Ok(PhaseVerdict {
        close: ratio >= T::one() - tol,
        phase,
        defect: T::one() - ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    type T64 = LabeledTensor<f64>;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_contracts_to_vector() {
        let id = T64::identity("i", "j", 3).unwrap();
        let v = T64::new(vec![("j".into(), 3)], vec![c(1., 0.), c(2., 1.), c(0., -1.)]).unwrap();
        let w = T64::contract(&id, &v, &[("j", "j")]).unwrap();
        assert_eq!(w.labels(), vec!["i"]);
        assert_eq!(w.data(), v.data());
    }

    #[test]
    fn self_contraction_is_norm() {
        let t = T64::from_fn(vec![("a", 2), ("b", 3)], |i| c(i[0] as f64, i[1] as f64)).unwrap();
        let s = T64::contract(&t.conj(), &t, &[("a", "a"), ("b", "b")]).unwrap();
        assert!((s.data()[0].re - t.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn phase_comparison() {
        let v = T64::new(vec![("x".into(), 2)], vec![c(1., 0.), c(0.5, 0.5)]).unwrap();
        let w = v.scale(c(0., 1.));
        let r = allclose_upto_phase(&v, &w, 1e-12).unwrap();
        assert!(r.close && (r.phase - c(0., 1.)).norm() < 1e-12);
        let e1 = T64::new(vec![("x".into(), 2)], vec![c(1., 0.), c(0., 0.)]).unwrap();
        let e2 = T64::new(vec![("x".into(), 2)], vec![c(0., 0.), c(1., 0.)]).unwrap();
        assert!(!allclose_upto_phase(&e1, &e2, 1e-6).unwrap().close);
        assert!(allclose_upto_phase(&e1, &e1.scale(c(0., 0.)), 1e-6).is_err());
    }

    #[test]
    fn dump_roundtrip() {
        let t = T64::from_fn(vec![("a", 2), ("b", 2)], |i| c(i[0] as f64 * 0.25, -(i[1] as f64))).unwrap();
        let back = T64::parse_dump(&t.dump()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn errors_are_reported() {
        let a = T64::zeros(vec![("a", 2)]).unwrap();
        let b = T64::zeros(vec![("b", 3)]).unwrap();
        assert!(matches!(T64::contract(&a, &b, &[("a", "b")]), Err(Error::Dimension(_))));
        assert!(T64::contract(&a, &b, &[("q", "b")]).is_err());
    }

    #[test]
    fn projector_is_its_own_pinv() {
        let p = T64::from_fn(vec![("r", 2), ("c", 2)], |_| c(0.5, 0.)).unwrap();
        let q = p.pinv(&["r"], &["c"]).unwrap().rename("c", "x").unwrap().rename("r", "c").unwrap().rename("x", "r").unwrap();
        let (ph, res) = q.proportionality(&p).unwrap();
        assert!(res < 1e-12 && (ph - 1.0).norm() < 1e-12);
    }

    #[test]
    fn single_precision_contracts() {
        let id = LabeledTensor::<f32>::identity("i", "j", 2).unwrap();
        let s = LabeledTensor::<f32>::contract(&id, &id, &[("i", "i"), ("j", "j")]).unwrap();
        assert!((s.data()[0].re - 2.0).abs() < 1e-6);
    }
}
