//! Small dense linear-algebra helpers on complex matrices.

use crate::error::{Error, Result};
use crate::C64;
use nalgebra::{DMatrix, DVector};

/// Eigenvalues of a square complex matrix, sorted by decreasing magnitude.
pub fn eigenvalues_by_magnitude(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension("eigenvalues of a non-square matrix".into()));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let ev = m
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let mut v: Vec<C64> = ev.iter().copied().collect();
    v.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    Ok(v)
}

/// Unit vector spanning the (numerically) smallest right singular direction of `m`.
pub fn null_vector(m: &DMatrix<C64>) -> Result<(DVector<C64>, f64)> {
    let svd = m.clone().svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let (imin, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &s)| if s < bv { (i, s) } else { (bi, bv) });
    let v = vt.row(imin).adjoint();
    Ok((v, smin))
}

/// Number of singular values above `tol · σ_max`.
pub fn numerical_rank(m: &DMatrix<C64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = m.clone().singular_values();
    let smax = s.iter().fold(0.0f64, |a, &b| a.max(b));
    s.iter().filter(|&&x| x > tol * smax).count()
}

/// Hermitian eigen-decomposition (ascending eigenvalues, columns are eigenvectors).
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Lowest eigenvalues from [`lanczos_lowest`] with their Ritz residual norms.
#[derive(Debug, Clone)]
pub struct LanczosResult {
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Lanczos with full reorthogonalization for the `nev` lowest eigenvalues of the
/// Hermitian map `apply` on `C^dim`, started from a seeded random vector. Stops when
/// every requested Ritz residual is below `tol` or after `max_iter` steps.
pub fn lanczos_lowest<F: FnMut(&[C64]) -> Vec<C64>>(
    dim: usize,
    mut apply: F,
    nev: usize,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<LanczosResult> {
    use rand::{Rng, SeedableRng};
    if dim == 0 || nev == 0 {
        return Err(Error::Dimension("empty Lanczos problem".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<C64> = (0..dim).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let n0 = norm(&q);
    q.iter_mut().for_each(|z| *z /= n0);
    let mut basis: Vec<Vec<C64>> = vec![q];
    let mut a: Vec<f64> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let limit = max_iter.min(dim);
    loop {
        let k = basis.len() - 1;
        let mut w = apply(&basis[k]);
        let ak: f64 = basis[k].iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum();
        a.push(ak);
        for _ in 0..2 {
            for v in &basis {
                let c: C64 = v.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                w.iter_mut().zip(v).for_each(|(y, x)| *y -= c * x);
            }
        }
        let bk = norm(&w);
        let m = a.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                a[i]
            } else if i + 1 == j {
                b[i]
            } else if j + 1 == i {
                b[j]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        let take = nev.min(m);
        let values: Vec<f64> = order[..take].iter().map(|&i| eig.eigenvalues[i]).collect();
        let residuals: Vec<f64> = order[..take].iter().map(|&i| (bk * eig.eigenvectors[(m - 1, i)]).abs()).collect();
        let done = take == nev && residuals.iter().all(|&r| r < tol);
        if done || bk < 1e-14 || m >= limit {
            if !done && bk >= 1e-14 {
                return Err(Error::Numerical(format!(
                    "Lanczos did not converge in {m} steps (residual {:.2e})",
                    residuals.iter().copied().fold(0.0, f64::max)
                )));
            }
            return Ok(LanczosResult {
                values,
                residuals,
                iterations: m,
            });
        }
        b.push(bk);
        w.iter_mut().for_each(|z| *z /= bk);
        basis.push(w);
    }
}


#[cfg(test)]
mod lanczos_tests {
    use super::*;
    use crate::c64;

    #[test]
    fn lanczos_matches_dense() {
        let n = 40;
        let m = DMatrix::from_fn(n, n, |i, j| {
            let x = ((i * 7 + j * 3) % 11) as f64 - 5.0;
            let y = ((i * 5 + j * 2) % 7) as f64 - 3.0;
            c64(x + y, 0.0)
        });
        let h = &m + m.adjoint();
        let dense = hermitian_eigen(&h).0;
        let lz = lanczos_lowest(n, |v| (&h * DVector::from_column_slice(v)).as_slice().to_vec(), 1, 40, 1e-9, 3).unwrap();
        assert!((lz.values[0] - dense[0]).abs() < 1e-8);
    }
}
