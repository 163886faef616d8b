//! Dense symmetric eigendecomposition and the generalized symmetric
//! problem via Cholesky reduction.
//!
//! Classic Householder tridiagonalization (`tred2`) followed by the
//! implicit-shift QL iteration (`tql2`), ported from the EISPACK/JAMA
//! lineage and made generic over the crate scalar. Eigenvalues are
//! returned in ascending order with matching eigenvector columns.

use thiserror::Error;

use crate::dense::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("QL iteration failed to converge at eigenvalue {0}")]
    NoConvergence(usize),
    #[error("matrix is not positive definite (pivot {0} at row {1})")]
    NotPositiveDefinite(f64, usize),
    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
}

/// Eigenvalues in ascending order; `vectors` holds the matching
/// eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<S> {
    pub values: Vec<S>,
    pub vectors: DenseMatrix<S>,
}

/// Eigendecomposition of a symmetric matrix. Only the lower triangle is
/// read; the input is symmetrized implicitly.
pub fn symmetric_eigen<S: Scalar>(m: &DenseMatrix<S>) -> Result<SymmetricEigen<S>, EigenError> {
    let n = m.rows();
    if m.cols() != n {
        return Err(EigenError::NotSquare(m.rows(), m.cols()));
    }
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: DenseMatrix::zeros(0, 0),
        });
    }
    let half = S::from_f64_s(0.5);
    let mut v = DenseMatrix::from_fn(n, n, |r, c| (m.get(r, c) + m.get(c, r)) * half);
    let mut d = vec![S::zero(); n];
    let mut e = vec![S::zero(); n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;
    sort_ascending(&mut d, &mut v);
    Ok(SymmetricEigen {
        values: d,
        vectors: v,
    })
}

/// Solve `A v = lambda B v` for symmetric `A` and symmetric positive
/// definite `B`. Returned eigenvectors are B-orthonormal.
pub fn generalized_symmetric_eigen<S: Scalar>(
    a: &DenseMatrix<S>,
    b: &DenseMatrix<S>,
) -> Result<SymmetricEigen<S>, EigenError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(EigenError::NotSquare(a.rows(), a.cols()));
    }
    assert_eq!((b.rows(), b.cols()), (n, n), "pencil dimension mismatch");
    let l = cholesky(b)?;
    // C = L^-1 A L^-T, symmetric with the same eigenvalues as the pencil.
    let w = forward_solve_matrix(&l, a);
    let c = forward_solve_matrix(&l, &w.transpose()).transpose();
    let eig = symmetric_eigen(&c)?;
    let vectors = back_solve_transposed_matrix(&l, &eig.vectors);
    Ok(SymmetricEigen {
        values: eig.values,
        vectors,
    })
}

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// matrix.
pub fn cholesky<S: Scalar>(m: &DenseMatrix<S>) -> Result<DenseMatrix<S>, EigenError> {
    let n = m.rows();
    if m.cols() != n {
        return Err(EigenError::NotSquare(m.rows(), m.cols()));
    }
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= S::zero() {
                    return Err(EigenError::NotPositiveDefinite(sum.to_f64_s(), i));
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solve `L X = B` for lower-triangular `L`.
fn forward_solve_matrix<S: Scalar>(l: &DenseMatrix<S>, b: &DenseMatrix<S>) -> DenseMatrix<S> {
    let n = l.rows();
    let cols = b.cols();
    let mut x = b.clone();
    for i in 0..n {
        for k in 0..i {
            let lik = l.get(i, k);
            if lik == S::zero() {
                continue;
            }
            for c in 0..cols {
                let v = x.get(i, c) - lik * x.get(k, c);
                x.set(i, c, v);
            }
        }
        let d = l.get(i, i);
        for c in 0..cols {
            let v = x.get(i, c) / d;
            x.set(i, c, v);
        }
    }
    x
}

/// Solve `L^T X = B` for lower-triangular `L`.
fn back_solve_transposed_matrix<S: Scalar>(l: &DenseMatrix<S>, b: &DenseMatrix<S>) -> DenseMatrix<S> {
    let n = l.rows();
    let cols = b.cols();
    let mut x = b.clone();
    for i in (0..n).rev() {
        for k in i + 1..n {
            let lki = l.get(k, i);
            if lki == S::zero() {
                continue;
            }
            for c in 0..cols {
                let v = x.get(i, c) - lki * x.get(k, c);
                x.set(i, c, v);
            }
        }
        let d = l.get(i, i);
        for c in 0..cols {
            let v = x.get(i, c) / d;
            x.set(i, c, v);
        }
    }
    x
}

/// Householder reduction to tridiagonal form; accumulates the
/// transformation in `v`.
fn tred2<S: Scalar>(v: &mut DenseMatrix<S>, d: &mut [S], e: &mut [S]) {
    let n = v.rows();
    for (i, di) in d.iter_mut().enumerate().take(n) {
        *di = v.get(n - 1, i);
    }

    for i in (1..n).rev() {
        let mut scale = S::zero();
        let mut h = S::zero();
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == S::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v.get(i - 1, j);
                v.set(i, j, S::zero());
                v.set(j, i, S::zero());
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > S::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = S::zero();
            }

            for j in 0..i {
                f = d[j];
                v.set(j, i, f);
                g = e[j] + v.get(j, j) * f;
                for k in j + 1..i {
                    g += v.get(k, j) * d[k];
                    e[k] += v.get(k, j) * f;
                }
                e[j] = g;
            }
            f = S::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let upd = v.get(k, j) - (f * e[k] + g * d[k]);
                    v.set(k, j, upd);
                }
                d[j] = v.get(i - 1, j);
                v.set(i, j, S::zero());
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v.set(n - 1, i, v.get(i, i));
        v.set(i, i, S::one());
        let h = d[i + 1];
        if h != S::zero() {
            for (k, dk) in d.iter_mut().enumerate().take(i + 1) {
                *dk = v.get(k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = S::zero();
                for k in 0..=i {
                    g += v.get(k, i + 1) * v.get(k, j);
                }
                for (k, dk) in d.iter().enumerate().take(i + 1) {
                    let upd = v.get(k, j) - g * *dk;
                    v.set(k, j, upd);
                }
            }
        }
        for k in 0..=i {
            v.set(k, i + 1, S::zero());
        }
    }
    for (j, dj) in d.iter_mut().enumerate().take(n) {
        *dj = v.get(n - 1, j);
        v.set(n - 1, j, S::zero());
    }
    v.set(n - 1, n - 1, S::one());
    e[0] = S::zero();
}

/// Implicit-shift QL iteration on the tridiagonal form.
fn tql2<S: Scalar>(v: &mut DenseMatrix<S>, d: &mut [S], e: &mut [S]) -> Result<(), EigenError> {
    let n = v.rows();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = S::zero();

    let mut f = S::zero();
    let mut tst1 = S::zero();
    let eps = S::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());

        let mut m = l;
        while m < n {
            if e[m].abs() <= tst1 * eps {
                break;
            }
            m += 1;
        }
        if m >= n {
            m = n - 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter >= 50 {
                    return Err(EigenError::NoConvergence(l));
                }

                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (S::two() * e[l]);
                let mut r = hypot(p, S::one());
                if p < S::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = S::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = S::zero();
                let mut s2 = S::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        h = v.get(k, i + 1);
                        v.set(k, i + 1, s * v.get(k, i) + c * h);
                        v.set(k, i, c * v.get(k, i) - s * h);
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= tst1 * eps {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = S::zero();
    }
    Ok(())
}

fn hypot<S: Scalar>(a: S, b: S) -> S {
    let (a, b) = (a.abs(), b.abs());
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == S::zero() {
        return S::zero();
    }
    let r = lo / hi;
    hi * (S::one() + r * r).sqrt()
}

fn sort_ascending<S: Scalar>(d: &mut [S], v: &mut DenseMatrix<S>) {
    let n = d.len();
    for i in 0..n {
        let mut k = i;
        for j in i + 1..n {
            if d[j] < d[k] {
                k = j;
            }
        }
        if k != i {
            d.swap(i, k);
            for r in 0..n {
                let tmp = v.get(r, i);
                v.set(r, i, v.get(r, k));
                v.set(r, k, tmp);
            }
        }
    }
}
