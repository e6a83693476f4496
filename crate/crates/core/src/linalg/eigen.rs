//! Cyclic Jacobi eigensolver for small dense Hermitian matrices.

use num_traits::{One, Zero};

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::{cre, Real, C};

const MAX_SWEEPS: usize = 100;

/// Spectral decomposition `m = V diag(λ) V†` with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// Rebuilds `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        let d = self.values.len();
        let v = &self.vectors;
        let fv: Vec<C<T>> = self.values.iter().map(|&l| cre(f(l))).collect();
        Matrix::from_fn(d, d, |i, j| {
            let mut acc = C::zero();
            for k in 0..d {
                if !fv[k].is_zero() {
                    acc = acc + v[(i, k)] * fv[k] * v[(j, k)].conj();
                }
            }
            acc
        })
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        self.reconstruct_with(|l| l)
    }

    pub fn max_value(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn min_value(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }
}

/// Diagonalizes a Hermitian matrix by cyclic Jacobi sweeps in fixed (p, q) order.
///
/// Only the Hermitian part of `m` is used. Eigenvector phases are fixed so the
/// first component above `1e-12` in modulus is real and positive.
pub fn herm_eig<T: Real>(m: &Matrix<T>) -> Result<HermitianEigen<T>> {
    if !m.is_square() {
        return Err(Error::InvalidMatrix(format!("{}x{} is not square", m.rows(), m.cols())));
    }
    m.check_finite()?;
    let n = m.dim();
    let mut a = m.symmetrized();
    let mut v = Matrix::<T>::identity(n);

    let scale = a.norm_fro();
    let threshold = T::tol(1e-13) * scale;
    let tiny = T::min_positive_value();

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let abs = apq.norm();
                if abs <= tiny {
                    continue;
                }
                rotate(&mut a, &mut v, p, q, apq, abs);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));

    let values: Vec<T> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let phase = canonical_phase(&v, src);
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)] * phase;
        }
    }
    Ok(HermitianEigen { values, vectors })
}

fn off_diagonal_norm<T: Real>(a: &Matrix<T>) -> T {
    let n = a.dim();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc = acc + a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Applies the unitary J that zeroes a[p][q]: A ← J†AJ, V ← VJ.
///
/// J = D·R where D = diag(1, e^{-iφ}) on (p, q) makes the pivot real and R is
/// the real Jacobi rotation of the resulting symmetric 2x2 block.
fn rotate<T: Real>(a: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize, apq: C<T>, abs: T) {
    let n = a.dim();
    let e = apq / abs;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (T::of(2.0) * abs);
    let t = {
        let sign = if theta >= T::zero() { T::one() } else { -T::one() };
        sign / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    // J entries: J_pp = c, J_pq = s, J_qp = -s·ē, J_qq = c·ē.
    let jpp = cre(c);
    let jpq = cre(s);
    let jqp = -e.conj() * s;
    let jqq = e.conj() * c;

    // A ← A·J (columns p, q).
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    // A ← J†·A (rows p, q).
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = C::zero();
    a[(q, p)] = C::zero();
    a[(p, p)] = cre(a[(p, p)].re);
    a[(q, q)] = cre(a[(q, q)].re);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

/// Unit phase that makes the first significant component of column `col` real positive.
fn canonical_phase<T: Real>(v: &Matrix<T>, col: usize) -> C<T> {
    let cutoff = T::tol(1e-12);
    for row in 0..v.rows() {
        let z = v[(row, col)];
        let r = z.norm();
        if r > cutoff {
            return z.conj() / r;
        }
    }
    C::one()
}
