//! Dense complex Hermitian linear algebra for small dimensions.
//!
//! Tensor products always put the system `Q` first (slowest-varying index),
//! so an index on `Q⊗A` is `q·d_A + a`.

mod eigen;
mod matrix;
mod states;

pub use eigen::{herm_eig, HermitianEigen};
pub use matrix::Matrix;
pub use states::{DensityOperator, Effect, HermitianMatrix};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{cre, Real, C};

/// Relative cutoff below which an eigenvalue is treated as outside the support.
pub const RANK_TOL: f64 = 1e-10;
/// Eigenvalues down to this value are clamped to zero when a PSD input is expected.
pub const PSD_CLAMP: f64 = 1e-10;
/// Below this eigenvalue a supposedly PSD matrix is rejected.
pub const PSD_REJECT: f64 = 1e-6;

/// Which tensor factor of `Q⊗A` survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    Q,
    A,
}

fn check_psd<T: Real>(eig: &HermitianEigen<T>) -> Result<()> {
    let min = eig.min_value();
    if min < -T::tol(PSD_REJECT) {
        return Err(Error::NotPsd { min_eigenvalue: min.as_f64() });
    }
    Ok(())
}

/// Principal square root of a PSD matrix.
///
/// Eigenvalues below `4·d·ε·λ_max` are round-off in the input and map to 0;
/// taking their square root would inflate `O(ε)` noise to `O(√ε)`.
pub fn psd_sqrt<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let eig = herm_eig(m)?;
    check_psd(&eig)?;
    let floor = T::of(4.0 * m.rows() as f64) * T::epsilon() * eig.max_value().max(T::zero());
    Ok(eig.reconstruct_with(|l| if l > floor { l.sqrt() } else { T::zero() }))
}

/// Square root of the pseudo-inverse: eigenvalues at or below `RANK_TOL·λ_max` map to 0.
pub fn support_inv_sqrt<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let eig = herm_eig(m)?;
    check_psd(&eig)?;
    let cut = support_cutoff(&eig);
    Ok(eig.reconstruct_with(|l| if l > cut { T::one() / l.sqrt() } else { T::zero() }))
}

/// Pseudo-inverse on the support.
pub fn support_inverse<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let eig = herm_eig(m)?;
    check_psd(&eig)?;
    let cut = support_cutoff(&eig);
    Ok(eig.reconstruct_with(|l| if l > cut { T::one() / l } else { T::zero() }))
}

/// Orthogonal projector onto the support of a PSD matrix.
pub fn support_projector<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let eig = herm_eig(m)?;
    let cut = support_cutoff(&eig);
    Ok(eig.reconstruct_with(|l| if l > cut { T::one() } else { T::zero() }))
}

/// Number of eigenvalues above `RANK_TOL·λ_max`.
pub fn numerical_rank<T: Real>(m: &Matrix<T>) -> Result<usize> {
    let eig = herm_eig(m)?;
    let cut = support_cutoff(&eig);
    Ok(eig.values.iter().filter(|&&l| l > cut).count())
}

fn support_cutoff<T: Real>(eig: &HermitianEigen<T>) -> T {
    let max = eig.max_value().max(T::zero());
    // The zero matrix has empty support.
    (T::tol(RANK_TOL) * max).max(T::min_positive_value())
}

/// Partial trace of an operator on `Q⊗A`, keeping the requested factor.
pub fn partial_trace<T: Real>(m: &Matrix<T>, d_q: usize, d_a: usize, keep: Keep) -> Result<Matrix<T>> {
    if !m.is_square() || m.dim() != d_q * d_a || d_q == 0 || d_a == 0 {
        return Err(Error::InvalidFactorization { dim: m.rows(), d_q, d_a });
    }
    Ok(match keep {
        Keep::Q => Matrix::from_fn(d_q, d_q, |i, j| {
            (0..d_a).fold(C::zero(), |acc, a| acc + m[(i * d_a + a, j * d_a + a)])
        }),
        Keep::A => Matrix::from_fn(d_a, d_a, |i, j| {
            (0..d_q).fold(C::zero(), |acc, q| acc + m[(q * d_a + i, q * d_a + j)])
        }),
    })
}

/// Kronecker product `a⊗b`.
pub fn tensor<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    a.kron(b)
}

/// Canonical purification `Σ_k √λ_k |v_k⟩_Q |k⟩_A` of a density operator.
#[derive(Debug, Clone)]
pub struct Purification<T: Real> {
    pub vector: Vec<C<T>>,
    pub d_q: usize,
    pub d_a: usize,
}

impl<T: Real> Purification<T> {
    /// The pure state `|Ψ⟩⟨Ψ|` on `Q⊗A`.
    pub fn projector(&self) -> Matrix<T> {
        Matrix::outer(&self.vector, &self.vector)
    }
}

/// Purifies `rho` onto an ancilla of dimension `rank(rho)`.
///
/// Eigenvalues are taken in descending order with eigenvector phases fixed by
/// [`herm_eig`], so the output is deterministic.
pub fn purify<T: Real>(rho: &DensityOperator<T>) -> Purification<T> {
    let eig = herm_eig(rho.matrix()).expect("density operator is finite");
    let cut = support_cutoff(&eig);
    let kept: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > cut).collect();
    let d_q = rho.dim();
    let d_a = kept.len().max(1);
    let mut vector = vec![C::zero(); d_q * d_a];
    for (a, &k) in kept.iter().enumerate() {
        let amp = eig.values[k].sqrt();
        for q in 0..d_q {
            vector[q * d_a + a] = eig.vectors[(q, k)] * amp;
        }
    }
    Purification { vector, d_q, d_a }
}

/// `−Σ λ ln λ` over the spectrum of a PSD matrix, with small negative eigenvalues clamped.
pub fn entropy_of_psd<T: Real>(m: &Matrix<T>) -> Result<T> {
    let eig = herm_eig(m)?;
    check_psd(&eig)?;
    Ok(eig
        .values
        .iter()
        .filter(|&&l| l > T::zero())
        .fold(T::zero(), |acc, &l| acc - l * l.ln()))
}

/// Von Neumann entropy in nats.
pub fn entropy_vn<T: Real>(rho: &DensityOperator<T>) -> T {
    entropy_of_psd(rho.matrix()).expect("density operator is PSD").max(T::zero())
}

/// Shannon entropy in nats.
pub fn entropy_shannon<T: Real>(p: &[T]) -> Result<T> {
    let tol = T::tol(1e-10);
    if let Some(bad) = p.iter().find(|&&x| x < -tol || !x.is_finite()) {
        return Err(Error::InvalidDistribution(format!("entry {bad}")));
    }
    let total: T = p.iter().copied().sum();
    if (total - T::one()).abs() > tol {
        return Err(Error::InvalidDistribution(format!("sums to {total}")));
    }
    Ok(p.iter().filter(|&&x| x > T::zero()).fold(T::zero(), |acc, &x| acc - x * x.ln()))
}

/// Trace norm of a Hermitian matrix, `Σ |λ|`.
pub fn trace_norm<T: Real>(m: &Matrix<T>) -> T {
    herm_eig(m).map(|e| e.values.iter().map(|l| l.abs()).sum()).unwrap_or_else(|_| T::nan())
}

/// Trace-norm distance `‖a − b‖₁` between Hermitian matrices.
pub fn trace_distance<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> T {
    trace_norm(&(a - b))
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity<T: Real>(rho: &DensityOperator<T>, sigma: &DensityOperator<T>) -> T {
    let sr = psd_sqrt(rho.matrix()).expect("density operator is PSD");
    let inner = sr.sandwich(sigma.matrix()).symmetrized();
    let root = psd_sqrt(&inner).map(|m| m.trace_re()).unwrap_or_else(|_| T::nan());
    root * root
}

/// Purity `Tr[ρ²]`.
pub fn purity<T: Real>(rho: &DensityOperator<T>) -> T {
    rho.trace_product(rho.matrix()).re
}

/// Applies `Σ_k K_k X K_k†`.
pub fn apply_kraus<T: Real>(kraus: &[Matrix<T>], x: &Matrix<T>) -> Matrix<T> {
    let mut out = Matrix::zeros(kraus[0].rows(), kraus[0].rows());
    for k in kraus {
        out += &k.sandwich(x);
    }
    out
}

/// Applies the adjoint map `Σ_k K_k† Y K_k`.
pub fn apply_kraus_adjoint<T: Real>(kraus: &[Matrix<T>], y: &Matrix<T>) -> Matrix<T> {
    let mut out = Matrix::zeros(kraus[0].cols(), kraus[0].cols());
    for k in kraus {
        out += &k.sandwich_adj(y);
    }
    out
}

/// `Σ_k K_k† K_k`.
pub fn kraus_gram<T: Real>(kraus: &[Matrix<T>]) -> Matrix<T> {
    let d = kraus.first().map_or(0, Matrix::cols);
    kraus.iter().fold(Matrix::zeros(d, d), |mut acc, k| {
        acc += &(&k.adjoint() * k);
        acc
    })
}

/// Pure-state projector onto computational basis vector `i`.
pub fn basis_projector<T: Real>(dim: usize, i: usize) -> Matrix<T> {
    let mut m = Matrix::zeros(dim, dim);
    m[(i, i)] = cre(T::one());
    m
}

/// Column vector from real amplitudes.
pub fn ket<T: Real>(amps: &[f64]) -> Vec<C<T>> {
    amps.iter().map(|&a| cre(T::of(a))).collect()
}

#[cfg(test)]
mod tests;
