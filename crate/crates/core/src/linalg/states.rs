use std::ops::Deref;

use super::{herm_eig, Matrix, PSD_CLAMP};
use crate::error::{Error, Result};
use crate::scalar::Real;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;

fn symmetrize_checked<T: Real>(m: Matrix<T>) -> Result<Matrix<T>> {
    if !m.is_square() {
        return Err(Error::InvalidMatrix(format!("{}x{} is not square", m.rows(), m.cols())));
    }
    m.check_finite()?;
    let scale = m.max_abs().max(T::one());
    let defect = m.hermiticity_defect();
    if defect > T::tol(HERMITIAN_TOL) * scale {
        return Err(Error::InvalidMatrix(format!("not Hermitian (defect {defect:e})")));
    }
    Ok(m.symmetrized())
}

/// A Hermitian matrix, symmetrized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<T: Real>(Matrix<T>);

impl<T: Real> HermitianMatrix<T> {
    pub fn new(m: Matrix<T>) -> Result<Self> {
        symmetrize_checked(m).map(Self)
    }

    /// Keeps only the Hermitian part of `m`.
    pub fn from_hermitian_part(m: &Matrix<T>) -> Self {
        Self(m.symmetrized())
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }
}

impl<T: Real> Deref for HermitianMatrix<T> {
    type Target = Matrix<T>;

    fn deref(&self) -> &Matrix<T> {
        &self.0
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator<T: Real>(Matrix<T>);

impl<T: Real> DensityOperator<T> {
    /// Validates `m` as a state. Eigenvalues in `[−1e-10, 0)` are clamped to zero.
    pub fn new(m: Matrix<T>) -> Result<Self> {
        let m = symmetrize_checked(m)?;
        let tr = m.trace_re();
        if (tr - T::one()).abs() > T::tol(TRACE_TOL) {
            return Err(Error::NotDensityOperator(format!("trace {tr}")));
        }
        Self::clamp(m)
    }

    /// Divides a nonzero PSD matrix by its trace.
    pub fn normalized(m: &Matrix<T>) -> Result<Self> {
        let tr = m.trace_re();
        if !(tr > T::zero()) {
            return Err(Error::NotDensityOperator(format!("trace {tr} cannot be normalized")));
        }
        let m = symmetrize_checked(m.scale(T::one() / tr))?;
        Self::clamp(m)
    }

    fn clamp(m: Matrix<T>) -> Result<Self> {
        let eig = herm_eig(&m)?;
        let min = eig.min_value();
        if min >= T::zero() {
            return Ok(Self(m));
        }
        if min < -T::tol(PSD_CLAMP) {
            return Err(Error::NotDensityOperator(format!("negative eigenvalue {min:e}")));
        }
        let fixed = eig.reconstruct_with(|l| l.max(T::zero()));
        let tr = fixed.trace_re();
        Ok(Self(fixed.scale(T::one() / tr).symmetrized()))
    }

    /// `𝕀/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self(Matrix::identity(dim).scale(T::one() / T::of(dim as f64)))
    }

    /// `|i⟩⟨i|` in the computational basis.
    pub fn basis(dim: usize, i: usize) -> Self {
        Self(super::basis_projector(dim, i))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &[crate::scalar::C<T>]) -> Result<Self> {
        Self::normalized(&Matrix::outer(psi, psi))
    }

    pub fn diagonal_probs(probs: &[T]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(probs))
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }
}

impl<T: Real> Deref for DensityOperator<T> {
    type Target = Matrix<T>;

    fn deref(&self) -> &Matrix<T> {
        &self.0
    }
}

/// Hermitian PSD operator without a trace constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect<T: Real>(Matrix<T>);

impl<T: Real> Effect<T> {
    pub fn new(m: Matrix<T>) -> Result<Self> {
        let m = symmetrize_checked(m)?;
        let eig = herm_eig(&m)?;
        let scale = eig.max_value().abs().max(T::one());
        if eig.min_value() < -T::tol(PSD_CLAMP) * scale {
            return Err(Error::NotPsd { min_eigenvalue: eig.min_value().as_f64() });
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim))
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }
}

impl<T: Real> Deref for Effect<T> {
    type Target = Matrix<T>;

    fn deref(&self) -> &Matrix<T> {
        &self.0
    }
}
