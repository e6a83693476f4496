use crate::error::{Error, Result};
use crate::linalg::{apply_kraus, apply_kraus_adjoint, kraus_gram, Matrix};
use crate::scalar::Real;

/// Channel in Kraus form, `d_out × d_in` operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRep<T: Real> {
    kraus: Vec<Matrix<T>>,
}

impl<T: Real> ChannelRep<T> {
    /// Requires `Σ K†K = 𝕀` within `1e-9`.
    pub fn new(kraus: Vec<Matrix<T>>) -> Result<Self> {
        let ch = Self::from_kraus(kraus)?;
        let defect = ch.tp_defect();
        if defect > T::tol(1e-9) {
            return Err(Error::InvalidChannel(format!("not trace preserving (defect {defect:e})")));
        }
        Ok(ch)
    }

    /// Accepts any completely positive map given by Kraus operators of one shape.
    pub fn from_kraus(kraus: Vec<Matrix<T>>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidChannel("empty Kraus list".into()))?;
        let shape = (first.rows(), first.cols());
        if kraus.iter().any(|k| (k.rows(), k.cols()) != shape) {
            return Err(Error::InvalidChannel("Kraus operators differ in shape".into()));
        }
        for k in &kraus {
            k.check_finite()?;
        }
        Ok(Self { kraus })
    }

    pub fn identity(dim: usize) -> Self {
        Self { kraus: vec![Matrix::identity(dim)] }
    }

    /// Qubit-style depolarizing channel `ρ ↦ (1−p)ρ + p Tr[ρ] 𝕀/d` on dimension `d`.
    pub fn depolarizing(dim: usize, p: T) -> Result<Self> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::InvalidChannel(format!("depolarizing parameter {p} outside [0, 1]")));
        }
        let d = T::of(dim as f64);
        let mut kraus = vec![Matrix::identity(dim).scale((T::one() - p).sqrt())];
        let w = (p / d).sqrt();
        for i in 0..dim {
            for j in 0..dim {
                let mut k = Matrix::zeros(dim, dim);
                k[(i, j)] = crate::scalar::cre(w);
                kraus.push(k);
            }
        }
        Self::new(kraus)
    }

    pub fn kraus(&self) -> &[Matrix<T>] {
        &self.kraus
    }

    pub fn input_dim(&self) -> usize {
        self.kraus[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.kraus[0].rows()
    }

    pub fn apply(&self, x: &Matrix<T>) -> Matrix<T> {
        apply_kraus(&self.kraus, x)
    }

    pub fn apply_adjoint(&self, y: &Matrix<T>) -> Matrix<T> {
        apply_kraus_adjoint(&self.kraus, y)
    }

    /// `Σ K†K`.
    pub fn gram(&self) -> Matrix<T> {
        kraus_gram(&self.kraus)
    }

    pub fn tp_defect(&self) -> T {
        self.gram().max_abs_diff(&Matrix::identity(self.input_dim()))
    }

    /// Choi operator `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, input factor first.
    pub fn choi(&self) -> Matrix<T> {
        choi_of(self.input_dim(), self.output_dim(), |x| self.apply(x))
    }
}

/// Choi operator of an arbitrary linear map given as a closure.
pub fn choi_of<T: Real>(d_in: usize, d_out: usize, map: impl Fn(&Matrix<T>) -> Matrix<T>) -> Matrix<T> {
    let mut choi = Matrix::zeros(d_in * d_out, d_in * d_out);
    for i in 0..d_in {
        for j in 0..d_in {
            let mut unit = Matrix::zeros(d_in, d_in);
            unit[(i, j)] = crate::scalar::cre(T::one());
            let image = map(&unit);
            for a in 0..d_out {
                for b in 0..d_out {
                    choi[(i * d_out + a, j * d_out + b)] = image[(a, b)];
                }
            }
        }
    }
    choi
}
