//! Seeded random states, channels and instruments for property sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{kraus_gram, partial_trace, psd_sqrt, support_inv_sqrt, DensityOperator, Keep, Matrix};
use crate::scalar::{Real, C};

/// Deterministic generator used by every sampler in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`, for
/// reproducible per-item randomness regardless of evaluation order.
pub fn stream_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C::new(T::of(re), T::of(im))
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_vector<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C<T>> {
    let v: Vec<C<T>> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn random_hermitian<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Matrix<T> {
    ginibre::<T, R>(rng, dim, dim).symmetrized()
}

/// Haar-distributed unitary via Gram–Schmidt on a Ginibre matrix.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Matrix<T> {
    random_isometry(rng, dim, dim)
}

/// Isometry `V: C^cols → C^rows` (`V†V = 𝕀`), `rows ≥ cols`.
pub fn random_isometry<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix<T> {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = ginibre::<T, R>(rng, rows, cols);
    let mut q = Matrix::zeros(rows, cols);
    for j in 0..cols {
        let mut v = g.column(j);
        for k in 0..j {
            let qk = q.column(k);
            let proj = qk.iter().zip(&v).fold(C::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b);
            for (vi, qi) in v.iter_mut().zip(&qk) {
                *vi = *vi - *qi * proj;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for i in 0..rows {
            q[(i, j)] = v[i] / norm;
        }
    }
    q
}

/// Random density operator of the given rank (Hilbert–Schmidt induced measure).
pub fn random_density<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityOperator<T> {
    let g = ginibre::<T, R>(rng, dim, rank.max(1));
    let m = &g * &g.adjoint();
    DensityOperator::normalized(&m).expect("Wishart matrix is PSD and nonzero")
}

pub fn random_pure<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator<T> {
    DensityOperator::pure(&random_vector(rng, dim)).expect("unit vector")
}

/// Rescales Kraus operators so that `Σ K†K = 𝕀` exactly.
pub fn complete_kraus<T: Real>(kraus: Vec<Matrix<T>>) -> Vec<Matrix<T>> {
    let gram = kraus_gram(&kraus);
    let fix = support_inv_sqrt(&gram).expect("Kraus Gram matrix is PSD");
    kraus.into_iter().map(|k| &k * &fix).collect()
}

/// Random CPTP map with `n_kraus` Kraus operators from `d_in` to `d_out`.
///
/// `n_kraus` is raised to `⌈d_in/d_out⌉` if needed, the minimum for trace preservation.
pub fn random_channel_kraus<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    d_in: usize,
    d_out: usize,
    n_kraus: usize,
) -> Vec<Matrix<T>> {
    let n_kraus = n_kraus.max(d_in.div_ceil(d_out));
    complete_kraus((0..n_kraus).map(|_| ginibre(rng, d_out, d_in)).collect())
}

/// Random POVM with `n` effects on dimension `dim`.
pub fn random_povm<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize, n: usize) -> Vec<Matrix<T>> {
    let raw: Vec<Matrix<T>> = (0..n)
        .map(|_| {
            let g = ginibre::<T, R>(rng, dim, dim);
            &g.adjoint() * &g
        })
        .collect();
    let total = raw.iter().fold(Matrix::zeros(dim, dim), |acc, e| acc + e.clone());
    let fix = support_inv_sqrt(&total).expect("sum of Wishart matrices is PSD");
    raw.iter().map(|e| fix.sandwich(e).symmetrized()).collect()
}

/// Random extension `Γ` on `Q⊗A` with `Tr_A Γ = γ` exactly.
///
/// A random pure state on `Q⊗A⊗A′` is reduced to `Γ̃` on `Q⊗A`, then
/// conjugated by `γ^{1/2}(Tr_A Γ̃)^{−1/2} ⊗ 𝕀_A` to fix the marginal.
/// `d_env` is raised to `⌈d_Q/d_A⌉` if needed so that `Tr_A Γ̃` has full rank.
pub fn random_extension<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    gamma: &DensityOperator<T>,
    d_a: usize,
    d_env: usize,
) -> Matrix<T> {
    let d_q = gamma.dim();
    let d_env = d_env.max(d_q.div_ceil(d_a));
    let psi = random_vector::<T, R>(rng, d_q * d_a * d_env);
    let pure = Matrix::outer(&psi, &psi);
    let reduced = partial_trace(&pure, d_q * d_a, d_env, Keep::Q).expect("dims factor");
    let marginal = partial_trace(&reduced, d_q, d_a, Keep::Q).expect("dims factor");
    let correction = &psd_sqrt(gamma.matrix()).expect("state is PSD") * &support_inv_sqrt(&marginal).expect("marginal PSD");
    let lift = correction.kron(&Matrix::identity(d_a));
    lift.sandwich(&reduced).symmetrized()
}
